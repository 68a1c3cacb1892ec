"""
Brute-force maximization of the Holevo quantity over pure diagonal Gaussian
inputs with classical modulation split between the two quadratures.

Used as an independent check on capacity_engine; it never reuses the analytic
threshold or the transcendental equation.
"""
import math
import logging
from dataclasses import dataclass, replace

import numpy as np

from gauss_core import EnergyBudget, GaussianDomainError, g

logger = logging.getLogger(__name__)

OMEGA_FLOOR = 1e-3
OMEGA_CEIL = 1e3
CHUNK_ROWS = 256
MIN_RESOLUTION = 50


@dataclass(frozen=True)
class EncodingPoint:
    """Pure input at frequency omega_in plus modulation variances per quadrature"""

    omega_in: float
    mod_q: float
    mod_p: float

    def __post_init__(self):
        if not (math.isfinite(self.omega_in) and self.omega_in > 0):
            raise GaussianDomainError(f"omega_in must be > 0, got {self.omega_in}")
        if self.mod_q < 0 or self.mod_p < 0:
            raise GaussianDomainError(f"modulation variances must be >= 0, got ({self.mod_q}, {self.mod_p})")

    @property
    def n_bar(self):
        """Mean photons of the modulated input"""
        return (1.0 / (2.0 * self.omega_in) + self.omega_in / 2.0 + self.mod_q + self.mod_p - 1.0) / 2.0

    @classmethod
    def for_budget(cls, omega_in, fraction, n):
        """Point on the energy shell: mod_q = f R, mod_p = (1 - f) R"""
        spare = _spare_variance(omega_in, n.trace)
        if spare < 0:
            raise GaussianDomainError(f"omega_in={omega_in:g} needs more than {n.n_bar:g} photons")
        if not 0 <= fraction <= 1:
            raise GaussianDomainError(f"fraction must lie in [0, 1], got {fraction}")
        return cls(omega_in=omega_in, mod_q=fraction * spare, mod_p=(1.0 - fraction) * spare)


@dataclass(frozen=True)
class GridOptimum:
    capacity_bits: float
    omega_in: float
    fraction: float
    mod_q: float
    mod_p: float
    omega_bar_out: float
    resolution: int
    refined: bool


def _spare_variance(omega_in, trace):
    return trace - omega_in / 2.0 - 1.0 / (2.0 * omega_in)


def _chi(ch, omega_in, mod_q, mod_p):
    """Vectorized Holevo quantity and modulated output frequency"""
    t = abs(ch.tau)
    nqq, npp = ch.noise()
    vq = t / (2.0 * omega_in) + nqq
    vp = t * omega_in / 2.0 + npp
    vq_bar = vq + t * mod_q
    vp_bar = vp + t * mod_p
    m_out = np.clip(np.sqrt(vq * vp) - 0.5, 0.0, None)
    m_bar_out = np.clip(np.sqrt(vq_bar * vp_bar) - 0.5, 0.0, None)
    return g(m_bar_out) - g(m_out), np.sqrt(vp_bar / vq_bar)


def chi_g(ch, pt):
    """Holevo quantity in bits of the encoding pt through ch"""
    if ch.tau == 0.0:
        return 0.0
    chi, _ = _chi(ch, pt.omega_in, pt.mod_q, pt.mod_p)
    return float(chi)


def _omega_range(n):
    lower = 1.0 / (2.0 * n.trace)
    return max(lower, OMEGA_FLOOR), min(1.0 / lower, OMEGA_CEIL)


def _evaluate(ch, n, omegas, fractions):
    """Best cell on the tensor grid; ties go to the smallest omega_in, then fraction"""
    best = (-np.inf, 0, 0, 1.0)
    for start in range(0, len(omegas), CHUNK_ROWS):
        w = omegas[start:start + CHUNK_ROWS, None]
        spare = _spare_variance(w, n.trace)
        mod_q = np.clip(spare, 0.0, None) * fractions[None, :]
        mod_p = np.clip(spare, 0.0, None) * (1.0 - fractions[None, :])
        chi, omega_bar_out = _chi(ch, w, mod_q, mod_p)
        chi = np.where(spare >= 0, chi, -np.inf)
        idx = int(np.argmax(chi))
        if chi.flat[idx] > best[0]:
            i, j = np.unravel_index(idx, chi.shape)
            best = (float(chi.flat[idx]), start + int(i), int(j), float(omega_bar_out[i, j]))
    return best


def _to_optimum(ch, n, omegas, fractions, best, resolution, refined):
    chi, i, j, omega_bar_out = best
    w = float(omegas[i])
    f = float(fractions[j])
    spare = max(_spare_variance(w, n.trace), 0.0)
    return GridOptimum(
        capacity_bits=max(chi, 0.0),
        omega_in=w,
        fraction=f,
        mod_q=f * spare,
        mod_p=(1.0 - f) * spare,
        omega_bar_out=omega_bar_out,
        resolution=resolution,
        refined=refined,
    )


def grid_search(ch, n, resolution=400, refine=True):
    """Exhaustive search over (omega_in, modulation split) followed by one zoomed pass"""
    if resolution < MIN_RESOLUTION:
        raise GaussianDomainError(f"resolution must be >= {MIN_RESOLUTION}, got {resolution}")
    if not isinstance(n, EnergyBudget):
        n = EnergyBudget(float(n))
    if ch.tau == 0.0 or n.n_bar == 0.0:
        return GridOptimum(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, resolution, False)

    lo, hi = _omega_range(n)
    omegas = np.geomspace(lo, hi, resolution)
    fractions = np.linspace(0.0, 1.0, resolution)
    best = _evaluate(ch, n, omegas, fractions)
    coarse = _to_optimum(ch, n, omegas, fractions, best, resolution, False)
    if not refine:
        return coarse

    # Zoom to a tenth of each span around the incumbent, clipped to the original box
    log_half = (math.log(hi) - math.log(lo)) / 20.0
    centre = math.log(coarse.omega_in)
    fine_omegas = np.geomspace(
        math.exp(max(centre - log_half, math.log(lo))),
        math.exp(min(centre + log_half, math.log(hi))),
        resolution,
    )
    fine_fractions = np.linspace(max(coarse.fraction - 0.05, 0.0), min(coarse.fraction + 0.05, 1.0), resolution)
    fine_best = _evaluate(ch, n, fine_omegas, fine_fractions)
    if fine_best[0] <= best[0]:
        return replace(coarse, refined=True)
    fine = _to_optimum(ch, n, fine_omegas, fine_fractions, fine_best, resolution, True)
    logger.debug(
        f"grid optimum refined from {coarse.capacity_bits:.12g} to {fine.capacity_bits:.12g} "
        f"at omega_in={fine.omega_in:.6g}, fraction={fine.fraction:.6g}"
    )
    return fine


def grid_capacity(ch, n, resolution=400):
    """Oracle capacity in bits"""
    return grid_search(ch, n, resolution).capacity_bits
