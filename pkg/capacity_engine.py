"""
Gaussian capacity of the fiducial channel for a given input energy.

Above the energy threshold the optimal encoding is quantum water-filling and the
capacity has a closed form. Below it only one quadrature is modulated and the
optimal input frequency is the root of a transcendental equation in omega_in.
"""
import os
import math
import logging
from dataclasses import dataclass, asdict
from enum import Enum

import numpy as np
from scipy.optimize import root_scalar

from gauss_core import (
    DegenerateChannelError,
    EnergyBudget,
    GaussCapError,
    GaussianDomainError,
    ModeState,
    beta,
    g,
    photon_number,
)

logger = logging.getLogger(__name__)


class ThresholdRegimeError(GaussianDomainError):
    """A regime-specific formula was called on the wrong side of the energy threshold"""


class SolverError(GaussCapError, RuntimeError):
    """The below-threshold root search failed"""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        super().__init__(f"{message} ({details})" if details else message)


class Regime(str, Enum):
    ABOVE = "AboveThreshold"
    BELOW = "BelowThreshold"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class SolverConfig:
    abs_tol: float = 1e-12
    max_iter: int = 200
    bracket_grid: int = 64

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise GaussianDomainError(f"abs_tol must be > 0, got {self.abs_tol}")
        if self.max_iter < 1:
            raise GaussianDomainError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.bracket_grid < 2:
            raise GaussianDomainError(f"bracket_grid must be >= 2, got {self.bracket_grid}")

    @classmethod
    def from_env(cls):
        """Defaults overridden by GAUSSCAP_ABS_TOL, GAUSSCAP_MAX_ITER and GAUSSCAP_BRACKET_GRID"""
        return cls(
            abs_tol=float(os.getenv("GAUSSCAP_ABS_TOL", cls.abs_tol)),
            max_iter=int(os.getenv("GAUSSCAP_MAX_ITER", cls.max_iter)),
            bracket_grid=int(os.getenv("GAUSSCAP_BRACKET_GRID", cls.bracket_grid)),
        )


@dataclass(frozen=True)
class CapacitySolution:
    regime: Regime
    capacity_bits: float
    omega_in: float
    omega_bar_in: float
    m_bar_in: float
    omega_out: float
    omega_bar_out: float
    m_out: float
    m_bar_out: float
    beta_out: float
    beta_bar_out: float
    n_bar_out: float
    residual: float
    tau: float = math.nan
    y: float = math.nan
    omega_env: float = math.nan
    n_bar: float = math.nan
    n_bar_thr: float = math.nan

    def as_row(self):
        """Flat dict for CSV/JSON tables"""
        row = asdict(self)
        row["regime"] = self.regime.value
        return row


def _check_channel(ch):
    if ch.tau == 0.0:
        raise DegenerateChannelError("tau = 0: the output does not depend on the input")


def _weighted(beta_value, gap):
    # beta is +inf for pure outputs; the matching frequency gap is then zero
    if gap == 0.0:
        return 0.0
    return beta_value * gap


def energy_threshold(ch):
    """Input energy above which water-filling is feasible"""
    _check_channel(ch)
    w = ch.omega_env
    return (1.0 / (2.0 * w)) * (1.0 + (ch.y / abs(ch.tau)) * abs(1.0 - w ** 2)) - 0.5


def threshold_frequency(tau, y, n_bar):
    """Noise frequency at which n_bar sits exactly on the energy threshold"""
    if tau == 0.0:
        raise DegenerateChannelError("threshold frequency is undefined for tau = 0")
    if n_bar < 0:
        raise GaussianDomainError(f"n_bar must be >= 0, got {n_bar}")
    r = y / abs(tau)
    h = n_bar + 0.5
    return (1.0 + r) / (math.sqrt(r * r + r + h * h) + h)


def _solution(regime, ch, n, thr, **fields):
    capacity = max(g(fields["m_bar_out"]) - g(fields["m_out"]), 0.0)
    return CapacitySolution(
        regime=regime,
        capacity_bits=capacity,
        tau=ch.tau,
        y=ch.y,
        omega_env=ch.omega_env,
        n_bar=n.n_bar,
        n_bar_thr=thr,
        **fields,
    )


def _resolve_threshold(ch, thr):
    return energy_threshold(ch) if thr is None else thr


def capacity_above(ch, n, thr=None):
    """Closed-form water-filling capacity for n_bar >= energy_threshold(ch)"""
    _check_channel(ch)
    thr = _resolve_threshold(ch, thr)
    if n.n_bar < thr - 1e-12 * (1.0 + thr):
        raise ThresholdRegimeError(
            f"n_bar={n.n_bar:g} is below the energy threshold {thr:g}; use capacity_below"
        )

    t = abs(ch.tau)
    w = ch.omega_env
    k = n.trace
    d = ch.y * (1.0 / w - w)

    m_out = max(t / 2.0 + ch.y - 0.5, 0.0)
    m_bar_out = max(t * (n.n_bar + 0.5) + (ch.y * (w + 1.0 / w) - 1.0) / 2.0, 0.0)
    omega_bar_in = math.sqrt((t * k + d) / (t * k - d)) if d else 1.0
    nu_bar_in = 0.5 * math.sqrt(max(k * k - (d / t) ** 2, 1.0))
    m_bar_in = max(nu_bar_in - 0.5, 0.0)

    return _solution(
        Regime.ABOVE, ch, n, thr,
        omega_in=w,
        omega_bar_in=omega_bar_in,
        m_bar_in=m_bar_in,
        omega_out=w,
        omega_bar_out=1.0,
        m_out=m_out,
        m_bar_out=m_bar_out,
        beta_out=beta(m_out, w),
        beta_bar_out=beta(m_bar_out, 1.0),
        n_bar_out=m_bar_out,
        residual=0.0,
    )


def _below_configuration(omega_in, ch, n):
    """Input and output states of the single-quadrature encoding at omega_in"""
    k = n.trace
    omega_bar_in_sq = 2.0 * k * omega_in - 1.0
    if not omega_bar_in_sq > 0:
        raise GaussianDomainError(
            f"omega_in={omega_in:g} is infeasible: 2(2n_bar+1)omega_in - 1 = {omega_bar_in_sq:g} <= 0"
        )
    t = abs(ch.tau)
    w = ch.omega_env
    omega_bar_in = math.sqrt(omega_bar_in_sq)

    vq = t / (2.0 * omega_in) + ch.y / w
    vp = t * omega_in / 2.0 + ch.y * w
    vp_bar = t * (k - 1.0 / (2.0 * omega_in)) + ch.y * w

    m_out = max(math.sqrt(vq * vp) - 0.5, 0.0)
    m_bar_out = max(math.sqrt(vq * vp_bar) - 0.5, 0.0)
    return {
        "omega_in": omega_in,
        "omega_bar_in": omega_bar_in,
        "m_bar_in": max(omega_bar_in / (2.0 * omega_in) - 0.5, 0.0),
        "omega_out": math.sqrt(vp / vq),
        "omega_bar_out": math.sqrt(vp_bar / vq),
        "m_out": m_out,
        "m_bar_out": m_bar_out,
    }


def _residual_of(cfg_state):
    beta_out = beta(cfg_state["m_out"], cfg_state["omega_out"])
    beta_bar_out = beta(cfg_state["m_bar_out"], cfg_state["omega_bar_out"])
    residual = (
        _weighted(beta_bar_out, 1.0 - cfg_state["omega_bar_out"] ** 2)
        - _weighted(beta_out, cfg_state["omega_in"] ** 2 - cfg_state["omega_out"] ** 2)
    )
    return residual, beta_out, beta_bar_out


def _check_below_preconditions(ch):
    _check_channel(ch)
    if ch.omega_env >= 1.0:
        raise ThresholdRegimeError("the below-threshold equation needs squeezed noise, omega_env < 1")


def below_residual(omega_in, ch, n):
    """Stationarity residual F(omega_in) of the single-quadrature encoding"""
    _check_below_preconditions(ch)
    residual, _, _ = _residual_of(_below_configuration(omega_in, ch, n))
    return residual


def chi_below(omega_in, ch, n):
    """Holevo quantity in bits of the single-quadrature encoding at omega_in"""
    state = _below_configuration(omega_in, ch, n)
    return g(state["m_bar_out"]) - g(state["m_out"])


def below_bracket(n):
    """Interval of omega_in on which the modulation variance stays non-negative"""
    k = n.trace
    # k - sqrt(k^2 - 1) written without cancellation
    lower = 1.0 / (k + math.sqrt(k * k - 1.0))
    lower = max(lower, 1.0 / (2.0 * k) + 1e-12)
    return min(lower, 1.0), 1.0


def _scan(ch, n, cfg, lower, upper):
    grid = np.geomspace(lower, upper, cfg.bracket_grid)
    values = np.array([below_residual(w, ch, n) for w in grid])
    brackets = []
    for i in range(len(grid) - 1):
        if values[i] == 0.0:
            brackets.append((grid[i], grid[i]))
        elif values[i] * values[i + 1] < 0:
            brackets.append((grid[i], grid[i + 1]))
    if values[-1] == 0.0:
        brackets.append((grid[-1], grid[-1]))
    return grid, values, brackets


def _bisect(ch, n, cfg, lo, hi):
    if lo == hi:
        return lo, 0
    try:
        sol = root_scalar(
            below_residual,
            args=(ch, n),
            bracket=[lo, hi],
            method="bisect",
            xtol=cfg.abs_tol,
            maxiter=cfg.max_iter,
        )
    except RuntimeError as e:
        raise SolverError(f"bisection failed: {str(e)}", {"bracket": (lo, hi), "max_iter": cfg.max_iter})
    if not sol.converged:
        raise SolverError(
            "bisection did not converge",
            {"bracket": (lo, hi), "iterations": sol.iterations, "flag": sol.flag},
        )
    return sol.root, sol.iterations


def capacity_below(ch, n, cfg=None, thr=None):
    """Single-quadrature capacity for n_bar < energy_threshold(ch)"""
    cfg = cfg or SolverConfig()
    _check_below_preconditions(ch)
    thr = _resolve_threshold(ch, thr)
    if n.n_bar >= thr:
        raise ThresholdRegimeError(
            f"n_bar={n.n_bar:g} is at or above the energy threshold {thr:g}; use capacity_above"
        )

    lower, upper = below_bracket(n)
    if lower >= upper:
        # No modulation energy: encoding collapses to the vacuum
        state = _below_configuration(1.0, ch, n)
        residual, beta_out, beta_bar_out = _residual_of(state)
        return _solution(
            Regime.BELOW, ch, n, thr,
            **state,
            beta_out=beta_out,
            beta_bar_out=beta_bar_out,
            n_bar_out=photon_number(ModeState(state["m_bar_out"], state["omega_bar_out"])),
            residual=residual,
        )

    grid, values, brackets = _scan(ch, n, cfg, lower, upper)
    if not brackets:
        raise SolverError(
            "no sign change of the below-threshold residual",
            {
                "bracket": (float(grid[0]), float(grid[-1])),
                "f_lower": float(values[0]),
                "f_upper": float(values[-1]),
                "points": len(grid),
            },
        )

    candidates = []
    for lo, hi in brackets:
        root, iterations = _bisect(ch, n, cfg, lo, hi)
        candidates.append((chi_below(root, ch, n), root, iterations))
    if len(candidates) > 1:
        logger.warning(
            f"below-threshold equation has {len(candidates)} roots for tau={ch.tau:g}, y={ch.y:g}, "
            f"omega_env={ch.omega_env:g}, n_bar={n.n_bar:g}; keeping the largest Holevo quantity"
        )
    _, root, iterations = max(candidates, key=lambda c: c[0])
    logger.debug(f"below-threshold root omega_in={root:.12g} after {iterations} iterations")

    state = _below_configuration(root, ch, n)
    residual, beta_out, beta_bar_out = _residual_of(state)
    return _solution(
        Regime.BELOW, ch, n, thr,
        **state,
        beta_out=beta_out,
        beta_bar_out=beta_bar_out,
        n_bar_out=photon_number(ModeState(state["m_bar_out"], state["omega_bar_out"])),
        residual=residual,
    )


def _degenerate(ch, n):
    # Output is the environment alone, identical for every input
    m_out = max(ch.y - 0.5, 0.0)
    w = ch.omega_env
    return CapacitySolution(
        regime=Regime.DEGENERATE,
        capacity_bits=0.0,
        omega_in=1.0,
        omega_bar_in=1.0,
        m_bar_in=n.n_bar,
        omega_out=w,
        omega_bar_out=w,
        m_out=m_out,
        m_bar_out=m_out,
        beta_out=beta(m_out, w),
        beta_bar_out=beta(m_out, w),
        n_bar_out=photon_number(ModeState(m_out, w)),
        residual=0.0,
        tau=ch.tau,
        y=ch.y,
        omega_env=w,
        n_bar=n.n_bar,
    )


def _perfect(ch, n):
    return _solution(
        Regime.ABOVE, ch, n, 0.0,
        omega_in=1.0,
        omega_bar_in=1.0,
        m_bar_in=n.n_bar,
        omega_out=1.0,
        omega_bar_out=1.0,
        m_out=0.0,
        m_bar_out=n.n_bar,
        beta_out=math.inf,
        beta_bar_out=beta(n.n_bar, 1.0),
        n_bar_out=n.n_bar,
        residual=0.0,
    )


def capacity(ch, n, cfg=None):
    """Gaussian capacity with regime dispatch on the energy threshold"""
    if not isinstance(n, EnergyBudget):
        n = EnergyBudget(float(n))
    if ch.tau == 0.0:
        return _degenerate(ch, n)
    if ch.is_perfect:
        return _perfect(ch, n)
    thr = energy_threshold(ch)
    if n.n_bar >= thr:
        return capacity_above(ch, n, thr)
    return capacity_below(ch, n, cfg or SolverConfig(), thr)
