"""
Asymptotic capacities and concatenation of fiducial channels.
"""
import math
import logging
from dataclasses import dataclass, field

import numpy as np

from capacity_engine import Regime, capacity
from gauss_core import CovMat2, FiducialChannel, GaussianDomainError, apply_channel

logger = logging.getLogger(__name__)

PIPELINING_SLACK = 1e-9


class CompositionPreconditionError(GaussianDomainError):
    """Channels cannot be concatenated into a single fiducial channel of the same family"""


@dataclass(frozen=True)
class LimitResult:
    value_bits: float
    regime: Regime
    auxiliary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PipeliningReport:
    capacity_first: float
    capacity_second: float
    capacity_composed: float
    holds_first: bool
    holds_second: bool
    case: str
    holds: bool


def _check_limit_args(m_env, omega_env, n_bar):
    if not m_env >= 0:
        raise GaussianDomainError(f"m_env must be >= 0, got {m_env}")
    if not 0 < omega_env <= 1:
        raise GaussianDomainError(f"omega_env must lie in (0, 1], got {omega_env}")
    if not n_bar >= 0:
        raise GaussianDomainError(f"n_bar must be >= 0, got {n_bar}")


def limit_threshold(m_env, omega_env):
    """Energy threshold of the fiducial channel as |tau| grows without bound"""
    _check_limit_args(m_env, omega_env, 0.0)
    w = omega_env
    return (1.0 / (2.0 * w)) * (1.0 + (m_env + 0.5) * (1.0 - w * w)) - 0.5


def _homodyne_frequency(m_env, omega_env, n_bar):
    e_p = (m_env + 0.5) * omega_env
    k = 2.0 * n_bar + 1.0
    return e_p, 1.0 / (math.sqrt(1.0 + k / e_p + 1.0 / (4.0 * e_p * e_p)) - 1.0 / (2.0 * e_p))


def homodyne_rate_limit(m_env, omega_env, n_bar):
    """
    Below-threshold capacity as |tau| -> infinity.

    Only the squeezed p-quadrature carries information, so the value coincides
    with the rate of homodyne detection on that quadrature.
    """
    _check_limit_args(m_env, omega_env, n_bar)
    _, omega_in = _homodyne_frequency(m_env, omega_env, n_bar)
    return max(-math.log2(omega_in), 0.0)


def capacity_limit_tau_inf(m_env, omega_env, n_bar):
    """Limit of the Gaussian capacity for tau -> +/- infinity at fixed environment"""
    _check_limit_args(m_env, omega_env, n_bar)
    thr = limit_threshold(m_env, omega_env)
    if n_bar >= thr:
        n_env = (m_env + 0.5) * (omega_env + 1.0 / omega_env) / 2.0 - 0.5
        value = math.log2((n_bar + n_env + 1.0) / (m_env + 1.0))
        return LimitResult(value, Regime.ABOVE, {"n_bar_thr": thr, "n_env": n_env})

    e_p, omega_in = _homodyne_frequency(m_env, omega_env, n_bar)
    return LimitResult(
        max(-math.log2(omega_in), 0.0),
        Regime.BELOW,
        {"n_bar_thr": thr, "e_p": e_p, "omega_in": omega_in},
    )


def capacity_limit_squeeze(n_bar):
    """
    Capacity as the noise becomes infinitely squeezed, log2(1 + 2 n_bar).

    This is twice the Shannon capacity of a classical channel with signal-to-noise
    ratio n_bar, the noiseless quadrature carrying all the modulation.
    """
    if not n_bar >= 0:
        raise GaussianDomainError(f"n_bar must be >= 0, got {n_bar}")
    return math.log2(1.0 + 2.0 * n_bar)


def _concatenation_case(tau1, tau2):
    if tau1 >= 1 and tau2 >= 1:
        return "amplifiers"
    if 0 <= tau1 <= 1 and 0 <= tau2 <= 1:
        return "attenuators"
    if tau1 < 0 and 0 <= tau2 <= 1:
        return "conjugator_then_attenuator"
    return None


CONCATENATION_CASES = ("amplifiers", "attenuators", "conjugator_then_attenuator")

_CASE_TAUS = {
    "amplifiers": ((1.0, 4.0), (1.0, 4.0)),
    "attenuators": ((0.02, 1.0), (0.02, 1.0)),
    "conjugator_then_attenuator": ((-4.0, -0.1), (0.02, 1.0)),
}


def random_pair(rng, case):
    """Random composable (ch1, ch2, n_bar) of one concatenation case, drawn from a numpy Generator"""
    if case not in _CASE_TAUS:
        raise GaussianDomainError(f"unknown concatenation case {case!r}; choose one of {', '.join(CONCATENATION_CASES)}")
    (lo1, hi1), (lo2, hi2) = _CASE_TAUS[case]
    m_env = float(rng.uniform(0.0, 1.0))
    omega_env = float(rng.uniform(0.05, 1.0))
    ch1 = FiducialChannel.from_environment(float(rng.uniform(lo1, hi1)), m_env, omega_env, perfect_at_unity=True)
    ch2 = FiducialChannel.from_environment(float(rng.uniform(lo2, hi2)), m_env, omega_env, perfect_at_unity=True)
    return ch1, ch2, float(rng.uniform(0.05, 4.0))


def _environment_noise(tau, m_env):
    return abs(1.0 - tau) * (m_env + 0.5)


def _test_states():
    return [
        CovMat2(0.5, 0.5),
        CovMat2(1.5, 1.5),
        CovMat2(2.0, 0.125),
        CovMat2(0.1, 3.0),
        CovMat2(7.3, 0.9),
    ]


def _validate_composition(ch1, ch2, composed):
    for v in _test_states():
        chained = apply_channel(ch2, apply_channel(ch1, v))
        direct = apply_channel(composed, v)
        scale = max(1.0, chained.vqq, chained.vpp)
        if not np.allclose(
            [chained.vqq, chained.vpp], [direct.vqq, direct.vpp], rtol=0.0, atol=1e-12 * scale
        ):
            raise CompositionPreconditionError(
                f"matrix-level composition mismatch for input {v}: {chained} != {direct}"
            )


def compose(ch1, ch2):
    """Single fiducial channel equal to ch1 followed by ch2"""
    if not math.isclose(ch1.m_env, ch2.m_env, rel_tol=1e-12, abs_tol=1e-15):
        raise CompositionPreconditionError(f"environments differ: m_env {ch1.m_env:g} vs {ch2.m_env:g}")
    if not math.isclose(ch1.omega_env, ch2.omega_env, rel_tol=1e-12) or ch1.quadrature_swapped != ch2.quadrature_swapped:
        raise CompositionPreconditionError(
            f"environments differ: omega_env {ch1.omega_env:g} vs {ch2.omega_env:g}"
        )
    for ch in (ch1, ch2):
        expected = _environment_noise(ch.tau, ch.m_env)
        if not math.isclose(ch.y, expected, rel_tol=1e-12, abs_tol=1e-15):
            raise CompositionPreconditionError(
                f"channel tau={ch.tau:g} has y={ch.y:g}, not the environment form |1-tau|(m_env+1/2)={expected:g}"
            )

    condition = _concatenation_case(ch1.tau, ch2.tau)
    if condition is None:
        raise CompositionPreconditionError(
            f"(tau1, tau2)=({ch1.tau:g}, {ch2.tau:g}) satisfies none of: both >= 1, both in [0, 1], "
            f"tau1 < 0 with tau2 in [0, 1]"
        )

    tau = ch1.tau * ch2.tau
    composed = FiducialChannel(
        tau=tau,
        y=_environment_noise(tau, ch1.m_env),
        omega_env=ch1.omega_env,
        m_env=ch1.m_env,
        quadrature_swapped=ch1.quadrature_swapped,
    )
    if __debug__:
        _validate_composition(ch1, ch2, composed)
    logger.debug(f"composed tau={ch1.tau:g} and tau={ch2.tau:g} ({condition}) into tau={tau:g}")
    return composed


def pipelining_check(ch1, ch2, n_bar, cfg=None):
    """
    Compare the capacity of ch1 followed by ch2 with the capacity of each stage.

    C(composed) <= C(ch1) always holds: ch2 is post-processing of the output of
    ch1. The bound against ch2 is only guaranteed when the two stages commute,
    i.e. for two amplifiers or two attenuators. A phase conjugator with
    |tau1| > 1 feeds ch2 more than n_bar photons, so C(composed) may exceed
    C(ch2); holds_second is still reported for that case but does not enter
    the verdict.
    """
    composed = compose(ch1, ch2)
    case = _concatenation_case(ch1.tau, ch2.tau)
    c1 = capacity(ch1, n_bar, cfg).capacity_bits
    c2 = capacity(ch2, n_bar, cfg).capacity_bits
    c12 = capacity(composed, n_bar, cfg).capacity_bits
    holds_first = c12 <= c1 + PIPELINING_SLACK
    holds_second = c12 <= c2 + PIPELINING_SLACK
    holds = holds_first and (holds_second or case == "conjugator_then_attenuator")
    if not holds:
        logger.warning(f"pipelining violated ({case}): C(composed)={c12:.12g} > min({c1:.12g}, {c2:.12g})")
    elif not holds_second:
        logger.debug(
            f"amplifying conjugator tau1={ch1.tau:g}: C(composed)={c12:.12g} exceeds C(second stage)={c2:.12g}"
        )
    return PipeliningReport(c1, c2, c12, holds_first, holds_second, case, holds)
