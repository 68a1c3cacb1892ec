"""
How the Gaussian capacity depends on the squeezing of the environment noise.

The capacity curve C(omega_env) at fixed (tau, y, n_bar) starts at log2(1 + 2 n_bar)
for infinitely squeezed noise and ends at the thermal-noise value at omega_env = 1.
Between the two it is either monotonic, has one maximum, a maximum followed by a
minimum, or a saddle point. This module finds those extrema, classifies curves,
evaluates the small-omega_env expansion and produces sweep and zone tables.
"""
import math
import logging
from dataclasses import dataclass, field, asdict
from enum import Enum
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar, root_scalar

from capacity_engine import Regime, capacity, energy_threshold, threshold_frequency
from gauss_core import (
    LN2,
    EnergyBudget,
    FiducialChannel,
    GaussianDomainError,
    UnphysicalChannelError,
    beta,
    pure_floor,
)
from processor import RowProcessor

logger = logging.getLogger(__name__)

Y_C = 1.0 / math.sqrt(12.0)
TAU_TILDE_L = math.sqrt(2.0 / 15.0)
TAU_TILDE_R = 2.0 / math.sqrt(15.0)


class ExtremumKind(str, Enum):
    MAX = "Max"
    MIN = "Min"
    SADDLE = "Saddle"


class ScenarioKind(str, Enum):
    MONOTONIC = "Monotonic"
    ONE_MAXIMUM = "OneMaximum"
    SADDLE = "Saddle"
    MAX_THEN_MIN = "MaxThenMin"


UNPHYSICAL_LABEL = "Unphysical"


@dataclass(frozen=True)
class Extremum:
    omega_env: float
    kind: ExtremumKind


@dataclass(frozen=True)
class Scenario:
    kind: ScenarioKind
    extrema: tuple = ()
    boundary_minimum: bool = False


@dataclass(frozen=True)
class CriticalConstants:
    y_c: float
    tau_c_minus: float
    tau_c_plus: float
    tau_tilde_c: float
    tau_L: float
    tau_R: float
    tau_tilde_L: float
    tau_tilde_R: float
    n_c: float
    m_c: float


@dataclass(frozen=True)
class TaylorCoeffs:
    a: float
    b: float
    c: float
    alpha: float
    beta_coef: float
    fd_slope: float


@dataclass(frozen=True)
class ExtremumConfig:
    scan_points: int = 2000
    omega_floor: float = 1e-5
    coalesce_tol: float = 1e-4
    saddle_y_tol: float = 1e-3
    saddle_y_span: float = 0.5
    saddle_y_steps: int = 101
    saddle_bisect_iter: int = 50
    label_step: float = 1e-3
    root_xtol: float = 1e-13

    def __post_init__(self):
        if self.scan_points < 3:
            raise GaussianDomainError(f"scan_points must be >= 3, got {self.scan_points}")
        if not 0 < self.omega_floor < 1:
            raise GaussianDomainError(f"omega_floor must lie in (0, 1), got {self.omega_floor}")


def critical_constants(n_bar, m_env):
    if n_bar < 0 or m_env < 0:
        raise GaussianDomainError(f"n_bar and m_env must be >= 0, got {n_bar}, {m_env}")
    omega_inf = 1.0 / (1.0 + 2.0 * n_bar)
    shift = 1.0 / (math.sqrt(3.0) * (2.0 * m_env + 1.0))
    return CriticalConstants(
        y_c=Y_C,
        tau_c_minus=1.0 - shift,
        tau_c_plus=1.0 + shift,
        tau_tilde_c=math.sqrt(2.0 / 15.0) * math.sqrt(1.0 + omega_inf ** 2),
        tau_L=1.0 - 1.0 / math.sqrt(3.0),
        tau_R=1.0 + 1.0 / math.sqrt(3.0),
        tau_tilde_L=TAU_TILDE_L,
        tau_tilde_R=TAU_TILDE_R,
        n_c=0.5 * (math.sqrt(1.5 + 5.0 / math.sqrt(12.0)) - 1.0),
        m_c=0.5 * (1.0 / (math.sqrt(3.0) - 2.0 / math.sqrt(5.0)) - 1.0),
    )


def _channel(tau, y, omega_env):
    return FiducialChannel.from_noise(tau, y, omega_env)


def _capacity_at(tau, y, n_bar, omega_env, cfg=None):
    return capacity(_channel(tau, y, omega_env), EnergyBudget(n_bar), cfg).capacity_bits


def taylor_coefficients(tau, y, n_bar, cfg=None):
    """Expansion C = C0 + a w + b w^2 + c w^3 and omega_in = omega_inf + alpha w + beta w^2 near w = omega_env = 0"""
    if tau == 0.0:
        raise GaussianDomainError("the small-omega_env expansion needs tau != 0")
    _channel(tau, y, 1.0)

    omega_inf = 1.0 / (1.0 + 2.0 * n_bar)
    tt2 = (2.0 / 15.0) * (1.0 + omega_inf ** 2)
    yc2 = Y_C ** 2
    dy = y * y - yc2
    dtau = tau * tau - tt2
    scale = omega_inf * abs(tau) * y

    def k(j):
        return (-1.0) ** j / LN2 * (1.0 - omega_inf ** 2) / scale ** j

    k1, k2, k3 = k(1), k(2), k(3)
    a = k1 * dy

    b_prime = k2 * (7.5 * tt2 * dy ** 2 - 0.5 * yc2 * dtau)
    b = b_prime + k2 * dy ** 2 * (1.0 - 3.75 * tt2)

    c_prime = k3 * (
        (4.0 / 3.0) * dy ** 3 * ((1.0 - 7.5 * tt2) ** 2 + 7.5 * tt2)
        - 7.5 * dy * yc2 * tt2 * (tau * tau - 2.0 * tt2 + (4.0 / 15.0) * (1.0 - 2.0 / (15.0 * tt2)))
        - (1.0 / 48.0) * (dtau ** 2 - (1.0 / 21.0) * ((tt2 + 4.0 / 3.0) ** 2 - 32.0 / 15.0))
    )
    c = c_prime + k3 * (2.0 - 7.5 * tt2) * dy * ((1.0 + 7.5 * tt2) * dy ** 2 - yc2 * dtau)

    alpha = -LN2 * k1 * omega_inf * dy
    beta_coef = -LN2 * k2 * omega_inf * (7.5 * tt2 * dy ** 2 - yc2 * dtau)

    fd_slope = math.nan
    if n_bar > 0:
        fd_slope = (_capacity_at(tau, y, n_bar, 2e-4, cfg) - _capacity_at(tau, y, n_bar, 1e-4, cfg)) / 1e-4
        if a != 0.0 and np.sign(a) != np.sign(fd_slope):
            logger.warning(
                f"expansion slope a={a:.6g} disagrees in sign with the finite-difference slope "
                f"{fd_slope:.6g} at tau={tau:g}, y={y:g}, n_bar={n_bar:g}; trusting the finite difference"
            )
    return TaylorCoeffs(a=a, b=b, c=c, alpha=alpha, beta_coef=beta_coef, fd_slope=fd_slope)


def _beta_gap(m, omega, gap):
    # beta * gap, with the pure-state case beta = inf contributing nothing when gap = 0
    with np.errstate(invalid="ignore"):
        return np.where(gap == 0.0, 0.0, beta(m, omega) * gap)


def _residual_squeezed(omega_env, tau, y, n_bar):
    """Stationarity in omega_env with the squeezed-limit encoding omega_in = omega_inf, omega_bar_in = 1"""
    e = np.asarray(omega_env, dtype=float)
    t = abs(tau)
    k = 2.0 * n_bar + 1.0
    vq = t * k / 2.0 + y / e
    vp = t / (2.0 * k) + y * e
    vp_bar = t * k / 2.0 + y * e
    m_out = np.clip(np.sqrt(vq * vp) - 0.5, 0.0, None)
    m_bar_out = np.clip(np.sqrt(vq * vp_bar) - 0.5, 0.0, None)
    omega_out_sq = vp / vq
    omega_bar_out_sq = vp_bar / vq
    e2 = e * e
    return (
        _beta_gap(m_bar_out, np.sqrt(omega_bar_out_sq), e2 - omega_bar_out_sq)
        - _beta_gap(m_out, np.sqrt(omega_out_sq), e2 - omega_out_sq)
    )


def _residual_water_filling(omega_env, tau, y, n_bar):
    e = np.asarray(omega_env, dtype=float)
    m_bar_out = abs(tau) * (n_bar + 0.5) + (y * (e + 1.0 / e) - 1.0) / 2.0
    return _beta_gap(np.clip(m_bar_out, 0.0, None), 1.0, e * e - 1.0)


def extremum_residual(omega_env, tau, y, n_bar):
    """Sign of dC/d(omega_env): zero at interior extrema of the capacity curve"""
    if not 0 < omega_env <= 1:
        raise GaussianDomainError(f"omega_env must lie in (0, 1], got {omega_env}")
    _channel(tau, y, omega_env)
    if tau == 0.0 or n_bar == 0.0:
        return 0.0
    if omega_env >= threshold_frequency(tau, y, n_bar):
        return float(_residual_water_filling(omega_env, tau, y, n_bar))
    return float(_residual_squeezed(omega_env, tau, y, n_bar))


def _scan_grid(tau, y, n_bar, cfg):
    upper = threshold_frequency(tau, y, n_bar)
    if upper <= cfg.omega_floor:
        return np.array([])
    return np.geomspace(cfg.omega_floor, upper * (1.0 - 1e-12), cfg.scan_points)


def _sign_changes(values):
    return np.nonzero(values[:-1] * values[1:] < 0)[0]


def _count_roots(tau, y, n_bar, cfg):
    grid = _scan_grid(tau, y, n_bar, cfg)
    if grid.size == 0:
        return 0
    return len(_sign_changes(_residual_squeezed(grid, tau, y, n_bar)))


def _bisect_residual(tau, y, n_bar, lo, hi, xtol):
    sol = root_scalar(
        lambda e: float(_residual_squeezed(e, tau, y, n_bar)),
        bracket=[lo, hi],
        method="bisect",
        xtol=xtol,
    )
    return sol.root


@lru_cache(maxsize=256)
def saddle_noise(tau, n_bar, cfg=ExtremumConfig()):
    """Noise magnitude at which the maximum and minimum of the curve merge into a saddle"""
    if not 0 < tau < TAU_TILDE_R or n_bar <= 0:
        return None
    y_lo = max(Y_C, pure_floor(tau))
    ys = np.linspace(y_lo, y_lo + cfg.saddle_y_span, cfg.saddle_y_steps)
    counts = [_count_roots(tau, y, n_bar, cfg) for y in ys]

    for i in range(len(ys) - 1):
        if counts[i] >= 2 and counts[i + 1] == 0:
            lo, hi = ys[i], ys[i + 1]
            break
    else:
        logger.debug(f"no two-to-zero extremum transition for tau={tau:g}, n_bar={n_bar:g}")
        return None

    for _ in range(cfg.saddle_bisect_iter):
        mid = 0.5 * (lo + hi)
        if _count_roots(tau, mid, n_bar, cfg) >= 2:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _label(tau, y, n_bar, omega_env, step, solver_cfg):
    lo = max(omega_env - step, omega_env / 2.0)
    hi = min(omega_env + step, 1.0)
    c_mid = _capacity_at(tau, y, n_bar, omega_env, solver_cfg)
    c_lo = _capacity_at(tau, y, n_bar, lo, solver_cfg)
    c_hi = _capacity_at(tau, y, n_bar, hi, solver_cfg)
    if c_mid >= c_lo and c_mid >= c_hi:
        return ExtremumKind.MAX
    if c_mid <= c_lo and c_mid <= c_hi:
        return ExtremumKind.MIN
    logger.warning(
        f"stationary point at omega_env={omega_env:.6g} not confirmed by the capacity curve "
        f"(tau={tau:g}, y={y:g}, n_bar={n_bar:g}); reporting a saddle"
    )
    return ExtremumKind.SADDLE


def find_extrema(tau, y, n_bar, cfg=None, solver_cfg=None):
    """Interior extrema of C(omega_env) on (0, omega_thr), ordered by omega_env"""
    cfg = cfg or ExtremumConfig()
    _channel(tau, y, 1.0)
    if tau == 0.0 or n_bar == 0.0 or y == 0.0:
        return []

    grid = _scan_grid(tau, y, n_bar, cfg)
    if grid.size == 0:
        return []
    values = _residual_squeezed(grid, tau, y, n_bar)
    roots = [_bisect_residual(tau, y, n_bar, grid[i], grid[i + 1], cfg.root_xtol) for i in _sign_changes(values)]
    roots.extend(float(grid[i]) for i in np.nonzero(values == 0.0)[0])
    roots.sort()

    if 0 < tau < TAU_TILDE_R and y >= Y_C:
        y_saddle = saddle_noise(tau, n_bar, cfg)
        if y_saddle is not None and abs(y - y_saddle) <= cfg.saddle_y_tol:
            # Within tolerance of the merger the pair (or the near-miss) is one saddle
            omega = 0.5 * (roots[0] + roots[-1]) if roots else _closest_approach(tau, y, n_bar, cfg)
            return [Extremum(omega, ExtremumKind.SADDLE)]

    extrema = []
    i = 0
    while i < len(roots):
        if i + 1 < len(roots) and roots[i + 1] - roots[i] < cfg.coalesce_tol:
            extrema.append(Extremum(0.5 * (roots[i] + roots[i + 1]), ExtremumKind.SADDLE))
            i += 2
            continue
        gaps = [abs(roots[j] - roots[i]) for j in (i - 1, i + 1) if 0 <= j < len(roots)]
        step = min([cfg.label_step * roots[i]] + [gap / 4.0 for gap in gaps])
        extrema.append(Extremum(roots[i], _label(tau, y, n_bar, roots[i], step, solver_cfg)))
        i += 1
    return extrema


def _boundary_minimum(tau, y, n_bar, solver_cfg):
    # Thermal noise at omega_env = 1 is the worst case on [omega_thr, 1]
    if tau == 0.0 or n_bar == 0.0 or y == 0.0:
        return False
    return _capacity_at(tau, y, n_bar, 1.0 - 1e-3, solver_cfg) > _capacity_at(tau, y, n_bar, 1.0, solver_cfg)


def _scenario_from_extrema(extrema, tau, y, n_bar):
    kinds = [e.kind for e in extrema]
    if ExtremumKind.MAX in kinds and ExtremumKind.MIN in kinds:
        if kinds.index(ExtremumKind.MAX) > kinds.index(ExtremumKind.MIN):
            logger.warning(f"minimum precedes maximum for tau={tau:g}, y={y:g}, n_bar={n_bar:g}")
        return ScenarioKind.MAX_THEN_MIN
    if ExtremumKind.MAX in kinds:
        return ScenarioKind.ONE_MAXIMUM
    if ExtremumKind.SADDLE in kinds:
        return ScenarioKind.SADDLE
    if ExtremumKind.MIN in kinds:
        logger.warning(f"isolated minimum for tau={tau:g}, y={y:g}, n_bar={n_bar:g}; classifying as monotonic")
    return ScenarioKind.MONOTONIC


def classify_scenario(tau, y, n_bar, cfg=None, solver_cfg=None, numeric_only=False):
    """Shape of C(omega_env) on (0, 1): Monotonic, OneMaximum, Saddle or MaxThenMin"""
    cfg = cfg or ExtremumConfig()
    _channel(tau, y, 1.0)
    boundary = _boundary_minimum(tau, y, n_bar, solver_cfg)

    if not numeric_only:
        if y == 0.0 or tau <= 0.0 or n_bar == 0.0:
            return Scenario(ScenarioKind.MONOTONIC, (), boundary)
        if y < Y_C:
            extrema = tuple(e for e in find_extrema(tau, y, n_bar, cfg, solver_cfg) if e.kind == ExtremumKind.MAX)
            if not extrema:
                extrema = (Extremum(_maximize_capacity(tau, y, n_bar, solver_cfg), ExtremumKind.MAX),)
            return Scenario(ScenarioKind.ONE_MAXIMUM, extrema[:1], boundary)
        if tau >= TAU_TILDE_R:
            return Scenario(ScenarioKind.MONOTONIC, (), boundary)

    extrema = find_extrema(tau, y, n_bar, cfg, solver_cfg)
    return Scenario(_scenario_from_extrema(extrema, tau, y, n_bar), tuple(extrema), boundary)


def _maximize_capacity(tau, y, n_bar, solver_cfg):
    """Location of a maximum squeezed below the scan floor, searched in log(omega_env)"""
    upper = math.log(threshold_frequency(tau, y, n_bar))
    res = minimize_scalar(
        lambda s: -_capacity_at(tau, y, n_bar, math.exp(s), solver_cfg),
        bounds=(math.log(1e-12), upper),
        method="bounded",
        options={"xatol": 1e-8},
    )
    return float(math.exp(res.x))


def _closest_approach(tau, y, n_bar, cfg):
    """omega_env where the residual comes closest to zero"""
    grid = _scan_grid(tau, y, n_bar, cfg)
    return float(grid[int(np.argmin(np.abs(_residual_squeezed(grid, tau, y, n_bar))))])


def count_inflections(tau, y, n_bar, points=200, lo=1e-3, hi=1.0, solver_cfg=None):
    """Sign changes of the second derivative of C(omega_env) sampled on a geometric grid"""
    omegas = np.geomspace(lo, hi, points)
    values = np.array([_capacity_at(tau, y, n_bar, w, solver_cfg) for w in omegas])
    second = np.gradient(np.gradient(values, omegas), omegas)
    # Ignore curvature below the resolution of the solver
    significant = second[np.abs(second) > 1e-7 * max(1.0, np.max(np.abs(second)))]
    return int(np.count_nonzero(significant[:-1] * significant[1:] < 0))


def check_inflection_conjecture(tau, y, n_bar, points=200, solver_cfg=None):
    """True when the curve has at most two inflection points"""
    count = count_inflections(tau, y, n_bar, points, solver_cfg=solver_cfg)
    if count > 2:
        logger.warning(f"{count} inflection points for tau={tau:g}, y={y:g}, n_bar={n_bar:g}")
    return count <= 2


SWEEP_PARAMETERS = ("omega_env", "tau", "n_bar", "y", "m_env")


@dataclass(frozen=True)
class SweepFamily:
    """
    The swept parameter plus the values held fixed.

    The channel is built from m_env when it is given and from y otherwise; tau
    sweeps built from m_env treat tau = 1 as the perfect channel so the curve is
    continuous there.
    """

    parameter: str
    tau: float = 1.0
    omega_env: float = 1.0
    n_bar: float = 1.0
    m_env: float = None
    y: float = None

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise GaussianDomainError(f"cannot sweep {self.parameter!r}; choose one of {', '.join(SWEEP_PARAMETERS)}")
        swept_noise = self.parameter in ("m_env", "y")
        if not swept_noise and (self.m_env is None) == (self.y is None):
            raise GaussianDomainError("give exactly one of m_env and y")

    def point(self, value):
        """(channel, energy) at one value of the swept parameter"""
        params = asdict(self)
        params[params.pop("parameter")] = value
        if self.parameter == "m_env":
            params["y"] = None
        elif self.parameter == "y":
            params["m_env"] = None
        if params["m_env"] is not None:
            ch = FiducialChannel.from_environment(
                params["tau"], params["m_env"], params["omega_env"], perfect_at_unity=self.parameter == "tau"
            )
        else:
            ch = FiducialChannel.from_noise(params["tau"], params["y"], params["omega_env"])
        return ch, EnergyBudget(params["n_bar"])


@dataclass
class SweepTable:
    parameter: str
    frame: pd.DataFrame
    metadata: dict = field(default_factory=dict)

    @property
    def error_count(self):
        return int((self.frame["status"] != "ok").sum())


def _sweep_row(family, value, solver_cfg):
    ch, n = family.point(value)
    solution = capacity(ch, n, solver_cfg)
    row = solution.as_row()
    row["m_env"] = ch.m_env
    row[family.parameter] = value
    row["omega_thr"] = threshold_frequency(ch.tau, ch.y, n.n_bar) if ch.tau != 0.0 else math.nan
    return row


def sweep_values(lo, hi, steps, log=False):
    if steps < 2:
        raise GaussianDomainError(f"steps must be >= 2, got {steps}")
    if log:
        if lo <= 0 or hi <= 0:
            raise GaussianDomainError("geometric sweeps need a positive range")
        return np.geomspace(lo, hi, steps)
    return np.linspace(lo, hi, steps)


def sweep_capacity(family, lo, hi, steps, log=False, solver_cfg=None, max_workers=None):
    """Capacity along one parameter; failing points become error rows"""
    values = sweep_values(lo, hi, steps, log)
    results = RowProcessor(max_workers, label=f"{family.parameter} sweep").process(
        values, lambda v: _sweep_row(family, float(v), solver_cfg)
    )

    rows = []
    for r in results:
        if r.ok:
            row = dict(r.value)
            row["status"] = "ok"
        else:
            row = {family.parameter: float(r.item), "status": f"error: {r.error}"}
        rows.append(row)
    frame = pd.DataFrame(rows)
    frame.insert(0, family.parameter, frame.pop(family.parameter))

    metadata = {"family": asdict(family), "lo": lo, "hi": hi, "steps": steps, "log": log}
    metadata.update(_threshold_crossing(family, frame))
    frame["threshold_crossing"] = _regime_flips(frame)
    return SweepTable(family.parameter, frame, metadata)


def _regime_flips(frame):
    """True on rows whose regime differs from the previous successful row"""
    if "regime" not in frame:
        return False
    regimes = frame["regime"].where(frame["regime"].isin([Regime.ABOVE.value, Regime.BELOW.value]))
    previous = regimes.ffill().shift()
    return regimes.notna() & previous.notna() & regimes.ne(previous)


def _threshold_crossing(family, frame):
    """Threshold value inside the swept range, when it has one"""
    lo, hi = frame[family.parameter].min(), frame[family.parameter].max()
    try:
        ch, n = family.point(lo)
        if ch.tau == 0.0:
            return {}
        if family.parameter == "omega_env":
            value = threshold_frequency(ch.tau, ch.y, n.n_bar)
            return {"omega_thr": value, "threshold_in_range": bool(lo <= value <= hi)}
        if family.parameter == "n_bar":
            value = energy_threshold(ch)
            return {"n_bar_thr": value, "threshold_in_range": bool(lo <= value <= hi)}
    except GaussianDomainError as e:
        logger.debug(f"no threshold marker for the sweep: {str(e)}")
    return {}


def _zone_label(tau, y, n_bar, cfg, solver_cfg):
    if y < pure_floor(tau):
        return UNPHYSICAL_LABEL
    try:
        return classify_scenario(tau, y, n_bar, cfg, solver_cfg).kind.value
    except UnphysicalChannelError:
        return UNPHYSICAL_LABEL


def classify_zones(n_bar, tau_range, y_range, steps, cfg=None, solver_cfg=None, max_workers=None):
    """Scenario label on a (tau, y) raster at fixed n_bar"""
    cfg = cfg or ExtremumConfig()
    tau_steps, y_steps = (steps, steps) if isinstance(steps, int) else steps
    taus = np.linspace(tau_range[0], tau_range[1], tau_steps)
    ys = np.linspace(y_range[0], y_range[1], y_steps)
    cells = [(float(t), float(y)) for t in taus for y in ys]

    results = RowProcessor(max_workers, label="zone cells").process(
        cells, lambda cell: _zone_label(cell[0], cell[1], n_bar, cfg, solver_cfg)
    )
    return pd.DataFrame(
        {
            "tau": [r.item[0] for r in results],
            "y": [r.item[1] for r in results],
            "n_bar": n_bar,
            "scenario": [r.value if r.ok else f"error: {r.error}" for r in results],
        }
    )
