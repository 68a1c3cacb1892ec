"""
Self-check behind the `verify` command: reference values plus
agreement between the analytic capacity and the brute-force oracle.
"""
import os
import json
import math
import logging
import itertools
from dataclasses import dataclass, asdict

import numpy as np
import pandas as pd

from analysis import classify_scenario, critical_constants
from capacity_engine import capacity, energy_threshold, threshold_frequency
from gauss_core import EnergyBudget, FiducialChannel, pure_floor
from limits_algebra import (
    CONCATENATION_CASES,
    PIPELINING_SLACK,
    capacity_limit_squeeze,
    compose,
    pipelining_check,
    random_pair,
)
from oracle import grid_capacity
from processor import RowProcessor

logger = logging.getLogger(__name__)

GOLDEN_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden", "reference_values.json")


@dataclass
class CheckResult:
    group: str
    name: str
    expected: object
    actual: object
    tolerance: float
    passed: bool


@dataclass
class VerificationReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def frame(self):
        return pd.DataFrame([asdict(c) for c in self.checks])


@dataclass(frozen=True)
class Check:
    group: str
    name: str
    run: object


def load_golden(path=GOLDEN_PATH):
    with open(path) as f:
        return json.load(f)


def _numeric(group, name, expected, tol, compute):
    def run():
        actual = compute()
        return CheckResult(group, name, expected, actual, tol, bool(abs(actual - expected) <= tol))

    return Check(group, name, run)


def _threshold_checks(golden):
    checks = []
    for case in golden["threshold_frequency"]:
        ch = FiducialChannel.from_environment(case["tau"], case["m_env"])
        name = f"tau={case['tau']:g}, m_env={case['m_env']:g}, n_bar={case['n_bar']:g}"
        checks.append(
            _numeric(
                "threshold_frequency", name, case["expected"], case["tol"],
                lambda ch=ch, n=case["n_bar"]: threshold_frequency(ch.tau, ch.y, n),
            )
        )
    return checks


def _squeeze_checks(golden):
    spec = golden["squeeze_limit"]
    checks = [
        _numeric(
            "squeeze_limit", f"closed form, n_bar={spec['n_bar']:g}", spec["expected"], 1e-12,
            lambda: capacity_limit_squeeze(spec["n_bar"]),
        )
    ]
    for tau in spec["taus"]:
        ch = FiducialChannel.from_environment(tau, spec["m_env"], spec["omega_env"])
        checks.append(
            _numeric(
                "squeeze_limit", f"tau={tau:g}, omega_env={spec['omega_env']:g}", spec["expected"], spec["tol"],
                lambda ch=ch: capacity(ch, EnergyBudget(spec["n_bar"])).capacity_bits,
            )
        )
    return checks


def _constant_checks(golden):
    constants = critical_constants(0.1, 0.001)
    return [
        _numeric("critical_constants", key, case["expected"], case["tol"], lambda key=key: getattr(constants, key))
        for key, case in golden["critical_constants"].items()
    ]


def _scenario_checks(golden):
    checks = []
    for case in golden["scenarios"]:
        ch = FiducialChannel.from_environment(case["tau"], case["m_env"])

        def run(case=case, ch=ch):
            kind = classify_scenario(ch.tau, ch.y, case["n_bar"]).kind.value
            return CheckResult("scenario", f"tau={case['tau']:g}", case["expected"], kind, 0.0, kind == case["expected"])

        checks.append(Check("scenario", f"tau={case['tau']:g}", run))
    return checks


def _oracle_checks(golden, resolution):
    lattice = golden["oracle_lattice"]
    checks = []
    for tau, mult, omega, n_bar in itertools.product(
        lattice["taus"], lattice["floor_multiples"], lattice["omega_envs"], lattice["n_bars"]
    ):
        y = pure_floor(tau) * mult
        ch = FiducialChannel.from_noise(tau, y, omega)
        name = f"tau={tau:g}, y={y:g}, omega_env={omega:g}, n_bar={n_bar:g}"

        def run(ch=ch, n_bar=n_bar, name=name):
            analytic = capacity(ch, EnergyBudget(n_bar)).capacity_bits
            oracle = grid_capacity(ch, EnergyBudget(n_bar), resolution)
            return CheckResult("oracle", name, oracle, analytic, lattice["tol"], abs(analytic - oracle) <= lattice["tol"])

        checks.append(Check("oracle", name, run))
    return checks


def _continuity_checks(samples=50, seed=7):
    rng = np.random.default_rng(seed)
    checks = []
    for _ in range(samples):
        tau = float(rng.uniform(-2.0, 3.0))
        y = pure_floor(tau) * float(rng.uniform(1.0, 2.0)) + 0.05
        omega = float(rng.uniform(0.1, 0.9))
        ch = FiducialChannel.from_noise(tau, y, omega)
        name = f"tau={tau:.4g}, y={y:.4g}, omega_env={omega:.4g}"

        def run(ch=ch, name=name):
            thr = energy_threshold(ch)
            eps = 1e-9 * (1.0 + thr)
            below = capacity(ch, EnergyBudget(thr - eps))
            above = capacity(ch, EnergyBudget(thr + eps))
            gap = max(abs(above.capacity_bits - below.capacity_bits), abs(below.omega_in - ch.omega_env))
            return CheckResult("continuity", name, 0.0, gap, 1e-6, gap < 1e-6)

        checks.append(Check("continuity", name, run))
    return checks


def _composition_checks():
    cases = [((0.5, 0.5, 0.0), (0.25, 0.375)), ((-1.0, 0.5, 0.1), (-0.5, 0.9))]
    checks = []
    for (tau1, tau2, m_env), expected in cases:
        name = f"tau1={tau1:g}, tau2={tau2:g}, m_env={m_env:g}"

        def run(tau1=tau1, tau2=tau2, m_env=m_env, expected=expected, name=name):
            ch = compose(
                FiducialChannel.from_environment(tau1, m_env, perfect_at_unity=True),
                FiducialChannel.from_environment(tau2, m_env, perfect_at_unity=True),
            )
            actual = (ch.tau, ch.y)
            ok = all(math.isclose(a, e, abs_tol=1e-12) for a, e in zip(actual, expected))
            return CheckResult("composition", name, expected, actual, 1e-12, ok)

        checks.append(Check("composition", name, run))
    return checks


def _pipelining_checks(samples=10, seed=11):
    rng = np.random.default_rng(seed)
    checks = []
    for case in CONCATENATION_CASES:
        for _ in range(samples):
            ch1, ch2, n_bar = random_pair(rng, case)
            name = f"{case}: tau1={ch1.tau:.4g}, tau2={ch2.tau:.4g}, m_env={ch1.m_env:.4g}, n_bar={n_bar:.4g}"

            def run(ch1=ch1, ch2=ch2, n_bar=n_bar, name=name):
                report = pipelining_check(ch1, ch2, n_bar)
                bound = report.capacity_first if report.case == "conjugator_then_attenuator" else min(
                    report.capacity_first, report.capacity_second
                )
                return CheckResult("pipelining", name, bound, report.capacity_composed, PIPELINING_SLACK, report.holds)

            checks.append(Check("pipelining", name, run))
    return checks


def build_checks(resolution=300, include_oracle=True, golden=None):
    golden = golden or load_golden()
    checks = (
        _threshold_checks(golden)
        + _squeeze_checks(golden)
        + _constant_checks(golden)
        + _scenario_checks(golden)
        + _continuity_checks()
        + _composition_checks()
        + _pipelining_checks()
    )
    if include_oracle:
        checks += _oracle_checks(golden, resolution)
    return checks


def run_verification(resolution=300, include_oracle=True, max_workers=None):
    """Run every check; a check that raises counts as a failure"""
    checks = build_checks(resolution, include_oracle)
    results = RowProcessor(max_workers, label="verification checks").process(checks, lambda c: c.run())

    outcomes = []
    for r in results:
        if r.ok:
            outcomes.append(r.value)
        else:
            outcomes.append(CheckResult(r.item.group, r.item.name, None, r.error, math.nan, False))
    report = VerificationReport(outcomes)
    for failure in report.failures:
        logger.error(f"Verification failed [{failure.group}] {failure.name}: expected {failure.expected}, got {failure.actual}")
    logger.info(f"Verification: {len(outcomes) - len(report.failures)}/{len(outcomes)} checks passed")
    return report
