import os
import sys
import json
import logging
from dataclasses import dataclass, asdict
from typing import Optional

import typer
from dotenv import load_dotenv

from analysis import SWEEP_PARAMETERS, SweepFamily, classify_scenario, classify_zones, sweep_capacity
from capacity_engine import SolverConfig, SolverError, capacity
from export import format_record, significant, table_metadata, write_table
from gauss_core import EnergyBudget, FiducialChannel, GaussianDomainError
from oracle import MIN_RESOLUTION
from verification import run_verification

load_dotenv()

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_DOMAIN = 2
EXIT_SOLVER = 3

COMMANDS = ("capacity", "sweep", "classify", "zones", "verify")
CHANNEL_COMMANDS = ("capacity", "sweep", "classify")

logger = logging.getLogger(__name__)

app = typer.Typer(help="Gaussian capacity of the single-mode fiducial channel", add_completion=False)


def setup_logging():
    """Log to logs/gausscap.log and stderr unless logging is already configured"""
    root = logging.getLogger()
    if root.handlers:
        return
    if not os.path.exists("logs"):
        os.makedirs("logs")
    logging.basicConfig(
        level=os.getenv("GAUSSCAP_LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=[
            logging.FileHandler("logs/gausscap.log"),
            logging.StreamHandler(),
        ],
    )


@dataclass
class RunConfig:
    command: str
    tau: Optional[float] = None
    m_env: Optional[float] = None
    y: Optional[float] = None
    omega_env: float = 1.0
    n_bar: float = 1.0
    param: Optional[str] = None
    lo: Optional[float] = None
    hi: Optional[float] = None
    steps: int = 50
    log: bool = False
    tau_range: tuple = (-2.0, 2.0)
    y_range: tuple = (0.0, 1.5)
    fmt: str = "text"
    output: Optional[str] = None
    abs_tol: Optional[float] = None
    max_iter: Optional[int] = None
    bracket_grid: Optional[int] = None
    resolution: int = 300
    include_oracle: bool = True
    threads: Optional[int] = None

    def validate(self):
        if self.command not in COMMANDS:
            raise GaussianDomainError(f"unknown command {self.command!r}")
        if self.command in CHANNEL_COMMANDS:
            if self.tau is None:
                raise GaussianDomainError("--tau is required")
            swept_noise = self.command == "sweep" and self.sweep_parameter in ("m_env", "y")
            if not swept_noise and (self.m_env is None) == (self.y is None):
                raise GaussianDomainError("give exactly one of --m-env and --y")
        has_sweep = self.param is not None or self.lo is not None or self.hi is not None
        if self.command == "sweep" and (self.param is None or self.lo is None or self.hi is None):
            raise GaussianDomainError("sweep needs --param, --lo and --hi")
        if self.command == "sweep" and self.sweep_parameter not in SWEEP_PARAMETERS:
            raise GaussianDomainError(f"cannot sweep {self.param!r}; choose one of {', '.join(SWEEP_PARAMETERS)}")
        if self.command != "sweep" and has_sweep:
            raise GaussianDomainError("--param/--lo/--hi only apply to sweep")
        if self.command == "verify" and self.include_oracle and self.resolution < MIN_RESOLUTION:
            raise GaussianDomainError(f"--resolution must be >= {MIN_RESOLUTION}, got {self.resolution}")
        return self

    @property
    def sweep_parameter(self):
        return self.param.replace("-", "_") if self.param else None

    def solver(self):
        base = SolverConfig.from_env()
        return SolverConfig(
            abs_tol=self.abs_tol if self.abs_tol is not None else base.abs_tol,
            max_iter=self.max_iter if self.max_iter is not None else base.max_iter,
            bracket_grid=self.bracket_grid if self.bracket_grid is not None else base.bracket_grid,
        )

    def channel(self):
        if self.m_env is not None:
            return FiducialChannel.from_environment(self.tau, self.m_env, self.omega_env)
        return FiducialChannel.from_noise(self.tau, self.y, self.omega_env)


def _run_capacity(config):
    solution = capacity(config.channel(), EnergyBudget(config.n_bar), config.solver())
    row = solution.as_row()
    if config.fmt == "json":
        print(json.dumps({"metadata": table_metadata(**asdict(config)), "solution": significant(row)}, indent=2))
    else:
        print(format_record(row))
    return EXIT_OK


def _run_sweep(config):
    parameter = config.sweep_parameter
    fixed = {"tau": config.tau, "omega_env": config.omega_env, "n_bar": config.n_bar, "m_env": config.m_env, "y": config.y}
    fixed.pop(parameter)
    family = SweepFamily(parameter=parameter, **fixed)
    table = sweep_capacity(family, config.lo, config.hi, config.steps, config.log, config.solver(), config.threads)

    fmt = "json" if config.fmt == "json" else "csv"
    output = config.output or os.path.join("output", f"sweep_{parameter}.{fmt}")
    metadata = table_metadata(**asdict(config))
    metadata.update(significant(table.metadata))
    write_table(table.frame, output, fmt, metadata)
    print(output)
    if table.error_count:
        print(f"  → {table.error_count} rows with errors", file=sys.stderr)
    return EXIT_OK


def _run_classify(config):
    ch = config.channel()
    scenario = classify_scenario(ch.tau, ch.y, config.n_bar)
    record = {
        "tau": ch.tau,
        "y": ch.y,
        "n_bar": config.n_bar,
        "scenario": scenario.kind.value,
        "extrema": [{"omega_env": e.omega_env, "kind": e.kind.value} for e in scenario.extrema],
        "boundary_minimum": scenario.boundary_minimum,
    }
    if config.fmt == "json":
        print(json.dumps(significant(record), indent=2))
    else:
        print(format_record(record))
    return EXIT_OK


def _run_zones(config):
    frame = classify_zones(config.n_bar, config.tau_range, config.y_range, config.steps, max_workers=config.threads)
    fmt = "json" if config.fmt == "json" else "csv"
    output = config.output or os.path.join("output", f"zones.{fmt}")
    write_table(frame, output, fmt, table_metadata(**asdict(config)))
    print(output)
    return EXIT_OK


def _run_verify(config):
    report = run_verification(config.resolution, config.include_oracle, config.threads)
    if config.output:
        fmt = "json" if config.fmt == "json" else "csv"
        write_table(report.frame(), config.output, fmt, table_metadata(**asdict(config)))
    passed = len(report.checks) - len(report.failures)
    print(f"{passed}/{len(report.checks)} checks passed")
    for failure in report.failures:
        print(f"  → FAILED [{failure.group}] {failure.name}: expected {failure.expected}, got {failure.actual}")
    return EXIT_OK if report.passed else EXIT_FAILED


HANDLERS = {
    "capacity": _run_capacity,
    "sweep": _run_sweep,
    "classify": _run_classify,
    "zones": _run_zones,
    "verify": _run_verify,
}


def run(config):
    """Execute one command; returns the process exit status"""
    try:
        config.validate()
        return HANDLERS[config.command](config)
    except GaussianDomainError as e:
        logger.error(f"Invalid parameters: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return EXIT_DOMAIN
    except SolverError as e:
        logger.error(f"Solver failure: {str(e)}")
        print(f"solver error: {str(e)}", file=sys.stderr)
        return EXIT_SOLVER


def _finish(config):
    code = run(config)
    if code:
        raise typer.Exit(code=code)


@app.callback()
def main_callback():
    setup_logging()


@app.command("capacity")
def capacity_command(
    tau: float = typer.Option(..., help="Transmissivity, gain or (negative) phase-conjugation factor"),
    m_env: Optional[float] = typer.Option(None, help="Environment thermal photons"),
    y: Optional[float] = typer.Option(None, help="Noise magnitude, instead of --m-env"),
    omega_env: float = typer.Option(1.0, help="Noise frequency"),
    n_bar: float = typer.Option(1.0, help="Mean input photons"),
    fmt: str = typer.Option("text", "--format", help="text or json"),
    abs_tol: Optional[float] = typer.Option(None),
    max_iter: Optional[int] = typer.Option(None),
    bracket_grid: Optional[int] = typer.Option(None),
):
    """Capacity and optimal encoding of one channel"""
    _finish(RunConfig("capacity", tau=tau, m_env=m_env, y=y, omega_env=omega_env, n_bar=n_bar, fmt=fmt,
                      abs_tol=abs_tol, max_iter=max_iter, bracket_grid=bracket_grid))


@app.command("sweep")
def sweep_command(
    param: str = typer.Option(..., help="omega-env, tau, n-bar, y or m-env"),
    lo: float = typer.Option(...),
    hi: float = typer.Option(...),
    steps: int = typer.Option(50),
    log: bool = typer.Option(False, "--log", help="Geometric spacing"),
    tau: float = typer.Option(1.0),
    m_env: Optional[float] = typer.Option(None),
    y: Optional[float] = typer.Option(None),
    omega_env: float = typer.Option(1.0),
    n_bar: float = typer.Option(1.0),
    fmt: str = typer.Option("csv", "--format", help="csv or json"),
    output: Optional[str] = typer.Option(None),
    threads: Optional[int] = typer.Option(None),
    abs_tol: Optional[float] = typer.Option(None),
    max_iter: Optional[int] = typer.Option(None),
    bracket_grid: Optional[int] = typer.Option(None),
):
    """Capacity table along one parameter"""
    _finish(RunConfig("sweep", tau=tau, m_env=m_env, y=y, omega_env=omega_env, n_bar=n_bar, param=param,
                      lo=lo, hi=hi, steps=steps, log=log, fmt=fmt, output=output, threads=threads,
                      abs_tol=abs_tol, max_iter=max_iter, bracket_grid=bracket_grid))


@app.command("classify")
def classify_command(
    tau: float = typer.Option(...),
    m_env: Optional[float] = typer.Option(None),
    y: Optional[float] = typer.Option(None),
    n_bar: float = typer.Option(1.0),
    fmt: str = typer.Option("text", "--format", help="text or json"),
):
    """Shape of the capacity curve versus noise frequency"""
    _finish(RunConfig("classify", tau=tau, m_env=m_env, y=y, n_bar=n_bar, fmt=fmt))


@app.command("zones")
def zones_command(
    n_bar: float = typer.Option(0.1),
    tau_lo: float = typer.Option(-2.0),
    tau_hi: float = typer.Option(2.0),
    y_lo: float = typer.Option(0.0),
    y_hi: float = typer.Option(1.5),
    steps: int = typer.Option(41),
    fmt: str = typer.Option("csv", "--format", help="csv or json"),
    output: Optional[str] = typer.Option(None),
    threads: Optional[int] = typer.Option(None),
):
    """Scenario labels on a (tau, y) raster"""
    _finish(RunConfig("zones", n_bar=n_bar, tau_range=(tau_lo, tau_hi), y_range=(y_lo, y_hi), steps=steps,
                      fmt=fmt, output=output, threads=threads))


@app.command("verify")
def verify_command(
    resolution: int = typer.Option(300, help="Oracle grid resolution"),
    oracle: bool = typer.Option(True, "--oracle/--no-oracle"),
    fmt: str = typer.Option("csv", "--format", help="csv or json report"),
    output: Optional[str] = typer.Option(None),
    threads: Optional[int] = typer.Option(None),
):
    """Reference values and oracle agreement; exits nonzero on any failure"""
    _finish(RunConfig("verify", resolution=resolution, include_oracle=oracle, fmt=fmt, output=output,
                      threads=threads))


if __name__ == "__main__":
    app()
