#!/usr/bin/env python3
"""
NehariLab: numerical Nehari-manifold methods for asymptotically linear
elliptic problems.

This module serves as the entry point for the NehariLab command line.
"""

import sys
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Dict, Iterator, Optional, Tuple

import numpy as np
import typer
from rich.console import Console

from neharilab import __version__
from neharilab.config.schema import RunConfig
from neharilab.config.settings import load_config, load_env
from neharilab.core.grid import Grid, GridField, StiffnessForm, assemble_stiffness, build_grid
from neharilab.core.nehari import EnergyFunctional
from neharilab.core.solve import SolveOptions, coercive_min, ground_state, tau_m
from neharilab.core.spectrum import Spectrum, classify_resonance, weighted_eigs
from neharilab.core.verify import beta_certificate, section5_pipeline, sobolev_estimate, sobolev_from_config
from neharilab.errors import ConfigError, NehariLabError, NoPositiveSpectrumError
from neharilab.models import load_model
from neharilab.models.analysis import LatticeSpec, check_hypotheses
from neharilab.models.base import NonlinearModel
from neharilab.utils.logging import enable_file_logging, package_loggers, set_level, setup_logger
from neharilab.utils.reporting import read_field_csv, write_field_csv, write_json, write_table_csv

app = typer.Typer(help="NehariLab: Nehari-manifold ground states for asymptotically linear problems.")
console = Console()

# Setup logger
logger = setup_logger(__name__)

state: Dict[str, Any] = {"verbose": False, "log_file": None}

CONFIG_HELP = "Path to a YAML or JSON run configuration"
OUT_HELP = "Write the JSON report to this path"


@dataclass
class Session:
    config: RunConfig
    grid: Grid
    form: StiffnessForm
    model: NonlinearModel
    functional: EnergyFunctional


def _configure_logging(config: RunConfig) -> None:
    set_level("debug" if state["verbose"] else config.logging.level)
    if state["log_file"]:
        for log in package_loggers():
            enable_file_logging(log, state["log_file"], "debug" if state["verbose"] else "info")
        state["log_file"] = None


def open_session(config_path: Optional[str]) -> Session:
    """Load the configuration and build grid, stiffness form, model and functional."""
    load_env()
    config = load_config(config_path)
    _configure_logging(config)
    grid = build_grid(config.grid.dim, config.grid.extents, config.grid.counts)
    form = assemble_stiffness(grid)
    model = load_model(config.model)
    return Session(config=config, grid=grid, form=form, model=model, functional=EnergyFunctional(model, form))


def eta_spectrum(session: Session, m: int) -> Spectrum:
    cfg = session.config.spectrum
    return weighted_eigs(session.form, session.functional.eta_nodes, m, cfg.cluster_tol, cfg.dense_limit)


def alpha_spectrum(session: Session, m: int) -> Optional[Spectrum]:
    """Spectrum of alpha, or None when alpha has no positive part (lambda_1(alpha) = +inf)."""
    cfg = session.config.spectrum
    try:
        return weighted_eigs(session.form, session.functional.alpha_nodes, m, cfg.cluster_tol, cfg.dense_limit)
    except NoPositiveSpectrumError:
        logger.info("alpha has no positive part; using lambda_1(alpha) = +inf")
        return None


def hypotheses_for(session: Session, s_alpha: Optional[Spectrum], s_eta: Optional[Spectrum]):
    cfg = session.config
    lattice = LatticeSpec(cfg.hypotheses.t_min, cfg.hypotheses.t_max, cfg.hypotheses.lattice_size,
                          cfg.hypotheses.sample_nodes)
    return check_hypotheses(session.model, s_alpha, s_eta, lattice, session.grid.coordinates(), cfg.hypotheses.m,
                            cfg.verify.beta_ladder, cfg.verify.beta_cap)


def _direction(session: Session, direction: Optional[str]) -> np.ndarray:
    """Resolve e1, e:<j> (j-th eigenfunction of the eta weight) or file:<csv> to nodal values."""
    direction = direction or "e1"
    if direction == "e1":
        return eta_spectrum(session, 1).eigenfunction(1)
    kind, _, arg = direction.partition(":")
    if kind == "e" and arg.isdigit() and int(arg) >= 1:
        j = int(arg)
        return eta_spectrum(session, j).eigenfunction(j)
    if kind == "file" and arg:
        return session.grid.values(read_field_csv(arg))
    raise ConfigError(f"unknown direction {direction!r}; expected e1, e:<j> or file:<csv>")


def _weight_nodes(session: Session, weight: str) -> np.ndarray:
    """Nodal weight for eta, alpha, gap (eta - alpha) or custom:<csv>."""
    if weight.startswith("custom:"):
        return session.grid.values(read_field_csv(weight[len("custom:"):]))
    nodes = {
        "eta": session.functional.eta_nodes,
        "alpha": session.functional.alpha_nodes,
        "gap": session.functional.eta_nodes - session.functional.alpha_nodes,
    }
    if weight not in nodes:
        raise ConfigError(f"unknown weight {weight!r}; expected eta, alpha, gap or custom:<csv>")
    return nodes[weight]


def _parse_range(text: str) -> Tuple[float, float, int]:
    """Parse t_min,t_max,k into a sampling range."""
    parts = [p.strip() for p in text.split(",")]
    try:
        t_min, t_max, k = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError):
        raise ConfigError(f"invalid range {text!r}; expected t_min,t_max,k") from None
    if len(parts) != 3 or not 0.0 <= t_min < t_max or k < 2:
        raise ConfigError(f"invalid range {text!r}; need 0 <= t_min < t_max and k >= 2")
    return t_min, t_max, k


def _without_arrays(report: Any, *names: str) -> Dict[str, Any]:
    return {k: v for k, v in vars(report).items() if k not in names}


@contextmanager
def handle_errors(out: Optional[str] = None) -> Iterator[None]:
    """Map library errors to exit codes, emitting any partial report first."""
    try:
        yield
    except NehariLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        partial = getattr(e, "report", None)
        if partial is None:
            partial = getattr(e, "ledger", None)
        if out and partial is not None:
            if hasattr(partial, "u_star"):
                partial = _without_arrays(partial, "u_star", "v_star")
            write_json({"error": type(e).__name__, "message": str(e), "partial": partial}, out)
        console.print(f"[bold red]Error:[/bold red] {str(e)}")
        sys.exit(e.exit_code)
    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        console.print(f"[bold red]Error:[/bold red] {str(e)}")
        sys.exit(1)


def version_callback(value: bool):
    if value:
        console.print(f"NehariLab v{__version__}")
        raise typer.Exit()


@app.callback()
def cli(
    version: Optional[bool] = typer.Option(
        None, "--version", callback=version_callback, is_eager=True, help="Show the version and exit"
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Enable debug logging"),
    log_file: Optional[str] = typer.Option(None, "--log-file", help="Also write logs to this file"),
):
    """NehariLab command line."""
    state["verbose"] = verbose
    state["log_file"] = log_file


@app.command()
def spectrum(
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    weight: str = typer.Option("eta", "--weight", "-w", help="Weight: eta, alpha, gap (eta - alpha) or custom:<csv>"),
    m: Optional[int] = typer.Option(None, "--m", "-m", help="Number of eigenvalues (default: spectrum.m)"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help=OUT_HELP),
    field: Optional[str] = typer.Option(None, "--field", help="Write the first eigenfunction as CSV"),
):
    """Weighted Dirichlet eigenvalues of the configured model."""
    with handle_errors(out):
        session = open_session(config_path)
        count = m or session.config.spectrum.m
        nodes = _weight_nodes(session, weight)
        cfg = session.config.spectrum
        spec = weighted_eigs(session.form, nodes, count, cfg.cluster_tol, cfg.dense_limit)
        report = {"weight": weight, **spec.summary(), "residuals": spec.residuals()}
        if out:
            write_json(report, out)
        if field:
            write_field_csv(spec.field(1), field)
        shown = ", ".join(f"{v:.10g}" for v in spec.eigenvalues[:count])
        console.print(f"lambda({weight}): {shown}")


@app.command()
def classify(
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    m: Optional[int] = typer.Option(None, "--m", help="Number of eta-eigenvalues (default: spectrum.m)"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help=OUT_HELP),
):
    """Resonance class and hypothesis report of the configured model."""
    with handle_errors(out):
        session = open_session(config_path)
        count = max(m or session.config.spectrum.m, session.config.hypotheses.m)
        s_eta = eta_spectrum(session, count)
        s_alpha = alpha_spectrum(session, session.config.hypotheses.m)
        verdict = classify_resonance(session.model, s_eta, 1e-6, session.grid.coordinates(),
                                     session.config.verify.beta_ladder, session.config.verify.beta_cap)
        hypotheses = hypotheses_for(session, s_alpha, s_eta)
        if out:
            write_json({"model": session.model.describe(), "resonance": verdict, "hypotheses": hypotheses}, out)
        console.print(
            f"{verdict.kind.value}: distance to 1 = {verdict.distance_to_one:.3e}; "
            f"f1={hypotheses.f1_ok.value} f2={hypotheses.f2_ok.value} fF={hypotheses.fF_holds.value}"
        )


@app.command()
def fiber(
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    direction: str = typer.Option("e1", "--direction", "-d", help="Direction: e1, e:<j> or file:<csv>"),
    field: Optional[str] = typer.Option(None, "--field", help="Direction u as CSV (same as --direction file:<csv>)"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Fiber tolerance (default: solve.fiber_tol)"),
    samples: Optional[str] = typer.Option(None, "--landscape", help="Also sample h_u on t_min,t_max,k"),
    table: str = typer.Option("landscape.csv", "--table", help="CSV path for the --landscape samples"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help=OUT_HELP),
):
    """Fibering scale t_u of a direction, optionally with h_u(t) sampled along the ray."""
    with handle_errors(out):
        session = open_session(config_path)
        u = _direction(session, f"file:{field}" if field else direction)
        result = session.functional.project_fiber(u, session.config.solve.fiber_tol if tol is None else tol)
        report = {
            "fiber": result,
            "admissibility": session.functional.admissibility(u),
            "limits": session.functional.fiber_limits(u),
        }
        if samples:
            t_min, t_max, k = _parse_range(samples)
            rows = session.functional.landscape(u, np.linspace(t_min, t_max, k))
            write_table_csv(rows, table, ("t", "h", "dh"))
            report["landscape"] = {"t_min": t_min, "t_max": t_max, "points": k, "path": table}
        if out:
            write_json(report, out)
        console.print(f"t_u={result.t_u:.15g} h(t_u)={result.value:.15g} residual={result.slope_residual:.3e}")


@app.command()
def landscape(
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    direction: str = typer.Option("e1", "--direction", "-d", help="Direction: e1, e:<j> or file:<csv>"),
    field: Optional[str] = typer.Option(None, "--field", help="Direction u as CSV (same as --direction file:<csv>)"),
    t_max: Optional[float] = typer.Option(None, "--t-max", help="Largest t (default: 2 t_u)"),
    points: int = typer.Option(101, "--points", help="Number of samples in [0, t_max]"),
    out: str = typer.Option("landscape.csv", "--out", "-o", help="CSV output path"),
):
    """Sample h_u(t) and h_u'(t) along a ray."""
    with handle_errors():
        session = open_session(config_path)
        u = _direction(session, f"file:{field}" if field else direction)
        if t_max is None:
            t_max = 2.0 * session.functional.project_fiber(u, session.config.solve.fiber_tol).t_u
        rows = session.functional.landscape(u, np.linspace(0.0, t_max, points))
        write_table_csv(rows, out, ("t", "h", "dh"))
        console.print(f"Wrote {len(rows)} samples of the fiber on [0, {t_max:.6g}] to {out}")


@app.command()
def solve(
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    out: Optional[str] = typer.Option(None, "--out", "-o", help=OUT_HELP),
    field: Optional[str] = typer.Option(None, "--field", help="Write u* as CSV"),
    trace: Optional[str] = typer.Option(None, "--trace", help="Write the iteration trace as CSV"),
    force: bool = typer.Option(False, "--force", help="Run even if the hypotheses fail"),
):
    """Ground state by descent of the reduced functional on the admissible sphere."""
    with handle_errors(out):
        session = open_session(config_path)
        m = session.config.hypotheses.m
        s_eta = eta_spectrum(session, max(m, 4))
        s_alpha = alpha_spectrum(session, m)
        hypotheses = hypotheses_for(session, s_alpha, s_eta)
        opts = SolveOptions.from_config(session.config.solve)
        if isinstance(session.config.verify.sobolev, (int, float)):
            opts.sobolev = float(session.config.verify.sobolev)
        report = ground_state(session.functional, s_eta, opts, None, hypotheses, force)
        if out:
            write_json({"model": session.model.describe(), "hypotheses": hypotheses,
                        "ground_state": _without_arrays(report, "u_star", "v_star")}, out)
        if field:
            write_field_csv(GridField(session.grid, report.u_star), field)
        if trace:
            write_table_csv(report.trace_rows(), trace)
        console.print(
            f"c_N={report.c_N:.15g} residual={report.dual_residual:.3e} "
            f"iterations={report.iterations} sign={report.sign.value}"
        )


@app.command()
def minimize(
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    out: Optional[str] = typer.Option(None, "--out", "-o", help=OUT_HELP),
    field: Optional[str] = typer.Option(None, "--field", help="Write u* as CSV"),
    force: bool = typer.Option(False, "--force", help="Run even if the hypotheses fail"),
):
    """Global minimum of a coercive energy."""
    with handle_errors(out):
        session = open_session(config_path)
        m = session.config.hypotheses.m
        s_alpha = weighted_eigs(session.form, session.functional.alpha_nodes, m,
                                session.config.spectrum.cluster_tol, session.config.spectrum.dense_limit)
        try:
            s_eta = eta_spectrum(session, 1)
        except NoPositiveSpectrumError:
            s_eta = None
        hypotheses = hypotheses_for(session, s_alpha, s_eta)
        opts = SolveOptions.from_config(session.config.solve)
        report = coercive_min(session.functional, s_alpha, opts, hypotheses, force)
        if out:
            write_json({"model": session.model.describe(), "hypotheses": hypotheses,
                        "minimum": _without_arrays(report, "u_star")}, out)
        if field:
            write_field_csv(GridField(session.grid, report.u_star), field)
        console.print(f"I(u*)={report.energy:.15g} residual={report.dual_residual:.3e} iterations={report.iterations}")


@app.command("verify-beta")
def verify_beta(
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    sobolev: Optional[str] = typer.Option(None, "--sobolev", help="Sobolev constant or 'discrete'"),
    with_level: bool = typer.Option(False, "--with-level", help="Solve for c_N and audit the level gap"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help=OUT_HELP),
):
    """Certificate for the finite-beta condition."""
    with handle_errors(out):
        session = open_session(config_path)
        cfg = session.config
        m = cfg.verify.m
        s_eta = eta_spectrum(session, max(m, 4))
        gap_nodes = session.functional.eta_nodes - session.functional.alpha_nodes
        s_gap = weighted_eigs(session.form, gap_nodes, 1, cfg.spectrum.cluster_tol, cfg.spectrum.dense_limit)
        tau = tau_m(session.functional, s_eta, m, cfg.solve.tau_restarts, cfg.solve.seed, cfg.solve.fiber_tol)
        setting = sobolev if sobolev is not None else cfg.verify.sobolev
        constant = None if setting is None else sobolev_from_config(setting, session.form)
        c_N = None
        if with_level:
            c_N = ground_state(session.functional, s_eta, SolveOptions.from_config(cfg.solve)).c_N
        cert = beta_certificate(session.model, s_eta, s_gap, tau, constant, session.grid.dim, None,
                                cfg.verify.beta_ladder, cfg.verify.beta_cap, c_N)
        if out:
            write_json({"model": session.model.describe(), "certificate": cert, "tau": tau,
                        "sobolev": constant}, out)
        console.print(f"verdict={cert.verdict} lhs={cert.lhs:.10g} rhs={cert.rhs:.10g}")


@app.command()
def section5(
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    eta: Optional[float] = typer.Option(None, "--eta", help="Asymptotic slope (default: model.eta)"),
    theta: Optional[float] = typer.Option(None, "--theta", help="Threshold (default: |u_*|_inf)"),
    sobolev: Optional[str] = typer.Option(None, "--sobolev", help="Sobolev constant or 'discrete'"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help=OUT_HELP),
):
    """End-to-end ledger of the piecewise example."""
    with handle_errors(out):
        session = open_session(config_path)
        cfg = session.config
        eta_value = eta if eta is not None else getattr(cfg.model, "eta", None) or 1000.0
        setting = sobolev if sobolev is not None else cfg.verify.sobolev
        if setting == "discrete" and session.grid.dim <= 2:
            logger.warning(f"N={session.grid.dim}: no discrete Sobolev estimate; pass --sobolev <value>")
            setting = None
        constant = None if setting is None else sobolev_from_config(setting, session.form)
        ledger = section5_pipeline(eta_value, session.grid, constant, theta, cfg.verify.beta_ladder,
                                   cfg.verify.beta_cap, cfg.solve.tau_restarts, cfg.solve.seed, cfg.solve.fiber_tol)
        if out:
            write_json(ledger, out)
        summary = f"t_*={ledger['fiber']['t_star']:.10g} tau={ledger['tau']['tau_m']:.10g}"
        if "certificate" in ledger:
            summary += f" verdict={ledger['certificate'].verdict}"
        console.print(summary)


@app.command("sobolev")
def sobolev_command(
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help=CONFIG_HELP),
    refine: Optional[int] = typer.Option(None, "--refine", help="Also estimate on a grid with this many nodes per axis"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help=OUT_HELP),
):
    """Discrete Sobolev constant of the configured box (N >= 3)."""
    with handle_errors(out):
        session = open_session(config_path)
        estimate = sobolev_estimate(session.form)
        report: Dict[str, Any] = {"grid": session.grid, "estimate": estimate}
        if refine:
            fine = build_grid(session.grid.dim, session.grid.extents, [refine] * session.grid.dim)
            finer = sobolev_estimate(fine)
            report["refined"] = {"counts": list(fine.counts), "estimate": finer,
                                 "relative_change": (finer.value - estimate.value) / estimate.value}
        if out:
            write_json(report, out)
        console.print(f"S={estimate.value:.10g} converged={estimate.converged} iterations={estimate.iterations}")


@app.command()
def version():
    """Display the NehariLab version."""
    console.print(f"NehariLab v{__version__}")


def main():
    """Run the application."""
    app()


if __name__ == "__main__":
    main()
