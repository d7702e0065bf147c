#!/usr/bin/env python3
"""
Demo script for NehariLab.

This script runs the piecewise worked example (theta = 12) for a few values
of eta on the unit interval and prints the ledger quantities side by side,
together with the ground-state level next to the e_1 fiber bound.
"""

import sys
from pathlib import Path

import numpy as np
from rich.console import Console
from rich.table import Table

# Add the project root to the path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from neharilab.core.grid import assemble_stiffness, build_grid
from neharilab.core.nehari import EnergyFunctional
from neharilab.core.solve import ground_state
from neharilab.core.spectrum import weighted_eigs
from neharilab.core.verify import SobolevConstant, section5_pipeline
from neharilab.errors import NehariLabError
from neharilab.models import section5_model

# Setup console
console = Console()

THETA = 12.0
ETAS = [1e3, 1e4, 1e5]
NODES = 255


def run_demo():
    """Run the demonstration."""
    console.print("\n[bold green]NehariLab worked example[/bold green]\n")

    grid = build_grid(1, [(0.0, 1.0)], [NODES])
    form = assemble_stiffness(grid)
    sobolev = SobolevConstant.user(1.0, 1)

    table = Table(title=f"theta = {THETA:g}, {NODES} nodes")
    table.add_column("eta", justify="right", style="cyan")
    table.add_column("t_*", justify="right", style="green")
    table.add_column("tau_1", justify="right", style="green")
    table.add_column("beta", justify="right", style="blue")
    table.add_column("lhs", justify="right", style="purple")
    table.add_column("rhs", justify="right", style="purple")
    table.add_column("verdict", justify="center", style="red")

    for eta in ETAS:
        try:
            ledger = section5_pipeline(eta, grid, sobolev=sobolev, theta=THETA)
        except NehariLabError as e:
            table.add_row(f"{eta:g}", "", "", "", "", "", f"[red]{type(e).__name__}[/red]")
            continue
        cert = ledger["certificate"]
        table.add_row(
            f"{eta:g}",
            f"{ledger['fiber']['t_star']:.6g}",
            f"{ledger['tau']['tau_m']:.6g}",
            f"{ledger['beta']['closed_form']:.6g}",
            f"{cert.lhs:.6g}",
            f"{cert.rhs:.6g}",
            str(cert.verdict),
        )

    console.print(table)

    console.print("\n[bold yellow]Ground state at eta = 1000:[/bold yellow]")
    functional = EnergyFunctional(section5_model(THETA, 1000.0), form)
    spectrum = weighted_eigs(form, np.full(grid.size, 1000.0), 4)
    report = ground_state(functional, spectrum)
    psi_e1 = functional.psi(spectrum.eigenfunction(1))
    peak = float(np.max(np.abs(report.u_star)))

    console.print(f"[bold cyan]c_N:[/bold cyan] {report.c_N:.10g}")
    console.print(f"[bold cyan]Psi(e_1):[/bold cyan] {psi_e1:.10g}")
    console.print(f"[bold cyan]|u*|_inf:[/bold cyan] {peak:.6g} (theta = {THETA:g})")
    console.print(f"[bold cyan]iterations:[/bold cyan] {report.iterations}, sign {report.sign.value}")


if __name__ == "__main__":
    run_demo()
