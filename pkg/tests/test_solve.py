"""
Tests for the ground-state, tau_m and coercive drivers.
"""

import numpy as np
import pytest

from tests.conftest import T_E1_CONTINUUM, near_boundary_field, unit_interval
from neharilab.core.grid import assemble_stiffness, build_grid
from neharilab.core.nehari import EnergyFunctional
from neharilab.core.solve import (
    SignClass,
    SolveOptions,
    check_restart_agreement,
    coercive_min,
    ground_state,
    random_admissible_field,
    sign_of,
    tau_m,
)
from neharilab.core.spectrum import weighted_eigs
from neharilab.errors import FailedNegativeStartError, HypothesisError, NonConvergenceError
from neharilab.models import coercive_model, rational_model, section5_model
from neharilab.models.analysis import check_hypotheses


@pytest.fixture
def small_setup(section5, small_form):
    functional = EnergyFunctional(section5, small_form)
    spec = weighted_eigs(small_form, np.full(small_form.grid.size, 1000.0), 4)
    return functional, spec


@pytest.fixture(scope="module")
def worked_ground_state():
    """Ground state of the worked example on 127 nodes."""
    form = assemble_stiffness(unit_interval(127))
    functional = EnergyFunctional(section5_model(12.0, 1000.0), form)
    spec = weighted_eigs(form, np.full(form.grid.size, 1000.0), 4)
    return functional, spec, ground_state(functional, spec, SolveOptions(seed=7))


def test_sign_of():
    """Signs are judged up to tol * |u|_inf; the zero field is degenerate."""
    assert sign_of(np.array([0.0, 1.0, 2.0])).kind == SignClass.NONNEGATIVE
    assert sign_of(np.array([-1.0, -1e-12, 0.0])).kind == SignClass.NONPOSITIVE
    assert sign_of(np.array([1.0, -1e-10])).kind == SignClass.NONNEGATIVE
    assert sign_of(np.array([1.0, -0.5])).kind == SignClass.SIGN_CHANGING
    zero = sign_of(np.zeros(3))
    assert zero.degenerate and zero.kind == SignClass.NONNEGATIVE


def test_sign_audit_energies(functional, unit_spectrum):
    """With a functional the parts u+ and u- are evaluated."""
    u = 5.0 * unit_spectrum.eigenfunction(2)
    report = sign_of(u, functional=functional)
    assert report.kind == SignClass.SIGN_CHANGING
    assert report.energy_plus == pytest.approx(functional.energy(np.maximum(u, 0.0)))
    assert report.energy_minus == pytest.approx(report.energy_plus, rel=1e-6)


def test_random_admissible_field(small_setup, rng):
    """Random combinations of eigenfunctions below 1 are unit-norm and admissible."""
    functional, spec = small_setup
    for _ in range(10):
        v = random_admissible_field(spec, 4, rng)
        assert functional.form.norm(v) == pytest.approx(1.0, rel=1e-12)
        assert functional.admissibility(v).in_A


def test_ground_state_worked_example(worked_ground_state):
    """The descent converges to a positive solution on the Nehari set."""
    functional, spec, report = worked_ground_state

    assert report.converged
    assert report.c_N > 0
    assert report.c_N <= report.psi_trace[0] + 1e-9
    assert report.dual_residual <= 1e-8
    assert report.nehari_residual <= 1e-8
    assert report.nehari_energy_gap <= 1e-8
    assert report.gradient_dual_norm <= 1e-6 * max(1.0, functional.form.norm(report.u_star))
    assert report.sign == SignClass.NONNEGATIVE
    assert report.sign_audit["signed"]
    assert report.u_star == pytest.approx(report.t_star * report.v_star)
    assert functional.form.norm(report.v_star) == pytest.approx(1.0, rel=1e-12)
    assert len(report.trace_rows()) == report.iterations + 1
    assert report.restart_values == [report.c_N]
    assert report.restart_spread == 0.0


def test_ground_state_level_near_e1_fiber(worked_ground_state):
    """Psi(e_1) bounds the level from above and is close to it."""
    functional, spec, report = worked_ground_state
    psi_e1 = functional.psi(spec.eigenfunction(1))
    assert psi_e1 == pytest.approx(T_E1_CONTINUUM**2 / 6.0, rel=1e-3)
    assert report.c_N <= psi_e1
    assert report.c_N >= 0.8 * psi_e1


def test_ground_state_mirror_start(worked_ground_state):
    """Starting from -e_1 gives the mirrored solution at the same level."""
    functional, spec, report = worked_ground_state
    mirror = ground_state(functional, spec, SolveOptions(seed=7), start=-spec.eigenfunction(1))

    assert mirror.sign == SignClass.NONPOSITIVE
    assert mirror.c_N == pytest.approx(report.c_N, rel=1e-8)
    assert np.allclose(mirror.u_star, -report.u_star, atol=1e-6 * np.max(np.abs(report.u_star)))


def test_ground_state_restarts_agree(small_setup):
    """Perturbed restarts converge to the same level."""
    functional, spec = small_setup
    report = ground_state(functional, spec, SolveOptions(restarts=3, seed=11))

    assert len(report.restart_values) == 3
    assert report.restart_spread <= 1e-6
    assert check_restart_agreement(report.restart_values) == pytest.approx(report.restart_spread)


def test_ground_state_reports_non_convergence(small_setup):
    """Running out of iterations raises with the partial report attached."""
    functional, spec = small_setup
    with pytest.raises(NonConvergenceError) as excinfo:
        ground_state(functional, spec, SolveOptions(max_iter=1))
    partial = excinfo.value.report
    assert partial.iterations == 1
    assert not partial.converged
    assert len(partial.psi_trace) == 2


def test_ground_state_checks_support_near_boundary(small_setup):
    """Iterates close to the boundary of the cone carry the support check against the Sobolev bound."""
    functional, _ = small_setup
    form = functional.form
    spec = weighted_eigs(form, np.full(form.grid.size, 1000.0), 11)
    start = near_boundary_field(spec, 5e-4)
    try:
        report = ground_state(functional, spec, SolveOptions(max_iter=1, sobolev=1.0), start=start)
    except NonConvergenceError as e:
        report = e.report

    check = report.measure_bound
    assert check is not None
    assert check.applicable
    assert check.holds
    assert check.lower_bound == pytest.approx(1000.0**-0.5, rel=1e-12)
    assert report.options["sobolev"] == 1.0


def test_ground_state_skips_support_check_inside(worked_ground_state):
    """Without a Sobolev constant, or far from the boundary, no support check is recorded."""
    _, _, report = worked_ground_state
    assert report.measure_bound is None


def test_ground_state_hypothesis_gate(small_form):
    """Failing hypotheses stop the solver unless forced."""
    model = rational_model(0.0, 5.0)
    s_eta = weighted_eigs(small_form, np.full(small_form.grid.size, 5.0), 2)
    report = check_hypotheses(model, None, s_eta)
    assert not report.ground_state_ready

    with pytest.raises(HypothesisError) as excinfo:
        ground_state(EnergyFunctional(model, small_form), s_eta, hypotheses=report)
    assert excinfo.value.report is report


def test_tau_single_direction(functional, eta_spectrum):
    """With a simple first eigenvalue tau_1 is the fiber scale of e_1."""
    result = tau_m(functional, eta_spectrum, 1)

    assert result.chi == 1
    assert result.restarts == 0
    assert result.tau_m == pytest.approx(T_E1_CONTINUUM, rel=1e-3)
    assert result.basis_values == [result.tau_m]
    assert result.margin == result.tau_m


def test_tau_double_eigenvalue_on_square():
    """On the square tau_2 minimizes over a three-dimensional sphere."""
    grid = build_grid(2, [(0.0, 1.0), (0.0, 1.0)], [15, 15])
    form = assemble_stiffness(grid)
    functional = EnergyFunctional(section5_model(12.0, 1000.0), form)
    spec = weighted_eigs(form, np.full(grid.size, 1000.0), 2)
    result = tau_m(functional, spec, 2, restarts=1, seed=3, max_iter=20)

    assert result.chi == 3
    assert len(result.basis_values) == 3
    assert 0 < result.tau_m <= min(result.basis_values) * (1.0 + 1e-12)
    assert np.linalg.norm(result.coefficients) == pytest.approx(1.0, rel=1e-12)
    assert functional.project_fiber(result.field).t_u == pytest.approx(result.tau_m, rel=1e-10)


def test_coercive_minimum(form):
    """A large slope at 0 and a small one at infinity give a negative global minimum."""
    model = coercive_model(20.0, 5.0)
    functional = EnergyFunctional(model, form)
    s_alpha = weighted_eigs(form, np.full(form.grid.size, 20.0), 2)
    s_eta = weighted_eigs(form, np.full(form.grid.size, 5.0), 2)
    hypotheses = check_hypotheses(model, s_alpha, s_eta)

    report = coercive_min(functional, s_alpha, hypotheses=hypotheses)

    assert report.converged
    assert report.energy < 0
    assert report.energy <= min(report.scan_values) + 1e-10
    assert report.small_t_slope < 0
    assert report.dual_residual <= 1e-8
    assert len(report.scan_amplitudes) == 61
    assert report.sign in (SignClass.NONNEGATIVE, SignClass.NONPOSITIVE)


def test_coercive_failed_negative_start(form):
    """Without a negative start the coercive driver refuses, even when forced."""
    model = rational_model(1.0, 20.0)
    functional = EnergyFunctional(model, form)
    s_alpha = weighted_eigs(form, np.ones(form.grid.size), 2)
    s_eta = weighted_eigs(form, np.full(form.grid.size, 20.0), 2)
    hypotheses = check_hypotheses(model, s_alpha, s_eta)
    assert not hypotheses.coercive_ready

    with pytest.raises(HypothesisError):
        coercive_min(functional, s_alpha, hypotheses=hypotheses)
    with pytest.raises(FailedNegativeStartError):
        coercive_min(functional, s_alpha, hypotheses=hypotheses, force=True)


def test_check_restart_agreement():
    assert check_restart_agreement([2.0, 2.0]) == 0.0
    assert check_restart_agreement([1.0, 1.000001]) == pytest.approx(1e-6)


@pytest.mark.slow
def test_ground_state_grid_refinement():
    """The level changes by under 1% when the grid is refined."""
    levels = []
    for n in (255, 511):
        form = assemble_stiffness(unit_interval(n))
        functional = EnergyFunctional(section5_model(12.0, 1000.0), form)
        spec = weighted_eigs(form, np.full(n, 1000.0), 4)
        levels.append(ground_state(functional, spec).c_N)
    assert levels[1] == pytest.approx(levels[0], rel=1e-2)


@pytest.mark.slow
def test_ground_state_many_restarts(small_setup):
    """Eight seeded restarts agree to 1e-6."""
    functional, spec = small_setup
    report = ground_state(functional, spec, SolveOptions(restarts=8, seed=5))
    assert len(report.restart_values) == 8
    assert report.restart_spread <= 1e-6


if __name__ == "__main__":
    pytest.main(["-xvs", __file__])
