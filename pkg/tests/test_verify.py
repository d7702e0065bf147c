"""
Tests for the Sobolev estimate, the beta certificate and the worked-example ledger.
"""

import math

import numpy as np
import pytest

from tests.conftest import T_E1_CONTINUUM, unit_interval
from neharilab.core.grid import assemble_stiffness, build_grid
from neharilab.core.nehari import EnergyFunctional
from neharilab.core.solve import ground_state, tau_m
from neharilab.core.spectrum import weighted_eigs
from neharilab.core.verify import (
    SobolevConstant,
    beta_certificate,
    finito_rhs,
    section5_pipeline,
    sobolev_estimate,
    sobolev_from_config,
    sobolev_quotient,
)
from neharilab.errors import (
    BetaUndecidedError,
    DimensionUnsupportedError,
    MissingIngredientError,
    PreconditionError,
    RegimeNotAttainedError,
)
from neharilab.models import parse_model, rational_model, section5_model
from neharilab.models.analysis import check_fF
from neharilab.utils.reporting import dumps


@pytest.fixture(scope="module")
def cube_form():
    return assemble_stiffness(build_grid(3, [(0.0, 1.0)] * 3, [9, 9, 9]))


@pytest.fixture
def worked_ingredients(section5, small_form):
    """Spectrum, tau_1 and a user Sobolev constant for the worked example on 127 nodes."""
    s_eta = weighted_eigs(small_form, np.full(small_form.grid.size, 1000.0), 2)
    tau = tau_m(EnergyFunctional(section5, small_form), s_eta, 1)
    return s_eta, tau, SobolevConstant.user(1.0, 1)


def test_sobolev_rejects_low_dimensions(form):
    """The critical exponent needs N >= 3."""
    with pytest.raises(DimensionUnsupportedError) as excinfo:
        sobolev_estimate(form.grid)
    assert "--sobolev" in str(excinfo.value)
    with pytest.raises(DimensionUnsupportedError):
        sobolev_quotient(form, np.ones(form.grid.size))
    with pytest.raises(DimensionUnsupportedError):
        sobolev_from_config("discrete", form)


def test_sobolev_estimate_on_cube(cube_form):
    """Inverse iteration decreases the quotient monotonically."""
    estimate = sobolev_estimate(cube_form)
    trace = np.asarray(estimate.quotient_trace)

    assert estimate.provenance == "discrete"
    assert estimate.dim == 3
    assert 0 < estimate.value < trace[0]
    assert np.all(np.diff(trace) <= 1e-10 * trace[1:])
    assert estimate.value == trace[-1]


def test_sobolev_quotient_is_homogeneous(cube_form, rng):
    u = cube_form.solve(rng.standard_normal(cube_form.grid.size))
    assert sobolev_quotient(cube_form, 3.0 * u) == pytest.approx(sobolev_quotient(cube_form, u), rel=1e-12)


def test_sobolev_from_config(form):
    """Numbers, numeric strings and invalid settings."""
    assert sobolev_from_config(2.5, form).value == 2.5
    assert sobolev_from_config("2.5", form.grid).provenance == "user"
    with pytest.raises(PreconditionError):
        sobolev_from_config("plenty", form)
    with pytest.raises(PreconditionError):
        SobolevConstant.user(-1.0, 1)


@pytest.mark.parametrize(
    "args, expected",
    [
        ((4.0, 2.0, 0.5, 2.0, 2), 8.0),
        ((4.0, 2.0, 1.0, 2.0, 3), 32.0 / (2.0 * 2.0**1.5)),
        ((1000.0, 1.0, 1.0, 1.0, 1), math.sqrt(1000.0) / 2.0),
    ],
)
def test_finito_rhs(args, expected):
    assert finito_rhs(*args) == pytest.approx(expected, rel=1e-14)


def test_certificate_is_deterministic(section5, worked_ingredients):
    """Two runs give identical certificates; stored fields reproduce the verdict."""
    s_eta, tau, sobolev = worked_ingredients
    first = beta_certificate(section5, s_eta, s_eta, tau, sobolev)
    second = beta_certificate(section5, s_eta, s_eta, tau, sobolev)
    assert first == second

    again = first.recompute()
    assert again["rhs"] == first.rhs
    assert again["verdict"] == first.verdict
    assert first.lhs == pytest.approx(section5.beta_value(), rel=1e-8)
    assert first.beta_status == "finite"
    assert first.beta_points == 1
    assert first.extrapolated
    assert any("extrapolated" in flag for flag in first.flags)


def test_certificate_ingredients(section5, worked_ingredients, small_form):
    """eta_sup, lambda_1(eta - alpha) and the level bounds."""
    s_eta, tau, sobolev = worked_ingredients
    cert = beta_certificate(section5, s_eta, s_eta, tau, sobolev, c_N=50.0)

    lam1 = s_eta.eigenvalues[0]
    assert cert.eta_sup == 1000.0
    assert cert.lambda1_gap == lam1
    assert cert.lambda1_gap * 1000.0 == pytest.approx(np.pi**2, rel=1e-3)
    assert cert.support_lower_bound == pytest.approx(1000.0**-0.5)
    assert cert.level_upper_bound == pytest.approx(tau.tau_m**2 / (2.0 * lam1))
    assert cert.level_gap["boundary_floor"] == pytest.approx(cert.support_lower_bound * cert.lhs)
    assert cert.level_gap["holds"] == (50.0 < cert.level_gap["boundary_floor"])


def test_certificate_vacuous_for_infinite_beta(small_form):
    """beta = +inf everywhere makes the certificate hold vacuously."""
    model = rational_model(0.5, 20.0)
    s_eta = weighted_eigs(small_form, np.full(small_form.grid.size, 20.0), 2)
    s_gap = weighted_eigs(small_form, np.full(small_form.grid.size, 19.5), 2)
    tau = tau_m(EnergyFunctional(model, small_form), s_eta, 1)
    cert = beta_certificate(model, s_eta, s_gap, tau, SobolevConstant.user(1.0, 1))

    assert cert.vacuous
    assert cert.verdict
    assert cert.beta_status == "infinite"
    assert cert.lambda1_gap == s_gap.eigenvalues[0]


def test_certificate_missing_ingredients(section5, worked_ingredients):
    s_eta, tau, _ = worked_ingredients
    with pytest.raises(MissingIngredientError) as excinfo:
        beta_certificate(section5, s_eta, None, tau, None)
    assert excinfo.value.missing == ["s_gap", "sobolev"]


def test_certificate_undecided_beta(worked_ingredients):
    """An oscillating excess cannot be certified."""
    s_eta, tau, sobolev = worked_ingredients
    model = parse_model("t", F="t^2/2 - abs(t)*cos(pi*ln(abs(t))/ln(10))", odd=True)
    with pytest.raises(BetaUndecidedError):
        beta_certificate(model, s_eta, s_eta, tau, sobolev)


def test_pipeline_regime_not_attained(grid):
    """With theta = |u_*|_inf the fiber maximum leaves the quadratic branch."""
    with pytest.raises(RegimeNotAttainedError) as excinfo:
        section5_pipeline(1000.0, grid)
    ledger = excinfo.value.ledger

    assert ledger["regime"] == "not attained"
    assert ledger["theta_source"] == "sup_norm"
    assert ledger["theta"] == pytest.approx(math.sqrt(2.0) / math.pi, rel=1e-3)
    assert not ledger["fiber"]["inner_branch"]
    assert ledger["fiber"]["t_times_sup"] > ledger["theta"]
    assert "tau" not in ledger


@pytest.fixture(scope="module")
def worked_ledger():
    return section5_pipeline(1000.0, unit_interval(255), theta=12.0)


def test_pipeline_worked_example(worked_ledger):
    """theta = 12, eta = 1000: every quantity of the chain is recorded."""
    ledger = worked_ledger

    assert ledger["regime"] == "attained"
    assert ledger["theta_source"] == "override"
    assert ledger["continuity"]["holds"]
    assert ledger["u_star_energy_norm"] == pytest.approx(1.0, rel=1e-12)
    assert ledger["lambda1_laplacian"] == pytest.approx(np.pi**2, rel=1e-4)

    beta = ledger["beta"]
    assert beta["difference"] <= 1e-8 * beta["closed_form"]
    assert not beta["fF_holds"]

    assert ledger["cube_integral"]["value"] == pytest.approx(8.0 * math.sqrt(2.0) / (3.0 * math.pi**4), rel=1e-3)
    assert ledger["cube_integral"]["value"] == pytest.approx(0.038723, abs=1e-3)
    assert ledger["cube_integral"]["holds"]

    fiber = ledger["fiber"]
    assert fiber["inner_branch"]
    assert fiber["t_star"] == pytest.approx(fiber["t_inner"], rel=1e-12)
    assert fiber["t_star"] == pytest.approx(T_E1_CONTINUUM, rel=1e-3)
    assert fiber["slope_identity_residual"] <= 1e-9 * fiber["t_star"] ** 2
    assert ledger["t_star_bounds"]["consistent_upper_holds"]
    assert not ledger["t_star_bounds"]["printed_upper_holds"]

    assert ledger["tau"]["chi"] == 1
    assert ledger["tau"]["tau_m"] == pytest.approx(fiber["t_star"], rel=1e-10)
    assert ledger["missing"] == ["sobolev"]
    assert "certificate" not in ledger


def test_pipeline_asymptotics(worked_ledger):
    """sqrt(eta) times the outer bracket approaches pi theta^{3/2} / 2."""
    asymptotics = worked_ledger["asymptotics"]
    limit = asymptotics["limit"]
    errors = [abs(s["scaled_bracket"] - limit) for s in asymptotics["samples"]]

    assert limit == pytest.approx(math.pi * 12.0**1.5 / 2.0)
    assert [s["eta"] for s in asymptotics["samples"]] == [1000.0, 10000.0, 100000.0]
    assert errors[2] < errors[1] < errors[0]
    assert asymptotics["positive"]


def test_pipeline_with_sobolev(grid):
    """The certificate and the rescaled inequality agree in sign and margin."""
    ledger = section5_pipeline(1000.0, grid, sobolev=SobolevConstant.user(1.0, 1), theta=12.0)

    cert = ledger["certificate"]
    inequality = ledger["inequality"]
    assert ledger["sobolev"] == {"value": 1.0, "provenance": "user"}
    assert inequality["equivalence"]["agree"]
    assert inequality["faithful"]["holds"] == cert.verdict
    assert inequality["printed_matches_faithful"] == (
        inequality["printed"]["holds"] == inequality["faithful"]["holds"]
    )
    bracket = inequality["faithful"]["lhs"]
    assert bracket == pytest.approx(2.0 * ledger["beta"]["closed_form"] / 1000.0**2, rel=1e-12)


def test_pipeline_preconditions(grid):
    """eta below lambda_1 leaves e_1 outside the admissible cone."""
    with pytest.raises(PreconditionError):
        section5_pipeline(5.0, grid)


@pytest.mark.slow
def test_pipeline_three_dimensions():
    """On the cube the discrete Sobolev constant closes the chain; the level audit is recorded."""
    grid = build_grid(3, [(0.0, 1.0)] * 3, [11, 11, 11])
    sobolev = sobolev_estimate(grid)
    ledger = section5_pipeline(1000.0, grid, sobolev=sobolev, theta=60.0)

    assert ledger["regime"] == "attained"
    assert ledger["sobolev"]["provenance"] == "discrete"
    assert ledger["inequality"]["equivalence"]["agree"]
    assert not ledger["certificate"].extrapolated

    form = assemble_stiffness(grid)
    model = section5_model(60.0, 1000.0)
    functional = EnergyFunctional(model, form)
    s_eta = weighted_eigs(form, np.full(grid.size, 1000.0), 2)
    report = ground_state(functional, s_eta)
    tau = tau_m(functional, s_eta, 1)
    cert = beta_certificate(model, s_eta, s_eta, tau, sobolev, c_N=report.c_N)
    assert cert.level_gap["c_N"] == report.c_N
    if cert.verdict:
        assert report.c_N < cert.level_gap["boundary_floor"]
        assert cert.level_gap["holds"]
    assert report.c_N <= cert.level_upper_bound * (1.0 + 1e-8)


def certify_cube(eta: float = 1e4, theta: float = 60.0):
    """Certificate on the 9^3 unit cube with the discrete Sobolev constant and tau_1 from e_1(eta)."""
    form = assemble_stiffness(build_grid(3, [(0.0, 1.0)] * 3, [9, 9, 9]))
    model = section5_model(theta, eta)
    functional = EnergyFunctional(model, form)
    s_eta = weighted_eigs(form, np.full(form.grid.size, eta), 2)
    tau = tau_m(functional, s_eta, 1)
    report = ground_state(functional, s_eta)
    cert = beta_certificate(model, s_eta, s_eta, tau, sobolev_estimate(form), c_N=report.c_N)
    return model, report, cert


@pytest.mark.slow
def test_cube_certificate_is_deterministic():
    """Two independent runs give byte-identical certificates whose verdict recomputes exactly."""
    model, report, first = certify_cube()
    _, _, second = certify_cube()

    assert dumps(first) == dumps(second)
    assert first.recompute() == {"lhs": first.lhs, "rhs": first.rhs, "verdict": first.verdict}
    assert first.sobolev_provenance == "discrete"
    assert first.beta_status == "finite"
    assert not check_fF(model)
    if first.verdict:
        assert report.c_N < first.level_gap["boundary_floor"]
        assert first.level_gap["holds"]


if __name__ == "__main__":
    pytest.main(["-xvs", __file__])
