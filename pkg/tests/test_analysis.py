"""
Tests for the sampled hypothesis checks and the excess limit.
"""

import numpy as np
import pytest

from neharilab.core.spectrum import weighted_eigs
from neharilab.errors import BetaUndecidedError, PreconditionError
from neharilab.models import coercive_model, linear_model, parse_model, rational_model, section5_model
from neharilab.models.analysis import (
    Verdict,
    beta_eval,
    beta_range,
    check_fF,
    check_hypotheses,
    defect_primitive_limit,
    sample_beta,
)


def oscillating_excess():
    """f t/2 - F = |t| cos(pi log10 |t|): alternating sign on a decade ladder."""
    return parse_model("t", F="t^2/2 - abs(t)*cos(pi*ln(abs(t))/ln(10))", odd=True)


def test_beta_closed_form_agreement():
    """The numeric limit for the piecewise model matches its closed form."""
    model = section5_model(1.0, 2.0)
    estimate = beta_eval(model)
    assert estimate.status == "finite"
    assert estimate.finite
    assert estimate.value == pytest.approx(model.beta_value(), abs=1e-5)
    assert estimate.value == pytest.approx(1.452065, abs=1e-5)

    worked = section5_model(12.0, 1000.0)
    assert beta_eval(worked).value == pytest.approx(worked.beta_value(), rel=1e-8)


@pytest.mark.parametrize(
    "model, status, value",
    [
        (rational_model(0.5, 20.0), "infinite", np.inf),
        (coercive_model(20.0, 5.0), "infinite", -np.inf),
        (linear_model(3.0), "finite", 0.0),
    ],
)
def test_beta_status(model, status, value):
    """Growing, decaying and vanishing excess tails."""
    estimate = beta_eval(model)
    assert estimate.status == status
    assert estimate.value == value
    assert len(estimate.samples_plus) == len(estimate.ladder) == 4


def test_beta_undecided_and_fF():
    """An oscillating tail is undecided; check_fF refuses to guess."""
    model = oscillating_excess()
    assert beta_eval(model).status == "undecided"
    with pytest.raises(BetaUndecidedError):
        check_fF(model)

    assert check_fF(rational_model(0.0, 10.0))
    assert not check_fF(section5_model(12.0, 1000.0))
    assert not check_fF(coercive_model(20.0, 5.0))


def test_expression_beta_without_primitive():
    """Without an F expression the excess tail is still classified on the full ladder."""
    growing = parse_model("t^3/(1+t^2)")
    estimate = beta_eval(growing)
    assert estimate.status == "infinite"
    assert estimate.value == np.inf
    assert check_fF(growing)

    bounded = beta_eval(parse_model("2*t^5/(1+t^4)"))
    assert bounded.status == "finite"
    assert bounded.value == pytest.approx(np.pi / 2.0, abs=1e-5)


def test_expression_excess_matches_builtin():
    """The quadrature excess of the rational law agrees with its closed form up to 1e5."""
    expr = parse_model("0.5*t + 19.5*t^3/(1+t^2)")
    builtin = rational_model(0.5, 20.0)
    t = np.array([-1e5, -10.0, 1e-3, 1.0, 10.0, 1e3, 1e5])
    assert np.allclose(expr.excess(None, t), builtin.excess(None, t), rtol=1e-6, atol=1e-3)
    assert beta_eval(expr).status == beta_eval(builtin).status == "infinite"


def test_hypotheses_expression_rational(form):
    """The expression form of the rational law passes the same checks as the built-in."""
    model = parse_model("0.5*t + 19.5*t^3/(1+t^2)")
    s_alpha = weighted_eigs(form, np.full(form.grid.size, 0.5), 2)
    s_eta = weighted_eigs(form, np.full(form.grid.size, 20.0), 2)
    report = check_hypotheses(model, s_alpha, s_eta)

    assert report.f1_ok == Verdict.PASS
    assert report.fF_holds == Verdict.PASS
    assert report.monotonicity_checks["excess_nondecreasing"]["verdict"] == Verdict.PASS


def test_defect_primitive_limit():
    """The limit of int_0^T g agrees with beta when t g vanishes, and both diverge otherwise."""
    section5 = section5_model(1.0, 2.0)
    report = defect_primitive_limit(section5)
    assert report["status"] == "finite"
    assert report["agree"]
    assert report["limit"] == pytest.approx(section5.beta_value(), abs=1e-5)
    assert abs(report["defect_last"]) < 1e-12

    rational = defect_primitive_limit(rational_model(0.5, 20.0))
    assert rational["status"] == rational["beta_status"] == "infinite"
    assert rational["agree"]
    assert rational["gap"] == 0.0
    assert rational["defect_last"] == pytest.approx(19.5e-6, rel=1e-6)

    expr = defect_primitive_limit(parse_model("2*t^5/(1+t^4)"))
    assert expr["status"] == "finite"
    assert expr["agree"]
    assert expr["limit"] == pytest.approx(np.pi / 2.0, abs=1e-5)


def test_beta_ladder_validation():
    """The ladder must be ascending, positive and reach 1e3."""
    with pytest.raises(PreconditionError):
        beta_eval(linear_model(1.0), ladder=[10.0, 100.0])
    with pytest.raises(PreconditionError):
        beta_eval(linear_model(1.0), ladder=[10.0, 20.0, 30.0])


def test_sample_beta_autonomous(grid):
    """Autonomous models are evaluated once; the range reports min and max."""
    estimates = sample_beta(section5_model(1.0, 2.0), grid.coordinates())
    assert len(estimates) == 1
    summary = beta_range(estimates)
    assert summary["min"] == summary["max"]
    assert summary["statuses"] == ["finite"]


def test_hypotheses_worked_example(form, eta_spectrum, section5):
    """Monotone quotient and spectral ordering pass; alpha = 0 fails the literal clause."""
    report = check_hypotheses(section5, None, eta_spectrum, coords=form.grid.coordinates())

    assert report.f1_ok == Verdict.PASS
    assert report.f2_ok == Verdict.PASS
    assert report.f1_literal_ok == Verdict.FAIL
    assert report.fF_holds == Verdict.FAIL
    assert report.ground_state_ready
    assert not report.coercive_ready
    assert any("alpha has no positive part" in flag for flag in report.flags)
    assert "fF" in report.witnesses
    assert report.spectral_inputs["lambda_1_alpha"] == np.inf
    assert report.monotonicity_checks["excess_nondecreasing"]["verdict"] == Verdict.PASS
    assert report.monotonicity_checks["strict_quotient_margin"]["verdict"] == Verdict.PASS


def test_hypotheses_rational(form):
    """f/t rising from alpha to eta with infinite excess satisfies the full set."""
    model = rational_model(0.5, 20.0)
    s_alpha = weighted_eigs(form, np.full(form.grid.size, 0.5), 2)
    s_eta = weighted_eigs(form, np.full(form.grid.size, 20.0), 2)
    report = check_hypotheses(model, s_alpha, s_eta)

    assert report.f1_ok == Verdict.PASS
    assert report.f1_literal_ok == Verdict.PASS
    assert report.f2_ok == Verdict.PASS
    assert report.fF_holds == Verdict.PASS
    assert report.nodes_sampled == 1


def test_hypotheses_coercive(form):
    """Decreasing quotient fails monotonicity with a witness; the coercive pair passes."""
    model = coercive_model(20.0, 5.0)
    s_alpha = weighted_eigs(form, np.full(form.grid.size, 20.0), 2)
    s_eta = weighted_eigs(form, np.full(form.grid.size, 5.0), 2)
    report = check_hypotheses(model, s_alpha, s_eta)

    assert report.f1_ok == Verdict.FAIL
    assert "f1" in report.witnesses
    assert report.f2_ok == Verdict.FAIL
    assert report.f1p_ok == Verdict.PASS
    assert report.f2p_ok == Verdict.PASS
    assert report.coercive_ready
    assert not report.monotonicity_checks["applicable"]


def test_hypotheses_index_out_of_range(form, unit_spectrum):
    """Asking for lambda_m beyond the computed list is a precondition failure."""
    with pytest.raises(PreconditionError):
        check_hypotheses(rational_model(0.0, 5.0), None, unit_spectrum, m=unit_spectrum.count + 1)


if __name__ == "__main__":
    pytest.main(["-xvs", __file__])
