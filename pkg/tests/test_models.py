"""
Tests for the built-in and expression nonlinearity models.
"""

import numpy as np
import pytest

from neharilab.errors import ModelEvaluationError, ModelParameterError
from neharilab.models import (
    MODEL_KINDS,
    coercive_model,
    linear_model,
    load_model,
    parse_model,
    rational_model,
    section5_model,
)
from neharilab.models.coercive import CoerciveModel
from neharilab.models.section5 import Section5Model

T = np.concatenate([-np.logspace(-3, 3, 41)[::-1], np.logspace(-3, 3, 41)])


def builtins():
    return [section5_model(12.0, 1000.0), section5_model(1.0, 2.0), rational_model(0.5, 20.0),
            coercive_model(20.0, 5.0), linear_model(3.0)]


def test_load_model_resolves_kinds():
    """Each kind resolves to <Kind>Model in neharilab.models.<kind>."""
    model = load_model({"kind": "coercive", "alpha": 20.0, "eta": 5.0})
    assert isinstance(model, CoerciveModel)
    assert isinstance(section5_model(2.0, 5.0), Section5Model)
    assert set(MODEL_KINDS) == {"section5", "rational", "coercive", "linear", "expr"}

    with pytest.raises(ModelParameterError):
        load_model({"kind": "cubic"})


@pytest.mark.parametrize(
    "config",
    [
        {"kind": "section5", "theta": 3.0, "eta": 3.0},
        {"kind": "section5", "theta": -1.0, "eta": 3.0},
        {"kind": "section5", "eta": 3.0},
        {"kind": "rational", "alpha": 5.0, "eta": 2.0},
        {"kind": "coercive", "alpha": 2.0, "eta": 5.0},
        {"kind": "linear", "eta": 0.0},
    ],
)
def test_invalid_parameters(config):
    """Parameter domains are enforced at construction."""
    with pytest.raises(ModelParameterError):
        load_model(config)


@pytest.mark.parametrize("model", builtins(), ids=lambda m: m.kind)
def test_primitive_derivative(model):
    """F' = f by central differences away from the origin."""
    t = T[np.abs(T) > 1e-2]
    eps = 1e-6 * np.maximum(1.0, np.abs(t))
    fd = (model.F(None, t + eps) - model.F(None, t - eps)) / (2 * eps)
    f = model.f(None, t)
    assert np.allclose(fd, f, rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("model", builtins(), ids=lambda m: m.kind)
def test_excess_matches_definition(model):
    """The stable excess agrees with f t/2 - F at moderate t."""
    naive = 0.5 * model.f(None, T) * T - model.F(None, T)
    assert np.allclose(model.excess(None, T), naive, rtol=1e-8, atol=1e-8)


@pytest.mark.parametrize("model", builtins(), ids=lambda m: m.kind)
def test_odd_and_limits(model):
    """Built-ins are odd with f/t -> alpha at 0 and -> eta at infinity."""
    assert model.odd
    assert np.allclose(model.f(None, -T), -model.f(None, T))
    alpha = float(model.alpha(None))
    eta = float(model.eta(None))
    assert model.ratio(None, 1e-7) == pytest.approx(alpha, abs=1e-6)
    assert model.ratio(None, 1e8) == pytest.approx(eta, rel=1e-6)


def test_section5_branches():
    """t|t| inside the threshold, eta t^5/(a + t^4) outside, continuous at theta."""
    model = section5_model(12.0, 1000.0)
    assert model.a == pytest.approx(12.0**3 * 988.0)
    assert model.f(None, 5.0) == pytest.approx(25.0)
    assert model.f(None, -5.0) == pytest.approx(-25.0)
    assert model.f(None, 20.0) == pytest.approx(1000.0 * 20.0**5 / (model.a + 20.0**4))
    assert model.continuity_gap() <= 1e-12 * 144.0
    assert float(model.alpha(None)) == 0.0
    assert model.beta_mode == "closed_form"


def test_section5_closed_form_beta():
    """beta(theta=1, eta=2) = 1 - pi/4 - 1/3 + pi/2."""
    model = section5_model(1.0, 2.0)
    expected = 1.0 - np.pi / 4.0 - 1.0 / 3.0 + np.pi / 2.0
    assert model.beta_value() == pytest.approx(expected, rel=1e-14)
    assert model.beta_value() == pytest.approx(1.452065, abs=1e-6)
    assert float(model.beta_closed_form()) == model.beta_value()


def test_defect_and_primitive():
    """g = eta t - f and G = eta t^2/2 - F."""
    for model in builtins():
        t = T[np.abs(T) < 500]
        eta = float(model.eta(None))
        assert np.allclose(model.defect(None, t), eta * t - model.f(None, t), rtol=1e-9, atol=1e-9)
        assert np.allclose(model.defect_primitive(None, t), 0.5 * eta * t * t - model.F(None, t),
                           rtol=1e-8, atol=1e-8)


def test_linear_model_has_zero_excess():
    """f = c t gives a vanishing excess and beta = 0."""
    model = linear_model(3.0)
    assert np.all(model.excess(None, T) == 0.0)
    assert float(model.beta_closed_form()) == 0.0


def test_vectorized_points():
    """Evaluators broadcast over a batch of points."""
    x = np.array([[0.1], [0.5], [0.9]])
    model = rational_model(1.0, 10.0)
    assert model.f(x, np.array([1.0, 2.0, 3.0])).shape == (3,)
    assert model.alpha(x).shape == (3,)
    assert model.eta(x)[2] == 10.0


def test_expression_model_quadrature_primitive():
    """Without an F expression the primitive comes from quadrature."""
    model = parse_model("t*abs(t)")
    t = np.array([-3.0, -0.5, 0.0, 0.25, 2.0])
    assert np.allclose(model.F(None, t), np.abs(t) ** 3 / 3.0, rtol=1e-9, atol=1e-12)
    assert model.odd
    assert model.autonomous


def test_expression_model_matches_builtin():
    """An expression for the coercive model reproduces it."""
    model = parse_model("5*t + 15*t/(1 + t^2)")
    builtin = coercive_model(20.0, 5.0)
    t = np.linspace(-4.0, 4.0, 17)
    assert np.allclose(model.f(None, t), builtin.f(None, t))
    assert np.allclose(model.F(None, t), builtin.F(None, t), rtol=1e-9, atol=1e-12)
    assert float(model.alpha(None)) == pytest.approx(20.0, rel=1e-9)
    assert float(model.eta(None)) == pytest.approx(5.0, rel=1e-9)


def test_expression_model_overrides_and_coordinates():
    """Explicit F, alpha, eta overrides; x makes the model non-autonomous."""
    model = parse_model("(1 + x)*t", F="(1 + x)*t^2/2", alpha=1.0, eta=2.0, odd=True)
    x = np.array([[0.0], [1.0]])
    assert not model.autonomous
    assert np.allclose(model.f(x, np.array([2.0, 2.0])), [2.0, 4.0])
    assert np.allclose(model.F(x, np.array([2.0, 2.0])), [2.0, 4.0])
    assert np.allclose(model.alpha(x), 1.0)
    assert np.allclose(model.eta(x), 2.0)


def test_expression_model_not_odd():
    """t^2 is detected as even."""
    assert not parse_model("t^2").odd


def test_expression_model_evaluation_error():
    """Non-finite values are reported with their points."""
    model = parse_model("ln(t)*t", odd=False)
    with pytest.raises(ModelEvaluationError) as excinfo:
        model.f(None, np.array([1.0, -1.0]))
    assert excinfo.value.points[0]["t"] == -1.0


if __name__ == "__main__":
    pytest.main(["-xvs", __file__])
