"""
User-defined nonlinearity from an arithmetic expression.
"""

from typing import Any, Dict, List

import numpy as np
from scipy.integrate import quad_vec

from neharilab.errors import ModelEvaluationError, ModelParameterError
from neharilab.models.base import NonlinearModel, leading_shape
from neharilab.models.parser import evaluate, free_variables, parse_expression
from neharilab.utils.logging import setup_logger

# Setup logger
logger = setup_logger(__name__)

QUADRATURE_TOL = 1e-10
QUADRATURE_LIMIT = 2000
ROUNDOFF_FACTOR = 64.0
EPS = np.finfo(float).eps
# Decade breakpoints of the ray parameter in (0, 1)
PANEL_EDGES = 10.0 ** np.arange(-12.0, 0.0)
SMALL_T = 1e-6
LARGE_T = 1e6
# Points where oddness and the limits are sampled when no grid is at hand
TRIAL_POINTS = np.array([[0.1, 0.2, 0.3], [0.5, 0.5, 0.5], [0.9, 0.7, 0.4]])
TRIAL_T = np.logspace(-6, 6, 64)


class ExprModel(NonlinearModel):
    kind = "expr"
    beta_mode = "numeric_limit"

    def validate(self) -> None:
        src = self.config.get("f")
        if not src:
            raise ModelParameterError("expr model needs an 'f' expression")
        self.f_tree = parse_expression(src)
        F_src = self.config.get("F")
        self.F_tree = parse_expression(F_src) if F_src else None
        names = set(free_variables(self.f_tree))
        if self.F_tree is not None:
            names |= set(free_variables(self.F_tree))
        self.autonomous = not (names & {"x", "y", "z"})
        self.alpha_override = self.config.get("alpha")
        self.eta_override = self.config.get("eta")
        odd = self.config.get("odd")
        self._odd = self._detect_odd() if odd is None else bool(odd)

    @property
    def odd(self) -> bool:
        return self._odd

    def _detect_odd(self) -> bool:
        x = np.repeat(TRIAL_POINTS, TRIAL_T.size, axis=0)
        t = np.tile(TRIAL_T, TRIAL_POINTS.shape[0])
        plus = evaluate(self.f_tree, t, x)
        minus = evaluate(self.f_tree, -t, x)
        ok = np.isfinite(plus) & np.isfinite(minus)
        if not np.all(ok):
            return False
        return bool(np.all(np.abs(plus + minus) <= 1e-12 * np.maximum(1.0, np.abs(plus))))

    def _checked(self, values: np.ndarray, x: Any, t: np.ndarray, what: str) -> np.ndarray:
        bad = ~np.isfinite(values)
        if np.any(bad):
            t_b = np.broadcast_to(t, values.shape)
            points: List[Dict[str, Any]] = []
            for idx in zip(*np.nonzero(bad)):
                point: Dict[str, Any] = {"t": float(t_b[idx])}
                if x is not None and np.ndim(x) >= 2:
                    point["x"] = [float(c) for c in np.asarray(x)[idx[0]]]
                elif x is not None:
                    point["x"] = [float(c) for c in np.atleast_1d(x)]
                points.append(point)
                if len(points) >= 10:
                    break
            raise ModelEvaluationError(
                f"{what} is not finite at {int(bad.sum())} point(s), first: {points[0]}", points
            )
        return values

    def f(self, x: Any, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self._checked(evaluate(self.f_tree, t, x), x, t, "f")

    def F(self, x: Any, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.F_tree is not None:
            return self._checked(evaluate(self.F_tree, t, x), x, t, "F")
        shape = np.broadcast(t, np.empty(leading_shape(x))).shape
        t_b = np.broadcast_to(t, shape)

        # F(t) = t * int_0^1 f(s t) ds, one vector quadrature for every point
        def integrand(s: float) -> np.ndarray:
            return self.f(x, s * t_b) * t_b

        value, err = quad_vec(integrand, 0.0, 1.0, epsabs=QUADRATURE_TOL, epsrel=QUADRATURE_TOL)
        logger.debug(f"Quadrature for F over {t_b.size} point(s), error estimate {err:.3e}")
        return np.asarray(value, dtype=float).reshape(shape)

    def _ray_integral(self, x: Any, t: np.ndarray, level: Any) -> np.ndarray:
        """
        t^2 int_0^1 s (level - f(x, s t)/(s t)) ds over decade panels.

        Both the excess (level f(x, t)/t) and the defect primitive (level eta(x))
        have this form; no term of size t^2 is ever subtracted.
        """
        shape = np.broadcast(t, np.empty(leading_shape(x))).shape
        t_b = np.broadcast_to(t, shape)
        level_b = np.broadcast_to(np.asarray(level, dtype=float), shape)
        t2 = t_b * t_b
        # absolute tolerance per point, floored at the roundoff of t^2 level
        tol = QUADRATURE_TOL * np.minimum(1.0, t2) + EPS * t2 * np.maximum(1.0, np.abs(level_b))
        tol = np.maximum(tol, np.finfo(float).tiny)
        weight = t2 / tol

        def integrand(s: float) -> np.ndarray:
            return s * (level_b - self.ratio(x, s * t_b)) * weight

        value, err = quad_vec(integrand, 0.0, 1.0, epsabs=1.0, epsrel=QUADRATURE_TOL, norm="max",
                              points=PANEL_EDGES, limit=QUADRATURE_LIMIT)
        logger.debug(f"Ray quadrature over {t_b.size} point(s), scaled error estimate {err:.3e}")
        return (np.asarray(value, dtype=float) * tol).reshape(shape)

    def excess(self, x: Any, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.F_tree is not None:
            return super().excess(x, t)
        return self._ray_integral(x, t, self.ratio(x, t))

    def defect_primitive(self, x: Any, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.F_tree is not None:
            return super().defect_primitive(x, t)
        return self._ray_integral(x, t, self.eta(x))

    def cancellation_noise(self, x: Any, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        eta = np.abs(self.eta(x))
        if self.F_tree is not None:
            scale = np.abs(self.f(x, t) * t) + np.abs(self.F(x, t)) + eta * t * t
        else:
            scale = t * t * np.maximum(np.maximum(1.0, np.abs(self.ratio(x, t))), eta)
        return ROUNDOFF_FACTOR * EPS * scale

    def alpha(self, x: Any) -> np.ndarray:
        if self.alpha_override is not None:
            return self._constant(x, self.alpha_override)
        return np.asarray(self.f(x, SMALL_T) / SMALL_T, dtype=float).reshape(leading_shape(x))

    def eta(self, x: Any) -> np.ndarray:
        if self.eta_override is not None:
            return self._constant(x, self.eta_override)
        up = self.f(x, LARGE_T) / LARGE_T
        down = self.f(x, -LARGE_T) / -LARGE_T
        return np.asarray(0.5 * (up + down), dtype=float).reshape(leading_shape(x))

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info["autonomous"] = self.autonomous
        return info

