"""
Piecewise model: quadratic growth up to a threshold, asymptotically linear beyond.

    f(t) = t|t|                     for |t| <= theta
    f(t) = eta t^5 / (a + t^4)      for |t| >  theta,  a = theta^3 (eta - theta)

The choice of a makes f continuous at +-theta. The excess f t / 2 - F has a
finite limit at infinity, so the problem is strongly resonant whenever 1 is
an eigenvalue of the eta-weighted problem.
"""

from typing import Any, Dict

import numpy as np

from neharilab.errors import ModelParameterError
from neharilab.models.base import NonlinearModel


class Section5Model(NonlinearModel):
    kind = "section5"
    beta_mode = "closed_form"

    def validate(self) -> None:
        try:
            self.theta = float(self.config["theta"])
            self.eta_value = float(self.config["eta"])
        except KeyError as e:
            raise ModelParameterError(f"section5 model needs parameter {e.args[0]!r}")
        if not self.theta > 0:
            raise ModelParameterError(f"section5 model needs theta > 0, got {self.theta}")
        if not self.eta_value > self.theta:
            raise ModelParameterError(
                f"section5 model needs eta > theta (else a <= 0), got theta={self.theta}, eta={self.eta_value}"
            )
        self.a = self.theta**3 * (self.eta_value - self.theta)
        self.sqrt_a = np.sqrt(self.a)
        # F(theta) and the arctan offset shared by the outer branch formulas
        self._outer_offset = self.theta**2 - self.sqrt_a * np.arctan(self.theta**2 / self.sqrt_a)

    def _outer(self, s: np.ndarray) -> np.ndarray:
        return s > self.theta

    def ratio(self, x: Any, t: Any) -> np.ndarray:
        s = np.abs(np.asarray(t, dtype=float))
        outer = self._outer(s)
        safe = np.where(outer, s, 1.0)
        return np.where(outer, self.eta_value / (1.0 + self.a / safe**4), s)

    def f(self, x: Any, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return t * self.ratio(x, t)

    def F(self, x: Any, t: Any) -> np.ndarray:
        s = np.abs(np.asarray(t, dtype=float))
        inner = s**3 / 3.0
        outer = self.theta**3 / 3.0 + 0.5 * self.eta_value * (
            (s * s - self.sqrt_a * np.arctan(s * s / self.sqrt_a)) - self._outer_offset
        )
        return np.where(self._outer(s), outer, inner)

    def excess(self, x: Any, t: Any) -> np.ndarray:
        s = np.abs(np.asarray(t, dtype=float))
        outer = self._outer(s)
        safe = np.where(outer, s, 1.0)
        tail = (
            -0.5 * self.eta_value * self.a / (self.a / safe**2 + safe**2)
            + 0.5 * self.eta_value * self.sqrt_a * np.arctan(safe**2 / self.sqrt_a)
            - self.theta**3 / 3.0
            + 0.5 * self.eta_value * self._outer_offset
        )
        return np.where(outer, tail, s**3 / 6.0)

    def defect(self, x: Any, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        s = np.abs(t)
        outer = self._outer(s)
        safe = np.where(outer, s, 1.0)
        return np.where(outer, self.eta_value * t * self.a / (self.a + safe**4), t * (self.eta_value - s))

    def defect_primitive(self, x: Any, t: Any) -> np.ndarray:
        s = np.abs(np.asarray(t, dtype=float))
        outer = 0.5 * self.eta_value * self.sqrt_a * np.arctan(s * s / self.sqrt_a) - self.theta**3 / 3.0 + (
            0.5 * self.eta_value * self._outer_offset
        )
        return np.where(self._outer(s), outer, 0.5 * self.eta_value * s * s - s**3 / 3.0)

    def alpha(self, x: Any) -> np.ndarray:
        return self._constant(x, 0.0)

    def eta(self, x: Any) -> np.ndarray:
        return self._constant(x, self.eta_value)

    def beta_value(self) -> float:
        """eta theta^2/2 - eta sqrt(a)/2 arctan(theta^2/sqrt(a)) - theta^3/3 + pi eta sqrt(a)/4."""
        return float(
            0.5 * self.eta_value * self.theta**2
            - 0.5 * self.eta_value * self.sqrt_a * np.arctan(self.theta**2 / self.sqrt_a)
            - self.theta**3 / 3.0
            + np.pi * self.eta_value * self.sqrt_a / 4.0
        )

    def beta_closed_form(self, x: Any = None) -> np.ndarray:
        return self._constant(x, self.beta_value())

    def continuity_gap(self) -> float:
        """|f(theta-) - f(theta+)| evaluated from both branch formulas."""
        inner = self.theta * self.theta
        outer = self.eta_value * self.theta**5 / (self.a + self.theta**4)
        return float(abs(inner - outer))

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info["a"] = self.a
        return info
