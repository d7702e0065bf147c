"""
Rational model f(t) = alpha t + (eta - alpha) t^3 / (1 + t^2).

f/|t| increases strictly from alpha to eta; the excess grows like
(eta - alpha)/2 ln(1 + t^2), so beta is infinite.
"""

from typing import Any

import numpy as np

from neharilab.errors import ModelParameterError
from neharilab.models.base import NonlinearModel


class RationalModel(NonlinearModel):
    kind = "rational"
    beta_mode = "infinite"

    def validate(self) -> None:
        self.alpha_value = float(self.config.get("alpha", 0.0))
        if "eta" not in self.config:
            raise ModelParameterError("rational model needs parameter 'eta'")
        self.eta_value = float(self.config["eta"])
        if not self.alpha_value >= 0:
            raise ModelParameterError(f"rational model needs alpha >= 0, got {self.alpha_value}")
        if not self.eta_value > self.alpha_value:
            raise ModelParameterError(
                f"rational model needs eta > alpha, got alpha={self.alpha_value}, eta={self.eta_value}"
            )
        self.gap = self.eta_value - self.alpha_value

    def ratio(self, x: Any, t: Any) -> np.ndarray:
        t2 = np.asarray(t, dtype=float) ** 2
        return self.alpha_value + self.gap * t2 / (1.0 + t2)

    def f(self, x: Any, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return t * self.ratio(x, t)

    def F(self, x: Any, t: Any) -> np.ndarray:
        t2 = np.asarray(t, dtype=float) ** 2
        return 0.5 * self.alpha_value * t2 + 0.5 * self.gap * (t2 - np.log1p(t2))

    def excess(self, x: Any, t: Any) -> np.ndarray:
        t2 = np.asarray(t, dtype=float) ** 2
        return 0.5 * self.gap * (np.log1p(t2) - t2 / (1.0 + t2))

    def defect(self, x: Any, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.gap * t / (1.0 + t * t)

    def defect_primitive(self, x: Any, t: Any) -> np.ndarray:
        return 0.5 * self.gap * np.log1p(np.asarray(t, dtype=float) ** 2)

    def alpha(self, x: Any) -> np.ndarray:
        return self._constant(x, self.alpha_value)

    def eta(self, x: Any) -> np.ndarray:
        return self._constant(x, self.eta_value)
