"""
Coercive model f(t) = eta t + (alpha - eta) t / (1 + t^2), alpha > eta > 0.

Large slope at the origin, small slope at infinity: F/t^2 stays bounded and
the energy is coercive when the eta-weighted problem has all eigenvalues
above 1.
"""

from typing import Any

import numpy as np

from neharilab.errors import ModelParameterError
from neharilab.models.base import NonlinearModel


class CoerciveModel(NonlinearModel):
    kind = "coercive"
    beta_mode = "infinite"

    def validate(self) -> None:
        try:
            self.alpha_value = float(self.config["alpha"])
            self.eta_value = float(self.config["eta"])
        except KeyError as e:
            raise ModelParameterError(f"coercive model needs parameter {e.args[0]!r}")
        if not self.eta_value > 0:
            raise ModelParameterError(f"coercive model needs eta > 0, got {self.eta_value}")
        if not self.alpha_value > self.eta_value:
            raise ModelParameterError(
                f"coercive model needs alpha > eta, got alpha={self.alpha_value}, eta={self.eta_value}"
            )
        self.gap = self.alpha_value - self.eta_value

    def ratio(self, x: Any, t: Any) -> np.ndarray:
        t2 = np.asarray(t, dtype=float) ** 2
        return self.eta_value + self.gap / (1.0 + t2)

    def f(self, x: Any, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return t * self.ratio(x, t)

    def F(self, x: Any, t: Any) -> np.ndarray:
        t2 = np.asarray(t, dtype=float) ** 2
        return 0.5 * self.eta_value * t2 + 0.5 * self.gap * np.log1p(t2)

    def excess(self, x: Any, t: Any) -> np.ndarray:
        t2 = np.asarray(t, dtype=float) ** 2
        return 0.5 * self.gap * (t2 / (1.0 + t2) - np.log1p(t2))

    def defect(self, x: Any, t: Any) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return -self.gap * t / (1.0 + t * t)

    def defect_primitive(self, x: Any, t: Any) -> np.ndarray:
        return -0.5 * self.gap * np.log1p(np.asarray(t, dtype=float) ** 2)

    def alpha(self, x: Any) -> np.ndarray:
        return self._constant(x, self.alpha_value)

    def eta(self, x: Any) -> np.ndarray:
        return self._constant(x, self.eta_value)
