"""
Linear model f(t) = eta t: alpha = eta, excess identically zero.
"""

from typing import Any

import numpy as np

from neharilab.errors import ModelParameterError
from neharilab.models.base import NonlinearModel


class LinearModel(NonlinearModel):
    kind = "linear"
    beta_mode = "closed_form"

    def validate(self) -> None:
        if "eta" not in self.config:
            raise ModelParameterError("linear model needs parameter 'eta'")
        self.eta_value = float(self.config["eta"])
        if not self.eta_value > 0:
            raise ModelParameterError(f"linear model needs eta > 0, got {self.eta_value}")

    def ratio(self, x: Any, t: Any) -> np.ndarray:
        return np.full(np.shape(t), self.eta_value)

    def f(self, x: Any, t: Any) -> np.ndarray:
        return self.eta_value * np.asarray(t, dtype=float)

    def F(self, x: Any, t: Any) -> np.ndarray:
        return 0.5 * self.eta_value * np.asarray(t, dtype=float) ** 2

    def excess(self, x: Any, t: Any) -> np.ndarray:
        return np.zeros(np.shape(t))

    def defect(self, x: Any, t: Any) -> np.ndarray:
        return np.zeros(np.shape(t))

    def defect_primitive(self, x: Any, t: Any) -> np.ndarray:
        return np.zeros(np.shape(t))

    def alpha(self, x: Any) -> np.ndarray:
        return self._constant(x, self.eta_value)

    def eta(self, x: Any) -> np.ndarray:
        return self._constant(x, self.eta_value)

    def beta_closed_form(self, x: Any = None) -> np.ndarray:
        return self._constant(x, 0.0)
