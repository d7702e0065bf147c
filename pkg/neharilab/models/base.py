"""
Base nonlinearity for NehariLab.

This module contains the NonlinearModel abstract class that every model
kind must implement. Evaluators are vectorized: `x` is an array of points of
shape (k, dim) (or a single point of shape (dim,)) and `t` broadcasts
against the leading axis.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np

BETA_MODES = ("closed_form", "numeric_limit", "infinite")


def leading_shape(x: Any) -> tuple:
    """Shape of the point batch in x, () for a single point or None."""
    if x is None:
        return ()
    x = np.asarray(x, dtype=float)
    return x.shape[:-1] if x.ndim >= 1 else ()


class NonlinearModel(ABC):
    """
    Base class for nonlinearities f(x, t) with F(x, t) = int_0^t f(x, s) ds.
    """

    kind = ""
    beta_mode = "numeric_limit"
    autonomous = True

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize the model.

        Args:
            config: Model block (kind plus parameters).
        """
        self.config = dict(config)
        self.validate()

    def validate(self) -> None:
        """Raise ModelParameterError on invalid parameters."""

    @property
    def odd(self) -> bool:
        return True

    @abstractmethod
    def f(self, x: Any, t: Any) -> np.ndarray:
        """The nonlinearity f(x, t)."""
        pass

    @abstractmethod
    def F(self, x: Any, t: Any) -> np.ndarray:
        """The primitive F(x, t)."""
        pass

    @abstractmethod
    def alpha(self, x: Any) -> np.ndarray:
        """Limit of f(x, t)/t as t -> 0."""
        pass

    @abstractmethod
    def eta(self, x: Any) -> np.ndarray:
        """Limit of f(x, t)/t as |t| -> infinity."""
        pass

    def ratio(self, x: Any, t: Any) -> np.ndarray:
        """f(x, t)/t, with 0 where t = 0."""
        t = np.asarray(t, dtype=float)
        nonzero = t != 0
        safe_t = np.where(nonzero, t, 1.0)
        return np.where(nonzero, self.f(x, safe_t) / safe_t, 0.0)

    def excess(self, x: Any, t: Any) -> np.ndarray:
        """b(x, t) = f(x, t) t / 2 - F(x, t)."""
        t = np.asarray(t, dtype=float)
        return 0.5 * self.f(x, t) * t - self.F(x, t)

    def defect(self, x: Any, t: Any) -> np.ndarray:
        """Resonance defect g(x, t) = eta(x) t - f(x, t)."""
        t = np.asarray(t, dtype=float)
        return self.eta(x) * t - self.f(x, t)

    def defect_primitive(self, x: Any, t: Any) -> np.ndarray:
        """G(x, t) = int_0^t g(x, s) ds = eta(x) t^2 / 2 - F(x, t)."""
        t = np.asarray(t, dtype=float)
        return 0.5 * self.eta(x) * t * t - self.F(x, t)

    def cancellation_noise(self, x: Any, t: Any) -> np.ndarray:
        """Roundoff bound on the excess and the defect primitive at t; zero for closed forms."""
        t = np.asarray(t, dtype=float)
        return np.zeros(np.broadcast(t, np.empty(leading_shape(x))).shape)

    def beta_closed_form(self, x: Any = None) -> Optional[np.ndarray]:
        """Closed-form limit of the excess, when the model has one."""
        return None

    def describe(self) -> Dict[str, Any]:
        """Parameters for reports."""
        return {"kind": self.kind, **{k: v for k, v in self.config.items() if k != "kind"},
                "odd": self.odd, "beta_mode": self.beta_mode}

    def _constant(self, x: Any, value: float) -> np.ndarray:
        return np.full(leading_shape(x), float(value))
