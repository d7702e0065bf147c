"""
Nonlinearity models for NehariLab.

Each kind lives in `neharilab.models.<kind>` as class `<Kind>Model`.
"""

import importlib
from typing import Any, Dict, Mapping, Optional, Union

from neharilab.errors import ModelParameterError
from neharilab.models.base import NonlinearModel
from neharilab.utils.logging import setup_logger

# Setup logger
logger = setup_logger(__name__)

MODEL_KINDS = ("section5", "rational", "coercive", "linear", "expr")


def load_model(config: Union[Mapping[str, Any], Any]) -> NonlinearModel:
    """
    Load a model from its config block.

    Args:
        config: Mapping (or pydantic model) with a `kind` key plus parameters.

    Returns:
        Model instance.

    Raises:
        ModelParameterError: If the kind is unknown or parameters are invalid.
    """
    if hasattr(config, "model_dump"):
        config = config.model_dump()
    params: Dict[str, Any] = {k: v for k, v in dict(config).items() if v is not None}
    kind = params.get("kind")
    if kind not in MODEL_KINDS:
        raise ModelParameterError(f"unknown model kind {kind!r}; expected one of {', '.join(MODEL_KINDS)}")

    module = importlib.import_module(f"neharilab.models.{kind}")
    class_name = "".join(word.capitalize() for word in kind.split("_")) + "Model"
    model_class = getattr(module, class_name)

    model = model_class(params)
    logger.info(f"Loaded model: {kind}")
    return model


def section5_model(theta: float, eta: float) -> NonlinearModel:
    return load_model({"kind": "section5", "theta": theta, "eta": eta})


def rational_model(alpha: float, eta: float) -> NonlinearModel:
    return load_model({"kind": "rational", "alpha": alpha, "eta": eta})


def coercive_model(alpha: float, eta: float) -> NonlinearModel:
    return load_model({"kind": "coercive", "alpha": alpha, "eta": eta})


def linear_model(eta: float) -> NonlinearModel:
    return load_model({"kind": "linear", "eta": eta})


def parse_model(src: str, F: Optional[str] = None, alpha: Optional[float] = None,
                eta: Optional[float] = None, odd: Optional[bool] = None) -> NonlinearModel:
    """Build a model from an f expression (and optionally F) in t, x, y, z."""
    return load_model({"kind": "expr", "f": src, "F": F, "alpha": alpha, "eta": eta, "odd": odd})
