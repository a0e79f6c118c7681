"""Histogram gradient-boosted trees for binary relationship classification.

Leaf-wise growth with a leaf-count cap, native categorical splits, focal or
cross-entropy objectives, and a compiled kernel core with a pure-Python
fallback (see vrdkit.gbdt.backend helpers). Training and prediction are
bit-identical across backends.
"""

from ._backend import active_backend, compiled_available, set_backend
from .grow import TrainConfig
from .model import (
    MODEL_MAGIC,
    MODEL_VERSION,
    BoostedModel,
    ModelFormatError,
    load_model,
    predict,
    save_model,
    train,
)
from .objective import (
    Objective,
    cross_entropy_loss,
    focal_loss,
    grad_hess,
    loss_from_logit,
    sigmoid,
)

__all__ = [
    "MODEL_MAGIC",
    "MODEL_VERSION",
    "BoostedModel",
    "ModelFormatError",
    "Objective",
    "TrainConfig",
    "active_backend",
    "compiled_available",
    "cross_entropy_loss",
    "focal_loss",
    "grad_hess",
    "load_model",
    "loss_from_logit",
    "predict",
    "save_model",
    "set_backend",
    "sigmoid",
    "train",
]
