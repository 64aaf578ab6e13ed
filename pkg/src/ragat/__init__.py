"""Dual-path rumor classifier: conv/GRU/attention semantics plus bidirectional GCN structure."""

from .config import RunConfig, load_config
from .gradcheck import grad_check
from .model import ModelParams, forward, init_params, load_checkpoint, save_checkpoint
from .tensor import Tensor, backward, no_grad, tape

__all__ = [
    "RunConfig",
    "load_config",
    "grad_check",
    "ModelParams",
    "forward",
    "init_params",
    "load_checkpoint",
    "save_checkpoint",
    "Tensor",
    "backward",
    "no_grad",
    "tape",
]

__version__ = "0.1.0"
