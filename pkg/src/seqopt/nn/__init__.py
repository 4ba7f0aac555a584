from .autodiff import Tensor, as_tensor
from .layers import Network, NonFiniteError, ParamStore, init_params, validate_descriptor
from .optim import AdamConfig, AdamState, adam_step
from .checkpoint import (CheckpointError, load_checkpoint, params_checksum,
                         save_checkpoint)

__all__ = [
    "Tensor", "as_tensor", "Network", "NonFiniteError", "ParamStore",
    "init_params", "validate_descriptor", "AdamConfig", "AdamState",
    "adam_step", "CheckpointError", "load_checkpoint", "params_checksum",
    "save_checkpoint",
]
