"""Minimal numpy tensors with reverse-mode gradients for the temporal U-Net."""

from . import functional
from .checkpoint import CheckpointData, load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, gradient_check
from .layers import Conv1d, Conv1dBlock, Downsample1d, GroupNorm, Linear, Module, Upsample1d
from .optim import Adam, AdamState, adam_step
from .tensor import Tensor, default_dtype, get_default_dtype, no_grad, set_debug, set_default_dtype, tensor

__all__ = [
    "Adam",
    "AdamState",
    "CheckpointData",
    "Conv1d",
    "Conv1dBlock",
    "Downsample1d",
    "GradCheckReport",
    "GroupNorm",
    "Linear",
    "Module",
    "Tensor",
    "Upsample1d",
    "adam_step",
    "default_dtype",
    "functional",
    "get_default_dtype",
    "gradient_check",
    "load_checkpoint",
    "no_grad",
    "save_checkpoint",
    "set_debug",
    "set_default_dtype",
    "tensor",
]
