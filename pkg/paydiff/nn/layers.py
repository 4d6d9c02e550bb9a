"""Parameterized building blocks and the module container."""

from collections import OrderedDict
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from . import functional as F
from .tensor import Tensor, get_default_dtype


class Module:
    """Container of parameters and submodules.

    Attributes holding a :class:`Tensor` with ``requires_grad`` are
    parameters; attributes holding a :class:`Module` (or a list of modules)
    are submodules. Names are dotted attribute paths in assignment order.
    """

    def named_parameters(self, prefix: str = "", include_frozen: bool = True) -> Iterator[Tuple[str, Tensor]]:
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Tensor) and (value.requires_grad or getattr(value, "frozen", False)):
                if include_frozen or not getattr(value, "frozen", False):
                    yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{name}.", include_frozen)
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.", include_frozen)

    def parameters(self, include_frozen: bool = False) -> List[Tensor]:
        """Trainable parameters (frozen ones only on request)."""
        return [p for _, p in self.named_parameters(include_frozen=include_frozen)]

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((name, p.data.copy()) for name, p in self.named_parameters())

    def load_state_dict(self, state: Dict[str, np.ndarray], strict: bool = True) -> None:
        params = dict(self.named_parameters())
        missing = set(params) - set(state)
        unexpected = set(state) - set(params)
        if strict and (missing or unexpected):
            raise KeyError(f"state mismatch, missing {sorted(missing)}, unexpected {sorted(unexpected)}")
        for name, value in state.items():
            if name not in params:
                continue
            if params[name].shape != np.shape(value):
                raise ValueError(f"{name}: shape {np.shape(value)} does not match {params[name].shape}")
            params[name].data = np.array(value, dtype=params[name].dtype)

    def astype(self, dtype) -> "Module":
        for _, p in self.named_parameters():
            p.data = p.data.astype(dtype)
            p.grad = None
        return self

    def zero_grad(self) -> None:
        for p in self.parameters(include_frozen=True):
            p.grad = None

    def freeze(self) -> "Module":
        """Exclude every parameter of this module from training and gradient checks."""
        for p in self.parameters(include_frozen=True):
            p.requires_grad = False
            p.frozen = True
        return self

    def unfreeze(self) -> "Module":
        for p in self.parameters(include_frozen=True):
            p.requires_grad = True
            p.frozen = False
        return self

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters(include_frozen=True)))

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError


def _uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, name: str) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(get_default_dtype()), requires_grad=True,
                  name=name)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, bias: bool = True) -> None:
        self.weight = _uniform(rng, (out_features, in_features), in_features, "weight")
        self.bias = _uniform(rng, (out_features,), in_features, "bias") if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)


class Conv1d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, rng: np.random.Generator,
                 stride: int = 1, padding: Optional[int] = None) -> None:
        fan_in = in_channels * kernel_size
        self.weight = _uniform(rng, (out_channels, in_channels, kernel_size), fan_in, "weight")
        self.bias = _uniform(rng, (out_channels,), fan_in, "bias")
        self.stride = stride
        self.padding = kernel_size // 2 if padding is None else padding

    def forward(self, x: Tensor) -> Tensor:
        return F.conv1d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class GroupNorm(Module):
    def __init__(self, num_groups: int, num_channels: int) -> None:
        dtype = get_default_dtype()
        self.num_groups = num_groups
        self.weight = Tensor(np.ones(num_channels, dtype=dtype), requires_grad=True, name="weight")
        self.bias = Tensor(np.zeros(num_channels, dtype=dtype), requires_grad=True, name="bias")

    def forward(self, x: Tensor) -> Tensor:
        return F.group_norm(x, self.num_groups, self.weight, self.bias)


class Conv1dBlock(Module):
    """Conv1d -> GroupNorm -> Mish."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, n_groups: int,
                 rng: np.random.Generator) -> None:
        self.conv = Conv1d(in_channels, out_channels, kernel_size, rng)
        self.norm = GroupNorm(n_groups, out_channels)

    def forward(self, x: Tensor) -> Tensor:
        return F.mish(self.norm(self.conv(x)))


class Downsample1d(Module):
    """Halve the length with a stride-2 convolution."""

    def __init__(self, channels: int, rng: np.random.Generator) -> None:
        self.conv = Conv1d(channels, channels, 3, rng, stride=2, padding=1)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv(x)


class Upsample1d(Module):
    """Double the length (nearest neighbour) and mix with a convolution."""

    def __init__(self, channels: int, rng: np.random.Generator) -> None:
        self.conv = Conv1d(channels, channels, 3, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv(F.upsample1d(x, 2))
