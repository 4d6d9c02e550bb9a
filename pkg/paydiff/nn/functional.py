"""Differentiable operations of the temporal U-Net."""

from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..utils.error_handler import ShapeError
from .tensor import Tensor, as_tensor


def conv1d(x: Tensor, w: Tensor, b: Optional[Tensor] = None, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation over the last axis.

    Parameters
    ----------
    x : Tensor, shape (batch, ch_in, length)
    w : Tensor, shape (ch_out, ch_in, kernel)
    b : Tensor, shape (ch_out,), optional
    stride, padding : int
        Step between windows and zeros added on both ends.

    Returns
    -------
    Tensor, shape (batch, ch_out, (length + 2 padding - kernel) // stride + 1)
    """
    if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv1d needs x (B, C, L) and w (O, C, K) with matching C, got {x.shape} and {w.shape}")
    if stride < 1 or padding < 0:
        raise ShapeError(f"invalid stride {stride} or padding {padding}")
    batch, _, length = x.shape
    kernel = w.shape[2]
    padded = length + 2 * padding
    if kernel > padded:
        raise ShapeError(f"kernel {kernel} does not fit padded length {padded}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding)))
    cols = sliding_window_view(xp, kernel, axis=2)[:, :, ::stride, :]  # (B, C, L', K)
    out_len = cols.shape[2]
    out = np.einsum("bclk,ock->bol", cols, w.data, optimize=True)
    parents = [x, w]
    if b is not None:
        out = out + b.data[None, :, None]
        parents.append(b)

    def backward(g: np.ndarray) -> None:
        if w.requires_grad:
            w.accumulate(np.einsum("bol,bclk->ock", g, cols, optimize=True))
        if b is not None and b.requires_grad:
            b.accumulate(g.sum(axis=(0, 2)))
        if x.requires_grad:
            dcols = np.einsum("bol,ock->bclk", g, w.data, optimize=True)
            dxp = np.zeros_like(xp)
            span = stride * (out_len - 1) + 1
            for k in range(kernel):
                dxp[:, :, k:k + span:stride] += dcols[..., k]
            x.accumulate(dxp[:, :, padding:padding + length])

    return Tensor.make(out, parents, backward, "conv1d")


def linear(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """``x @ w.T + b`` for x of shape (batch, in) and w of shape (out, in)."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"linear needs x (B, in) and w (out, in), got {x.shape} and {w.shape}")
    out = x @ w.T
    return out + b if b is not None else out


def silu(x: Tensor) -> Tensor:
    """``x * sigmoid(x)``."""
    sig = 1.0 / (1.0 + np.exp(-x.data))
    out = x.data * sig

    def backward(g: np.ndarray) -> None:
        x.accumulate(g * (sig + x.data * sig * (1.0 - sig)))

    return Tensor.make(out, (x,), backward, "silu")


def mish(x: Tensor) -> Tensor:
    """``x * tanh(softplus(x))``."""
    sp = np.logaddexp(0.0, x.data)
    t = np.tanh(sp)
    sig = 1.0 / (1.0 + np.exp(-x.data))

    def backward(g: np.ndarray) -> None:
        x.accumulate(g * (t + x.data * (1.0 - t ** 2) * sig))

    return Tensor.make(x.data * t, (x,), backward, "mish")


def group_norm(x: Tensor, num_groups: int, weight: Optional[Tensor] = None, bias: Optional[Tensor] = None,
               eps: float = 1e-5) -> Tensor:
    """Normalize each group of channels over (channels in group, length), then scale and shift per channel."""
    if x.ndim != 3:
        raise ShapeError(f"group_norm needs (B, C, L), got {x.shape}")
    batch, channels, length = x.shape
    if channels % num_groups:
        raise ShapeError(f"{channels} channels are not divisible into {num_groups} groups")
    xg = x.data.reshape(batch, num_groups, -1)
    mean = xg.mean(axis=2, keepdims=True)
    var = xg.var(axis=2, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = ((xg - mean) * inv_std).reshape(x.shape)

    w = weight.data[None, :, None] if weight is not None else 1.0
    out = xhat * w
    if bias is not None:
        out = out + bias.data[None, :, None]
    parents = [x] + [p for p in (weight, bias) if p is not None]

    def backward(g: np.ndarray) -> None:
        if weight is not None and weight.requires_grad:
            weight.accumulate((g * xhat).sum(axis=(0, 2)))
        if bias is not None and bias.requires_grad:
            bias.accumulate(g.sum(axis=(0, 2)))
        if x.requires_grad:
            dxhat = (g * w).reshape(batch, num_groups, -1)
            xh = xhat.reshape(batch, num_groups, -1)
            dx = inv_std * (dxhat - dxhat.mean(axis=2, keepdims=True)
                            - xh * (dxhat * xh).mean(axis=2, keepdims=True))
            x.accumulate(dx.reshape(x.shape))

    return Tensor.make(out.astype(x.dtype, copy=False), parents, backward, "group_norm")


def film(x: Tensor, scale: Tensor, shift: Tensor) -> Tensor:
    """``scale * x + shift`` with (batch, channels) modulation broadcast over time."""
    scale, shift = as_tensor(scale, x.dtype), as_tensor(shift, x.dtype)
    if x.ndim != 3:
        raise ShapeError(f"film needs x of shape (B, C, L), got {x.shape}")
    for mod in (scale, shift):
        if mod.ndim != 0 and (mod.ndim != 2 or mod.shape[1] != x.shape[1] or mod.shape[0] not in (1, x.shape[0])):
            raise ShapeError(f"film modulation must be a scalar or (B, C) = (B, {x.shape[1]}), got {mod.shape}")
    s = scale.reshape(scale.shape + (1,)) if scale.ndim == 2 else scale
    t = shift.reshape(shift.shape + (1,)) if shift.ndim == 2 else shift
    return x * s + t


def upsample1d(x: Tensor, factor: int = 2) -> Tensor:
    """Nearest-neighbour upsampling along time."""
    out = np.repeat(x.data, factor, axis=2)

    def backward(g: np.ndarray) -> None:
        b, c, n = g.shape
        x.accumulate(g.reshape(b, c, n // factor, factor).sum(axis=3))

    return Tensor.make(out, (x,), backward, "upsample1d")


def mse_loss(pred: Tensor, target: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """Mean squared error, optionally over the entries where ``mask`` is 1."""
    diff = pred - as_tensor(target, pred.dtype)
    sq = diff * diff
    if mask is None:
        return sq.mean()
    mask = np.asarray(mask, dtype=pred.dtype)
    return (sq * mask).sum() * (1.0 / max(float(np.broadcast_to(mask, pred.shape).sum()), 1.0))
