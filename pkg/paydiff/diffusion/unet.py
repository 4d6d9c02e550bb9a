"""Temporal U-Net that predicts the noise added to a trajectory.

The network sees a trajectory as ``3 n_dof`` channels over the horizon.
A sinusoidal embedding of the diffusion step and an MLP embedding of the
payload vector are concatenated into one conditioning vector, which
modulates every residual block either additively (shift) or through FiLM
(scale and shift).
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..nn import functional as F
from ..nn.layers import Conv1d, Conv1dBlock, Downsample1d, Linear, Module, Upsample1d
from ..nn.tensor import Tensor, as_tensor, concatenate, get_default_dtype, no_grad
from ..utils.config import dataclass_from_dict, dataclass_to_dict
from ..utils.error_handler import ShapeError


@dataclass
class DenoiserConfig:
    """Architecture of :class:`TemporalUnet`.

    ``in_channels`` is ``3 n_dof``. ``horizon`` must be divisible by
    ``2 ** (len(widths) - 1)``.
    """

    horizon: int = 64
    in_channels: int = 9
    payload_dim: int = 19
    widths: Tuple[int, ...] = (32, 64, 128)
    kernel_size: int = 5
    n_groups: int = 8
    time_embed_dim: int = 64
    payload_embed_widths: Tuple[int, ...] = (64, 32)
    conditioning: str = "film"

    def __post_init__(self) -> None:
        self.widths = tuple(int(w) for w in self.widths)
        self.payload_embed_widths = tuple(int(w) for w in self.payload_embed_widths)
        if self.conditioning not in ("additive", "film"):
            raise ValueError(f"conditioning must be 'additive' or 'film', got {self.conditioning!r}")
        if not self.widths or not self.payload_embed_widths:
            raise ValueError("widths and payload_embed_widths must be non-empty")
        factor = 2 ** (len(self.widths) - 1)
        if self.horizon % factor:
            raise ShapeError(f"horizon {self.horizon} is not divisible by {factor} for {len(self.widths)} levels")
        for w in self.widths:
            if w % self.n_groups:
                raise ShapeError(f"width {w} is not divisible into {self.n_groups} groups")

    @property
    def cond_dim(self) -> int:
        return self.time_embed_dim + self.payload_embed_widths[-1]

    def to_dict(self) -> Dict[str, Any]:
        return dataclass_to_dict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DenoiserConfig":
        return dataclass_from_dict(cls, data)


def sinusoidal_embedding(steps: np.ndarray, dim: int) -> np.ndarray:
    """Sine/cosine features of the diffusion step, shape (batch, dim)."""
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half - 1, 1))
    args = np.asarray(steps, dtype=float).reshape(-1, 1) * freqs[None, :]
    return np.concatenate([np.sin(args), np.cos(args)], axis=1).astype(get_default_dtype())


class MLP(Module):
    """Linear layers with Mish between them (none after the last)."""

    def __init__(self, widths: Tuple[int, ...], rng: np.random.Generator) -> None:
        self.layers = [Linear(a, b, rng) for a, b in zip(widths[:-1], widths[1:])]

    def forward(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = F.mish(x)
        return x


class ResidualTemporalBlock(Module):
    """Two conv blocks with conditioning between them and a residual path."""

    def __init__(self, in_channels: int, out_channels: int, cond_dim: int, config: DenoiserConfig,
                 rng: np.random.Generator) -> None:
        self.out_channels = out_channels
        self.film = config.conditioning == "film"
        self.block1 = Conv1dBlock(in_channels, out_channels, config.kernel_size, config.n_groups, rng)
        self.block2 = Conv1dBlock(out_channels, out_channels, config.kernel_size, config.n_groups, rng)
        self.cond = Linear(cond_dim, 2 * out_channels if self.film else out_channels, rng)
        self.residual = Conv1d(in_channels, out_channels, 1, rng) if in_channels != out_channels else None

    def forward(self, x: Tensor, cond: Tensor) -> Tensor:
        h = self.block1(x)
        mod = self.cond(F.mish(cond))
        c = self.out_channels
        if self.film:
            h = F.film(h, mod[:, :c] + 1.0, mod[:, c:])
        else:
            h = F.film(h, 1.0, mod)
        h = self.block2(h)
        skip = self.residual(x) if self.residual is not None else x
        return h + skip


class _DownLevel(Module):
    def __init__(self, c_in: int, c_out: int, cond_dim: int, config: DenoiserConfig, last: bool,
                 rng: np.random.Generator) -> None:
        self.res1 = ResidualTemporalBlock(c_in, c_out, cond_dim, config, rng)
        self.res2 = ResidualTemporalBlock(c_out, c_out, cond_dim, config, rng)
        self.down = None if last else Downsample1d(c_out, rng)


class _UpLevel(Module):
    def __init__(self, c_in: int, c_out: int, cond_dim: int, config: DenoiserConfig, rng: np.random.Generator) -> None:
        self.res1 = ResidualTemporalBlock(2 * c_in, c_out, cond_dim, config, rng)
        self.res2 = ResidualTemporalBlock(c_out, c_out, cond_dim, config, rng)
        self.up = Upsample1d(c_out, rng)


class TemporalUnet(Module):
    """Noise predictor ``eps(x_k, k, payload)``.

    Parameters
    ----------
    config : DenoiserConfig
        Architecture.
    seed : int
        Seed of the parameter initialization.
    """

    def __init__(self, config: DenoiserConfig, seed: int = 0) -> None:
        rng = np.random.default_rng(seed)
        self.config = config
        widths = (config.in_channels,) + config.widths
        pairs = list(zip(widths[:-1], widths[1:]))
        cond_dim = config.cond_dim

        self.time_mlp = MLP((config.time_embed_dim, 2 * config.time_embed_dim, config.time_embed_dim), rng)
        self.payload_mlp = MLP((config.payload_dim,) + config.payload_embed_widths, rng)
        self.downs = [_DownLevel(a, b, cond_dim, config, i == len(pairs) - 1, rng) for i, (a, b) in enumerate(pairs)]
        mid = config.widths[-1]
        self.mid1 = ResidualTemporalBlock(mid, mid, cond_dim, config, rng)
        self.mid2 = ResidualTemporalBlock(mid, mid, cond_dim, config, rng)
        self.ups = [_UpLevel(b, a, cond_dim, config, rng) for a, b in reversed(pairs[1:])]
        self.final_block = Conv1dBlock(config.widths[0], config.widths[0], config.kernel_size, config.n_groups, rng)
        self.final_conv = Conv1d(config.widths[0], config.in_channels, 1, rng)

    def condition(self, steps: np.ndarray, payload: np.ndarray) -> Tensor:
        """Concatenated step and payload embeddings, shape (batch, cond_dim)."""
        t = self.time_mlp(as_tensor(sinusoidal_embedding(steps, self.config.time_embed_dim)))
        p = self.payload_mlp(as_tensor(np.asarray(payload, dtype=get_default_dtype())))
        return concatenate([t, p], axis=1)

    def forward(self, x: Tensor, steps: np.ndarray, payload: np.ndarray) -> Tensor:
        """Predict the noise in ``x``.

        Parameters
        ----------
        x : Tensor, shape (batch, in_channels, horizon)
        steps : ndarray, shape (batch,)
            Diffusion steps in ``1..K``.
        payload : ndarray, shape (batch, payload_dim)
            Encoded payload vectors.
        """
        x = as_tensor(x)
        cfg = self.config
        if x.ndim != 3 or x.shape[1] != cfg.in_channels or x.shape[2] % 2 ** (len(cfg.widths) - 1):
            raise ShapeError(f"expected (B, {cfg.in_channels}, L) with L divisible by "
                             f"{2 ** (len(cfg.widths) - 1)}, got {x.shape}")
        payload = np.atleast_2d(payload)
        if payload.shape != (x.shape[0], cfg.payload_dim):
            raise ShapeError(f"payload must have shape ({x.shape[0]}, {cfg.payload_dim}), got {payload.shape}")

        cond = self.condition(steps, payload)
        skips: List[Tensor] = []
        for level in self.downs:
            x = level.res2(level.res1(x, cond), cond)
            skips.append(x)
            if level.down is not None:
                x = level.down(x)
        x = self.mid2(self.mid1(x, cond), cond)
        for level in self.ups:
            x = concatenate([x, skips.pop()], axis=1)
            x = level.up(level.res2(level.res1(x, cond), cond))
        return self.final_conv(self.final_block(x))

    def predict(self, x: np.ndarray, steps: np.ndarray, payload: np.ndarray) -> np.ndarray:
        """Forward pass on arrays of shape (batch, horizon, channels), no graph recorded."""
        with no_grad():
            out = self.forward(Tensor(np.ascontiguousarray(np.transpose(x, (0, 2, 1))).astype(get_default_dtype())),
                               steps, payload)
        return np.transpose(out.data, (0, 2, 1))


def build_denoiser(config: DenoiserConfig, seed: int = 0, state: Optional[Dict[str, np.ndarray]] = None) -> TemporalUnet:
    """Construct a denoiser, optionally loading saved parameters."""
    net = TemporalUnet(config, seed)
    if state is not None:
        net.load_state_dict(state)
    return net
