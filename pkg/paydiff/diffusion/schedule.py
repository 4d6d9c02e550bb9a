"""Cosine noise schedule and the coefficients of the DDPM and DDIM updates.

Diffusion steps are numbered ``k = 1..K``; arrays below are indexed by
``k - 1`` and ``alpha_bar(0) = 1``.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..utils.config import dataclass_from_dict, dataclass_to_dict


@dataclass
class ScheduleConfig:
    n_steps: int = 25
    offset: float = 0.008
    max_beta: float = 0.999


def betas_for_alpha_bar(n_steps: int, offset: float = 0.008, max_beta: float = 0.999) -> np.ndarray:
    """Betas of the squared-cosine ``alpha_bar`` curve, capped at ``max_beta``."""
    def alpha_bar(t: float) -> float:
        return np.cos((t + offset) / (1.0 + offset) * np.pi / 2.0) ** 2

    ts = np.arange(n_steps + 1) / n_steps
    ab = np.array([alpha_bar(t) for t in ts])
    return np.minimum(1.0 - ab[1:] / ab[:-1], max_beta)


class NoiseSchedule:
    """Precomputed schedule quantities for ``K`` diffusion steps.

    Parameters
    ----------
    config : ScheduleConfig
        Step count and cosine parameters.
    """

    def __init__(self, config: Optional[ScheduleConfig] = None) -> None:
        self.config = config or ScheduleConfig()
        if self.config.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.config.n_steps}")
        self.betas = betas_for_alpha_bar(self.config.n_steps, self.config.offset, self.config.max_beta)
        self.alphas = 1.0 - self.betas
        self.alpha_bars = np.cumprod(self.alphas)
        self.alpha_bars_prev = np.concatenate([[1.0], self.alpha_bars[:-1]])
        self.posterior_variance = self.betas * (1.0 - self.alpha_bars_prev) / (1.0 - self.alpha_bars)

    @property
    def n_steps(self) -> int:
        return self.config.n_steps

    def alpha_bar(self, k: int) -> float:
        return 1.0 if k == 0 else float(self.alpha_bars[k - 1])

    def q_sample(self, x0: np.ndarray, k: np.ndarray, noise: np.ndarray) -> np.ndarray:
        """Noised sample ``sqrt(ab_k) x0 + sqrt(1 - ab_k) noise`` for per-item steps ``k``."""
        ab = self.alpha_bars[np.asarray(k) - 1].reshape((-1,) + (1,) * (x0.ndim - 1))
        return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * noise

    def update_coefficients(self, k: int) -> Tuple[float, float, float]:
        """``(alpha, gamma, sigma)`` of ``x_{k-1} = alpha (x_k - gamma eps + N(0, sigma^2))``.

        ``alpha * sigma`` is the standard deviation of the ancestral posterior.
        """
        i = k - 1
        alpha = 1.0 / np.sqrt(self.alphas[i])
        gamma = self.betas[i] / np.sqrt(1.0 - self.alpha_bars[i])
        sigma = np.sqrt(self.posterior_variance[i]) / alpha
        return float(alpha), float(gamma), float(sigma)

    def posterior_std(self, k: int) -> float:
        return float(np.sqrt(self.posterior_variance[k - 1]))

    def posterior_mean_coefficients(self, k: int) -> Tuple[float, float]:
        """Weights of ``x0`` and ``x_k`` in the mean of ``q(x_{k-1} | x_k, x0)``."""
        i = k - 1
        c0 = np.sqrt(self.alpha_bars_prev[i]) * self.betas[i] / (1.0 - self.alpha_bars[i])
        ck = np.sqrt(self.alphas[i]) * (1.0 - self.alpha_bars_prev[i]) / (1.0 - self.alpha_bars[i])
        return float(c0), float(ck)

    def ddim_timesteps(self, n_sampling_steps: int) -> np.ndarray:
        """Evenly spaced steps from ``K`` down to 0, ``n_sampling_steps + 1`` entries."""
        if not 1 <= n_sampling_steps <= self.n_steps:
            raise ValueError(f"sampling steps must lie in [1, {self.n_steps}], got {n_sampling_steps}")
        steps = np.round(np.linspace(self.n_steps, 0, n_sampling_steps + 1)).astype(int)
        return steps

    def ddim_sigma(self, k: int, k_prev: int, eta: float) -> float:
        ab, ab_prev = self.alpha_bar(k), self.alpha_bar(k_prev)
        return float(eta * np.sqrt((1.0 - ab_prev) / (1.0 - ab) * (1.0 - ab / ab_prev)))

    def to_dict(self) -> Dict[str, Any]:
        return dataclass_to_dict(self.config)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NoiseSchedule":
        return cls(dataclass_from_dict(ScheduleConfig, data))
