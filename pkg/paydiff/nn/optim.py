"""Adam with bias correction."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..utils.error_handler import NonFiniteGradientError
from .tensor import Tensor


@dataclass
class AdamState:
    """First and second moment estimates per parameter and the step count."""

    step: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState, lr: float = 1e-3,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
              names: Optional[Sequence[str]] = None) -> List[np.ndarray]:
    """One bias-corrected Adam update.

    Parameters
    ----------
    params, grads : sequence of ndarray
        Current values and gradients, matching shapes.
    state : AdamState
        Moment estimates, updated in place.
    lr, beta1, beta2, eps : float
        Step size, moment decay rates and denominator offset.
    names : sequence of str, optional
        Parameter names used in error messages.

    Returns
    -------
    list of ndarray
        Updated parameter values.

    Raises
    ------
    NonFiniteGradientError
        If any gradient holds NaN or Inf; no parameter is changed then.
    """
    if len(params) != len(grads):
        raise ValueError(f"{len(params)} parameters but {len(grads)} gradients")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise ValueError(f"gradient {i} has shape {g.shape}, parameter has {p.shape}")
    bad = [names[i] if names else str(i) for i, g in enumerate(grads) if not np.all(np.isfinite(g))]
    if bad:
        raise NonFiniteGradientError(f"non-finite gradients in {', '.join(bad)} at step {state.step + 1}")

    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.step += 1
    c1 = 1.0 - beta1 ** state.step
    c2 = 1.0 - beta2 ** state.step
    updated = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        updated.append((p - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype, copy=False))
    return updated


class Adam:
    """Adam over a list of parameter tensors.

    Parameters without a gradient after backward are treated as having a zero
    gradient.
    """

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3, betas=(0.9, 0.999), eps: float = 1e-8,
                 grad_clip: Optional[float] = None) -> None:
        self.params = list(params)
        self.lr = lr
        self.betas = tuple(betas)
        self.eps = eps
        self.grad_clip = grad_clip
        self.state = AdamState()

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def grad_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(p.grad.astype(np.float64) ** 2))
                                 for p in self.params if p.grad is not None)))

    def step(self) -> None:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        if self.grad_clip is not None:
            norm = self.grad_norm()
            if np.isfinite(norm) and norm > self.grad_clip:
                grads = [g * (self.grad_clip / norm) for g in grads]
        names = [p.name or str(i) for i, p in enumerate(self.params)]
        updated = adam_step([p.data for p in self.params], grads, self.state, self.lr,
                            self.betas[0], self.betas[1], self.eps, names)
        for p, value in zip(self.params, updated):
            p.data = value

    def state_dict(self) -> Dict[str, np.ndarray]:
        out: Dict[str, np.ndarray] = {"step": np.array(self.state.step)}
        for i, (m, v) in enumerate(zip(self.state.m, self.state.v)):
            out[f"m.{i}"] = m
            out[f"v.{i}"] = v
        return out

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        self.state = AdamState(step=int(state["step"]))
        count = len([k for k in state if k.startswith("m.")])
        self.state.m = [np.array(state[f"m.{i}"]) for i in range(count)]
        self.state.v = [np.array(state[f"v.{i}"]) for i in range(count)]
