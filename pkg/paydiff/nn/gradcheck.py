"""Compare reverse-mode gradients with central finite differences."""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..utils.logger import get_logger
from .tensor import Tensor

logger = get_logger(__name__)


@dataclass
class GradCheckReport:
    max_relative_error: float
    max_absolute_error: float
    n_checked: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error <= self.tol


def gradient_check(loss_fn: Callable[[], Tensor], params: Sequence[Tensor], n_samples: int = 20,
                   eps: float = 1e-6, tol: float = 1e-6, rng: Optional[np.random.Generator] = None,
                   floor: float = 1e-2) -> GradCheckReport:
    """Check gradients of a scalar loss at random entries of ``params``.

    Parameters
    ----------
    loss_fn : callable
        Builds the graph and returns a scalar tensor.
    params : sequence of Tensor
        Candidates; tensors with ``requires_grad`` off (frozen) are skipped.
    n_samples : int
        Entries checked per parameter (all entries if the tensor is smaller).
    eps : float
        Central-difference step.
    tol : float
        Pass threshold on the relative error.
    rng : numpy.random.Generator, optional
        Chooses the checked entries.
    floor : float
        Lower bound of the relative-error denominator, so entries with tiny
        gradients are judged by absolute error.

    Returns
    -------
    GradCheckReport
    """
    rng = rng or np.random.default_rng(0)
    params = [p for p in params if p.requires_grad]
    for p in params:
        if p.dtype != np.float64:
            raise TypeError(f"gradient_check needs float64 parameters, {p.name or 'a parameter'} is {p.dtype}")
        p.data = np.ascontiguousarray(p.data)
        p.grad = None

    loss = loss_fn()
    loss.backward()
    analytic: List[np.ndarray] = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]

    max_rel, max_abs, count = 0.0, 0.0, 0
    for p, grad in zip(params, analytic):
        flat = p.data.reshape(-1)
        picks = np.arange(flat.size) if flat.size <= n_samples else rng.choice(flat.size, n_samples, replace=False)
        for idx in picks:
            original = flat[idx]
            flat[idx] = original + eps
            plus = float(loss_fn().data)
            flat[idx] = original - eps
            minus = float(loss_fn().data)
            flat[idx] = original
            numeric = (plus - minus) / (2.0 * eps)
            a = float(grad.reshape(-1)[idx])
            err = abs(a - numeric)
            max_abs = max(max_abs, err)
            max_rel = max(max_rel, err / max(abs(a), abs(numeric), floor))
            count += 1

    for p in params:
        p.grad = None
    report = GradCheckReport(max_rel, max_abs, count, tol)
    logger.debug(f"Gradient check over {count} entries: max relative error {max_rel:.3e}")
    return report
