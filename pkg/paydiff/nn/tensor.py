"""Dense numpy tensors with reverse-mode gradients.

Every operation producing a :class:`Tensor` records its parents and a closure
that pushes the output gradient back to them. :meth:`Tensor.backward` sorts
the recorded graph topologically and runs each closure exactly once.
"""

import contextlib
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.error_handler import NonFiniteError, ShapeError

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]

_DEFAULT_DTYPE = np.float32
_DEBUG = False
_GRAD_ENABLED = True


def get_default_dtype():
    return _DEFAULT_DTYPE


def set_default_dtype(dtype) -> None:
    """Select float32 (training) or float64 (gradient verification)."""
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise ValueError(f"dtype must be float32 or float64, got {dtype}")
    _DEFAULT_DTYPE = dtype


@contextlib.contextmanager
def default_dtype(dtype) -> Iterator[None]:
    previous = _DEFAULT_DTYPE
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


def set_debug(enabled: bool) -> None:
    """Check every forward result for NaN/Inf."""
    global _DEBUG
    _DEBUG = bool(enabled)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Build no graph inside the block (inference)."""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` over the axes that broadcasting added or stretched to reach its shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """N-dimensional array with an optional gradient.

    Parameters
    ----------
    data : array-like
        Values; converted to the default dtype unless already floating.
    requires_grad : bool
        Accumulate a gradient in :attr:`grad` during :meth:`backward`.
    name : str
        Optional label (parameter name) used in diagnostics.
    """

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: str = "",
                 _parents: Tuple["Tensor", ...] = (), _backward: Optional[Callable[[np.ndarray], None]] = None,
                 _op: str = "") -> None:
        arr = data.data if isinstance(data, Tensor) else np.asarray(data)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(_DEFAULT_DTYPE)
        self.data: np.ndarray = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._parents = _parents
        self._backward = _backward
        self._op = _op

    # ------------------------------------------------------------------ basics

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}{label})"

    def __len__(self) -> int:
        return self.shape[0]

    # ------------------------------------------------------------ graph plumbing

    @staticmethod
    def make(data: np.ndarray, parents: Sequence["Tensor"], backward: Callable[[np.ndarray], None],
             op: str) -> "Tensor":
        """Result of an operation; records the graph when any parent needs gradients."""
        if _DEBUG and not np.all(np.isfinite(data)):
            raise NonFiniteError(f"non-finite values produced by {op}")
        tracked = _GRAD_ENABLED and any(p.requires_grad for p in parents)
        if not tracked:
            return Tensor(data)
        return Tensor(data, requires_grad=True, _parents=tuple(parents), _backward=backward, _op=op)

    def accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        grad = unbroadcast(grad, self.shape).astype(self.dtype, copy=False)
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad = self.grad + grad

    def _topological_order(self) -> List["Tensor"]:
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Reverse sweep from this tensor; a scalar needs no seed gradient."""
        if not self.requires_grad:
            raise RuntimeError("backward() on a tensor that does not require grad")
        if grad is None:
            if self.size != 1:
                raise ShapeError(f"backward() without a seed needs a scalar, got shape {self.shape}")
            grad = np.ones_like(self.data)
        order = self._topological_order()
        self.accumulate(np.asarray(grad, dtype=self.dtype))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                if node._parents:
                    # Intermediate gradients are not needed after their sweep
                    node.grad = None

    # -------------------------------------------------------------- arithmetic

    def __add__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other, self.dtype)

        def backward(g: np.ndarray) -> None:
            self.accumulate(g)
            other.accumulate(g)

        return Tensor.make(self.data + other.data, (self, other), backward, "add")

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return Tensor.make(-self.data, (self,), lambda g: self.accumulate(-g), "neg")

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return self + (-as_tensor(other, self.dtype))

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return as_tensor(other, self.dtype) + (-self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other, self.dtype)

        def backward(g: np.ndarray) -> None:
            self.accumulate(g * other.data)
            other.accumulate(g * self.data)

        return Tensor.make(self.data * other.data, (self, other), backward, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other, self.dtype)
        out = self.data / other.data

        def backward(g: np.ndarray) -> None:
            self.accumulate(g / other.data)
            other.accumulate(-g * out / other.data)

        return Tensor.make(out, (self, other), backward, "div")

    def __rtruediv__(self, other: ArrayLike) -> "Tensor":
        return as_tensor(other, self.dtype) / self

    def __pow__(self, exponent: float) -> "Tensor":
        if isinstance(exponent, Tensor):
            raise TypeError("only constant exponents are supported")
        out = self.data ** exponent

        def backward(g: np.ndarray) -> None:
            self.accumulate(g * exponent * self.data ** (exponent - 1))

        return Tensor.make(out, (self,), backward, "pow")

    def __matmul__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other, self.dtype)
        if self.ndim != 2 or other.ndim != 2 or self.shape[1] != other.shape[0]:
            raise ShapeError(f"matmul needs (m, k) @ (k, n), got {self.shape} @ {other.shape}")

        def backward(g: np.ndarray) -> None:
            self.accumulate(g @ other.data.T)
            other.accumulate(self.data.T @ g)

        return Tensor.make(self.data @ other.data, (self, other), backward, "matmul")

    # -------------------------------------------------------------- reductions

    def sum(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        out = self.data.sum(axis=axis, keepdims=keepdims)

        def backward(g: np.ndarray) -> None:
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self.accumulate(np.broadcast_to(g, self.shape))

        return Tensor.make(np.asarray(out), (self,), backward, "sum")

    def mean(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        count = self.size if axis is None else int(np.prod([self.shape[a] for a in np.atleast_1d(axis)]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # ------------------------------------------------------------------ shapes

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.shape
        return Tensor.make(self.data.reshape(shape), (self,), lambda g: self.accumulate(g.reshape(original)),
                           "reshape")

    def transpose(self, *axes) -> "Tensor":
        axes = axes or tuple(reversed(range(self.ndim)))
        inverse = np.argsort(axes)
        return Tensor.make(self.data.transpose(axes), (self,),
                           lambda g: self.accumulate(g.transpose(inverse)), "transpose")

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def __getitem__(self, index) -> "Tensor":
        def backward(g: np.ndarray) -> None:
            full = np.zeros_like(self.data)
            np.add.at(full, index, g)
            self.accumulate(full)

        return Tensor.make(np.asarray(self.data[index]), (self,), backward, "getitem")

    # ------------------------------------------------------------ elementwise

    def exp(self) -> "Tensor":
        out = np.exp(self.data)
        return Tensor.make(out, (self,), lambda g: self.accumulate(g * out), "exp")

    def sigmoid(self) -> "Tensor":
        out = 1.0 / (1.0 + np.exp(-self.data))
        return Tensor.make(out, (self,), lambda g: self.accumulate(g * out * (1.0 - out)), "sigmoid")


def as_tensor(value: ArrayLike, dtype=None) -> Tensor:
    """Wrap constants; tensors pass through unchanged."""
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype or _DEFAULT_DTYPE))


def tensor(data: ArrayLike, requires_grad: bool = False, name: str = "") -> Tensor:
    """Tensor in the default dtype."""
    return Tensor(np.array(data, dtype=_DEFAULT_DTYPE), requires_grad=requires_grad, name=name)


def zeros(shape: Tuple[int, ...], requires_grad: bool = False, name: str = "") -> Tensor:
    return Tensor(np.zeros(shape, dtype=_DEFAULT_DTYPE), requires_grad=requires_grad, name=name)


def concatenate(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Join along ``axis``; gradients are split back to the inputs."""
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g: np.ndarray) -> None:
        for t, part in zip(tensors, np.split(g, sizes, axis=axis)):
            t.accumulate(part)

    return Tensor.make(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward, "concatenate")
