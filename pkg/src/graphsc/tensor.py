"""Dense float64 tensors with reverse-mode differentiation.

Every operation that receives at least one ``requires_grad`` input records
itself (inputs, output, local backward rule) so that :func:`backward` can
replay the tape in reverse and accumulate gradients into the leaves.
Broadcasting is deliberately restricted: scalars combine with anything,
a row vector combines with a matrix, and every other shape mismatch is an
error.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, NumericError

_COUNTER = 0


def _next_order() -> int:
    global _COUNTER
    _COUNTER += 1
    return _COUNTER


class Tensor:
    """A float64 ndarray plus an optional gradient accumulator."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_order")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self._order = _next_order()

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        """A constant copy that no gradient flows through."""
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # Operator sugar; plain floats/ints are wrapped as constants.
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __neg__(self):
        return mul(self, Tensor(-1.0))

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...],
          backward: Callable[[np.ndarray], None]) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _check_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def _broadcastable(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    # scalar-with-anything, identical shapes, or row-vector-over-matrix
    if a == b or a == () or b == ():
        return True
    row, mat = (a, b) if len(a) < len(b) or (len(a) == 2 and a[0] == 1) else (b, a)
    if len(mat) == 2 and (row == (mat[1],) or row == (1, mat[1])):
        return True
    return False


def _reduce_to(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original shape."""
    if g.shape == shape:
        return g
    if shape == ():
        return np.asarray(g.sum())
    if len(shape) == 1:
        return g.sum(axis=0)
    return g.sum(axis=0, keepdims=True)


def _binary(a: Tensor, b: Tensor, op: str, fwd, da, db) -> Tensor:
    if not _broadcastable(a.shape, b.shape):
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} are not compatible")
    data = fwd(a.data, b.data)

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(_reduce_to(da(g), a.shape))
        if b.requires_grad:
            b.accumulate_grad(_reduce_to(db(g), b.shape))

    return _make(data, (a, b), bw)


def add(a: Tensor, b: Tensor) -> Tensor:
    return _binary(a, b, "add", lambda x, y: x + y, lambda g: g, lambda g: g)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return _binary(a, b, "sub", lambda x, y: x - y, lambda g: g, lambda g: -g)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return _binary(a, b, "mul", lambda x, y: x * y,
                   lambda g: g * b.data, lambda g: g * a.data)


def div(a: Tensor, b: Tensor) -> Tensor:
    return _binary(a, b, "div", lambda x, y: x / y,
                   lambda g: g / b.data,
                   lambda g: -g * a.data / (b.data * b.data))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} do not align")
    data = a.data @ b.data

    def bw(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(g @ b.data.T)
        if b.requires_grad:
            b.accumulate_grad(a.data.T @ g)

    return _make(data, (a, b), bw)


def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0.0)

    def bw(g: np.ndarray) -> None:
        x.accumulate_grad(g * (x.data > 0.0))

    return _make(data, (x,), bw)


def square(x: Tensor) -> Tensor:
    def bw(g: np.ndarray) -> None:
        x.accumulate_grad(g * 2.0 * x.data)

    return _make(x.data * x.data, (x,), bw)


def sqrt(x: Tensor) -> Tensor:
    data = np.sqrt(x.data)

    def bw(g: np.ndarray) -> None:
        x.accumulate_grad(g * 0.5 / np.sqrt(x.data))

    return _make(data, (x,), bw)


def exp(x: Tensor) -> Tensor:
    data = np.exp(x.data)

    def bw(g: np.ndarray) -> None:
        x.accumulate_grad(g * data)

    return _make(data, (x,), bw)


def tsum(x: Tensor, axis: int | None = None) -> Tensor:
    data = x.data.sum(axis=axis)

    def bw(g: np.ndarray) -> None:
        if axis is None:
            x.accumulate_grad(np.full_like(x.data, g if np.ndim(g) == 0 else float(g)))
        else:
            x.accumulate_grad(np.expand_dims(g, axis) * np.ones_like(x.data))

    return _make(data, (x,), bw)


def tmean(x: Tensor, axis: int | None = None) -> Tensor:
    n = x.data.size if axis is None else x.shape[axis]
    return mul(tsum(x, axis), Tensor(1.0 / n))


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    parts = list(tensors)
    if not parts:
        raise DimensionError("concat: empty input list")
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def bw(g: np.ndarray) -> None:
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                p.accumulate_grad(g[tuple(idx)])

    return _make(data, tuple(parts), bw)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    idx = [slice(None)] * x.data.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    data = x.data[idx]

    def bw(g: np.ndarray) -> None:
        full = np.zeros_like(x.data)
        full[idx] = g
        x.accumulate_grad(full)

    return _make(data, (x,), bw)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    data = x.data.reshape(shape)

    def bw(g: np.ndarray) -> None:
        x.accumulate_grad(g.reshape(x.shape))

    return _make(data, (x,), bw)


def transpose(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise DimensionError(f"transpose: expected 2-D, got shape {x.shape}")

    def bw(g: np.ndarray) -> None:
        x.accumulate_grad(g.T)

    return _make(x.data.T, (x,), bw)


def take_rows(x: Tensor, indices: np.ndarray) -> Tensor:
    """Gather rows by index; backward scatter-adds."""
    idx = np.asarray(indices, dtype=np.int64)
    data = x.data[idx]

    def bw(g: np.ndarray) -> None:
        full = np.zeros_like(x.data)
        np.add.at(full, idx, g)
        x.accumulate_grad(full)

    return _make(data, (x,), bw)


def scale_rows(x: Tensor, s: Tensor) -> Tensor:
    """Multiply row i of a matrix by scalar s[i]."""
    if x.data.ndim != 2 or s.data.ndim != 1 or s.shape[0] != x.shape[0]:
        raise DimensionError(f"scale_rows: shapes {x.shape} and {s.shape} do not align")
    data = x.data * s.data[:, None]

    def bw(g: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(g * s.data[:, None])
        if s.requires_grad:
            s.accumulate_grad((g * x.data).sum(axis=1))

    return _make(data, (x, s), bw)


def l2_normalize(x: Tensor, guard: float = 1e-24) -> Tensor:
    """Row-wise L2 normalization; all-zero rows pass through unchanged.

    The guard inside the square root keeps the gradient finite at the
    zero-row singularity without moving any representable nonzero value.
    """
    if x.data.ndim != 2:
        raise DimensionError(f"l2_normalize: expected 2-D, got shape {x.shape}")
    sq = tsum(square(x), axis=1)
    norm = sqrt(add(sq, Tensor(np.full(sq.shape, guard))))
    inv = div(Tensor(np.ones(norm.shape)), norm)
    return scale_rows(x, inv)


def softmax(x: Tensor, axis: int) -> Tensor:
    # max-subtraction keeps exp() bounded for unbounded inner products
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def bw(g: np.ndarray) -> None:
        dot = (g * data).sum(axis=axis, keepdims=True)
        x.accumulate_grad(data * (g - dot))

    return _make(data, (x,), bw)


def segment_sum(values: Tensor, segment_ids: np.ndarray, num_segments: int) -> Tensor:
    """Sum rows of ``values`` grouped by non-decreasing ``segment_ids``."""
    ids = np.asarray(segment_ids, dtype=np.int64)
    if ids.ndim != 1 or ids.shape[0] != values.shape[0]:
        raise DimensionError(
            f"segment_sum: ids shape {ids.shape} does not match values shape {values.shape}")
    if ids.size and np.any(np.diff(ids) < 0):
        raise DimensionError("segment_sum: segment_ids must be non-decreasing")
    if ids.size and (ids[0] < 0 or ids[-1] >= num_segments):
        raise DimensionError("segment_sum: segment id out of range")
    data = np.zeros((num_segments,) + values.shape[1:])
    np.add.at(data, ids, values.data)

    def bw(g: np.ndarray) -> None:
        values.accumulate_grad(g[ids])

    return _make(data, (values,), bw)


class Tape:
    """The reachable computation history of one output, in execution order."""

    def __init__(self, nodes: list[Tensor]):
        self.nodes = nodes

    @classmethod
    def from_root(cls, root: Tensor) -> "Tape":
        seen: set[int] = set()
        nodes: list[Tensor] = []
        stack = [root]
        while stack:
            t = stack.pop()
            if id(t) in seen or not t.requires_grad:
                continue
            seen.add(id(t))
            nodes.append(t)
            stack.extend(t._parents)
        nodes.sort(key=lambda t: t._order)  # creation order is a topological order
        return cls(nodes)

    def replay_backward(self, root: Tensor) -> None:
        root.accumulate_grad(np.ones_like(root.data))
        for t in reversed(self.nodes):
            if t._backward is not None and t.grad is not None:
                t._backward(t.grad)


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every requires_grad leaf.

    Leaf gradients persist and keep accumulating across separate
    forward/backward rounds until explicitly zeroed. A recorded graph is
    meant to be backpropagated once; build a fresh forward pass per call.
    """
    if loss.shape != ():
        raise DimensionError(f"backward: loss must be scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    Tape.from_root(loss).replay_backward(loss)


def gradient_check(f: Callable[[Tensor], Tensor], x: Tensor, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error per coordinate is |analytic - numeric| divided by
    max(1e-12, |analytic| + |numeric|).
    """
    if step <= 0:
        raise ValueError("step must be positive")
    leaf = Tensor(x.data.copy(), requires_grad=True)
    out = f(leaf)
    if out.shape != ():
        raise DimensionError("gradient_check: f must return a scalar")
    backward(out)
    analytic = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)

    flat = x.data.reshape(-1).copy()
    numeric = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = f(Tensor(flat.reshape(x.shape))).item()
        flat[i] = orig - step
        lo = f(Tensor(flat.reshape(x.shape))).item()
        flat[i] = orig
        numeric[i] = (hi - lo) / (2.0 * step)
    numeric = numeric.reshape(x.shape)

    if not (np.all(np.isfinite(analytic)) and np.all(np.isfinite(numeric))):
        raise NumericError("gradient_check: non-finite values encountered")
    denom = np.maximum(1e-12, np.abs(analytic) + np.abs(numeric))
    rel = np.abs(analytic - numeric) / denom
    return float(rel.max()) if rel.size else 0.0
