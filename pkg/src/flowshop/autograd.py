"""Minimal reverse-mode automatic differentiation over numpy arrays.

A :class:`Tensor` wraps a float64 ndarray; operations build a backward
graph only when some input has ``requires_grad``, so inference on frozen
parameters runs with no tape at all. Gradients are accumulated by
walking the graph in reverse topological order from a scalar loss.

The op set is deliberately small: elementwise arithmetic, matmul with
numpy broadcasting, a few nonlinearities, reductions, stable (log-)softmax
that tolerates -inf masking, gather/scatter along an axis, concat,
reshape/transpose, and where. Everything the policy network needs and
nothing more.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor", "concat", "where", "gather_rows", "no_grad"]

_GRAD_ENABLED = True


class no_grad:
    """Context manager that suspends graph construction (inference mode)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _scatter_add(target: np.ndarray, idx: np.ndarray, src: np.ndarray, axis: int) -> None:
    """Accumulating inverse of np.take_along_axis."""
    grids = list(np.indices(idx.shape, sparse=False))
    grids[axis] = idx
    np.add.at(target, tuple(grids), src)


def _as_tensor(value) -> "Tensor":
    return value if isinstance(value, Tensor) else Tensor(np.asarray(value, dtype=np.float64))


class Tensor:
    """Array node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph plumbing ------------------------------------------------

    @staticmethod
    def _make(data, parents, backward) -> "Tensor":
        out = Tensor(data)
        if _GRAD_ENABLED and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self) -> None:
        """Backpropagate from a scalar; fills ``grad`` on requires_grad leaves."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar tensor")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        other = _as_tensor(other)
        a, b = self, other

        def backward(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g, b.data.shape))

        return Tensor._make(a.data + b.data, (a, b), backward)

    __radd__ = __add__

    def __neg__(self):
        a = self

        def backward(g):
            a._accumulate(-g)

        return Tensor._make(-a.data, (a,), backward)

    def __sub__(self, other):
        return self + (-_as_tensor(other))

    def __rsub__(self, other):
        return _as_tensor(other) + (-self)

    def __mul__(self, other):
        other = _as_tensor(other)
        a, b = self, other

        def backward(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g * b.data, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(g * a.data, b.data.shape))

        return Tensor._make(a.data * b.data, (a, b), backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_tensor(other)
        a, b = self, other

        def backward(g):
            if a.requires_grad:
                a._accumulate(_unbroadcast(g / b.data, a.data.shape))
            if b.requires_grad:
                b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

        return Tensor._make(a.data / b.data, (a, b), backward)

    def __matmul__(self, other):
        other = _as_tensor(other)
        a, b = self, other
        if a.data.ndim < 2 or b.data.ndim < 2:
            raise ValueError("matmul operands must be at least 2-D")

        def backward(g):
            if a.requires_grad:
                ga = g @ np.swapaxes(b.data, -1, -2)
                a._accumulate(_unbroadcast(ga, a.data.shape))
            if b.requires_grad:
                gb = np.swapaxes(a.data, -1, -2) @ g
                b._accumulate(_unbroadcast(gb, b.data.shape))

        return Tensor._make(a.data @ b.data, (a, b), backward)

    def pow(self, exponent: float):
        a = self

        def backward(g):
            a._accumulate(g * exponent * np.power(a.data, exponent - 1.0))

        return Tensor._make(np.power(a.data, exponent), (a,), backward)

    def sqrt(self):
        a = self
        out_data = np.sqrt(a.data)

        def backward(g):
            a._accumulate(g * 0.5 / np.sqrt(a.data))

        return Tensor._make(out_data, (a,), backward)

    # -- nonlinearities ----------------------------------------------------

    def relu(self):
        a = self
        keep = a.data > 0

        def backward(g):
            a._accumulate(g * keep)

        return Tensor._make(np.where(keep, a.data, 0.0), (a,), backward)

    def sigmoid(self):
        a = self
        out_data = 1.0 / (1.0 + np.exp(-a.data))

        def backward(g):
            a._accumulate(g * out_data * (1.0 - out_data))

        return Tensor._make(out_data, (a,), backward)

    def tanh(self):
        a = self
        out_data = np.tanh(a.data)

        def backward(g):
            a._accumulate(g * (1.0 - out_data * out_data))

        return Tensor._make(out_data, (a,), backward)

    def exp(self):
        a = self
        out_data = np.exp(a.data)

        def backward(g):
            a._accumulate(g * out_data)

        return Tensor._make(out_data, (a,), backward)

    def log(self):
        a = self

        def backward(g):
            a._accumulate(g / a.data)

        return Tensor._make(np.log(a.data), (a,), backward)

    # -- reductions ----------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        a = self

        def backward(g):
            if axis is None:
                a._accumulate(np.broadcast_to(g, a.data.shape).copy())
                return
            gg = g
            if not keepdims:
                gg = np.expand_dims(gg, axis)
            a._accumulate(np.broadcast_to(gg, a.data.shape).copy())

        return Tensor._make(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward)

    def mean(self, axis=None, keepdims: bool = False):
        if axis is None:
            scale = 1.0 / self.data.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            scale = 1.0 / np.prod([self.data.shape[ax] for ax in axes])
        return self.sum(axis=axis, keepdims=keepdims) * scale

    def max(self, axis: int, keepdims: bool = False):
        """Maximum along one axis; gradient flows to the first argmax."""
        a = self
        am = np.argmax(a.data, axis=axis)
        out_data = np.take_along_axis(a.data, np.expand_dims(am, axis), axis=axis)
        if not keepdims:
            out_data = np.squeeze(out_data, axis=axis)

        def backward(g):
            gg = g if keepdims else np.expand_dims(g, axis)
            ga = np.zeros_like(a.data)
            _scatter_add(ga, np.expand_dims(am, axis), gg, axis)
            a._accumulate(ga)

        return Tensor._make(out_data, (a,), backward)

    # -- softmax family ------------------------------------------------------

    def softmax(self, axis: int = -1):
        """Stable softmax; -inf entries come out as exact zeros."""
        a = self
        shift = np.max(a.data, axis=axis, keepdims=True)
        shift = np.where(np.isfinite(shift), shift, 0.0)
        e = np.exp(a.data - shift)
        out_data = e / e.sum(axis=axis, keepdims=True)

        def backward(g):
            inner = (g * out_data).sum(axis=axis, keepdims=True)
            a._accumulate(out_data * (g - inner))

        return Tensor._make(out_data, (a,), backward)

    def log_softmax(self, axis: int = -1):
        """Stable log-softmax; masked (-inf) entries stay -inf."""
        a = self
        shift = np.max(a.data, axis=axis, keepdims=True)
        shift = np.where(np.isfinite(shift), shift, 0.0)
        e = np.exp(a.data - shift)
        denom = e.sum(axis=axis, keepdims=True)
        out_data = a.data - shift - np.log(denom)
        p = e / denom

        def backward(g):
            a._accumulate(g - p * g.sum(axis=axis, keepdims=True))

        return Tensor._make(out_data, (a,), backward)

    # -- shape / indexing ------------------------------------------------------

    def reshape(self, *shape):
        a = self
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])

        def backward(g):
            a._accumulate(g.reshape(a.data.shape))

        return Tensor._make(a.data.reshape(shape), (a,), backward)

    def transpose(self, *axes):
        a = self
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inverse = np.argsort(axes)

        def backward(g):
            a._accumulate(g.transpose(inverse))

        return Tensor._make(a.data.transpose(axes), (a,), backward)

    def gather(self, idx: np.ndarray, axis: int):
        """np.take_along_axis with a scatter-add backward (duplicates allowed)."""
        a = self
        idx = np.asarray(idx, dtype=np.int64)

        def backward(g):
            ga = np.zeros_like(a.data)
            _scatter_add(ga, idx, g, axis)
            a._accumulate(ga)

        return Tensor._make(np.take_along_axis(a.data, idx, axis=axis), (a,), backward)

    def broadcast_to(self, shape):
        a = self

        def backward(g):
            a._accumulate(_unbroadcast(g, a.data.shape))

        return Tensor._make(np.broadcast_to(a.data, shape).copy(), (a,), backward)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along an axis; backward splits the gradient."""
    tensors = [_as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                t._accumulate(g[tuple(index)])

    return Tensor._make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward)


def where(cond: np.ndarray, a, b) -> Tensor:
    """Select from two tensors with a constant boolean mask."""
    cond = np.asarray(cond, dtype=bool)
    a = _as_tensor(a)
    b = _as_tensor(b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(np.where(cond, g, 0.0), a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(np.where(cond, 0.0, g), b.data.shape))

    return Tensor._make(np.where(cond, a.data, b.data), (a, b), backward)


def gather_rows(t: Tensor, idx: np.ndarray) -> Tensor:
    """Pick rows of a (B, N, D) tensor: out[b, j] = t[b, idx[b, j]].

    The backward pass scatter-adds whole D-slices per index, which is far
    cheaper than elementwise np.add.at for the neighbor/context gathers.
    """
    idx = np.asarray(idx, dtype=np.int64)
    batch_grid = np.arange(t.data.shape[0])[:, None]

    def backward(g):
        gt = np.zeros_like(t.data)
        np.add.at(gt, (batch_grid, idx), g)
        t._accumulate(gt)

    return Tensor._make(t.data[batch_grid, idx], (t,), backward)
