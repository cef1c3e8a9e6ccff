"""Dense float64 tensors with reverse-mode automatic differentiation.

Every operation builds a node in a dynamically constructed computation
graph.  Calling :meth:`Tensor.backward` on a scalar result walks the graph
in reverse topological order and accumulates gradients into every
reachable tensor that has ``requires_grad`` set.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Parameter",
    "add",
    "mul",
    "scale",
    "matmul",
    "transpose",
    "reshape",
    "slice_cols",
    "concat",
    "pick",
    "clamp_min",
    "log",
    "tanh",
    "relu",
    "gelu",
    "softmax_masked",
    "layer_norm",
    "conv1d",
    "max_over_time",
    "embedding_lookup",
    "dropout",
    "add_n",
    "zero_grads",
    "grad_check",
]


class Tensor:
    """A float64 array node in the computation graph.

    Parameters
    ----------
    data:
        Anything ``np.asarray`` accepts; stored as a float64 ndarray.
    requires_grad:
        Whether gradients should be accumulated into this tensor during
        the backward pass.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() requires a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate gradients of this tensor w.r.t. every graph input.

        ``grad`` seeds the output gradient and defaults to ones, so a
        scalar loss needs no argument.
        """
        if grad is None:
            grad = np.ones_like(self.data)
        else:
            grad = np.asarray(grad, dtype=np.float64)
            if grad.shape != self.data.shape:
                raise ValueError(f"seed gradient shape {grad.shape} != tensor shape {self.shape}")

        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

        _accumulate(self, grad)
        for node in reversed(topo):
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """A named, trainable tensor whose gradient buffer always exists."""

    __slots__ = ("name",)

    def __init__(self, data, name: str):
        super().__init__(data, requires_grad=True)
        if not name:
            raise ValueError("parameter name must be non-empty")
        self.name = name
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _result(data: np.ndarray, parents: tuple[Tensor, ...]) -> Tensor:
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = parents
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape``, undoing numpy broadcasting."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum with numpy broadcasting."""
    try:
        data = a.data + b.data
    except ValueError:
        raise ValueError(f"add: shapes {a.shape} and {b.shape} are not broadcastable") from None
    out = _result(data, (a, b))

    def _backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g, b.data.shape))

    out._backward_fn = _backward
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product with numpy broadcasting."""
    try:
        data = a.data * b.data
    except ValueError:
        raise ValueError(f"mul: shapes {a.shape} and {b.shape} are not broadcastable") from None
    out = _result(data, (a, b))

    def _backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    out._backward_fn = _backward
    return out


def scale(x: Tensor, factor: float) -> Tensor:
    """Multiply by a python scalar constant."""
    out = _result(x.data * factor, (x,))

    def _backward(g: np.ndarray) -> None:
        if x.requires_grad:
            _accumulate(x, g * factor)

    out._backward_fn = _backward
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D matrix product."""
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError(f"matmul requires 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul inner dimensions differ: {a.shape} x {b.shape}")
    out = _result(a.data @ b.data, (a, b))

    def _backward(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g @ b.data.T)
        if b.requires_grad:
            _accumulate(b, a.data.T @ g)

    out._backward_fn = _backward
    return out


def transpose(x: Tensor) -> Tensor:
    """Transpose a 2-D tensor."""
    if x.data.ndim != 2:
        raise ValueError(f"transpose requires a 2-D tensor, got shape {x.shape}")
    out = _result(x.data.T.copy(), (x,))

    def _backward(g: np.ndarray) -> None:
        if x.requires_grad:
            _accumulate(x, g.T)

    out._backward_fn = _backward
    return out


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    """Reshape into a new tensor (always a copy, never a view)."""
    shape = tuple(shape)
    try:
        data = x.data.reshape(shape).copy()
    except ValueError:
        raise ValueError(f"cannot reshape {x.shape} into {shape}") from None
    out = _result(data, (x,))

    def _backward(g: np.ndarray) -> None:
        if x.requires_grad:
            _accumulate(x, g.reshape(x.data.shape))

    out._backward_fn = _backward
    return out


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    """Select columns ``[start, stop)`` of a 2-D tensor."""
    if x.data.ndim != 2:
        raise ValueError(f"slice_cols requires a 2-D tensor, got shape {x.shape}")
    if not 0 <= start < stop <= x.shape[1]:
        raise ValueError(f"column range [{start}, {stop}) invalid for shape {x.shape}")
    out = _result(x.data[:, start:stop].copy(), (x,))

    def _backward(g: np.ndarray) -> None:
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[:, start:stop] = g
            _accumulate(x, full)

    out._backward_fn = _backward
    return out


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Concatenate tensors along ``axis``."""
    if not tensors:
        raise ValueError("concat requires at least one tensor")
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ValueError(f"concat: incompatible shapes {[t.shape for t in tensors]}") from exc
    out = _result(data, tuple(tensors))
    sizes = [t.data.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def _backward(g: np.ndarray) -> None:
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                _accumulate(t, g[tuple(idx)])

    out._backward_fn = _backward
    return out


def pick(x: Tensor, index: int) -> Tensor:
    """Select a single element of a 1-D tensor as a scalar tensor."""
    if x.data.ndim != 1:
        raise ValueError(f"pick requires a 1-D tensor, got shape {x.shape}")
    if not 0 <= index < x.shape[0]:
        raise ValueError(f"index {index} out of range for length {x.shape[0]}")
    out = _result(np.asarray(x.data[index]), (x,))

    def _backward(g: np.ndarray) -> None:
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[index] = g
            _accumulate(x, full)

    out._backward_fn = _backward
    return out


def clamp_min(x: Tensor, floor: float) -> Tensor:
    """Elementwise ``max(x, floor)``; gradient is zero where clamped."""
    data = np.maximum(x.data, floor)
    out = _result(data, (x,))
    pass_through = x.data > floor

    def _backward(g: np.ndarray) -> None:
        if x.requires_grad:
            _accumulate(x, g * pass_through)

    out._backward_fn = _backward
    return out


def log(x: Tensor) -> Tensor:
    """Natural logarithm; inputs must be strictly positive."""
    if np.any(x.data <= 0):
        raise ValueError("log requires strictly positive inputs")
    out = _result(np.log(x.data), (x,))

    def _backward(g: np.ndarray) -> None:
        if x.requires_grad:
            _accumulate(x, g / x.data)

    out._backward_fn = _backward
    return out


def tanh(x: Tensor) -> Tensor:
    data = np.tanh(x.data)
    out = _result(data, (x,))

    def _backward(g: np.ndarray) -> None:
        if x.requires_grad:
            _accumulate(x, g * (1.0 - data * data))

    out._backward_fn = _backward
    return out


def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0.0)
    out = _result(data, (x,))
    positive = x.data > 0

    def _backward(g: np.ndarray) -> None:
        if x.requires_grad:
            _accumulate(x, g * positive)

    out._backward_fn = _backward
    return out


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(x: Tensor) -> Tensor:
    """Gaussian error linear unit (tanh approximation)."""
    u = _GELU_C * (x.data + 0.044715 * x.data**3)
    t = np.tanh(u)
    out = _result(0.5 * x.data * (1.0 + t), (x,))

    def _backward(g: np.ndarray) -> None:
        if x.requires_grad:
            du = _GELU_C * (1.0 + 3 * 0.044715 * x.data**2)
            local = 0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t * t) * du
            _accumulate(x, g * local)

    out._backward_fn = _backward
    return out


def softmax_masked(logits: Tensor, mask: np.ndarray) -> Tensor:
    """Softmax over the last axis restricted to unmasked positions.

    ``mask`` is a binary array broadcastable to ``logits.shape``; masked
    positions (zeros) receive probability exactly 0.0 and each row of the
    result sums to 1 over its unmasked positions.
    """
    mask = np.asarray(mask, dtype=np.float64)
    if not np.all((mask == 0.0) | (mask == 1.0)):
        raise ValueError("mask entries must be 0 or 1")
    try:
        keep = np.broadcast_to(mask, logits.data.shape)
    except ValueError:
        raise ValueError(
            f"mask shape {mask.shape} is not broadcastable to logits shape {logits.shape}"
        ) from None
    if np.any(keep.sum(axis=-1) < 1):
        raise ValueError("softmax_masked requires at least one unmasked position per row")

    shifted = np.where(keep == 1.0, logits.data, -np.inf)
    shifted = shifted - shifted.max(axis=-1, keepdims=True)
    expd = np.where(keep == 1.0, np.exp(shifted), 0.0)
    weights = expd / expd.sum(axis=-1, keepdims=True)
    out = _result(weights, (logits,))

    def _backward(g: np.ndarray) -> None:
        if logits.requires_grad:
            dot = (g * weights).sum(axis=-1, keepdims=True)
            _accumulate(logits, weights * (g - dot))

    out._backward_fn = _backward
    return out


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then apply an affine transform."""
    if x.data.shape[-1] < 2:
        raise ValueError(f"layer_norm requires at least 2 features, got shape {x.shape}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if gamma.data.shape != (x.data.shape[-1],) or beta.data.shape != (x.data.shape[-1],):
        raise ValueError(
            f"gamma/beta must have shape ({x.data.shape[-1]},), "
            f"got {gamma.shape} and {beta.shape}"
        )
    mean = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv
    out = _result(xhat * gamma.data + beta.data, (x, gamma, beta))
    n = x.data.shape[-1]

    def _backward(g: np.ndarray) -> None:
        if gamma.requires_grad:
            _accumulate(gamma, _unbroadcast(g * xhat, gamma.data.shape))
        if beta.requires_grad:
            _accumulate(beta, _unbroadcast(g, beta.data.shape))
        if x.requires_grad:
            dxhat = g * gamma.data
            term = dxhat - dxhat.mean(axis=-1, keepdims=True)
            term -= xhat * (dxhat * xhat).sum(axis=-1, keepdims=True) / n
            _accumulate(x, term * inv)

    out._backward_fn = _backward
    return out


def conv1d(x: Tensor, filters: Tensor, bias: Tensor) -> Tensor:
    """Valid (no padding) 1-D convolution over the time axis.

    ``x`` has shape (T, E), ``filters`` (F, width, E) and ``bias`` (F,);
    the result has shape (T - width + 1, F) with
    ``out[t, f] = bias[f] + sum_{i, e} x[t + i, e] * filters[f, i, e]``.
    """
    if x.data.ndim != 2 or filters.data.ndim != 3:
        raise ValueError(
            f"conv1d expects x (T, E) and filters (F, width, E), "
            f"got {x.shape} and {filters.shape}"
        )
    n_filters, width, n_channels = filters.data.shape
    if x.data.shape[1] != n_channels:
        raise ValueError(f"input channels {x.data.shape[1]} != filter channels {n_channels}")
    if bias.data.shape != (n_filters,):
        raise ValueError(f"bias must have shape ({n_filters},), got {bias.shape}")
    t = x.data.shape[0]
    if t < width:
        raise ValueError(
            f"sequence length {t} shorter than filter width {width}; pad the input first"
        )

    windows = np.lib.stride_tricks.sliding_window_view(x.data, width, axis=0)  # (T', E, width)
    data = np.einsum("tew,fwe->tf", windows, filters.data) + bias.data
    out = _result(data, (x, filters, bias))

    def _backward(g: np.ndarray) -> None:
        if bias.requires_grad:
            _accumulate(bias, g.sum(axis=0))
        if filters.requires_grad:
            _accumulate(filters, np.einsum("tf,tew->fwe", g, windows))
        if x.requires_grad:
            dx = np.zeros_like(x.data)
            for offset in range(width):
                dx[offset : offset + g.shape[0]] += g @ filters.data[:, offset, :]
            _accumulate(x, dx)

    out._backward_fn = _backward
    return out


def max_over_time(x: Tensor) -> Tensor:
    """Maximum over axis 0 of a 2-D tensor; ties route gradient to the
    first (lowest-index) maximal position."""
    if x.data.ndim != 2:
        raise ValueError(f"max_over_time requires a 2-D tensor, got shape {x.shape}")
    if x.data.shape[0] == 0:
        raise ValueError("max_over_time requires a non-empty time axis")
    argmax = x.data.argmax(axis=0)
    out = _result(x.data[argmax, np.arange(x.data.shape[1])], (x,))

    def _backward(g: np.ndarray) -> None:
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[argmax, np.arange(x.data.shape[1])] = g
            _accumulate(x, full)

    out._backward_fn = _backward
    return out


def embedding_lookup(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Gather rows of ``table`` by integer id."""
    if table.data.ndim != 2:
        raise ValueError(f"embedding table must be 2-D, got shape {table.shape}")
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1:
        raise ValueError(f"ids must be 1-D, got shape {ids.shape}")
    vocab_size = table.shape[0]
    if ids.size:
        bad = ids[(ids < 0) | (ids >= vocab_size)]
        if bad.size:
            raise ValueError(f"id {bad[0]} is outside the vocabulary range [0, {vocab_size})")
    out = _result(table.data[ids], (table,))

    def _backward(g: np.ndarray) -> None:
        if table.requires_grad:
            full = np.zeros_like(table.data)
            np.add.at(full, ids, g)
            _accumulate(table, full)

    out._backward_fn = _backward
    return out


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: zero each element with probability ``rate`` and
    rescale the survivors by 1/(1-rate).  Call only during training."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    return mul(x, Tensor(keep))


def add_n(tensors: Sequence[Tensor]) -> Tensor:
    """Sum a non-empty sequence of same-shaped tensors."""
    if not tensors:
        raise ValueError("add_n requires at least one tensor")
    total = tensors[0]
    for t in tensors[1:]:
        total = add(total, t)
    return total


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.grad = np.zeros_like(p.data)


def grad_check(
    f: Callable[[], Tensor],
    param: Parameter,
    h: float = 1e-5,
) -> float:
    """Compare analytic gradients of ``f()`` w.r.t. ``param`` against
    central finite differences.

    ``f`` must rebuild the graph on every call and return a scalar.
    Returns the maximum relative error
    ``|analytic - numeric| / max(1, |analytic|, |numeric|)`` over all
    elements of ``param``.
    """
    out = f()
    if out.data.size != 1:
        raise ValueError(f"grad_check requires a scalar objective, got shape {out.shape}")
    if not np.isfinite(out.data).all():
        raise ValueError("objective is not finite")

    param.grad = np.zeros_like(param.data)
    out.backward()
    analytic = param.grad.copy().reshape(-1)

    flat = param.data.reshape(-1)
    numeric = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = f().item()
        flat[i] = orig - h
        f_minus = f().item()
        flat[i] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise ValueError("objective is not finite at a perturbed point")
        numeric[i] = (f_plus - f_minus) / (2.0 * h)

    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / denom))
