"""Dense float64 tensors with reverse-mode automatic differentiation.

Every differentiable operation appends a record (op name, inputs, output,
adjoint rule) to a module-level tape. ``backward(root)`` seeds the scalar
root with gradient 1, walks the tape in exact reverse append order, and
accumulates gradients into every leaf tensor with ``requires_grad``. The
tape is consumed by the walk, so compute one objective per tape: a forward
pass whose gradient is never needed should run under ``no_grad()``.

All values are checked finite at op boundaries; a NaN/Inf intermediate
raises :class:`NumericError` naming the offending op.
"""

import math
from contextlib import contextmanager

import numpy as np

from .errors import ContractError, NumericError


class Tensor:
    """A dense float64 array, optionally tracked by the computation graph.

    ``op`` is None for leaves (parameters, constants, data); tensors produced
    by registered ops carry the op name that made them.
    """

    __slots__ = ("data", "requires_grad", "grad", "op")

    def __init__(self, data, requires_grad=False, _op=None):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            where = _op if _op is not None else "tensor construction"
            raise NumericError(f"non-finite values in {where}")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.op = _op

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of shape {self.data.shape}")
        return float(self.data.reshape(()))

    def detach(self):
        """Return a constant copy cut off from the graph."""
        return Tensor(self.data.copy(), requires_grad=False)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    # -- operator sugar (scalars and arrays lift to constant tensors) --

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __neg__(self):
        return mul(self, _lift(-1.0))

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ContractError("tensor/tensor division is not a registered op")
        return mul(self, _lift(1.0 / float(other)))

    def __matmul__(self, other):
        return matmul(self, _lift(other))

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, shape):
        return reshape(self, shape)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad}, op={self.op})"


def _lift(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def tensor(data, requires_grad=False):
    return Tensor(data, requires_grad=requires_grad)


class _Record:
    __slots__ = ("op", "inputs", "output", "adjoint")

    def __init__(self, op, inputs, output, adjoint):
        self.op = op
        self.inputs = inputs
        self.output = output
        self.adjoint = adjoint


class ComputationGraph:
    """Append-only op tape; cleared when backward consumes it."""

    def __init__(self):
        self.records = []

    def clear(self):
        self.records.clear()

    def __len__(self):
        return len(self.records)


_TAPE = ComputationGraph()
_GRAD_ENABLED = True

#: names of every registered differentiable op (tests sweep this)
OP_NAMES = []


def active_graph():
    return _TAPE


@contextmanager
def no_grad():
    """Disable taping inside the block; outputs come back as constants."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def _register(name):
    OP_NAMES.append(name)
    return name


def _record(op, inputs, out_data, adjoint):
    needs = _GRAD_ENABLED and any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=needs, _op=op)
    if needs:
        _TAPE.records.append(_Record(op, inputs, out, adjoint))
    return out


def backward(root):
    """Accumulate d(root)/d(leaf) into every reachable leaf's ``grad``.

    Consumes the active tape in exact reverse append order. Gradients of a
    leaf used several times sum up.
    """
    if not isinstance(root, Tensor) or root.data.size != 1:
        raise ContractError("backward root must be a scalar tensor")
    if not _TAPE.records:
        raise ContractError("backward on an empty computation graph")
    flowing = {id(root): np.ones_like(root.data)}
    try:
        for rec in reversed(_TAPE.records):
            g_out = flowing.pop(id(rec.output), None)
            if g_out is None:
                continue
            for t, g in zip(rec.inputs, rec.adjoint(g_out)):
                if g is None or not t.requires_grad:
                    continue
                if t.op is None:
                    t.grad = np.array(g, copy=True) if t.grad is None else t.grad + g
                else:
                    acc = flowing.get(id(t))
                    flowing[id(t)] = g if acc is None else acc + g
    finally:
        _TAPE.clear()


def _unbroadcast(g, shape):
    """Sum ``g`` over axes that numpy broadcasting expanded from ``shape``."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def _check_broadcast(op, a, b):
    try:
        return np.broadcast_shapes(a.data.shape, b.data.shape)
    except ValueError:
        raise ContractError(
            f"{op}: shapes {a.data.shape} and {b.data.shape} do not broadcast"
        ) from None


# ---------------------------------------------------------------------------
# elementwise / broadcasting arithmetic
# ---------------------------------------------------------------------------

_register("add")


def add(a, b):
    a, b = _lift(a), _lift(b)
    _check_broadcast("add", a, b)

    def adjoint(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _record("add", (a, b), a.data + b.data, adjoint)


_register("sub")


def sub(a, b):
    a, b = _lift(a), _lift(b)
    _check_broadcast("sub", a, b)

    def adjoint(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _record("sub", (a, b), a.data - b.data, adjoint)


_register("mul")


def mul(a, b):
    a, b = _lift(a), _lift(b)
    _check_broadcast("mul", a, b)
    ad, bd = a.data, b.data

    def adjoint(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return _record("mul", (a, b), ad * bd, adjoint)


_register("matmul")


def matmul(a, b):
    """Matrix product; the leading batch dimensions broadcast like numpy @."""
    a, b = _lift(a), _lift(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ContractError("matmul requires tensors with at least 2 dims")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ContractError(
            f"matmul: inner dims differ, {a.data.shape} @ {b.data.shape}"
        )
    ad, bd = a.data, b.data

    def adjoint(g):
        ga = g @ bd.swapaxes(-1, -2)
        gb = ad.swapaxes(-1, -2) @ g
        return _unbroadcast(ga, ad.shape), _unbroadcast(gb, bd.shape)

    return _record("matmul", (a, b), ad @ bd, adjoint)


# ---------------------------------------------------------------------------
# elementwise nonlinearities
# ---------------------------------------------------------------------------

_register("relu")


def relu(t):
    t = _lift(t)
    mask = t.data > 0.0  # subgradient 0 at exactly 0

    def adjoint(g):
        return (g * mask,)

    return _record("relu", (t,), np.where(mask, t.data, 0.0), adjoint)


_register("exp")


def exp(t):
    t = _lift(t)
    with np.errstate(over="ignore"):
        out_data = np.exp(t.data)

    def adjoint(g):
        return (g * out_data,)

    return _record("exp", (t,), out_data, adjoint)


_register("log")


def log(t, eps=0.0):
    """Natural log; with ``eps > 0`` the input is clamped to ``max(x, eps)``."""
    t = _lift(t)
    x = t.data
    clamped = np.maximum(x, eps) if eps > 0.0 else x
    mask = x > eps  # flat (zero) gradient inside the clamp

    def adjoint(g):
        return (g * mask / np.maximum(clamped, np.finfo(np.float64).tiny),)

    with np.errstate(divide="ignore", invalid="ignore"):
        out_data = np.log(clamped)
    return _record("log", (t,), out_data, adjoint)


_register("sqrt")


def sqrt(t):
    t = _lift(t)
    out_data = np.sqrt(t.data)

    def adjoint(g):
        # subgradient 0 at x == 0 (matches frobenius_norm's convention)
        safe = np.where(out_data > 0.0, out_data, 1.0)
        return (np.where(out_data > 0.0, g / (2.0 * safe), 0.0),)

    return _record("sqrt", (t,), out_data, adjoint)


_register("power")


def power(t, p):
    """Elementwise x**p for a constant float exponent."""
    t = _lift(t)
    p = float(p)
    x = t.data

    def adjoint(g):
        return (g * p * x ** (p - 1.0),)

    return _record("power", (t,), x**p, adjoint)


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------


def _expand_reduced(g, shape, axis, keepdims):
    if axis is None:
        return np.broadcast_to(g, shape)
    if not keepdims:
        axes = axis if isinstance(axis, tuple) else (axis,)
        axes = tuple(a % len(shape) for a in axes)
        g = np.expand_dims(g, axes)
    return np.broadcast_to(g, shape)


_register("sum")


def tsum(t, axis=None, keepdims=False):
    t = _lift(t)
    shape = t.data.shape

    def adjoint(g):
        return (_expand_reduced(g, shape, axis, keepdims),)

    return _record("sum", (t,), t.data.sum(axis=axis, keepdims=keepdims), adjoint)


_register("mean")


def tmean(t, axis=None, keepdims=False):
    t = _lift(t)
    shape = t.data.shape
    if axis is None:
        count = t.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([shape[a % len(shape)] for a in axes]))

    def adjoint(g):
        return (_expand_reduced(g, shape, axis, keepdims) / count,)

    return _record("mean", (t,), t.data.mean(axis=axis, keepdims=keepdims), adjoint)


_register("softmax")


def softmax(t, axis=-1):
    """Numerically stable softmax along ``axis``; rows sum to 1."""
    t = _lift(t)
    x = t.data
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def adjoint(g):
        inner = (g * out_data).sum(axis=axis, keepdims=True)
        return (out_data * (g - inner),)

    return _record("softmax", (t,), out_data, adjoint)


_register("log_sum_exp")


def log_sum_exp(t, axis=None, keepdims=False):
    """Shift-invariant log(sum(exp(x))) along ``axis`` (all elements if None)."""
    t = _lift(t)
    x = t.data
    m = x.max(axis=axis, keepdims=True)
    e = np.exp(x - m)
    s = e.sum(axis=axis, keepdims=True)
    out = m + np.log(s)
    soft = e / s
    shape = x.shape
    if not keepdims and axis is not None:
        out_sq = np.squeeze(out, axis=axis)
    elif axis is None and not keepdims:
        out_sq = out.reshape(())
    else:
        out_sq = out

    def adjoint(g):
        return (_expand_reduced(g, shape, axis, keepdims) * soft,)

    return _record("log_sum_exp", (t,), out_sq, adjoint)


# ---------------------------------------------------------------------------
# distances and norms
# ---------------------------------------------------------------------------

_register("sqdist")


def sqdist(a, b):
    """Scalar squared euclidean distance ||a - b||^2 over all elements."""
    a, b = _lift(a), _lift(b)
    if a.data.shape != b.data.shape:
        raise ContractError(f"sqdist: shapes differ, {a.data.shape} vs {b.data.shape}")
    diff = a.data - b.data

    def adjoint(g):
        scaled = 2.0 * g * diff
        return scaled, -scaled

    return _record("sqdist", (a, b), np.sum(diff * diff), adjoint)


_register("pairwise_sqdist")


def pairwise_sqdist(t):
    """All-pairs squared distances between rows: (..., N, d) -> (..., N, N).

    Computed from explicit differences so the diagonal is exactly 0 and the
    result exactly symmetric.
    """
    t = _lift(t)
    if t.ndim < 2:
        raise ContractError("pairwise_sqdist needs at least 2 dims")
    x = t.data
    diff = x[..., :, None, :] - x[..., None, :, :]
    out_data = np.sum(diff * diff, axis=-1)

    def adjoint(g):
        s = g + g.swapaxes(-1, -2)
        return (2.0 * (s.sum(axis=-1)[..., None] * x - s @ x),)

    return _record("pairwise_sqdist", (t,), out_data, adjoint)


_register("cross_sqdist")


def cross_sqdist(a, b):
    """Squared distances between row sets: (n, d) x (m, d) -> (n, m)."""
    a, b = _lift(a), _lift(b)
    if a.ndim != 2 or b.ndim != 2 or a.data.shape[1] != b.data.shape[1]:
        raise ContractError(
            f"cross_sqdist: incompatible shapes {a.data.shape}, {b.data.shape}"
        )
    ad, bd = a.data, b.data
    diff = ad[:, None, :] - bd[None, :, :]
    out_data = np.sum(diff * diff, axis=-1)

    def adjoint(g):
        ga = 2.0 * (g.sum(axis=1)[:, None] * ad - g @ bd)
        gb = 2.0 * (g.sum(axis=0)[:, None] * bd - g.T @ ad)
        return ga, gb

    return _record("cross_sqdist", (a, b), out_data, adjoint)


_register("frobenius_norm")


def frobenius_norm(t):
    """Scalar sqrt(sum(x^2)); subgradient 0 at the origin."""
    t = _lift(t)
    x = t.data
    norm = math.sqrt(float(np.sum(x * x)))

    def adjoint(g):
        if norm == 0.0:
            return (np.zeros_like(x),)
        return (g * x / norm,)

    return _record("frobenius_norm", (t,), norm, adjoint)


# ---------------------------------------------------------------------------
# shape manipulation
# ---------------------------------------------------------------------------

_register("reshape")


def reshape(t, shape):
    t = _lift(t)
    old = t.data.shape

    def adjoint(g):
        return (g.reshape(old),)

    return _record("reshape", (t,), t.data.reshape(shape), adjoint)


_register("transpose")


def transpose(t, axes):
    t = _lift(t)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def adjoint(g):
        return (g.transpose(inverse),)

    return _record("transpose", (t,), t.data.transpose(axes), adjoint)


_register("broadcast_to")


def broadcast_to(t, shape):
    t = _lift(t)
    old = t.data.shape

    def adjoint(g):
        return (_unbroadcast(g, old),)

    return _record(
        "broadcast_to", (t,), np.ascontiguousarray(np.broadcast_to(t.data, shape)), adjoint
    )


_register("concat")


def concat(tensors, axis=0):
    tensors = tuple(_lift(t) for t in tensors)
    if not tensors:
        raise ContractError("concat of zero tensors")
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def adjoint(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return _record(
        "concat", tensors, np.concatenate([t.data for t in tensors], axis=axis), adjoint
    )


_register("gather_rows")


def gather_rows(t, indices):
    """Select rows (axis 0) by integer index; duplicate indices sum in backward."""
    t = _lift(t)
    idx = np.asarray(indices, dtype=np.intp)
    shape = t.data.shape

    def adjoint(g):
        out = np.zeros(shape, dtype=np.float64)
        np.add.at(out, idx, g)
        return (out,)

    return _record("gather_rows", (t,), t.data[idx], adjoint)
