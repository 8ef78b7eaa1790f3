"""Tape-based reverse-mode automatic differentiation over tensor ops.

A :class:`Variable` wraps a float64 array together with an accumulated
gradient of the same shape. While a :class:`Tape` is active (as a context
manager), every primitive op appends one entry -- ``(inputs, output, vjp)``
-- in execution order, so the entry list is already topologically sorted.
``backward`` zeroes every touched gradient, seeds the scalar loss with 1 and
replays the tape in reverse, accumulating input gradients additively (fan-out
sums). With no tape active the same ops just compute values, which is how
inference-mode code runs at full speed.

A tape lives for one forward/backward pass and is then discarded; it must
stay on a single thread.
"""

from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from . import kernels
from .errors import DimensionError, DomainError


class Variable:
    """A tensor leaf or intermediate with an accumulated gradient.

    The gradient is stored lazily: ``None`` stands for an all-zero gradient
    until backward accumulates into it or someone reads ``.grad``.
    """

    __slots__ = ("value", "_grad", "_tape")

    def __init__(self, value):
        self.value = np.asarray(value, dtype=np.float64)
        self._grad: Optional[np.ndarray] = None
        self._tape: Optional["Tape"] = None

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            self._grad = np.zeros_like(self.value)
        return self._grad

    @grad.setter
    def grad(self, value) -> None:
        self._grad = value

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Variable(shape={self.value.shape})"


def as_variable(x) -> Variable:
    return x if isinstance(x, Variable) else Variable(x)


class TapeEntry(NamedTuple):
    inputs: tuple
    output: Variable
    vjp: Callable[[np.ndarray], tuple]


class Tape:
    """Ordered record of the primitive ops of one forward pass."""

    def __init__(self):
        self.entries: list[TapeEntry] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _TAPE_STACK.pop()
        assert popped is self
        return False

    def backward(self, loss: Variable) -> None:
        """Propagate d(loss)/d(node) to every variable this tape touched."""
        if loss.value.shape != ():
            raise DomainError(
                f"backward needs a scalar loss, got shape {loss.value.shape}"
            )
        if loss._tape is not self:
            raise DomainError("loss was not produced through this tape's ops")
        # zero-init: None stands for an all-zero gradient
        for entry in self.entries:
            for v in (*entry.inputs, entry.output):
                v._grad = None
        loss._grad = np.ones(())
        for inputs, output, vjp in reversed(self.entries):
            g = output._grad
            if g is None:
                continue
            for v, dv in zip(inputs, vjp(g)):
                if dv is None:
                    continue
                if v._grad is None:
                    # adopt fresh arrays; copy anything aliasing g or a view
                    v._grad = dv.copy() if (dv is g or dv.base is not None) else dv
                else:
                    v._grad += dv


_TAPE_STACK: list[Tape] = []


def _current_tape() -> Optional[Tape]:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def backward(loss: Variable) -> None:
    """Run reverse accumulation from a scalar loss through the tape that made it."""
    if not isinstance(loss, Variable):
        raise DomainError("backward expects a Variable loss")
    if loss._tape is None:
        raise DomainError("loss was not produced through taped ops")
    loss._tape.backward(loss)


def _record(inputs: tuple, out: Variable, vjp) -> Variable:
    tape = _current_tape()
    if tape is not None:
        tape.entries.append(TapeEntry(inputs, out, vjp))
        out._tape = tape
    return out


def _same_shape(a: Variable, b: Variable, op: str) -> None:
    if a.value.shape != b.value.shape:
        raise DimensionError(f"{op} shape mismatch: {a.value.shape} vs {b.value.shape}")


# ---------------------------------------------------------------------------
# elementwise and linear primitives


def add(a, b) -> Variable:
    a, b = as_variable(a), as_variable(b)
    _same_shape(a, b, "add")
    out = Variable(a.value + b.value)
    return _record((a, b), out, lambda g: (g, g))


def sub(a, b) -> Variable:
    a, b = as_variable(a), as_variable(b)
    _same_shape(a, b, "sub")
    out = Variable(a.value - b.value)
    return _record((a, b), out, lambda g: (g, -g))


def mul(a, b) -> Variable:
    a, b = as_variable(a), as_variable(b)
    _same_shape(a, b, "mul")
    out = Variable(a.value * b.value)
    return _record((a, b), out, lambda g: (g * b.value, g * a.value))


def scale(x, c: float) -> Variable:
    x = as_variable(x)
    c = float(c)
    out = Variable(x.value * c)
    return _record((x,), out, lambda g: (g * c,))


def affine(x, a: float, b: float) -> Variable:
    """Elementwise a*x + b with python-float coefficients."""
    x = as_variable(x)
    a, b = float(a), float(b)
    out = Variable(a * x.value + b)
    return _record((x,), out, lambda g: (a * g,))


def add_bias(x, b) -> Variable:
    """Add a 1-D bias to every row of a 2-D tensor."""
    x, b = as_variable(x), as_variable(b)
    if x.value.ndim != 2 or b.value.ndim != 1 or x.value.shape[1] != b.value.shape[0]:
        raise DimensionError(
            f"add_bias expects [n,k] plus [k], got {x.value.shape} and {b.value.shape}"
        )
    out = Variable(x.value + b.value)
    return _record((x, b), out, lambda g: (g, g.sum(axis=0)))


def matmul(a, b) -> Variable:
    a, b = as_variable(a), as_variable(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[1] != b.value.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.value.shape} @ {b.value.shape}")
    out = Variable(a.value @ b.value)
    return _record((a, b), out, lambda g: (g @ b.value.T, a.value.T @ g))


def dot(a, b) -> Variable:
    a, b = as_variable(a), as_variable(b)
    if a.value.ndim != 1 or b.value.ndim != 1:
        raise DimensionError(f"dot expects 1-D tensors, got {a.value.shape}, {b.value.shape}")
    _same_shape(a, b, "dot")
    out = Variable(a.value @ b.value)
    return _record((a, b), out, lambda g: (g * b.value, g * a.value))


def transpose(x) -> Variable:
    x = as_variable(x)
    if x.value.ndim != 2:
        raise DimensionError(f"transpose expects a 2-D tensor, got {x.value.shape}")
    out = Variable(x.value.T)
    return _record((x,), out, lambda g: (g.T,))


def reshape(x, shape) -> Variable:
    x = as_variable(x)
    out = Variable(x.value.reshape(shape))
    return _record((x,), out, lambda g: (g.reshape(x.value.shape),))


def slice_1d(x, start: int, stop: int) -> Variable:
    """Contiguous slice of a 1-D tensor (used to unpack packed parameter vectors)."""
    x = as_variable(x)
    if x.value.ndim != 1:
        raise DimensionError(f"slice_1d expects a 1-D tensor, got {x.value.shape}")
    out = Variable(x.value[start:stop].copy())

    def vjp(g):
        gx = np.zeros_like(x.value)
        gx[start:stop] = g
        return (gx,)

    return _record((x,), out, vjp)


def concat(xs: Sequence, axis: int = 0) -> Variable:
    xs = tuple(as_variable(x) for x in xs)
    if not xs:
        raise DomainError("concat of an empty sequence")
    out = Variable(np.concatenate([x.value for x in xs], axis=axis))
    offsets = np.cumsum([x.value.shape[axis] for x in xs])[:-1]
    return _record(xs, out, lambda g: tuple(np.split(g, offsets, axis=axis)))


def stack(xs: Sequence, axis: int = 0) -> Variable:
    xs = tuple(as_variable(x) for x in xs)
    if not xs:
        raise DomainError("stack of an empty sequence")
    out = Variable(np.stack([x.value for x in xs], axis=axis))
    return _record(
        xs, out, lambda g: tuple(np.take(g, i, axis=axis) for i in range(len(xs)))
    )


# ---------------------------------------------------------------------------
# nonlinear primitives


def softmax(x) -> Variable:
    """Stabilized softmax along the last axis of a 1-D or 2-D tensor."""
    x = as_variable(x)
    if x.value.ndim not in (1, 2):
        raise DimensionError(f"softmax expects a 1-D or 2-D tensor, got {x.value.shape}")
    if x.value.size == 0:
        raise DomainError("softmax of an empty tensor is undefined")
    rows = x.value.reshape(-1, x.value.shape[-1])
    p = kernels.softmax_rows(rows)
    out = Variable(p.reshape(x.value.shape))

    def vjp(g):
        grows = g.reshape(-1, g.shape[-1])
        return (kernels.softmax_rows_vjp(p, grows).reshape(x.value.shape),)

    return _record((x,), out, vjp)


def tanh(x) -> Variable:
    x = as_variable(x)
    t = kernels.tanh(x.value)
    out = Variable(t)
    return _record((x,), out, lambda g: (kernels.tanh_vjp(t, g),))


def sigmoid(x) -> Variable:
    x = as_variable(x)
    s = kernels.sigmoid(x.value)
    out = Variable(s)
    return _record((x,), out, lambda g: (kernels.sigmoid_vjp(s, g),))


# ---------------------------------------------------------------------------
# reductions and model-specific fused ops


def sum_all(x) -> Variable:
    x = as_variable(x)
    out = Variable(np.sum(x.value))
    return _record((x,), out, lambda g: (np.full(x.value.shape, float(g)),))


def mean_all(x) -> Variable:
    x = as_variable(x)
    n = x.value.size
    out = Variable(np.sum(x.value) / n)
    return _record((x,), out, lambda g: (np.full(x.value.shape, float(g) / n),))


def gather_rows(table, ids) -> Variable:
    """Select rows of a 2-D table by integer index (embedding lookup)."""
    table = as_variable(table)
    ids = np.asarray(ids, dtype=np.int64)
    if table.value.ndim != 2 or ids.ndim != 1:
        raise DimensionError(
            f"gather_rows expects a 2-D table and 1-D ids, got {table.value.shape}, {ids.shape}"
        )
    if ids.size and (ids.min() < 0 or ids.max() >= table.value.shape[0]):
        raise DomainError(f"gather_rows ids out of range [0, {table.value.shape[0]})")
    out = Variable(table.value[ids])

    def vjp(g):
        gt = np.zeros_like(table.value)
        np.add.at(gt, ids, g)
        return (gt,)

    return _record((table,), out, vjp)


def attend_scores(enc, q) -> Variable:
    """Per-example inner products between a query and each timestep.

    ``enc`` is [B,T,H], ``q`` is [B,H]; the result is [B,T] with
    out[b,t] = <enc[b,t], q[b]>.
    """
    enc, q = as_variable(enc), as_variable(q)
    if enc.value.ndim != 3 or q.value.ndim != 2 or enc.value.shape[::2] != q.value.shape:
        raise DimensionError(
            f"attend_scores expects [B,T,H] and [B,H], got {enc.value.shape}, {q.value.shape}"
        )
    out = Variable(np.einsum("bth,bh->bt", enc.value, q.value))

    def vjp(g):
        return (
            np.einsum("bt,bh->bth", g, q.value),
            np.einsum("bt,bth->bh", g, enc.value),
        )

    return _record((enc, q), out, vjp)


def attend_combine(enc, p) -> Variable:
    """Per-example weighted sum of timesteps: out[b] = sum_t p[b,t] enc[b,t]."""
    enc, p = as_variable(enc), as_variable(p)
    if enc.value.ndim != 3 or p.value.ndim != 2 or enc.value.shape[:2] != p.value.shape:
        raise DimensionError(
            f"attend_combine expects [B,T,H] and [B,T], got {enc.value.shape}, {p.value.shape}"
        )
    out = Variable(np.einsum("bth,bt->bh", enc.value, p.value))

    def vjp(g):
        return (
            np.einsum("bt,bh->bth", p.value, g),
            np.einsum("bh,bth->bt", g, enc.value),
        )

    return _record((enc, p), out, vjp)


def weighted_sum(xs: Sequence, w) -> Variable:
    """sum_i w[i] * xs[i] over same-shape tensors, with w a 1-D tensor."""
    xs = tuple(as_variable(x) for x in xs)
    w = as_variable(w)
    if w.value.ndim != 1 or len(xs) != w.value.shape[0]:
        raise DimensionError(
            f"weighted_sum needs one weight per tensor: {len(xs)} tensors, w {w.value.shape}"
        )
    if not xs:
        raise DomainError("weighted_sum of an empty sequence")
    for x in xs[1:]:
        _same_shape(xs[0], x, "weighted_sum")
    acc = np.zeros_like(xs[0].value)
    for wi, x in zip(w.value, xs):
        acc += wi * x.value
    out = Variable(acc)

    def vjp(g):
        gw = np.array([np.sum(g * x.value) for x in xs])
        return (*(wi * g for wi in w.value), gw)

    return _record((*xs, w), out, vjp)


def cross_entropy_logits(logits, targets) -> Variable:
    """Mean cross-entropy of integer targets under rows of logits.

    Fused log-softmax + negative log-likelihood; strictly positive for
    finite logits whenever the vocabulary has at least two entries.
    """
    logits = as_variable(logits)
    targets = np.asarray(targets, dtype=np.int64)
    if logits.value.ndim != 2 or targets.ndim != 1 or logits.value.shape[0] != targets.shape[0]:
        raise DimensionError(
            f"cross_entropy_logits expects [N,V] and [N], got {logits.value.shape}, {targets.shape}"
        )
    n, v = logits.value.shape
    if targets.size and (targets.min() < 0 or targets.max() >= v):
        raise DomainError(f"targets out of range [0, {v})")
    loss_sum, probs = kernels.cross_entropy_rows(logits.value, targets)
    out = Variable(loss_sum / n)

    def vjp(g):
        gl = probs.copy()
        gl[np.arange(n), targets] -= 1.0
        gl *= float(g) / n
        return (gl,)

    return _record((logits,), out, vjp)


# ---------------------------------------------------------------------------
# finite-difference checking


def grad_check(f, x, h: float = 1e-5) -> float:
    """Compare reverse-mode against central finite differences.

    ``f`` maps a Variable to a scalar Variable and must be pure. Returns the
    max over coordinates of |analytic - numeric| / max(1, |analytic|).
    """
    if not 1e-7 <= h <= 1e-3:
        raise DomainError(f"step size h must lie in [1e-7, 1e-3], got {h}")
    x = np.asarray(x, dtype=np.float64)
    xv = Variable(x.copy())
    with Tape() as tape:
        loss = f(xv)
    tape.backward(loss)
    analytic = xv.grad.copy()

    numeric = np.zeros_like(analytic)
    for i in range(x.size):
        xp = x.copy()
        xp.flat[i] += h
        fp = float(f(Variable(xp)).value)
        xm = x.copy()
        xm.flat[i] -= h
        fm = float(f(Variable(xm)).value)
        numeric.flat[i] = (fp - fm) / (2.0 * h)

    denom = np.maximum(1.0, np.abs(analytic))
    return float(np.max(np.abs(analytic - numeric) / denom)) if x.size else 0.0


class GradCheckResult(NamedTuple):
    max_rel_error: float
    worst_variable: int
    worst_coord: tuple


def check_gradients(build_loss, variables, h: float = 1e-5) -> GradCheckResult:
    """Multi-variable version of :func:`grad_check`.

    ``build_loss`` recomputes the scalar loss from the current values of
    ``variables`` (leaf Variables perturbed in place), so one call checks the
    gradient of every coordinate of every listed variable against central
    differences. The result carries the max relative error (same
    normalization as ``grad_check``) plus which variable/coordinate attained
    it.
    """
    if not 1e-7 <= h <= 1e-3:
        raise DomainError(f"step size h must lie in [1e-7, 1e-3], got {h}")
    variables = list(variables)
    with Tape() as tape:
        loss = build_loss()
    tape.backward(loss)
    analytic = [v.grad.copy() for v in variables]

    max_rel = 0.0
    worst = (0, ())
    for vi, (v, a) in enumerate(zip(variables, analytic)):
        for i in range(v.value.size):
            idx = np.unravel_index(i, v.value.shape)
            orig = v.value[idx]
            v.value[idx] = orig + h
            fp = float(build_loss().value)
            v.value[idx] = orig - h
            fm = float(build_loss().value)
            v.value[idx] = orig
            numeric = (fp - fm) / (2.0 * h)
            rel = abs(a[idx] - numeric) / max(1.0, abs(a[idx]))
            if rel > max_rel:
                max_rel = rel
                worst = (vi, idx)
    return GradCheckResult(max_rel, worst[0], worst[1])
