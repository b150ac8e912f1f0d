"""Dense-tensor autograd on top of numpy.

Every operation returns a new :class:`Tensor`.  Tensors that depend on a
trainable leaf remember their parents and a closure mapping the output
gradient to parent gradients.  :class:`Tape` orders those records
topologically and replays them in reverse.
"""

from __future__ import annotations

import math
from dataclasses import fields, is_dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

DTYPE = np.float64
LOG_EPS = 1e-12


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


class ParameterError(ValueError):
    """Raised for invalid operation parameters."""


class DegenerateRowError(ValueError):
    """Raised when a softmax row has no unmasked entry."""


class GradientError(RuntimeError):
    """Raised when an optimizer step meets an unpopulated gradient."""


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=DTYPE)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def T(self) -> Tensor:
        return swap_last(self)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data) if self.requires_grad else None

    def backward(self, grad=None) -> Tape:
        tape = Tape(self)
        tape.backward(grad)
        return tape

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_lift(other)))

    def __rsub__(self, other):
        return add(_lift(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return mul(self, power(other, -1.0))
        return scale(self, 1.0 / other)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, float(p))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    def sum(self, axis=None, keepdims: bool = False) -> Tensor:
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> Tensor:
        return tmean(self, axis, keepdims)

    def reshape(self, *shape) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> Tensor:
        return transpose(self, axes or None)


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    live = tuple(p for p in parents if p.requires_grad)
    if live:
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


class Tape:
    """Topologically ordered record of the operations that produced ``output``.

    ``backward`` visits every recorded node once, in reverse order, and
    accumulates gradients into the ``grad`` slots of trainable leaves.
    """

    def __init__(self, output: Tensor):
        self.output = output
        self.nodes: list[Tensor] = []
        seen: set[int] = set()
        # iterative post-order DFS; recursion would overflow on long chains
        stack: list[tuple[Tensor, bool]] = [(output, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                self.nodes.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))

    def __len__(self) -> int:
        return len(self.nodes)

    def leaves(self) -> list[Tensor]:
        return [n for n in self.nodes if n._backward is None]

    def backward(self, grad=None) -> None:
        out = self.output
        if not out.requires_grad:
            return
        if grad is None:
            if out.size != 1:
                raise DimensionError(f"backward needs an explicit gradient for shape {out.shape}")
            grad = np.ones_like(out.data)
        grads: dict[int, np.ndarray] = {id(out): np.asarray(grad, dtype=DTYPE)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _broadcast_shape(a, b) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"cannot broadcast shapes {a.shape} and {b.shape}") from None


# ---------------------------------------------------------------- arithmetic


def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b)
    return _result(
        a.data + b.data,
        (a, b),
        lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b)

    def backward(g):
        ga = unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return _result(a.data * b.data, (a, b), backward)


def neg(x: Tensor) -> Tensor:
    return _result(-x.data, (x,), lambda g: (-g,))


def scale(x: Tensor, c: float) -> Tensor:
    c = float(c)
    return _result(x.data * c, (x,), lambda g: (g * c,))


def power(x: Tensor, p: float) -> Tensor:
    p = float(p)
    return _result(x.data**p, (x,), lambda g: (g * p * x.data ** (p - 1.0),))


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    return _result(y, (x,), lambda g: (g * y,))


def log(x: Tensor, eps: float = LOG_EPS) -> Tensor:
    """Natural log of ``max(x, eps)``; zero gradient where the clamp is active."""
    live = x.data > eps
    safe = np.where(live, x.data, eps)
    return _result(np.log(safe), (x,), lambda g: (np.where(live, g / safe, 0.0),))


def clamp(x: Tensor, lo: float, hi: float) -> Tensor:
    live = (x.data >= lo) & (x.data <= hi)
    return _result(np.clip(x.data, lo, hi), (x,), lambda g: (np.where(live, g, 0.0),))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with numpy broadcasting over leading (batch) axes."""
    a, b = _lift(a), _lift(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs matrices, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    try:
        out = a.data @ b.data
    except ValueError:
        raise DimensionError(f"matmul batch axes incompatible: {a.shape} @ {b.shape}") from None

    def backward(g):
        ga = unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape) if a.requires_grad else None
        gb = unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape) if b.requires_grad else None
        return ga, gb

    return _result(out, (a, b), backward)


def einsum(subscripts: str, *operands: Tensor) -> Tensor:
    """Explicit-output einsum; each index of an input must appear elsewhere."""
    operands = tuple(_lift(o) for o in operands)
    if subscripts.count("->") != 1:
        raise DimensionError(f"einsum needs an explicit output, got {subscripts!r}")
    lhs, out_sub = subscripts.replace(" ", "").split("->")
    in_subs = lhs.split(",")
    if len(in_subs) != len(operands):
        raise ParameterError(f"einsum expects {len(in_subs)} operands, got {len(operands)}")
    for k, sub in enumerate(in_subs):
        others = set(out_sub).union(*(in_subs[j] for j in range(len(in_subs)) if j != k))
        if not set(sub) <= others or len(set(sub)) != len(sub):
            raise ParameterError(f"unsupported einsum operand {sub!r} in {subscripts!r}")
    try:
        out = np.einsum(subscripts, *(o.data for o in operands), optimize=True)
    except ValueError as err:
        raise DimensionError(str(err)) from None

    def backward(g):
        grads = []
        for k, op in enumerate(operands):
            if not op.requires_grad:
                grads.append(None)
                continue
            rest = [in_subs[j] for j in range(len(operands)) if j != k]
            spec = ",".join([out_sub, *rest]) + "->" + in_subs[k]
            args = [g, *(operands[j].data for j in range(len(operands)) if j != k)]
            grads.append(np.einsum(spec, *args, optimize=True))
        return grads

    return _result(out, operands, backward)


# ---------------------------------------------------------------- reductions and shape


def tsum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _result(out, (x,), backward)


def tmean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = x.size if axis is None else int(np.prod([x.shape[a] for a in np.atleast_1d(axis)]))
    return scale(tsum(x, axis, keepdims), 1.0 / count)


def mean_rows(x: Tensor) -> Tensor:
    """Mean over the row axis, keeping it: ``m x n -> 1 x n``."""
    if x.ndim < 2:
        raise DimensionError(f"mean_rows needs a matrix, got shape {x.shape}")
    if x.shape[-2] == 0:
        raise DimensionError("mean_rows of an empty matrix")
    return tmean(x, axis=-2, keepdims=True)


def reshape(x: Tensor, shape) -> Tensor:
    return _result(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes=None) -> Tensor:
    axes = tuple(axes) if axes is not None else tuple(reversed(range(x.ndim)))
    inverse = tuple(np.argsort(axes))
    return _result(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),))


def swap_last(x: Tensor) -> Tensor:
    return _result(np.swapaxes(x.data, -1, -2), (x,), lambda g: (np.swapaxes(g, -1, -2),))


def expand(x: Tensor, axis: int) -> Tensor:
    return reshape(x, np.expand_dims(x.data, axis).shape)


def getitem(x: Tensor, key) -> Tensor:
    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, key, g)
        return (full,)

    return _result(x.data[key], (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [_lift(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        shapes = ", ".join(str(t.shape) for t in tensors)
        raise DimensionError(f"cannot concatenate shapes {shapes} on axis {axis}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _result(out, tensors, lambda g: np.split(g, bounds, axis=axis))


def concat_last_dim(tensors: Sequence[Tensor]) -> Tensor:
    return concat(tensors, axis=-1)


def embedding(table: Tensor, ids) -> Tensor:
    """Row lookup ``table[ids]`` with scatter-add backward."""
    ids = np.asarray(ids, dtype=np.intp)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DimensionError(f"embedding ids outside [0, {table.shape[0]})")

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        return (full,)

    return _result(table.data[ids], (table,), backward)


# ---------------------------------------------------------------- nonlinearities


def relu(x: Tensor) -> Tensor:
    live = x.data > 0
    return _result(np.where(live, x.data, 0.0), (x,), lambda g: (np.where(live, g, 0.0),))


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    live = x.data > 0
    return _result(
        np.where(live, x.data, slope * x.data),
        (x,),
        lambda g: (np.where(live, g, slope * g),),
    )


def softmax_rows(x: Tensor, mask=None) -> Tensor:
    """Softmax over the last axis; masked entries are exactly zero.

    ``mask`` is a boolean array broadcastable to ``x`` (True = keep).
    """
    z = x.data
    if mask is None:
        shifted = z - z.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
    else:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), z.shape)
        if not mask.any(axis=-1).all():
            raise DegenerateRowError("softmax row has every entry masked")
        peak = np.where(mask, z, -np.inf).max(axis=-1, keepdims=True)
        e = np.where(mask, np.exp(np.where(mask, z - peak, 0.0)), 0.0)
    s = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return _result(s, (x,), backward)


def dropout(x: Tensor, p: float, train: bool, rng: np.random.Generator | None = None, mask=None) -> Tensor:
    """Inverted dropout.  Identity in eval mode; ``mask`` freezes the keep pattern."""
    if not 0.0 <= p < 1.0:
        raise ParameterError(f"dropout probability must lie in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    if mask is None:
        if rng is None:
            raise ParameterError("training-mode dropout needs a generator or a frozen mask")
        mask = rng.random(x.shape) >= p
    keep = np.asarray(mask, dtype=DTYPE) / (1.0 - p)
    return _result(x.data * keep, (x,), lambda g: (g * keep,))


def grl(x: Tensor, lambda_grl: float = 1.0) -> Tensor:
    """Gradient reversal: identity forward, gradient times ``-lambda_grl`` backward."""
    factor = -float(lambda_grl)
    return _result(x.data, (x,), lambda g: (g * factor,))


# ---------------------------------------------------------------- losses


def binary_cross_entropy(p_hat: Tensor, y, eps: float = LOG_EPS) -> Tensor:
    """Mean of ``-[y ln p + (1-y) ln(1-p)]`` with ``p`` clamped to ``[eps, 1-eps]``."""
    p_hat = _lift(p_hat)
    y = np.asarray(y.data if isinstance(y, Tensor) else y, dtype=DTYPE)
    if p_hat.shape != y.shape or p_hat.ndim != 1:
        raise DimensionError(f"binary_cross_entropy length mismatch: {p_hat.shape} vs {y.shape}")
    m = p_hat.shape[0]
    p = np.clip(p_hat.data, eps, 1.0 - eps)
    live = (p_hat.data >= eps) & (p_hat.data <= 1.0 - eps)
    value = -np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p))

    def backward(g):
        dp = -(y / p - (1.0 - y) / (1.0 - p)) / m
        return (np.where(live, g * dp, 0.0),)

    return _result(np.asarray(max(value, 0.0)), (p_hat,), backward)


# ---------------------------------------------------------------- optimisation


class AdamState:
    """First/second moments per named parameter plus the shared step counter."""

    def __init__(self, learning_rate: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}


def adam_step(params: Mapping[str, Tensor], state: AdamState) -> None:
    """One bias-corrected Adam update in place; gradients are zeroed afterwards."""
    for name, p in params.items():
        if p.grad is None:
            raise GradientError(f"parameter {name!r} has no gradient")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for name, p in params.items():
        g = p.grad
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
        p.grad = np.zeros_like(p.data)


# ---------------------------------------------------------------- verification


def grad_check(f: Callable[..., Tensor], x: Tensor | Sequence[Tensor], step: float = 1e-5) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    ``f`` is called as ``f(*inputs)`` and must return a scalar.  Inputs are
    perturbed in place and restored, so ``f`` may also close over them.
    """
    if step <= 0:
        raise ParameterError("finite-difference step must be positive")
    inputs = [x] if isinstance(x, Tensor) else list(x)
    saved = [t.requires_grad for t in inputs]
    for t in inputs:
        t.requires_grad = True
        t.grad = None
    try:
        out = f(*inputs)
        if out.size != 1:
            raise ParameterError(f"grad_check needs a scalar function, got shape {out.shape}")
        out.backward()
        worst = 0.0
        for t in inputs:
            analytic = np.zeros_like(t.data) if t.grad is None else t.grad
            flat = t.data.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                up = f(*inputs).item()
                flat[i] = orig - step
                down = f(*inputs).item()
                flat[i] = orig
                numeric = (up - down) / (2.0 * step)
                a = analytic.reshape(-1)[i]
                err = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
                worst = max(worst, err)
        return worst
    finally:
        for t, flag in zip(inputs, saved):
            t.requires_grad = flag
            t.grad = None


class ParamSet:
    """Mixin for dataclasses whose fields are Tensors, nested ParamSets or lists of them."""

    def named(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for f in fields(self):
            _collect(getattr(self, f.name), prefix + f.name, out)
        return out

    def parameters(self) -> list[Tensor]:
        return list(self.named().values())


def _collect(value, name: str, out: dict[str, Tensor]) -> None:
    if isinstance(value, Tensor):
        if value.requires_grad:
            out[name] = value
    elif isinstance(value, ParamSet) and is_dataclass(value):
        out.update(value.named(name + "."))
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _collect(item, f"{name}.{i}", out)


def all_finite(tensors: Iterable[Tensor]) -> bool:
    return all(np.isfinite(t.data).all() for t in tensors)


def glorot(rng: np.random.Generator, shape: tuple[int, ...], name: str | None = None) -> Tensor:
    fan_in, fan_out = shape[-2], shape[-1]
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


def zeros(shape: tuple[int, ...], name: str | None = None) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)
