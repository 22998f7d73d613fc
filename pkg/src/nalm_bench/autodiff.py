"""Reverse-mode differentiation over dense 2-D float64 matrices.

Only the primitives the arithmetic/logic modules need are provided. A graph
is recorded define-by-run inside a ``with Graph():`` block; outside of one the
same functions just compute values, which is what evaluation code uses.

    with Graph() as g:
        loss = mse(matmul(x, w), y)
    g.backward(loss)
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Tensor", "Graph", "ShapeError", "GraphError", "DomainError",
    "as_tensor", "eval_graph", "backward",
    "matmul", "add", "sub", "mul", "div", "neg", "add_scalar", "mul_scalar", "rsub_scalar",
    "tanh", "sigmoid", "exp", "log", "log_abs_eps", "abs_", "cos", "clamp", "sign",
    "softmax_cols", "rowprod", "rowsum", "sum_", "mean", "mse", "bce_logits",
    "tile_rows", "column", "transpose", "hstack",
    "grad_check",
]

_ids = itertools.count()


class ShapeError(ValueError):
    """Operand shapes do not conform for an op."""

    def __init__(self, op: str, *shapes: tuple[int, ...]):
        self.op = op
        self.shapes = shapes
        super().__init__(f"{op}: incompatible shapes {', '.join(str(s) for s in shapes)}")


class GraphError(RuntimeError):
    pass


class DomainError(ValueError):
    pass


class Tensor:
    """A 2-D matrix node: value plus accumulated gradient of the same shape."""

    __slots__ = ("value", "grad", "requires_grad", "node_id", "name")

    def __init__(self, value, requires_grad: bool = False, name: str | None = None):
        v = np.array(value, dtype=np.float64, ndmin=2)
        if v.ndim != 2:
            raise ShapeError("tensor", v.shape)
        self.value = v
        self.grad = np.zeros_like(v)
        self.requires_grad = requires_grad
        self.node_id = next(_ids)
        self.name = name

    @classmethod
    def _wrap(cls, value: np.ndarray, requires_grad: bool) -> Tensor:
        t = cls.__new__(cls)
        t.value = value
        t.grad = np.zeros_like(value)
        t.requires_grad = requires_grad
        t.node_id = next(_ids)
        t.name = None
        return t

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    @property
    def rows(self) -> int:
        return self.value.shape[0]

    @property
    def cols(self) -> int:
        return self.value.shape[1]

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def item(self) -> float:
        return float(self.value[0, 0])

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}({self.rows}x{self.cols}, requires_grad={self.requires_grad})"

    # Operators accept Tensors of equal shape or python scalars.
    def __add__(self, other):
        return add(self, other) if isinstance(other, Tensor) else add_scalar(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other) if isinstance(other, Tensor) else add_scalar(self, -other)

    def __rsub__(self, other):
        return rsub_scalar(self, other)

    def __mul__(self, other):
        return mul(self, other) if isinstance(other, Tensor) else mul_scalar(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other) if isinstance(other, Tensor) else mul_scalar(self, 1.0 / other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class _Record:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    forward: Callable
    vjp: Callable
    attrs: dict
    saved: object


class Graph:
    """Tape of operation records, in the order they were executed."""

    _active: list[Graph] = []

    def __init__(self):
        self.records: list[_Record] = []
        self.placeholders: list[Tensor] = []
        self._produced: set[int] = set()

    def __enter__(self) -> Graph:
        Graph._active.append(self)
        return self

    def __exit__(self, *exc) -> None:
        Graph._active.pop()

    @classmethod
    def current(cls) -> Graph | None:
        return cls._active[-1] if cls._active else None

    def input(self, t: Tensor) -> Tensor:
        """Mark ``t`` as a replaceable input for :func:`eval_graph`."""
        self.placeholders.append(t)
        return t

    def _record(self, rec: _Record) -> None:
        self.records.append(rec)
        self._produced.add(rec.output.node_id)

    def replay(self, inputs: Sequence[Tensor]) -> Tensor:
        return eval_graph(self, inputs)

    def backward(self, loss: Tensor) -> dict[Tensor, np.ndarray]:
        return backward(self, loss)


def eval_graph(graph: Graph, inputs: Sequence[Tensor]) -> Tensor:
    """Re-run every recorded op with new placeholder values; returns the last output."""
    if len(inputs) != len(graph.placeholders):
        raise ShapeError("eval_graph", (len(graph.placeholders),), (len(inputs),))
    if not graph.records:
        raise GraphError("eval_graph: graph has no recorded operations")
    for ph, new in zip(graph.placeholders, inputs):
        new_v = as_tensor(new).value
        if new_v.shape != ph.value.shape:
            raise ShapeError("eval_graph", ph.value.shape, new_v.shape)
        ph.value = new_v.copy()
    for rec in graph.records:
        vals = [t.value for t in rec.inputs]
        out, saved = rec.forward(*vals, **rec.attrs)
        rec.output.value = out
        rec.saved = saved
    return graph.records[-1].output


def backward(graph: Graph, loss: Tensor) -> dict[Tensor, np.ndarray]:
    """Accumulate d(loss)/d(leaf) into every requires_grad leaf of the graph.

    Intermediate adjoints live only for the duration of the call.
    """
    if loss.node_id not in graph._produced:
        raise GraphError("backward called before a forward pass produced this loss")
    if loss.shape != (1, 1):
        raise ShapeError("backward", loss.shape)
    adj: dict[int, np.ndarray] = {loss.node_id: np.ones((1, 1))}
    leaves: dict[int, Tensor] = {}
    for rec in reversed(graph.records):
        g_out = adj.pop(rec.output.node_id, None)
        if g_out is None:
            continue
        vals = [t.value for t in rec.inputs]
        grads = rec.vjp(g_out, rec.saved, *vals, **rec.attrs)
        for t, g in zip(rec.inputs, grads):
            if g is None or not t.requires_grad:
                continue
            if t.node_id in graph._produced:
                prev = adj.get(t.node_id)
                adj[t.node_id] = g if prev is None else prev + g
            else:
                t.grad += g
                leaves[t.node_id] = t
    return {t: t.grad for t in leaves.values()}


def _apply(op: str, forward: Callable, vjp: Callable, inputs: tuple[Tensor, ...], **attrs) -> Tensor:
    out_v, saved = forward(*(t.value for t in inputs), **attrs)
    needs = any(t.requires_grad for t in inputs)
    out = Tensor._wrap(out_v, needs)
    g = Graph.current()
    if g is not None and needs:
        g._record(_Record(op, inputs, out, forward, vjp, attrs, saved))
    return out


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(op, a.shape, b.shape)


# -- binary -------------------------------------------------------------

def _mm_f(a, b):
    return a @ b, None


def _mm_b(g, _, a, b):
    return g @ b.T, a.T @ g


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise ShapeError("matmul", a.shape, b.shape)
    return _apply("matmul", _mm_f, _mm_b, (a, b))


def _add_f(a, b):
    return a + b, None


def _add_b(g, _, a, b):
    return g, g


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return _apply("add", _add_f, _add_b, (a, b))


def _sub_f(a, b):
    return a - b, None


def _sub_b(g, _, a, b):
    return g, -g


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("sub", a, b)
    return _apply("sub", _sub_f, _sub_b, (a, b))


def _mul_f(a, b):
    return a * b, None


def _mul_b(g, _, a, b):
    return g * b, g * a


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("mul", a, b)
    return _apply("mul", _mul_f, _mul_b, (a, b))


def _div_f(a, b):
    return a / b, None


def _div_b(g, _, a, b):
    return g / b, -g * a / (b * b)


def div(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("div", a, b)
    return _apply("div", _div_f, _div_b, (a, b))


# -- scalar -------------------------------------------------------------

def _neg_f(a):
    return -a, None


def _neg_b(g, _, a):
    return (-g,)


def neg(a: Tensor) -> Tensor:
    return _apply("neg", _neg_f, _neg_b, (a,))


def _adds_f(a, c):
    return a + c, None


def _adds_b(g, _, a, c):
    return (g,)


def add_scalar(a: Tensor, c: float) -> Tensor:
    return _apply("add_scalar", _adds_f, _adds_b, (a,), c=float(c))


def _muls_f(a, c):
    return a * c, None


def _muls_b(g, _, a, c):
    return (g * c,)


def mul_scalar(a: Tensor, c: float) -> Tensor:
    return _apply("mul_scalar", _muls_f, _muls_b, (a,), c=float(c))


def _rsubs_f(a, c):
    return c - a, None


def _rsubs_b(g, _, a, c):
    return (-g,)


def rsub_scalar(a: Tensor, c: float) -> Tensor:
    """c - a"""
    return _apply("rsub_scalar", _rsubs_f, _rsubs_b, (a,), c=float(c))


# -- elementwise --------------------------------------------------------

def _tanh_f(a):
    out = np.tanh(a)
    return out, out


def _tanh_b(g, out, a):
    return (g * (1.0 - out * out),)


def tanh(a: Tensor) -> Tensor:
    return _apply("tanh", _tanh_f, _tanh_b, (a,))


def _sigmoid(a):
    # split by sign so neither branch overflows
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _sig_f(a):
    out = _sigmoid(a)
    return out, out


def _sig_b(g, out, a):
    return (g * out * (1.0 - out),)


def sigmoid(a: Tensor) -> Tensor:
    return _apply("sigmoid", _sig_f, _sig_b, (a,))


def _exp_f(a):
    out = np.exp(a)
    return out, out


def _exp_b(g, out, a):
    return (g * out,)


def exp(a: Tensor) -> Tensor:
    return _apply("exp", _exp_f, _exp_b, (a,))


def _log_f(a):
    if np.any(a <= 0):
        raise DomainError("log: non-positive argument (use log_abs_eps for the guarded form)")
    return np.log(a), None


def _log_b(g, _, a):
    return (g / a,)


def log(a: Tensor) -> Tensor:
    return _apply("log", _log_f, _log_b, (a,))


def _lae_f(a, eps):
    return np.log(np.abs(a) + eps), None


def _lae_b(g, _, a, eps):
    return (g * np.sign(a) / (np.abs(a) + eps),)


def log_abs_eps(a: Tensor, eps: float) -> Tensor:
    """ln(|a| + eps)"""
    if eps < 0:
        raise DomainError("log_abs_eps: eps must be non-negative")
    return _apply("log_abs_eps", _lae_f, _lae_b, (a,), eps=float(eps))


def _abs_f(a):
    return np.abs(a), None


def _abs_b(g, _, a):
    return (g * np.sign(a),)


def abs_(a: Tensor) -> Tensor:
    return _apply("abs", _abs_f, _abs_b, (a,))


def _cos_f(a):
    return np.cos(a), None


def _cos_b(g, _, a):
    return (-g * np.sin(a),)


def cos(a: Tensor) -> Tensor:
    return _apply("cos", _cos_f, _cos_b, (a,))


def _clamp_f(a, lo, hi):
    return np.clip(a, lo, hi), None


def _clamp_b(g, _, a, lo, hi):
    # inclusive at the bounds, so weights sitting exactly on a bound still learn
    return (g * ((a >= lo) & (a <= hi)),)


def clamp(a: Tensor, lo: float = -np.inf, hi: float = np.inf) -> Tensor:
    return _apply("clamp", _clamp_f, _clamp_b, (a,), lo=float(lo), hi=float(hi))


def _sign_f(a):
    return np.sign(a), None


def _sign_b(g, _, a):
    return (None,)


def sign(a: Tensor) -> Tensor:
    """Elementwise sign; differentiated as a constant."""
    return _apply("sign", _sign_f, _sign_b, (a,))


# -- reductions and reshaping ------------------------------------------

def _softmax_f(a):
    z = np.exp(a - a.max(axis=0, keepdims=True))
    out = z / z.sum(axis=0, keepdims=True)
    return out, out


def _softmax_b(g, out, a):
    return (out * (g - (g * out).sum(axis=0, keepdims=True)),)


def softmax_cols(a: Tensor) -> Tensor:
    """Softmax down each column (every column sums to one)."""
    return _apply("softmax_cols", _softmax_f, _softmax_b, (a,))


def _prefix_suffix_exclusive(a):
    # product of every other entry in the row, safe when entries are zero
    n, k = a.shape
    pre = np.ones((n, k))
    suf = np.ones((n, k))
    if k > 1:
        pre[:, 1:] = np.cumprod(a[:, :-1], axis=1)
        suf[:, :-1] = np.cumprod(a[:, :0:-1], axis=1)[:, ::-1]
    return pre * suf


def _rowprod_f(a):
    return np.prod(a, axis=1, keepdims=True), None


def _rowprod_b(g, _, a):
    return (g * _prefix_suffix_exclusive(a),)


def rowprod(a: Tensor) -> Tensor:
    """n x k -> n x 1 product along each row."""
    return _apply("rowprod", _rowprod_f, _rowprod_b, (a,))


def _rowsum_f(a):
    return a.sum(axis=1, keepdims=True), None


def _rowsum_b(g, _, a):
    return (np.broadcast_to(g, a.shape).copy(),)


def rowsum(a: Tensor) -> Tensor:
    return _apply("rowsum", _rowsum_f, _rowsum_b, (a,))


def _sum_f(a):
    return np.array([[a.sum()]]), None


def _sum_b(g, _, a):
    return (np.full(a.shape, g[0, 0]),)


def sum_(a: Tensor) -> Tensor:
    return _apply("sum", _sum_f, _sum_b, (a,))


def _mean_f(a):
    return np.array([[a.mean()]]), None


def _mean_b(g, _, a):
    return (np.full(a.shape, g[0, 0] / a.size),)


def mean(a: Tensor) -> Tensor:
    return _apply("mean", _mean_f, _mean_b, (a,))


def _mse_f(a, b):
    d = a - b
    return np.array([[np.mean(d * d)]]), d


def _mse_b(g, d, a, b):
    ga = g[0, 0] * 2.0 * d / d.size
    return ga, -ga


def mse(pred: Tensor, target: Tensor) -> Tensor:
    _same_shape("mse", pred, target)
    return _apply("mse", _mse_f, _mse_b, (pred, target))


def _bce_f(z, t):
    # mean of softplus(z) - t*z, written to stay finite for large |z|
    loss = np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))
    return np.array([[loss.mean()]]), _sigmoid(z)


def _bce_b(g, p, z, t):
    gz = g[0, 0] * (p - t) / z.size
    return gz, None


def bce_logits(logits: Tensor, target: Tensor) -> Tensor:
    """Binary cross-entropy of sigmoid(logits) against targets in [0, 1]."""
    _same_shape("bce_logits", logits, target)
    return _apply("bce_logits", _bce_f, _bce_b, (logits, target))


def _tile_f(a, n):
    return np.repeat(a, n, axis=0), None


def _tile_b(g, _, a, n):
    return (g.sum(axis=0, keepdims=True),)


def tile_rows(a: Tensor, n: int) -> Tensor:
    """Repeat a 1 x k row n times."""
    if a.rows != 1:
        raise ShapeError("tile_rows", a.shape)
    return _apply("tile_rows", _tile_f, _tile_b, (a,), n=int(n))


def _col_f(a, j):
    return a[:, j:j + 1].copy(), None


def _col_b(g, _, a, j):
    out = np.zeros_like(a)
    out[:, j:j + 1] = g
    return (out,)


def column(a: Tensor, j: int) -> Tensor:
    if not 0 <= j < a.cols:
        raise ShapeError("column", a.shape, (j,))
    return _apply("column", _col_f, _col_b, (a,), j=int(j))


def _t_f(a):
    return a.T.copy(), None


def _t_b(g, _, a):
    return (g.T,)


def transpose(a: Tensor) -> Tensor:
    return _apply("transpose", _t_f, _t_b, (a,))


def _hstack_f(*parts):
    return np.hstack(parts), None


def _hstack_b(g, _, *parts):
    out, start = [], 0
    for p in parts:
        out.append(g[:, start:start + p.shape[1]])
        start += p.shape[1]
    return tuple(out)


def hstack(parts: Sequence[Tensor]) -> Tensor:
    rows = {p.rows for p in parts}
    if len(rows) != 1:
        raise ShapeError("hstack", *(p.shape for p in parts))
    if len(parts) == 1:
        return parts[0]
    return _apply("hstack", _hstack_f, _hstack_b, tuple(parts))


# -- checking -----------------------------------------------------------

def _probe_loss(model, x: np.ndarray, target) -> Tensor:
    out = model.forward(Tensor(x))
    outs = out if isinstance(out, tuple) else (out,)
    total = None
    for o, t in zip(outs, target):
        term = mse(o, Tensor(t))
        total = term if total is None else total + term
    return total


def grad_check(model, x, step: float = 1e-6, seed: int = 0) -> float:
    """Max over parameter elements of |analytic - numeric| / max(1, |numeric|).

    The probe loss is the MSE of the model output against a fixed random target.
    """
    x = np.array(x, dtype=np.float64, ndmin=2)
    params = model.params
    with Graph():
        out = model.forward(Tensor(x))
    outs = out if isinstance(out, tuple) else (out,)
    rng = np.random.default_rng(seed)
    target = [rng.normal(size=o.shape) for o in outs]

    for p in params.values():
        p.requires_grad = True
        p.zero_grad()
    with Graph() as g:
        loss = _probe_loss(model, x, target)
    if loss.requires_grad:
        g.backward(loss)

    worst = 0.0
    for p in params.values():
        analytic = p.grad.copy()
        flat = p.value.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + step
            up = _probe_loss(model, x, target).item()
            flat[k] = orig - step
            down = _probe_loss(model, x, target).item()
            flat[k] = orig
            numeric = (up - down) / (2 * step)
            err = abs(analytic.reshape(-1)[k] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
        p.zero_grad()
    return worst
