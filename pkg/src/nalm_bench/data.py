"""Input ranges, batch sampling and targets for the single-module arithmetic task."""
from __future__ import annotations

import csv
import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

OPERATIONS = ("add", "sub", "mul", "div")
DIV_GUARD = 1e-9


@dataclass(frozen=True)
class RangeSpec:
    """Union of half-open intervals [lo, hi), sampled uniformly by length."""

    pieces: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pieces = tuple((float(lo), float(hi)) for lo, hi in self.pieces)
        if not pieces:
            raise ValueError("range has no pieces")
        for lo, hi in pieces:
            if not lo < hi:
                raise ValueError(f"empty interval [{lo}, {hi})")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def parse(cls, text: str) -> RangeSpec:
        """Parse ``"[1,2)"``, ``"U[1,2)"`` or ``"[[-6,-2),[2,6)]"``."""
        found = re.findall(r"\[\s*(-?[\d.eE+-]+)\s*,\s*(-?[\d.eE+-]+)\s*\)", text)
        if not found:
            raise ValueError(f"cannot parse range {text!r}")
        return cls(tuple((float(a), float(b)) for a, b in found))

    @property
    def lengths(self) -> np.ndarray:
        return np.array([hi - lo for lo, hi in self.pieces])

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x)
        inside = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.pieces:
            inside |= (x >= lo) & (x < hi)
        return inside

    @property
    def label(self) -> str:
        parts = [f"[{_num(lo)},{_num(hi)})" for lo, hi in self.pieces]
        return f"U{parts[0]}" if len(parts) == 1 else "U[" + ",".join(parts) + "]"

    def __str__(self) -> str:
        return self.label


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(v)


def _r(*pieces) -> RangeSpec:
    return RangeSpec(tuple(pieces))


# (interpolation, extrapolation) pairs in the benchmark's order
STANDARD_RANGES: tuple[tuple[RangeSpec, RangeSpec], ...] = (
    (_r((-20, -10)), _r((-40, -20))),
    (_r((-2, -1)), _r((-6, -2))),
    (_r((-1.2, -1.1)), _r((-6.1, -1.2))),
    (_r((-0.2, -0.1)), _r((-2, -0.2))),
    (_r((-2, 2)), _r((-6, -2), (2, 6))),
    (_r((0.1, 0.2)), _r((0.2, 2))),
    (_r((1, 2)), _r((2, 6))),
    (_r((1.1, 1.2)), _r((1.2, 6))),
    (_r((10, 20)), _r((20, 40))),
)
RANGE_BY_LABEL = {interp.label: (interp, extrap) for interp, extrap in STANDARD_RANGES}


def lookup_range(label: str) -> tuple[RangeSpec, RangeSpec]:
    """Standard (interp, extrap) pair for an interpolation label such as ``U[1,2)``."""
    key = RangeSpec.parse(label).label
    try:
        return RANGE_BY_LABEL[key]
    except KeyError:
        raise ValueError(f"{label!r} is not one of the standard ranges {sorted(RANGE_BY_LABEL)}") from None


def check_disjoint(interp: RangeSpec, extrap: RangeSpec) -> None:
    for a_lo, a_hi in interp.pieces:
        for b_lo, b_hi in extrap.pieces:
            if a_lo < b_hi and b_lo < a_hi:
                raise ValueError(f"interpolation range {interp.label} overlaps extrapolation range {extrap.label}")


@dataclass(frozen=True)
class TaskSpec:
    operation: str
    interp: RangeSpec
    extrap: RangeSpec
    input_size: int = 2
    batch_size: int = 128
    validation_size: int = 10_000
    test_size: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.operation not in OPERATIONS:
            raise ValueError(f"operation must be one of {OPERATIONS}, got {self.operation!r}")
        if self.input_size < 2:
            raise ValueError("input_size must be at least 2")
        check_disjoint(self.interp, self.extrap)


def sample_batch(spec: RangeSpec, input_size: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n x input_size matrix, every element uniform over the union of pieces."""
    lengths = spec.lengths
    shape = (n, input_size)
    if len(spec.pieces) == 1:
        which = np.zeros(shape, dtype=np.intp)
    else:
        which = rng.choice(len(spec.pieces), size=shape, p=lengths / lengths.sum())
    lo = np.array([p[0] for p in spec.pieces])[which]
    hi = np.array([p[1] for p in spec.pieces])[which]
    x = lo + (hi - lo) * rng.random(shape)
    # lo + (hi - lo) * u can round up to hi; keep the interval half-open
    return np.where(x >= hi, np.nextafter(hi, lo), x)


def compute_target(x, operation: str) -> np.ndarray:
    """x1 (op) x2 per row as an n x 1 column; columns beyond the second are ignored."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("x must be n x I with I >= 2")
    a, b = x[:, 0], x[:, 1]
    if operation == "add":
        y = a + b
    elif operation == "sub":
        y = a - b
    elif operation == "mul":
        y = a * b
    elif operation == "div":
        if np.any(np.abs(b) < DIV_GUARD):
            raise ValueError("division target with a near-zero divisor")
        y = a / b
    else:
        raise ValueError(f"unknown operation {operation!r}")
    return y[:, None]


def sample_task_batch(spec: RangeSpec, input_size: int, n: int, operation: str,
                      rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    x = sample_batch(spec, input_size, n, rng)
    if operation == "div":
        while True:
            bad = np.abs(x[:, 1]) < DIV_GUARD
            if not bad.any():
                break
            x[bad] = sample_batch(spec, input_size, int(bad.sum()), rng)
    return x, compute_target(x, operation)


@dataclass
class Task:
    spec: TaskSpec
    validation: tuple[np.ndarray, np.ndarray]
    test: tuple[np.ndarray, np.ndarray]
    _rng: np.random.Generator = field(repr=False)

    def train_batch(self) -> tuple[np.ndarray, np.ndarray]:
        s = self.spec
        return sample_task_batch(s.interp, s.input_size, s.batch_size, s.operation, self._rng)

    def train_stream(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        while True:
            yield self.train_batch()


def build_task(spec: TaskSpec, seed=None) -> Task:
    """Fixed validation (interp) and test (extrap) sets plus a fresh training stream.

    ``seed`` overrides ``spec.seed`` and may be anything SeedSequence accepts.
    """
    ss = np.random.SeedSequence(spec.seed if seed is None else seed)
    val_ss, test_ss, train_ss = ss.spawn(3)
    val = sample_task_batch(spec.interp, spec.input_size, spec.validation_size, spec.operation,
                            np.random.default_rng(val_ss))
    test = sample_task_batch(spec.extrap, spec.input_size, spec.test_size, spec.operation,
                             np.random.default_rng(test_ss))
    return Task(spec, val, test, np.random.default_rng(train_ss))


# -- logic tasks --------------------------------------------------------

BOOLEAN_OPS = {
    "and": np.all,
    "or": np.any,
    "nand": lambda r, axis: ~np.all(r, axis=axis),
    "nor": lambda r, axis: ~np.any(r, axis=axis),
    "xor": lambda r, axis: np.sum(r, axis=axis) % 2 == 1,
}

COMPARISONS = {
    "<": np.less, ">": np.greater, "<=": np.less_equal, ">=": np.greater_equal,
    "==": np.equal, "!=": np.not_equal,
}
_ALIASES = {"=": "==", "≤": "<=", "≥": ">=", "≠": "!=", "lt": "<", "gt": ">", "le": "<=",
            "ge": ">=", "eq": "==", "ne": "!="}


def truth_table(op: str, input_size: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """All 2**input_size boolean rows (lexicographic order) with their labels."""
    try:
        fn = BOOLEAN_OPS[op.lower()]
    except KeyError:
        raise ValueError(f"unknown boolean op {op!r}; expected one of {sorted(BOOLEAN_OPS)}") from None
    x = np.array(list(itertools.product((0.0, 1.0), repeat=input_size)))
    return x, fn(x > 0.5, axis=1).astype(np.float64)[:, None]


def comparison_label(op: str, a, b) -> np.ndarray:
    op = _ALIASES.get(op, op)
    try:
        fn = COMPARISONS[op]
    except KeyError:
        raise ValueError(f"unknown comparison {op!r}; expected one of {sorted(COMPARISONS)}") from None
    return fn(np.asarray(a), np.asarray(b)).astype(np.float64)


def comparison_dataset(op: str, low: int, high: int, n: int,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Integer pairs uniform on [low, high] (inclusive) encoded as reals, labels in {0, 1}."""
    if high < low:
        raise ValueError("empty integer range")
    x = rng.integers(low, high, size=(n, 2), endpoint=True).astype(np.float64)
    return x, comparison_label(op, x[:, 0], x[:, 1])[:, None]


def logic_datasets(kind: str, **params) -> tuple[np.ndarray, np.ndarray]:
    if kind == "truth-table":
        return truth_table(params["op"], params.get("input_size", 2))
    if kind == "comparison":
        rng = params.get("rng") or np.random.default_rng(params.get("seed", 0))
        return comparison_dataset(params["op"], params.get("low", 0), params.get("high", 100),
                                  params.get("n", 1000), rng)
    raise ValueError(f"unknown logic dataset kind {kind!r}")


def dump_csv(x, y, path) -> None:
    x = np.asarray(x)
    y = np.asarray(y).reshape(len(x), -1)
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(x.shape[1])] + (["y"] if y.shape[1] == 1 else
                                                                [f"y{j + 1}" for j in range(y.shape[1])]))
        for row_x, row_y in zip(x, y):
            w.writerow([repr(float(v)) for v in row_x] + [repr(float(v)) for v in row_y])
