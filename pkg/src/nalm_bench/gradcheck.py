"""Finite-difference checks for every module kind."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .autodiff import grad_check
from .layers import ARITHMETIC_KINDS, make_model
from .logic import Nlrl, Nsr

GRADCHECK_KINDS = ARITHMETIC_KINDS + ("nlrl", "nsr")
TOLERANCE = 1e-4


@dataclass
class GradCheckResult:
    kind: str
    draws: int
    max_error: float
    compiled_error: float | None  # compiled kernel vs autodiff, when a kernel exists

    @property
    def passed(self) -> bool:
        ok = self.max_error < TOLERANCE
        if self.compiled_error is not None:
            ok = ok and self.compiled_error < TOLERANCE
        return ok


def random_draw(kind: str, rng: np.random.Generator, in_features: int = 3, out_features: int = 2,
                batch: int = 8):
    """A model with parameters away from clamp/kink boundaries and a matching input batch."""
    if kind == "nlrl":
        model = Nlrl(in_features, out_features)
        model.reset(rng)
        return model, rng.uniform(0.05, 0.95, size=(batch, in_features))
    if kind == "nsr":
        model = Nsr(in_features, out_features, redundancy=2)
        model.reset(rng)
        return model, rng.normal(0.0, 1.0, size=(batch, in_features))
    model = make_model(kind, in_features, out_features)
    model.reset(rng)
    p = model.params
    if kind == "nau":
        p["W"].value[...] = rng.uniform(-0.9, 0.9, size=p["W"].shape)
    elif kind == "nmu":
        p["W"].value[...] = rng.uniform(0.1, 0.9, size=p["W"].shape)
    elif kind in ("npu", "realnpu"):
        p["g"].value[...] = rng.uniform(0.1, 0.9, size=p["g"].shape)
        if "W_im" in p:
            p["W_im"].value[...] = rng.normal(0.0, 0.5, size=p["W_im"].shape)
    magnitude = rng.uniform(0.5, 1.5, size=(batch, in_features))
    return model, magnitude * rng.choice([-1.0, 1.0], size=magnitude.shape)


def _compiled_gap(model, x, rng) -> float | None:
    if not backend.compiled_available() or getattr(model, "compiled_kernel", None) is None:
        return None
    y = rng.normal(size=(x.shape[0], model.out_features))
    _, fast = backend.mse_and_grad(model, x, y, use="compiled")
    _, slow = backend.mse_and_grad(model, x, y, use="python")
    return max(float(np.max(np.abs(fast[k] - slow[k]) / np.maximum(1.0, np.abs(slow[k])))) for k in slow)


def check_kind(kind: str, draws: int = 20, seed: int = 0) -> GradCheckResult:
    rng = np.random.default_rng([seed, GRADCHECK_KINDS.index(kind)])
    worst, worst_compiled = 0.0, None
    for d in range(draws):
        model, x = random_draw(kind, rng)
        worst = max(worst, grad_check(model, x, seed=d))
        gap = _compiled_gap(model, x, rng)
        if gap is not None:
            worst_compiled = gap if worst_compiled is None else max(worst_compiled, gap)
    return GradCheckResult(kind, draws, worst, worst_compiled)


def gradient_suite(kinds=GRADCHECK_KINDS, draws: int = 20, seed: int = 0) -> list[GradCheckResult]:
    return [check_kind(k, draws, seed) for k in kinds]
