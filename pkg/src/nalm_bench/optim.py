"""Adam with optional elementwise gradient clipping."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import backend
from .autodiff import Tensor


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[int, np.ndarray] = field(default_factory=dict)
    v: dict[int, np.ndarray] = field(default_factory=dict)

    def reset(self) -> None:
        self.step = 0
        self.m.clear()
        self.v.clear()


def adam_step(params: Sequence[Tensor], state: AdamState, lr: float,
              grad_clip: tuple[float, float] | None = None) -> None:
    """Update ``params`` in place from their ``.grad``.

    Moments are keyed on tensor identity, so the same tensors must be passed
    on every call.
    """
    state.step += 1
    lo, hi = grad_clip if grad_clip is not None else (-np.inf, np.inf)
    for p in params:
        key = p.node_id
        if key not in state.m:
            state.m[key] = np.zeros(p.value.size)
            state.v[key] = np.zeros(p.value.size)
        backend.adam_update(p.value.reshape(-1), p.grad.reshape(-1), state.m[key], state.v[key],
                            lr, state.beta1, state.beta2, state.eps, state.step, lo, hi)
