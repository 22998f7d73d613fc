"""Success thresholds from a simulated epsilon-perfect model."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .data import DIV_GUARD, RangeSpec, sample_task_batch

DEFAULT_EPS = 1e-5
DEFAULT_SAMPLES = 1_000_000
DEFAULT_SEED = 0
# diagnostic only: a looser model for checkpoints taken before regularization kicks in
PRE_REG_EPS = 0.49


def eps_perfect_prediction(x, operation: str, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Predictions of a model whose every weight is off by ``eps``; n x 1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    a, b = x[:, 0], x[:, 1]
    absx = np.abs(x)
    irrelevant = np.prod(1.0 - absx[:, 2:] * eps, axis=1)
    if operation == "add":
        y = (a + b) - absx.sum(axis=1) * eps
    elif operation == "sub":
        y = (a - b) - absx.sum(axis=1) * eps
    elif operation == "mul":
        y = a * b * (1.0 - eps) ** 2 * irrelevant
    elif operation == "div":
        if np.any(np.abs(b) < DIV_GUARD):
            raise ValueError("division with a near-zero divisor")
        y = a * (1.0 - eps) / (b * (1.0 + eps)) * irrelevant
    else:
        raise ValueError(f"unknown operation {operation!r}")
    return y[:, None]


@dataclass(frozen=True)
class Threshold:
    operation: str
    extrap: str
    input_size: int
    eps: float
    samples: int
    seed: int
    mse: float

    def to_dict(self) -> dict:
        return asdict(self)


def threshold_mse(operation: str, extrap: RangeSpec, input_size: int = 2, eps: float = DEFAULT_EPS,
                  samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED, chunk: int = 250_000) -> float:
    rng = np.random.default_rng(seed)
    total, done = 0.0, 0
    while done < samples:
        n = min(chunk, samples - done)
        x, y = sample_task_batch(extrap, input_size, n, operation, rng)
        d = eps_perfect_prediction(x, operation, eps) - y
        total += float(np.sum(d * d))
        done += n
    return total / samples


@lru_cache(maxsize=None)
def _cached(operation, pieces, input_size, eps, samples, seed) -> float:
    return threshold_mse(operation, RangeSpec(pieces), input_size, eps, samples, seed)


def simulate_threshold(operation: str, extrap: RangeSpec, input_size: int = 2, eps: float = DEFAULT_EPS,
                       samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED) -> Threshold:
    """MSE of the epsilon-perfect model on ``samples`` extrapolation draws (cached per process)."""
    mse = _cached(operation, extrap.pieces, int(input_size), float(eps), int(samples), int(seed))
    return Threshold(operation, extrap.label, int(input_size), float(eps), int(samples), int(seed), mse)


def pre_regularization_threshold(operation: str, extrap: RangeSpec, input_size: int = 2,
                                 samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED) -> Threshold:
    """Looser diagnostic threshold for checkpoints taken before sparsity penalties are active."""
    return simulate_threshold(operation, extrap, input_size, PRE_REG_EPS, samples, seed)
