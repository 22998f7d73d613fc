"""Success rate, solved-at and sparsity summaries with 95% intervals."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

CONFIDENCE = 0.95
BOOTSTRAP_RESAMPLES = 10_000
BOOTSTRAP_SEED = 0


@dataclass(frozen=True)
class MetricSummary:
    metric: str
    estimate: float | None
    ci_low: float | None
    ci_high: float | None
    n: int
    family: str

    @property
    def present(self) -> bool:
        return self.estimate is not None

    def to_dict(self) -> dict:
        return asdict(self)


def _field(run, name):
    return run[name] if isinstance(run, dict) else getattr(run, name)


def success_rate_ci(runs: Sequence) -> MetricSummary:
    """Fraction of successful runs with a Clopper-Pearson interval."""
    flags = [bool(_field(r, "success")) for r in runs]
    if not flags:
        raise ValueError("success_rate_ci needs at least one run")
    return binomial_summary(sum(flags), len(flags))


def binomial_summary(k: int, n: int) -> MetricSummary:
    ci = stats.binomtest(k, n).proportion_ci(confidence_level=CONFIDENCE, method="exact")
    return MetricSummary("success-rate", k / n, float(ci.low), float(ci.high), n, "binomial")


def _bootstrap_mean_ci(sampler, n: int) -> tuple[float, float]:
    rng = np.random.default_rng(BOOTSTRAP_SEED)
    means = sampler(rng, (BOOTSTRAP_RESAMPLES, n)).mean(axis=1)
    alpha = (1 - CONFIDENCE) / 2
    lo, hi = np.quantile(means, [alpha, 1 - alpha])
    return float(lo), float(hi)


def _fit_summary(metric: str, family: str, values: Iterable[float], fit_and_sample) -> MetricSummary:
    v = np.sort(np.asarray(list(values), dtype=np.float64))
    n = len(v)
    if n == 0:
        return MetricSummary(metric, None, None, None, 0, family)
    mean = float(v.mean())
    if n == 1:
        return MetricSummary(metric, mean, None, None, 1, family)
    if np.all(v == v[0]):
        return MetricSummary(metric, mean, mean, mean, n, family)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lo, hi = fit_and_sample(v)
    # keep the point estimate inside its interval even when the fit is poor
    return MetricSummary(metric, mean, min(lo, mean), max(hi, mean), n, family)


def _gamma_ci(v):
    # a run solved at iteration 0 would put a zero on the Gamma support boundary
    v = np.maximum(v, 0.5)
    try:
        shape, _, scale = stats.gamma.fit(v, floc=0)
    except (stats.FitError, RuntimeError, ValueError):
        shape, scale = v.mean() ** 2 / v.var(), v.var() / v.mean()
    return _bootstrap_mean_ci(lambda rng, size: rng.gamma(shape, scale, size), len(v))


def _beta_moments(u):
    m, var = u.mean(), u.var()
    common = m * (1 - m) / var - 1
    return m * common, (1 - m) * common


def _beta_ci(v):
    # fitted on values doubled into [0, 1], kept strictly inside the support
    u = np.clip(2.0 * v, 1e-12, 1 - 1e-12)
    try:
        a, b, _, _ = stats.beta.fit(u, floc=0, fscale=1)
    except (stats.FitError, RuntimeError, ValueError):
        a, b = _beta_moments(u)
    if not (a > 0 and b > 0 and np.isfinite(a) and np.isfinite(b)):
        a, b = _beta_moments(u)
    lo, hi = _bootstrap_mean_ci(lambda rng, size: rng.beta(a, b, size), len(v))
    return lo / 2.0, hi / 2.0


def successful(runs: Sequence) -> list:
    return [r for r in runs if _field(r, "success")]


def solved_at_ci(runs: Sequence) -> MetricSummary:
    """Mean first-solved iteration over successful runs, Gamma-based interval."""
    values = [_field(r, "solved_at") for r in successful(runs)]
    return _fit_summary("solved-at", "gamma", [v for v in values if v is not None], _gamma_ci)


def sparsity_ci(runs: Sequence) -> MetricSummary:
    """Mean sparsity error over successful runs, Beta-based interval."""
    values = [_field(r, "sparsity_error") for r in successful(runs)]
    return _fit_summary("sparsity", "beta", values, _beta_ci)


def summarize(runs: Sequence) -> dict[str, MetricSummary]:
    return {
        "success-rate": success_rate_ci(runs),
        "solved-at": solved_at_ci(runs),
        "sparsity": sparsity_ci(runs),
    }
