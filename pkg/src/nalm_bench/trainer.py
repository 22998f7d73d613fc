"""Training loop for one module on one task, plus small loops for the logic modules."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import backend
from .data import RangeSpec, TaskSpec, build_task, check_disjoint, comparison_dataset, lookup_range, truth_table
from .layers import INalu, Npu, inalu_should_reinit, lambda_scale, make_model, module_defaults
from .logic import Nlrl, Nsr
from .optim import AdamState, adam_step
from .threshold import DEFAULT_EPS, DEFAULT_SAMPLES, simulate_threshold


def _stable_hash(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class RunConfig:
    kind: str
    operation: str
    interp: str
    seed: int = 0
    extrap: str | None = None
    iterations: int = 50_000
    batch_size: int = 128
    eval_interval: int = 1000
    input_size: int = 2
    validation_size: int = 10_000
    test_size: int = 10_000
    lr: float | None = None
    hyper: dict = field(default_factory=dict)
    threshold_eps: float = DEFAULT_EPS
    threshold_samples: int = DEFAULT_SAMPLES

    def __post_init__(self):
        # normalise labels so "[1,2)" and "U[1,2)" name the same run
        interp = RangeSpec.parse(self.interp)
        extrap = lookup_range(interp.label)[1] if self.extrap is None else RangeSpec.parse(self.extrap)
        check_disjoint(interp, extrap)
        self.interp, self.extrap = interp.label, extrap.label

    def ranges(self) -> tuple[RangeSpec, RangeSpec]:
        return RangeSpec.parse(self.interp), RangeSpec.parse(self.extrap)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def run_id(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def effective_lr(self) -> float:
        return self.lr if self.lr is not None else module_defaults(self.kind, self.operation)[1]

    def effective_hyper(self) -> dict:
        hyper = module_defaults(self.kind, self.operation)[0]
        hyper.update(self.hyper)
        return hyper


@dataclass
class RunRecord:
    kind: str
    operation: str
    interp: str
    extrap: str
    seed: int
    input_size: int
    iterations: int
    extrap_mse: float
    best_val_mse: float
    best_iteration: int | None
    solved_at: int | None
    sparsity_error: float
    success: bool
    threshold: float
    reinit_count: int
    diverged: bool
    run_id: str = ""
    error: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("extrap_mse", "best_val_mse", "sparsity_error"):
            if not math.isfinite(d[k]):
                d[k] = None if math.isnan(d[k]) else ("inf" if d[k] > 0 else "-inf")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> RunRecord:
        d = dict(d)
        for k in ("extrap_mse", "best_val_mse", "sparsity_error"):
            v = d.get(k)
            d[k] = float("nan") if v is None else float(v)
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def evaluate_mse(model, x: np.ndarray, y: np.ndarray) -> float:
    with np.errstate(all="ignore"):
        d = model.predict(x) - y
        value = float(np.mean(d * d))
    return value if math.isfinite(value) else math.inf


def evaluate_extrapolation(model, test: tuple[np.ndarray, np.ndarray]) -> float:
    """MSE over the whole fixed extrapolation set."""
    return evaluate_mse(model, *test)


CURVE_FIELDS = ("iteration", "train_loss", "val_mse", "extrap_mse", "lambda", "beta")


def _schedule_values(model, it: int) -> tuple[float, float]:
    h = model.hyper
    lam = lambda_scale(it, h["lambda_hat"], h["lambda_start"], h["lambda_end"]) if model.kind in ("nau", "nmu") else 0.0
    beta = model._beta(it) if isinstance(model, Npu) else 0.0
    return lam, beta


def train_run(cfg: RunConfig, *, use: str | None = None, curve_path=None, return_model: bool = False):
    """Train one module; returns a RunRecord (and the model at its best checkpoint if asked).

    Every ``eval_interval`` updates the validation and extrapolation MSE are
    measured. The reported extrapolation MSE and sparsity come from the
    checkpoint with the lowest validation MSE.
    """
    interp, extrap = cfg.ranges()
    spec = TaskSpec(cfg.operation, interp, extrap, cfg.input_size, cfg.batch_size,
                    cfg.validation_size, cfg.test_size, cfg.seed)
    task = build_task(spec, seed=[cfg.seed, _stable_hash("data", cfg.operation, interp.label, cfg.input_size)])
    init_ss, reinit_ss = np.random.SeedSequence(
        [cfg.seed, _stable_hash("init", cfg.kind, cfg.operation, interp.label, cfg.input_size)]).spawn(2)
    reinit_rng = np.random.default_rng(reinit_ss)

    model = make_model(cfg.kind, cfg.input_size, 1, cfg.effective_hyper())
    model.reset(np.random.default_rng(init_ss))
    threshold = simulate_threshold(cfg.operation, extrap, cfg.input_size, cfg.threshold_eps,
                                   cfg.threshold_samples).mse
    lr = cfg.effective_lr()
    params = list(model.params.values())
    state = AdamState()
    is_inalu = isinstance(model, INalu)
    h = model.hyper
    history: deque[float] = deque(maxlen=int(h["reinit_history"]))

    best_val, best_ext, best_it = math.inf, math.inf, None
    best_params = {n: p.value.copy() for n, p in model.params.items()}
    solved_at = None
    diverged = False
    reinits = 0
    last_loss = math.nan
    rows = [] if curve_path else None

    for it in range(cfg.iterations + 1):
        if it % cfg.eval_interval == 0 or it == cfg.iterations:
            val = evaluate_mse(model, *task.validation)
            ext = evaluate_extrapolation(model, task.test)
            if val < best_val:
                best_val, best_ext, best_it = val, ext, it
                best_params = {n: p.value.copy() for n, p in model.params.items()}
            if solved_at is None and ext < threshold:
                solved_at = it
            if rows is not None:
                rows.append((it, last_loss, val, ext, *_schedule_values(model, it)))
        if it == cfg.iterations:
            break

        x, y = task.train_batch()
        with np.errstate(all="ignore"):
            loss, grads = backend.mse_and_grad(model, x, y, use=use)
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            diverged = True
            break
        last_loss = loss
        _, pen_grads = model.penalty(it, loss)
        for name, p in model.params.items():
            g = grads[name]
            if name in pen_grads:
                g = g + pen_grads[name]
            p.grad[...] = g
        adam_step(params, state, lr, model.grad_clip)
        model.project()

        if is_inalu:
            history.append(loss)
            if inalu_should_reinit(history, it, int(h["reinit_period"]), int(h["reinit_min_iter"]),
                                   h["reinit_loss_floor"], history.maxlen):
                model.reset(reinit_rng)
                state.reset()
                history.clear()
                reinits += 1

    for n, p in model.params.items():
        p.value[...] = best_params[n]
    success = (not diverged) and best_ext < threshold
    record = RunRecord(
        kind=cfg.kind, operation=cfg.operation, interp=interp.label, extrap=extrap.label,
        seed=cfg.seed, input_size=cfg.input_size, iterations=cfg.iterations,
        extrap_mse=best_ext, best_val_mse=best_val, best_iteration=best_it,
        solved_at=solved_at if success else None,
        sparsity_error=model.sparsity_error(), success=bool(success), threshold=threshold,
        reinit_count=reinits, diverged=diverged, run_id=cfg.run_id,
    )
    if curve_path is not None:
        write_curve(curve_path, rows)
    return (record, model) if return_model else record


def write_curve(path, rows) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_FIELDS)
        for row in rows:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


# -- logic modules ------------------------------------------------------

@dataclass
class LogicRecord:
    kind: str
    task: str
    seed: int
    iterations: int
    final_loss: float
    accuracy: float

    def to_dict(self) -> dict:
        return asdict(self)


def _fit(model, loss_fn, batches, iterations: int, lr: float) -> float:
    params = list(model.params.values())
    for p in params:
        p.requires_grad = True
    state = AdamState()
    loss_value = math.nan
    for _ in range(iterations):
        x, y = next(batches)
        for p in params:
            p.zero_grad()
        with ad.Graph() as g:
            loss = loss_fn(model, x, y)
        g.backward(loss)
        loss_value = loss.item()
        if not math.isfinite(loss_value):
            break
        adam_step(params, state, lr)
    return loss_value


def _nsr_loss(model, x, y):
    return ad.bce_logits(model.logits(ad.Tensor(x)), ad.Tensor(y))


def train_nsr(op: str = "<", seed: int = 0, iterations: int = 3000, lr: float = 0.05, batch_size: int = 128,
              train_range: tuple[int, int] = (0, 100), test_range: tuple[int, int] = (100, 1000),
              test_size: int = 10_000, lam: float = 1.0, redundancy: int = 1, return_model: bool = False):
    """Fit an NSR to an integer comparison and score it on a larger integer range."""
    ss_init, ss_train, ss_test = np.random.SeedSequence([seed, _stable_hash("nsr", op)]).spawn(3)
    model = Nsr(2, 1, lam=lam, redundancy=redundancy)
    model.reset(np.random.default_rng(ss_init))
    train_rng = np.random.default_rng(ss_train)

    def batches():
        while True:
            yield comparison_dataset(op, *train_range, batch_size, train_rng)

    final = _fit(model, _nsr_loss, batches(), iterations, lr)
    xt, yt = comparison_dataset(op, *test_range, test_size, np.random.default_rng(ss_test))
    pred = model.predict(xt)[0] > 0.5
    record = LogicRecord("nsr", op, seed, iterations, final, float(np.mean(pred == (yt > 0.5))))
    return (record, model) if return_model else record


def _nlrl_loss(model, x, y):
    return ad.mse(model.forward(ad.Tensor(x)), ad.Tensor(y))


def train_nlrl(op: str = "and", input_size: int = 2, seed: int = 0, iterations: int = 2000, lr: float = 0.05,
               variant: str = "and-only", return_model: bool = False):
    """Fit an NLRL to a full truth table; accuracy thresholds the output at 0.5."""
    x, y = truth_table(op, input_size)
    model = Nlrl(input_size, 1, variant=variant)
    model.reset(np.random.default_rng([seed, _stable_hash("nlrl", op, input_size)]))

    def batches():
        while True:
            yield x, y

    final = _fit(model, _nlrl_loss, batches(), iterations, lr)
    acc = float(np.mean((model.predict(x) > 0.5) == (y > 0.5)))
    record = LogicRecord("nlrl", op, seed, iterations, final, acc)
    return (record, model) if return_model else record
