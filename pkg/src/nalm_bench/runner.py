"""Parallel, resumable execution of a sweep of training runs."""
from __future__ import annotations

import json
import logging
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Callable

from .config import ExperimentConfig
from .report import ReportBundle, emit_tables, render_all
from .trainer import RunConfig, RunRecord, train_run

log = logging.getLogger(__name__)


def run_configs(cfg: ExperimentConfig) -> list[RunConfig]:
    """Every (module, operation, range, seed) run, in a fixed order."""
    runs = []
    for kind in cfg.modules:
        for op in cfg.operations:
            for interp, extrap in cfg.ranges:
                for seed in cfg.seeds:
                    runs.append(RunConfig(
                        kind=kind, operation=op, interp=interp, extrap=extrap, seed=seed,
                        iterations=cfg.iterations, batch_size=cfg.batch, eval_interval=cfg.eval_interval,
                        input_size=cfg.input_size, lr=cfg.lr, hyper=dict(cfg.hyper.get(kind, {})),
                    ))
    return runs


def record_path(out, run: RunConfig) -> Path:
    return Path(out) / "records" / f"{run.run_id}.json"


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def load_record(path) -> RunRecord:
    return RunRecord.from_dict(json.loads(Path(path).read_text()))


def _failed_record(run: RunConfig, message: str) -> RunRecord:
    interp, extrap = run.ranges()
    return RunRecord(
        kind=run.kind, operation=run.operation, interp=interp.label, extrap=extrap.label, seed=run.seed,
        input_size=run.input_size, iterations=run.iterations, extrap_mse=math.inf, best_val_mse=math.inf,
        best_iteration=None, solved_at=None, sparsity_error=0.5, success=False, threshold=math.nan,
        reinit_count=0, diverged=False, run_id=run.run_id, error=message,
    )


def execute(run: RunConfig) -> RunRecord:
    """Worker entry point; exceptions become failed records instead of aborting the sweep."""
    try:
        return train_run(run)
    except Exception as exc:  # noqa: BLE001 - recorded, not swallowed
        log.debug("run %s failed:\n%s", run.run_id, traceback.format_exc())
        return _failed_record(run, f"{type(exc).__name__}: {exc}")


def run_matrix(cfg: ExperimentConfig, progress: Callable[[RunRecord, int, int], None] | None = None,
               render: bool = True) -> tuple[ReportBundle, list[RunRecord]]:
    """Run everything not already on disk, then aggregate and write tables/charts under ``cfg.out``."""
    out = Path(cfg.out)
    runs = run_configs(cfg)
    done: dict[str, RunRecord] = {}
    pending = []
    for run in runs:
        path = record_path(out, run)
        if path.exists():
            try:
                done[run.run_id] = load_record(path)
                continue
            except (ValueError, TypeError, KeyError, json.JSONDecodeError):
                log.warning("ignoring unreadable record %s", path)
        pending.append(run)

    total, finished = len(runs), len(done)

    def _store(run: RunConfig, rec: RunRecord) -> None:
        nonlocal finished
        _write_json(record_path(out, run), rec.to_dict())
        done[run.run_id] = rec
        finished += 1
        if progress is not None:
            progress(rec, finished, total)

    if cfg.workers == 1 or len(pending) <= 1:
        for run in pending:
            _store(run, execute(run))
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {pool.submit(execute, run): run for run in pending}
            for fut in as_completed(futures):
                _store(futures[fut], fut.result())

    records = [done[r.run_id] for r in runs]
    order = list(dict.fromkeys((r.kind, r.operation, r.interp) for r in runs))
    bundle = ReportBundle.from_records(cfg.label, records, cfg.config_hash, order=order)
    if render:
        emit_tables(bundle, out)
        render_all(bundle, out / "charts")
        _write_json(out / "config.json", cfg.to_dict())
    return bundle, records


def records_in(out) -> list[RunRecord]:
    paths = sorted((Path(out) / "records").glob("*.json"))
    return [load_record(p) for p in paths]
