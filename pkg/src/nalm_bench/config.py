"""Sweep configuration from TOML/JSON files and command-line overrides."""
from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .data import OPERATIONS, STANDARD_RANGES, RangeSpec, check_disjoint, lookup_range
from .layers import ARITHMETIC_KINDS

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_OUT = "nalm_bench_out"
DEFAULT_SEEDS = 25


def default_out() -> str:
    return os.environ.get("NALM_BENCH_OUT", DEFAULT_OUT)


@dataclass
class ExperimentConfig:
    modules: list[str] = field(default_factory=lambda: list(ARITHMETIC_KINDS))
    operations: list[str] = field(default_factory=lambda: list(OPERATIONS))
    # (interp label, extrap label) pairs
    ranges: list[tuple[str, str]] = field(
        default_factory=lambda: [(i.label, e.label) for i, e in STANDARD_RANGES])
    seeds: list[int] = field(default_factory=lambda: list(range(DEFAULT_SEEDS)))
    iterations: int = 50_000
    batch: int = 128
    input_size: int = 2
    lr: float | None = None
    eval_interval: int = 1000
    hyper: dict[str, dict] = field(default_factory=dict)
    out: str = field(default_factory=default_out)
    workers: int = 1
    label: str = "single-module-task"

    def __post_init__(self):
        unknown = [m for m in self.modules if m not in ARITHMETIC_KINDS]
        if unknown:
            raise ValueError(f"unknown module(s) {unknown}; expected some of {list(ARITHMETIC_KINDS)}")
        bad_ops = [o for o in self.operations if o not in OPERATIONS]
        if bad_ops:
            raise ValueError(f"unknown operation(s) {bad_ops}; expected some of {list(OPERATIONS)}")
        for kind in self.hyper:
            if kind not in ARITHMETIC_KINDS:
                raise ValueError(f"hyper overrides for unknown module {kind!r}")
        pairs = []
        for interp, extrap in self.ranges:
            i, e = RangeSpec.parse(interp), RangeSpec.parse(extrap)
            check_disjoint(i, e)
            pairs.append((i.label, e.label))
        self.ranges = pairs
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seed list has duplicates")
        if not self.modules or not self.operations or not self.ranges or not self.seeds:
            raise ValueError("config selects no runs")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ranges"] = [list(p) for p in self.ranges]
        return d

    @property
    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("out")
        d.pop("workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _kind_of(v) -> str:
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "number"
    if isinstance(v, str):
        return "string"
    if isinstance(v, (list, tuple)):
        return "list"
    if isinstance(v, dict):
        return "table"
    return type(v).__name__


def load_file(path) -> dict:
    p = Path(path)
    text = p.read_text()
    if p.suffix.lower() == ".json":
        doc = json.loads(text)
    else:
        doc = tomllib.loads(text)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: top level must be a table/object")
    return doc


def _normalize_ranges(value) -> list[tuple[str, str]]:
    pairs = []
    for item in value:
        if isinstance(item, str):
            interp = RangeSpec.parse(item)
            pairs.append((interp.label, lookup_range(interp.label)[1].label))
        elif isinstance(item, (list, tuple)) and len(item) == 2:
            pairs.append((str(item[0]), str(item[1])))
        else:
            raise ValueError(f"malformed range entry {item!r}")
    return pairs


def _as_list(v) -> list:
    if isinstance(v, str):
        return [s.strip() for s in v.split(",") if s.strip()]
    return list(v)


def _seeds(v) -> list[int]:
    if isinstance(v, bool):
        raise ValueError("seeds must be a count or a list of integers")
    if isinstance(v, int):
        if v < 1:
            raise ValueError("seed count must be positive")
        return list(range(v))
    return [int(s) for s in _as_list(v)]


_KEYS = {"modules", "operations", "ranges", "seeds", "iterations", "batch", "input_size", "lr",
         "eval_interval", "hyper", "out", "workers", "label"}
_ALIASES = {"module": "modules", "op": "operations", "ops": "operations", "iters": "iterations",
            "batch_size": "batch", "input-size": "input_size"}


def parse_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Resolve a config from an optional file plus overrides (overrides win).

    An override whose value has a different type from the file's value for the
    same key is rejected rather than silently coerced.
    """
    doc = {}
    if path is not None:
        doc = {_ALIASES.get(k, k): v for k, v in load_file(path).items()}
    unknown = set(doc) - _KEYS
    if unknown:
        raise ValueError(f"unknown config keys {sorted(unknown)}")
    for key, value in (overrides or {}).items():
        key = _ALIASES.get(key, key)
        if key not in _KEYS:
            raise ValueError(f"unknown config key {key!r}")
        if value is None:
            continue
        if key in doc and _kind_of(doc[key]) != _kind_of(value):
            raise ValueError(f"flag for {key!r} ({_kind_of(value)}) conflicts with file value ({_kind_of(doc[key])})")
        doc[key] = value

    kwargs = {}
    for key, value in doc.items():
        if key in ("modules", "operations"):
            kwargs[key] = _as_list(value)
        elif key == "ranges":
            kwargs[key] = _normalize_ranges(value)
        elif key == "seeds":
            kwargs[key] = _seeds(value)
        elif key in ("iterations", "batch", "input_size", "eval_interval", "workers"):
            kwargs[key] = int(value)
        elif key == "lr":
            kwargs[key] = float(value)
        else:
            kwargs[key] = value
    return ExperimentConfig(**kwargs)
