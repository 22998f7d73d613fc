"""Result tables (CSV + JSON) and grouped bar charts (SVG)."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from xml.sax.saxutils import escape

from .metrics import MetricSummary, summarize

METRICS = ("success-rate", "solved-at", "sparsity")
MISSING = "---"
TABLE_COLUMNS = (
    "module", "range", "success_rate", "ci_low", "ci_high",
    "solved_at_mean", "solved_at_ci_low", "solved_at_ci_high",
    "sparsity_mean", "sparsity_ci_low", "sparsity_ci_high",
)
_METRIC_COLUMNS = {
    "success-rate": ("success_rate", "ci_low", "ci_high"),
    "solved-at": ("solved_at_mean", "solved_at_ci_low", "solved_at_ci_high"),
    "sparsity": ("sparsity_mean", "sparsity_ci_low", "sparsity_ci_high"),
}
_FAMILY = {"success-rate": "binomial", "solved-at": "gamma", "sparsity": "beta"}


@dataclass
class ReportBundle:
    label: str
    # (module, operation, range label) -> metric name -> summary
    cells: dict[tuple[str, str, str], dict[str, MetricSummary]] = field(default_factory=dict)
    timestamp: str = ""
    config_hash: str = ""

    @classmethod
    def from_records(cls, label: str, records, config_hash: str = "", order=None) -> ReportBundle:
        """Group run records by (module, operation, range) and summarize each group.

        ``order`` fixes the cell order; otherwise cells are sorted.
        """
        groups: dict[tuple[str, str, str], list] = {}
        for r in records:
            groups.setdefault((r.kind, r.operation, r.interp), []).append(r)
        keys = list(order) if order is not None else sorted(groups)
        cells = {}
        for key in keys:
            runs = sorted(groups.get(key, []), key=lambda r: r.seed)
            if not runs:
                raise ValueError(f"no records for cell {key}")
            cells[key] = summarize(runs)
        stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        return cls(label, cells, stamp, config_hash)

    @property
    def operations(self) -> list[str]:
        return list(dict.fromkeys(k[1] for k in self.cells))

    def modules(self, operation: str | None = None) -> list[str]:
        return list(dict.fromkeys(k[0] for k in self.cells if operation in (None, k[1])))

    def ranges(self, operation: str | None = None) -> list[str]:
        return list(dict.fromkeys(k[2] for k in self.cells if operation in (None, k[1])))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "timestamp": self.timestamp,
            "config_hash": self.config_hash,
            "cells": [
                {"module": m, "operation": op, "range": rng,
                 "metrics": {name: s.to_dict() for name, s in metrics.items()}}
                for (m, op, rng), metrics in self.cells.items()
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> ReportBundle:
        cells = {}
        for c in doc["cells"]:
            cells[(c["module"], c["operation"], c["range"])] = {
                name: MetricSummary(**s) for name, s in c["metrics"].items()}
        return cls(doc["label"], cells, doc.get("timestamp", ""), doc.get("config_hash", ""))


def _fmt(v: float | None) -> str:
    return MISSING if v is None else f"{v:.10g}"


def _parse(text: str) -> float | None:
    return None if text == MISSING else float(text)


def table_rows(bundle: ReportBundle, operation: str) -> list[list[str]]:
    rows = []
    for (module, op, rng), metrics in bundle.cells.items():
        if op != operation:
            continue
        row = [module, rng]
        for name in METRICS:
            s = metrics[name]
            row += [_fmt(s.estimate), _fmt(s.ci_low), _fmt(s.ci_high)]
        rows.append(row)
    return rows


def emit_tables(bundle: ReportBundle, path) -> list[Path]:
    """Write ``results_<op>.csv`` per operation and ``report.json`` into directory ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for op in bundle.operations:
        target = out / f"results_{op}.csv"
        with open(target, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TABLE_COLUMNS)
            w.writerows(table_rows(bundle, op))
        written.append(target)
    target = out / "report.json"
    target.write_text(json.dumps(bundle.to_dict(), indent=2, sort_keys=True) + "\n")
    written.append(target)
    return written


def read_table(path) -> dict[tuple[str, str], dict[str, MetricSummary]]:
    """Parse a table written by :func:`emit_tables` back into summaries (n is not stored)."""
    result = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            metrics = {}
            for name in METRICS:
                est, lo, hi = (_parse(row[c]) for c in _METRIC_COLUMNS[name])
                metrics[name] = MetricSummary(name, est, lo, hi, 0, _FAMILY[name])
            result[(row["module"], row["range"])] = metrics
    return result


# -- SVG ----------------------------------------------------------------

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
_TITLES = {"success-rate": "Success rate", "solved-at": "Solved at iteration", "sparsity": "Sparsity error"}


class _Axis:
    def __init__(self, metric: str, values: list[float], top: float, height: float):
        self.log = metric != "success-rate"
        self.top, self.height = top, height
        if not self.log:
            self.lo, self.hi = 0.0, 1.0
        else:
            pos = [v for v in values if v is not None and v > 0]
            if metric == "sparsity":
                lo, hi = 1e-16, 0.5
            else:
                lo, hi = (min(pos), max(pos)) if pos else (1.0, 10.0)
            self.lo = math.floor(math.log10(min(lo, max(hi, lo))))
            self.hi = math.ceil(math.log10(hi))
            if self.hi <= self.lo:
                self.hi = self.lo + 1

    def y(self, v: float) -> float:
        if self.log:
            v = math.log10(max(v, 10.0 ** self.lo))
        frac = (v - self.lo) / (self.hi - self.lo)
        frac = min(max(frac, 0.0), 1.0)
        return self.top + self.height * (1.0 - frac)

    def ticks(self) -> list[tuple[float, str]]:
        if not self.log:
            return [(i / 4, f"{i * 25}%") for i in range(5)]
        step = max(1, (self.hi - self.lo) // 8)
        return [(10.0 ** e, f"1e{e}") for e in range(self.lo, self.hi + 1, step)]


def render_svg(bundle: ReportBundle, metric: str, path, operation: str | None = None) -> Path:
    """Grouped bars: x = interpolation range, one bar per module, CI whiskers where the CI has width."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    ops = bundle.operations
    if operation is None:
        if len(ops) != 1:
            raise ValueError("bundle has several operations; pass operation=")
        operation = ops[0]
    modules, ranges = bundle.modules(operation), bundle.ranges(operation)

    bar_w, gap, left, right, top, bottom = 14, 18, 70, 140, 40, 70
    group_w = bar_w * len(modules) + gap
    plot_w, plot_h = group_w * len(ranges), 260
    width, height = left + plot_w + right, top + plot_h + bottom
    values = [m[metric].estimate for k, m in bundle.cells.items() if k[1] == operation]
    values += [m[metric].ci_low for k, m in bundle.cells.items() if k[1] == operation]
    axis = _Axis(metric, values, top, plot_h)
    base = top + plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<title>{escape(f"{_TITLES[metric]} ({operation})")}</title>',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="{top - 15}" font-size="13">{escape(_TITLES[metric])} - {escape(operation)}</text>',
    ]
    for v, text in axis.ticks():
        y = axis.y(v)
        out.append(f'<line class="grid" x1="{left}" y1="{y:.2f}" x2="{left + plot_w}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">{escape(text)}</text>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{base}" x2="{left + plot_w}" y2="{base}" stroke="black"/>')

    for gi, rng in enumerate(ranges):
        gx = left + gi * group_w + gap / 2
        for mi, module in enumerate(modules):
            cell = bundle.cells.get((module, operation, rng))
            if cell is None or cell[metric].estimate is None:
                continue
            s = cell[metric]
            x = gx + mi * bar_w
            y = axis.y(s.estimate)
            out.append(f'<rect class="bar" x="{x:.2f}" y="{y:.2f}" width="{bar_w - 2}" '
                       f'height="{base - y:.2f}" fill="{PALETTE[mi % len(PALETTE)]}">'
                       f'<title>{escape(f"{module} {rng}: {s.estimate:.4g}")}</title></rect>')
            if s.ci_low is not None and s.ci_high is not None and s.ci_high > s.ci_low:
                cx = x + (bar_w - 2) / 2
                y1, y2 = axis.y(s.ci_low), axis.y(s.ci_high)
                out.append(f'<line class="whisker" x1="{cx:.2f}" y1="{y1:.2f}" x2="{cx:.2f}" y2="{y2:.2f}" stroke="black"/>')
        lx = gx + len(modules) * bar_w / 2
        out.append(f'<text x="{lx:.2f}" y="{base + 14}" text-anchor="end" '
                   f'transform="rotate(-35 {lx:.2f} {base + 14})">{escape(rng)}</text>')

    for mi, module in enumerate(modules):
        ly = top + 14 * mi
        lx = left + plot_w + 15
        out.append(f'<rect x="{lx}" y="{ly}" width="10" height="10" fill="{PALETTE[mi % len(PALETTE)]}"/>')
        out.append(f'<text x="{lx + 14}" y="{ly + 9}">{escape(module)}</text>')
    out.append("</svg>")

    target = Path(path)
    target.write_text("\n".join(out) + "\n")
    return target


def render_all(bundle: ReportBundle, path) -> list[Path]:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return [render_svg(bundle, metric, out / f"{op}_{metric}.svg", op)
            for op in bundle.operations for metric in METRICS]
