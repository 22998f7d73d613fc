"""Command-line entry point: ``nalm-bench {run,single,gradcheck,extract,report}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import backend
from .config import default_out, parse_config
from .gradcheck import GRADCHECK_KINDS, TOLERANCE, gradient_suite
from .layers import extract_expression, load_model, save_model
from .logic import LOGIC_KINDS
from .metrics import MetricSummary
from .report import ReportBundle, emit_tables, render_all
from .runner import records_in, run_matrix
from .trainer import RunConfig, train_nlrl, train_nsr, train_run


def _seeds_arg(text: str):
    text = text.strip()
    if "," in text or "-" in text[1:]:
        if "-" in text[1:] and "," not in text:
            lo, hi = text.split("-", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    return int(text)


def _sweep_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON experiment file")
    p.add_argument("--module", action="append", help="module kind (repeatable or comma separated)")
    p.add_argument("--op", action="append", help="operation: add, sub, mul, div")
    p.add_argument("--interp", help='interpolation range, e.g. "[1,2)"')
    p.add_argument("--extrap", help="extrapolation range; defaults to the standard pairing")
    p.add_argument("--seeds", type=_seeds_arg, help="seed count, list (0,3,7) or span (0-9)")
    p.add_argument("--iters", type=int, help="training iterations")
    p.add_argument("--batch", type=int, help="batch size")
    p.add_argument("--input-size", type=int, help="input width (2 = no redundant inputs)")
    p.add_argument("--lr", type=float, help="learning rate override")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--out", help="output directory (default $NALM_BENCH_OUT or ./nalm_bench_out)")


def _flatten(values):
    if values is None:
        return None
    return [v.strip() for item in values for v in item.split(",") if v.strip()]


def _overrides(args) -> dict:
    ranges = None
    if args.interp:
        ranges = [[args.interp, args.extrap]] if args.extrap else [args.interp]
    elif args.extrap:
        raise SystemExit("--extrap needs --interp")
    return {
        "modules": _flatten(args.module), "operations": _flatten(args.op), "ranges": ranges,
        "seeds": args.seeds, "iterations": args.iters, "batch": args.batch,
        "input_size": args.input_size, "lr": args.lr, "workers": args.workers, "out": args.out,
    }


def _fmt_summary(s: MetricSummary, pct: bool = False) -> str:
    if s.estimate is None:
        return "---"
    f = (lambda v: f"{100 * v:.0f}%") if pct else (lambda v: f"{v:.2g}")
    if s.ci_low is None:
        return f(s.estimate)
    return f"{f(s.estimate)} [{f(s.ci_low)}, {f(s.ci_high)}]"


def print_bundle(bundle: ReportBundle, stream=None) -> None:
    stream = stream or sys.stdout
    for (module, op, rng), m in bundle.cells.items():
        print(f"{module:8s} {op:4s} {rng:22s} success {_fmt_summary(m['success-rate'], True):20s} "
              f"solved-at {_fmt_summary(m['solved-at']):24s} sparsity {_fmt_summary(m['sparsity'])}",
              file=stream)


def cmd_run(args) -> int:
    cfg = parse_config(args.config, _overrides(args))

    def progress(rec, k, n):
        status = "ok" if rec.success else ("error" if rec.error else "fail")
        print(f"[{k}/{n}] {rec.kind} {rec.operation} {rec.interp} seed={rec.seed} {status} "
              f"extrap_mse={rec.extrap_mse:.3g}", file=sys.stderr, flush=True)

    bundle, records = run_matrix(cfg, progress)
    print_bundle(bundle)
    print(f"results written to {cfg.out}")
    return 0


def cmd_single(args) -> int:
    kind = _flatten(args.module or ["nau"])[0]
    op = _flatten(args.op or (["<"] if kind == "nsr" else ["and"] if kind == "nlrl" else ["add"]))[0]
    seed = args.seed
    out = Path(args.out or default_out())
    out.mkdir(parents=True, exist_ok=True)
    if kind in LOGIC_KINDS:
        kw = {"seed": seed}
        if args.iters:
            kw["iterations"] = args.iters
        if args.lr:
            kw["lr"] = args.lr
        rec, model = (train_nsr(op, return_model=True, **kw) if kind == "nsr"
                      else train_nlrl(op, args.input_size or 2, return_model=True, **kw))
        weights = out / f"{kind}_{seed}.json"
        weights.write_text(json.dumps(model.to_dict(), indent=2))
        print(json.dumps(rec.to_dict(), indent=2))
        return 0

    cfg = RunConfig(kind=kind, operation=op, interp=args.interp or "[1,2)", extrap=args.extrap, seed=seed,
                    iterations=args.iters or 50_000, batch_size=args.batch or 128,
                    input_size=args.input_size or 2, lr=args.lr)
    stem = out / f"{kind}_{op}_{cfg.run_id}"
    rec, model = train_run(cfg, curve_path=f"{stem}_curve.csv", return_model=True)
    save_model(model, f"{stem}_weights.json")
    print(json.dumps(rec.to_dict(), indent=2))
    for o, expr in enumerate(extract_expression(model)):
        print(f"y{o} = {expr}" + ("" if expr.discrete else "  [non-discrete]"))
    print(f"curve: {stem}_curve.csv\nweights: {stem}_weights.json")
    return 0


def cmd_gradcheck(args) -> int:
    kinds = _flatten(args.module) or list(GRADCHECK_KINDS)
    unknown = [k for k in kinds if k not in GRADCHECK_KINDS]
    if unknown:
        print(f"unknown module(s): {unknown}", file=sys.stderr)
        return 2
    print(f"backend: {backend.NAME}; tolerance {TOLERANCE:g}")
    failed = False
    for res in gradient_suite(kinds, draws=args.draws):
        compiled = "n/a" if res.compiled_error is None else f"{res.compiled_error:.2e}"
        status = "PASS" if res.passed else "FAIL"
        failed |= not res.passed
        print(f"{res.kind:8s} {status}  max rel error {res.max_error:.2e}  compiled vs graph {compiled}")
    return 1 if failed else 0


def cmd_extract(args) -> int:
    try:
        model = load_model(args.weights)
    except (OSError, ValueError) as exc:
        print(f"error: cannot load {args.weights}: {exc}", file=sys.stderr)
        return 2
    if not hasattr(model, "effective_weights"):
        print(f"error: no expression extraction for {model.kind}", file=sys.stderr)
        return 2
    for o, expr in enumerate(extract_expression(model, args.tolerance)):
        print(f"y{o} = {expr}")
        if not expr.discrete:
            print(f"warning: y{o} has non-discrete weights (tolerance {args.tolerance})", file=sys.stderr)
    return 0


def cmd_report(args) -> int:
    out = Path(args.out or default_out())
    records = records_in(out)
    if not records:
        print(f"error: no run records under {out / 'records'}", file=sys.stderr)
        return 2
    bundle = ReportBundle.from_records(args.label, records)
    emit_tables(bundle, out)
    render_all(bundle, out / "charts")
    print_bundle(bundle)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nalm-bench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a sweep and write tables/charts")
    _sweep_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("single", help="one run with a training-curve CSV and saved weights")
    _sweep_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_single)

    p = sub.add_parser("gradcheck", help="finite-difference check of every module")
    p.add_argument("--module", action="append")
    p.add_argument("--draws", type=int, default=20)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("extract", help="print the expression encoded by saved weights")
    p.add_argument("weights")
    p.add_argument("--tolerance", type=float, default=0.05)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("report", help="re-render tables/charts from stored run records")
    p.add_argument("--out")
    p.add_argument("--label", default="single-module-task")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
