"""Time the compiled kernels against the pure-Python (autodiff) path.

    python3 benchmarks/bench_backends.py [--steps 2000] [--batch 128]

Reports microseconds per loss+gradient evaluation and per full training step
for every arithmetic module kind, plus the speed-up.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from nalm_bench import backend
from nalm_bench.layers import ARITHMETIC_KINDS, init_weights
from nalm_bench.optim import AdamState, adam_step


def _time_grad(model, x, y, use, steps):
    start = time.perf_counter()
    for _ in range(steps):
        backend.mse_and_grad(model, x, y, use=use)
    return 1e6 * (time.perf_counter() - start) / steps


def _time_step(model, x, y, use, steps):
    params = list(model.params.values())
    state = AdamState()
    start = time.perf_counter()
    for _ in range(steps):
        _, grads = backend.mse_and_grad(model, x, y, use=use)
        for name, p in model.params.items():
            p.grad[...] = grads[name]
        adam_step(params, state, 1e-3, model.grad_clip)
        model.project()
    return 1e6 * (time.perf_counter() - start) / steps


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--input-size", type=int, default=2)
    args = ap.parse_args(argv)
    if not backend.compiled_available():
        raise SystemExit("compiled extension is not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(0)
    x = rng.uniform(1, 2, size=(args.batch, args.input_size))
    y = (x[:, 0] * x[:, 1])[:, None]
    print(f"batch {args.batch}, I={args.input_size}, {args.steps} steps; microseconds per call")
    print(f"{'module':8s} {'grad py':>9s} {'grad c':>9s} {'x':>6s} {'step py':>9s} {'step c':>9s} {'x':>6s}")
    for kind in ARITHMETIC_KINDS:
        row = {}
        for use in ("python", "compiled"):
            model = init_weights(kind, args.input_size, 1, seed=0)
            row[use] = (_time_grad(model, x, y, use, args.steps), _time_step(model, x, y, use, args.steps))
        gp, sp = row["python"]
        gc, sc = row["compiled"]
        print(f"{kind:8s} {gp:9.1f} {gc:9.1f} {gp / gc:6.1f} {sp:9.1f} {sc:9.1f} {sp / sc:6.1f}")


if __name__ == "__main__":
    main()
