"""Kernel backend selection.

The compiled extension (``_kernels``) is used when it imports; otherwise, or
when ``NALM_BENCH_BACKEND=python`` is set, the pure-Python implementations
below are used. The Python loss/gradient path runs the module's forward pass
through the autodiff graph, which keeps it independent of the hand-derived
compiled gradients.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None

_forced = os.environ.get("NALM_BENCH_BACKEND", "").lower()
if _forced not in ("", "python", "compiled"):
    raise ImportError(f"NALM_BENCH_BACKEND must be 'python' or 'compiled', got {_forced!r}")
if _forced == "compiled" and _kernels is None:
    raise ImportError("NALM_BENCH_BACKEND=compiled but nalm_bench._kernels is not built")

NAME = "compiled" if (_kernels is not None and _forced != "python") else "python"


def compiled_available() -> bool:
    return _kernels is not None


def _adam_update_py(p, g, m, v, lr, beta1, beta2, eps, step, clip_lo, clip_hi):
    g = np.clip(g, clip_lo, clip_hi)
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    mhat = m / (1.0 - beta1 ** step)
    vhat = v / (1.0 - beta2 ** step)
    p -= lr * mhat / (np.sqrt(vhat) + eps)


def adam_update(p, g, m, v, lr, beta1, beta2, eps, step, clip_lo, clip_hi, *, use=None):
    """In-place Adam on flat float64 arrays."""
    if (use or NAME) == "compiled":
        _kernels.adam_update(p, g, m, v, lr, beta1, beta2, eps, step, clip_lo, clip_hi)
    else:
        _adam_update_py(p, g, m, v, lr, beta1, beta2, eps, step, clip_lo, clip_hi)


def mse_and_grad(model, x: np.ndarray, y: np.ndarray, *, use=None) -> tuple[float, dict[str, np.ndarray]]:
    """Batch MSE of ``model`` on (x, y) and its gradient per parameter name."""
    if (use or NAME) == "compiled" and model.compiled_kernel is not None:
        return _compiled_mse_and_grad(model, x, y)
    return _graph_mse_and_grad(model, x, y)


def _graph_mse_and_grad(model, x, y):
    from .autodiff import Graph, Tensor, mse

    for p in model.params.values():
        p.requires_grad = True
        p.zero_grad()
    with Graph() as g:
        loss = mse(model.forward(Tensor(x)), Tensor(y))
    g.backward(loss)
    return loss.item(), {name: p.grad.copy() for name, p in model.params.items()}


def _compiled_mse_and_grad(model, x, y):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    p = {name: t.value for name, t in model.params.items()}
    grads = {name: np.empty_like(v) for name, v in p.items()}
    h = model.hyper
    kind = model.compiled_kernel
    if kind == "nalu":
        loss = _kernels.nalu_grad(x, y, p["W_hat"], p["M_hat"], p["G"],
                                  grads["W_hat"], grads["M_hat"], grads["G"],
                                  model.activation_scale, model.gate_mode, h["eps"])
    elif kind == "nac":
        dummy_g = np.zeros_like(p["W_hat"])
        loss = _kernels.nalu_grad(x, y, p["W_hat"], p["M_hat"], dummy_g,
                                  grads["W_hat"], grads["M_hat"], np.empty_like(dummy_g),
                                  model.activation_scale, model.gate_mode, h["eps"])
    elif kind == "inalu":
        loss = _kernels.inalu_grad(x, y, p["Wa_hat"], p["Ma_hat"], p["Wm_hat"], p["Mm_hat"], p["g"],
                                   grads["Wa_hat"], grads["Ma_hat"], grads["Wm_hat"], grads["Mm_hat"],
                                   grads["g"], h["eps"], h["omega"])
    elif kind == "nau":
        loss = _kernels.nau_grad(x, y, p["W"], grads["W"])
    elif kind == "nmu":
        loss = _kernels.nmu_grad(x, y, p["W"], grads["W"])
    elif kind in ("npu", "realnpu"):
        real = kind == "realnpu"
        w_im = np.zeros_like(p["W_re"]) if real else p["W_im"]
        d_im = np.empty_like(w_im) if real else grads["W_im"]
        loss = _kernels.npu_grad(x, y, p["W_re"], w_im, p["g"],
                                 grads["W_re"], d_im, grads["g"], h["eps"], real)
    else:
        raise ValueError(f"no compiled kernel named {kind!r}")
    return float(loss), grads
