"""Arithmetic modules: NAC+, NAC*, NALU, G-NALU, iNALU, NAU, NMU, NPU, RealNPU.

Every model keeps its learnable matrices in ``model.params`` (name -> Tensor,
shape I x O unless noted) and its constants in ``model.hyper``. ``forward``
works on autodiff tensors; ``predict`` is the numpy convenience wrapper.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Callable

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

EPS_LOG = 1e-7
PHI = (1.0 + math.sqrt(5.0)) / 2.0
LN_PHI = math.log(PHI)
SPARSITY_FLOOR = 1e-16

BASE_HYPER = {
    "eps": EPS_LOG,
    # iNALU
    "omega": 20.0,
    "t": 20.0,
    "reg_min_iter": 10_000,
    "reg_loss_gate": 1.0,
    "reinit_period": 10,
    "reinit_min_iter": 10_000,
    "reinit_loss_floor": 1.0,
    "reinit_history": 5000,
    # NAU / NMU
    "lambda_hat": 0.0,
    "lambda_start": 20_000,
    "lambda_end": 35_000,
    # NPU / RealNPU
    "beta_start": 1e-7,
    "beta_end": 1e-5,
    "beta_growth": 10.0,
    "beta_step": 10_000,
}


def module_defaults(kind: str, operation: str | None = None) -> tuple[dict, float]:
    """Per-module hyperparameter overrides and learning rate for an operation."""
    hyper: dict = {}
    lr = 1e-3
    if kind == "nau":
        hyper["lambda_hat"] = 0.01
    elif kind == "nmu":
        hyper["lambda_hat"] = 10.0
    elif kind in ("npu", "realnpu"):
        if operation == "div":
            hyper.update(beta_start=1e-9, beta_end=1e-7)
        else:
            hyper.update(beta_start=1e-7, beta_end=1e-5)
        if operation in ("mul", "div"):
            lr = 5e-3
    return hyper, lr


# -- schedules ----------------------------------------------------------

def lambda_scale(iteration: int, lambda_hat: float, start: float, end: float) -> float:
    """Warm-up factor for the discreteness penalty: 0 before start, lambda_hat after end."""
    if end <= start:
        return lambda_hat if iteration >= end else 0.0
    return lambda_hat * max(min((iteration - start) / (end - start), 1.0), 0.0)


def beta_schedule(iteration: int, start: float, end: float, growth: float, step: int) -> float:
    return min(start * growth ** (iteration // step), end)


def inalu_should_reinit(history, iteration: int, period: int = 10, min_iter: int = 10_000,
                        loss_floor: float = 1.0, capacity: int | None = None) -> bool:
    """Restart test: loss stopped improving and is still above ``loss_floor``.

    ``history`` holds the most recent losses, oldest first. The test only runs
    once the history is full when ``capacity`` is given.
    """
    if iteration % period != 0 or iteration <= min_iter:
        return False
    h = np.asarray(history, dtype=np.float64)
    if len(h) < 2 or (capacity is not None and len(h) < capacity):
        return False
    half = len(h) // 2
    first, second = h[:half], h[half:]
    return bool(first.mean() < second.mean() + second.std() and second.mean() > loss_floor)


def _discreteness(w: np.ndarray) -> np.ndarray:
    return np.minimum(np.abs(w), 1.0 - np.abs(w))


def _discreteness_graph(w: Tensor) -> Tensor:
    # min(|w|, 1 - |w|) == 0.5 - | |w| - 0.5 |
    return ad.rsub_scalar(ad.abs_(ad.add_scalar(ad.abs_(w), -0.5)), 0.5)


def _discreteness_grad(w: np.ndarray) -> np.ndarray:
    return -np.sign(np.abs(w) - 0.5) * np.sign(w)


def _xavier(rng, I, O, gain=1.0, shape=None):
    r = gain * math.sqrt(6.0 / (I + O))
    return rng.uniform(-r, r, size=shape or (I, O))


# -- models -------------------------------------------------------------

class NalmModel:
    """Base class. Subclasses define ``kind``, ``param_shapes`` and ``forward``."""

    kind = ""
    compiled_kernel: str | None = None
    grad_clip: tuple[float, float] | None = None

    def __init__(self, in_features: int, out_features: int = 1, hyper: dict | None = None):
        if in_features < 1 or out_features < 1:
            raise ValueError("in_features and out_features must be positive")
        self.in_features = in_features
        self.out_features = out_features
        self.hyper = dict(BASE_HYPER)
        self.hyper.update(module_defaults(self.kind)[0])
        if hyper:
            unknown = set(hyper) - set(BASE_HYPER)
            if unknown:
                raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")
            self.hyper.update(hyper)
        self.params = {name: Tensor(np.zeros(shape), requires_grad=True, name=name)
                       for name, shape in self.param_shapes().items()}

    def param_shapes(self) -> dict[str, tuple[int, int]]:
        raise NotImplementedError

    def reset(self, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def forward(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def predict(self, x) -> np.ndarray:
        return self.forward(Tensor(x)).value

    def set_params(self, **values) -> NalmModel:
        for name, v in values.items():
            p = self.params[name]
            v = np.array(v, dtype=np.float64, ndmin=2)
            if v.shape != p.shape:
                v = v.reshape(p.shape)
            p.value[...] = v
        return self

    def project(self) -> None:
        """Post-optimizer-step projection onto the feasible weight set."""

    def effective_weights(self) -> list[np.ndarray]:
        raise NotImplementedError

    def penalty(self, iteration: int, recent_loss: float = 0.0) -> tuple[float, dict[str, np.ndarray]]:
        """Regularization value and its gradient for the current iteration."""
        return 0.0, {}

    def penalty_graph(self, iteration: int, recent_loss: float = 0.0) -> Tensor | None:
        """Same penalty as :meth:`penalty`, expressed on the autodiff graph."""
        return None

    def sparsity_error(self) -> float:
        return sparsity_error(self)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "in_features": self.in_features,
            "out_features": self.out_features,
            "shapes": {n: list(p.shape) for n, p in self.params.items()},
            "params": {n: p.value.tolist() for n, p in self.params.items()},
            "hyper": dict(self.hyper),
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.in_features} -> {self.out_features})"


def _nac_weight(w_hat: Tensor, m_hat: Tensor, scale: float = 1.0) -> Tensor:
    if scale != 1.0:
        w_hat, m_hat = ad.mul_scalar(w_hat, scale), ad.mul_scalar(m_hat, scale)
    return ad.tanh(w_hat) * ad.sigmoid(m_hat)


def _nac_weight_np(w_hat, m_hat, scale=1.0):
    return np.tanh(scale * w_hat) * ad._sigmoid(scale * m_hat)


class _NaluFamily(NalmModel):
    compiled_kernel = "nalu"
    activation_scale = 1.0
    gate_mode = 0  # 0 gated, 1 additive only, 2 multiplicative only

    def param_shapes(self):
        I, O = self.in_features, self.out_features
        shapes = {"W_hat": (I, O), "M_hat": (I, O)}
        if self.gate_mode == 0:
            shapes["G"] = (I, O)
        return shapes

    def reset(self, rng):
        I, O = self.in_features, self.out_features
        self.params["W_hat"].value[...] = _xavier(rng, I, O)
        self.params["M_hat"].value[...] = _xavier(rng, I, O)
        if "G" in self.params:
            self.params["G"].value[...] = _xavier(rng, I, O, gain=1.0)

    def weight(self) -> Tensor:
        return _nac_weight(self.params["W_hat"], self.params["M_hat"], self.activation_scale)

    def effective_weights(self):
        return [_nac_weight_np(self.params["W_hat"].value, self.params["M_hat"].value,
                               self.activation_scale)]

    def additive(self, x: Tensor) -> Tensor:
        return ad.matmul(x, self.weight())

    def multiplicative(self, x: Tensor) -> Tensor:
        logs = ad.log_abs_eps(x, self.hyper["eps"])
        return ad.exp(ad.matmul(logs, self.weight()))

    def gate(self, x: Tensor) -> Tensor:
        return ad.sigmoid(ad.matmul(x, self.params["G"]))

    def forward(self, x):
        x = ad.as_tensor(x)
        if self.gate_mode == 1:
            return self.additive(x)
        if self.gate_mode == 2:
            return self.multiplicative(x)
        g = self.gate(x)
        return g * self.additive(x) + ad.rsub_scalar(g, 1.0) * self.multiplicative(x)


class NacAdd(_NaluFamily):
    kind = "nac_add"
    compiled_kernel = "nac"
    gate_mode = 1


class NacMul(_NaluFamily):
    kind = "nac_mul"
    compiled_kernel = "nac"
    gate_mode = 2


class Nalu(_NaluFamily):
    kind = "nalu"


def phi_sigmoid(z: Tensor) -> Tensor:
    """1 / (1 + phi^-z)"""
    return ad.sigmoid(ad.mul_scalar(z, LN_PHI))


def phi_tanh(z: Tensor) -> Tensor:
    """(phi^2z - 1) / (phi^2z + 1)"""
    return ad.tanh(ad.mul_scalar(z, LN_PHI))


class GNalu(_NaluFamily):
    """NALU with golden-ratio based tanh/sigmoid and a base-phi exponent."""

    kind = "gnalu"
    activation_scale = LN_PHI

    def weight(self):
        return phi_tanh(self.params["W_hat"]) * phi_sigmoid(self.params["M_hat"])

    def multiplicative(self, x):
        logs = ad.log_abs_eps(x, self.hyper["eps"])
        exponent = ad.mul_scalar(ad.matmul(logs, self.weight()), 1.0 / LN_PHI)
        return ad.exp(ad.mul_scalar(exponent, LN_PHI))  # phi ** exponent

    def gate(self, x):
        return phi_sigmoid(ad.matmul(x, self.params["G"]))


def _row_product_by_column(weights: Tensor, n: int, build: Callable[[Tensor], Tensor]) -> Tensor:
    # For every output column o: prod_i build(W[:, o] as a tiled row)[b, i].
    cols = []
    for o in range(weights.cols):
        row = ad.tile_rows(ad.transpose(ad.column(weights, o)), n)
        cols.append(ad.rowprod(build(row)))
    return ad.hstack(cols)


class INalu(NalmModel):
    kind = "inalu"
    compiled_kernel = "inalu"
    grad_clip = (-0.1, 0.1)
    group_names = ("Wa_hat", "Ma_hat", "Wm_hat", "Mm_hat", "g")
    init_std = 0.5
    init_means = {"Wa_hat": 1.0, "Ma_hat": -1.0, "Wm_hat": 1.0, "Mm_hat": -1.0, "g": 0.0}

    def param_shapes(self):
        I, O = self.in_features, self.out_features
        return {"Wa_hat": (I, O), "Ma_hat": (I, O), "Wm_hat": (I, O), "Mm_hat": (I, O), "g": (1, O)}

    def reset(self, rng):
        for name in self.group_names:
            p = self.params[name]
            p.value[...] = rng.normal(self.init_means[name], self.init_std, size=p.shape)

    def weights(self) -> tuple[Tensor, Tensor]:
        p = self.params
        return _nac_weight(p["Wa_hat"], p["Ma_hat"]), _nac_weight(p["Wm_hat"], p["Mm_hat"])

    def effective_weights(self):
        p = {k: v.value for k, v in self.params.items()}
        return [_nac_weight_np(p["Wa_hat"], p["Ma_hat"]), _nac_weight_np(p["Wm_hat"], p["Mm_hat"])]

    def mixed_sign_vector(self, x: Tensor, w_m: Tensor) -> Tensor:
        signs = ad.sign(x)
        return _row_product_by_column(
            w_m, x.rows, lambda row: signs * ad.abs_(row) + ad.rsub_scalar(ad.abs_(row), 1.0))

    def multiplicative(self, x: Tensor, w_m: Tensor) -> Tensor:
        logs = Tensor(np.log(np.maximum(np.abs(x.value), self.hyper["eps"])))
        return ad.exp(ad.clamp(ad.matmul(logs, w_m), hi=self.hyper["omega"]))

    def forward(self, x):
        x = ad.as_tensor(x)
        w_a, w_m = self.weights()
        a = ad.matmul(x, w_a)
        m = self.multiplicative(x, w_m) * self.mixed_sign_vector(x, w_m)
        g = ad.tile_rows(ad.sigmoid(self.params["g"]), x.rows)
        return g * a + ad.rsub_scalar(g, 1.0) * m

    def _reg_active(self, iteration, recent_loss):
        h = self.hyper
        return recent_loss < h["reg_loss_gate"] and iteration > h["reg_min_iter"]

    def penalty(self, iteration, recent_loss=0.0):
        if not self._reg_active(iteration, recent_loss):
            return 0.0, {}
        t = self.hyper["t"]
        value, grads = 0.0, {}
        for name in self.group_names:
            th = self.params[name].value
            gap = t - np.abs(th)
            value += np.maximum(gap, 0.0).mean() / t
            grads[name] = np.where(gap >= 0, -np.sign(th), 0.0) / (t * th.size)
        return float(value), grads

    def penalty_graph(self, iteration, recent_loss=0.0):
        if not self._reg_active(iteration, recent_loss):
            return None
        t = self.hyper["t"]
        terms = [ad.mean(ad.clamp(ad.rsub_scalar(ad.abs_(self.params[n]), t), lo=0.0))
                 for n in self.group_names]
        total = terms[0]
        for term in terms[1:]:
            total = total + term
        return ad.mul_scalar(total, 1.0 / t)


class _DiscreteWeightUnit(NalmModel):
    lower = -1.0

    def param_shapes(self):
        return {"W": (self.in_features, self.out_features)}

    def clamped(self) -> Tensor:
        return ad.clamp(self.params["W"], self.lower, 1.0)

    def project(self):
        w = self.params["W"].value
        np.clip(w, self.lower, 1.0, out=w)

    def effective_weights(self):
        return [np.clip(self.params["W"].value, self.lower, 1.0)]

    def _scale(self, iteration):
        h = self.hyper
        return lambda_scale(iteration, h["lambda_hat"], h["lambda_start"], h["lambda_end"])

    def penalty(self, iteration, recent_loss=0.0):
        lam = self._scale(iteration)
        if lam == 0.0:
            return 0.0, {}
        w = self.params["W"].value
        return float(lam * _discreteness(w).mean()), {"W": lam * _discreteness_grad(w) / w.size}

    def penalty_graph(self, iteration, recent_loss=0.0):
        lam = self._scale(iteration)
        if lam == 0.0:
            return None
        return ad.mul_scalar(ad.mean(_discreteness_graph(self.params["W"])), lam)


class Nau(_DiscreteWeightUnit):
    kind = "nau"
    compiled_kernel = "nau"
    lower = -1.0

    def reset(self, rng):
        I, O = self.in_features, self.out_features
        self.params["W"].value[...] = np.clip(_xavier(rng, I, O), -1.0, 1.0)

    def forward(self, x):
        return ad.matmul(ad.as_tensor(x), self.clamped())


class Nmu(_DiscreteWeightUnit):
    kind = "nmu"
    compiled_kernel = "nmu"
    lower = 0.0

    def reset(self, rng):
        self.params["W"].value[...] = rng.uniform(0.25, 0.75, size=self.params["W"].shape)

    def forward(self, x):
        x = ad.as_tensor(x)
        return _row_product_by_column(self.clamped(), x.rows,
                                      lambda row: x * row + ad.rsub_scalar(row, 1.0))


class Npu(NalmModel):
    """Neural power unit; gate ``g`` is 1 x I and clipped to [0, 1] in the forward pass."""

    kind = "npu"
    compiled_kernel = "npu"
    weight_names = ("W_re", "W_im")

    def param_shapes(self):
        I, O = self.in_features, self.out_features
        return {"W_re": (I, O), "W_im": (I, O), "g": (1, I)}

    def reset(self, rng):
        I, O = self.in_features, self.out_features
        self.params["W_re"].value[...] = _xavier(rng, I, O)
        if "W_im" in self.params:
            self.params["W_im"].value[...] = 0.0
        self.params["g"].value[...] = 0.5

    def _log_and_angle(self, x: Tensor) -> tuple[Tensor, Tensor]:
        n = x.rows
        g = ad.tile_rows(ad.clamp(self.params["g"], 0.0, 1.0), n)
        magnitude = Tensor(np.abs(x.value) + self.hyper["eps"])
        r = g * magnitude + ad.rsub_scalar(g, 1.0)
        k = g * Tensor(np.pi * (x.value < 0))
        return ad.log(r), k

    def forward(self, x):
        x = ad.as_tensor(x)
        log_r, k = self._log_and_angle(x)
        w_re, w_im = self.params["W_re"], self.params["W_im"]
        real = ad.matmul(log_r, w_re) - ad.matmul(k, w_im)
        angle = ad.matmul(log_r, w_im) + ad.matmul(k, w_re)
        return ad.exp(real) * ad.cos(angle)

    def effective_weights(self):
        return [self.params[n].value for n in self.weight_names]

    def _beta(self, iteration):
        h = self.hyper
        return beta_schedule(iteration, h["beta_start"], h["beta_end"], h["beta_growth"], int(h["beta_step"]))

    def penalty(self, iteration, recent_loss=0.0):
        beta = self._beta(iteration)
        value, grads = 0.0, {}
        for name, p in self.params.items():
            value += np.abs(p.value).sum()
            grads[name] = beta * np.sign(p.value)
        return float(beta * value), grads

    def penalty_graph(self, iteration, recent_loss=0.0):
        beta = self._beta(iteration)
        terms = [ad.sum_(ad.abs_(p)) for p in self.params.values()]
        total = terms[0]
        for term in terms[1:]:
            total = total + term
        return ad.mul_scalar(total, beta)


class RealNpu(Npu):
    kind = "realnpu"
    compiled_kernel = "realnpu"
    weight_names = ("W_re",)

    def param_shapes(self):
        I, O = self.in_features, self.out_features
        return {"W_re": (I, O), "g": (1, I)}

    def forward(self, x):
        x = ad.as_tensor(x)
        log_r, k = self._log_and_angle(x)
        w_re = self.params["W_re"]
        return ad.exp(ad.matmul(log_r, w_re)) * ad.cos(ad.matmul(k, w_re))


MODEL_CLASSES: dict[str, type[NalmModel]] = {
    cls.kind: cls for cls in (NacAdd, NacMul, Nalu, GNalu, INalu, Nau, Nmu, Npu, RealNpu)
}
ARITHMETIC_KINDS = tuple(MODEL_CLASSES)


def register(cls: type[NalmModel]) -> type[NalmModel]:
    MODEL_CLASSES[cls.kind] = cls
    return cls


def make_model(kind: str, in_features: int, out_features: int = 1, hyper: dict | None = None) -> NalmModel:
    try:
        cls = MODEL_CLASSES[kind]
    except KeyError:
        raise ValueError(f"unknown module kind {kind!r}; expected one of {sorted(MODEL_CLASSES)}") from None
    return cls(in_features, out_features, hyper)


def init_weights(kind: str, in_features: int, out_features: int = 1, seed: int | np.random.Generator = 0,
                 hyper: dict | None = None) -> NalmModel:
    model = make_model(kind, in_features, out_features, hyper)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    model.reset(rng)
    return model


class Stack:
    """Sequential composition; parameters are namespaced ``<index>.<name>``."""

    def __init__(self, *modules):
        self.modules = list(modules)

    @property
    def params(self) -> dict[str, Tensor]:
        return {f"{i}.{n}": p for i, m in enumerate(self.modules) for n, p in m.params.items()}

    def forward(self, x):
        for m in self.modules:
            x = m.forward(x)
        return x

    def predict(self, x):
        return self.forward(Tensor(x)).value


# -- metrics and interpretation ----------------------------------------

def sparsity_error(model) -> float:
    """Distance of the worst effective weight from the nearest allowed discrete value."""
    worst = max(float(_discreteness(w).max()) for w in model.effective_weights())
    return float(min(max(worst, SPARSITY_FLOOR), 0.5))


def _snap(w: float, tol: float) -> tuple[float, bool]:
    for target in (-1.0, 0.0, 1.0):
        if abs(w - target) <= tol:
            return target, True
    return w, False


def _fmt_power(w: float) -> str:
    return f"{w:.3g}"


def _sum_expression(column: np.ndarray, tol: float) -> tuple[str, bool]:
    parts, ok = [], True
    for i, w in enumerate(column):
        v, exact = _snap(float(w), tol)
        ok &= exact
        if v == 0.0:
            continue
        if exact:
            parts.append(("+", f"x{i}") if v > 0 else ("-", f"x{i}"))
        else:
            parts.append(("+", f"{v:.3g}*x{i}") if v > 0 else ("-", f"{-v:.3g}*x{i}"))
    if not parts:
        return "0", ok
    text = parts[0][1] if parts[0][0] == "+" else f"-{parts[0][1]}"
    for op, term in parts[1:]:
        text += f" {op} {term}"
    return text, ok


def _product_expression(column: np.ndarray, tol: float, allow_fraction: bool = False) -> tuple[str, bool]:
    num, den, ok = [], [], True
    for i, w in enumerate(column):
        v, exact = _snap(float(w), tol)
        if not exact and not allow_fraction:
            ok = False
        if v == 0.0:
            continue
        if exact:
            (num if v > 0 else den).append(f"x{i}")
        else:
            if not allow_fraction:
                ok = False
            (num if v > 0 else den).append(f"x{i}^{_fmt_power(abs(v))}")
    text = " * ".join(num) if num else "1"
    for d in den:
        text += f" / {d}"
    return text, ok


class OutputExpression(str):
    """Expression text for one output; ``discrete`` is False when some weight was not snapped."""

    discrete: bool

    def __new__(cls, text: str, discrete: bool):
        obj = super().__new__(cls, text)
        obj.discrete = discrete
        return obj


def extract_expression(model: NalmModel, tolerance: float = 0.05) -> list[OutputExpression]:
    """One symbolic expression per output element, inputs named x0..x{I-1}."""
    out = []
    kind = model.kind
    for o in range(model.out_features):
        if kind in ("nau", "nac_add"):
            text, ok = _sum_expression(model.effective_weights()[0][:, o], tolerance)
        elif kind in ("nmu", "nac_mul"):
            text, ok = _product_expression(model.effective_weights()[0][:, o], tolerance)
        elif kind in ("npu", "realnpu"):
            w_re = model.params["W_re"].value[:, o].copy()
            gate = np.clip(model.params["g"].value[0], 0.0, 1.0)
            w_re[gate <= tolerance] = 0.0
            text, ok = _product_expression(w_re, tolerance, allow_fraction=True)
            ok &= bool(np.all((gate <= tolerance) | (gate >= 1 - tolerance)))
            if kind == "npu":
                ok &= bool(np.all(np.abs(model.params["W_im"].value[:, o]) <= tolerance))
        elif kind == "inalu":
            w_a, w_m = model.effective_weights()
            gate = float(ad._sigmoid(model.params["g"].value[:, o:o + 1])[0, 0])
            add_text, add_ok = _sum_expression(w_a[:, o], tolerance)
            mul_text, mul_ok = _product_expression(w_m[:, o], tolerance)
            if gate >= 1 - tolerance:
                text, ok = add_text, add_ok
            elif gate <= tolerance:
                text, ok = mul_text, mul_ok
            else:
                text, ok = f"{gate:.3g}*({add_text}) + {1 - gate:.3g}*({mul_text})", False
        elif kind in ("nalu", "gnalu"):
            w = model.effective_weights()[0][:, o]
            add_text, _ = _sum_expression(w, tolerance)
            mul_text, _ = _product_expression(w, tolerance)
            # the gate depends on x, so both readings are reported
            text, ok = f"gate(x) ? {add_text} : {mul_text}", False
        else:
            raise ValueError(f"no expression extraction for {kind!r}")
        out.append(OutputExpression(text, bool(ok)))
    return out


# -- serialization ------------------------------------------------------

def model_from_dict(doc: dict) -> NalmModel:
    try:
        kind = doc["kind"]
        model = make_model(kind, int(doc["in_features"]), int(doc["out_features"]), doc.get("hyper"))
        for name, p in model.params.items():
            value = np.array(doc["params"][name], dtype=np.float64, ndmin=2)
            if value.shape != p.shape:
                raise ValueError(f"parameter {name}: expected shape {p.shape}, got {value.shape}")
            p.value[...] = value
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model document: {exc}") from exc
    return model


def save_model(model: NalmModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2))


def load_model(path) -> NalmModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a JSON object")
    from .logic import LOGIC_CLASSES  # logic models share the document format

    if doc.get("kind") in LOGIC_CLASSES:
        return LOGIC_CLASSES[doc["kind"]].from_dict(doc)
    return model_from_dict(doc)
