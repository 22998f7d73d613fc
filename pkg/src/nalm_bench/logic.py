"""Logic modules: NLRL (boolean rules) and NSR (comparisons)."""
from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import DomainError, Tensor

NLRL_VARIANTS = ("and-only", "full")


class _LogicModel:
    kind = ""
    compiled_kernel = None
    grad_clip = None

    def predict(self, x):
        out = self.forward(Tensor(x))
        if isinstance(out, tuple):
            return tuple(o.value for o in out)
        return out.value

    def project(self) -> None:
        pass

    def penalty(self, iteration, recent_loss=0.0):
        return 0.0, {}

    def penalty_graph(self, iteration, recent_loss=0.0):
        return None

    def set_params(self, **values):
        for name, v in values.items():
            p = self.params[name]
            p.value[...] = np.array(v, dtype=np.float64, ndmin=2).reshape(p.shape)
        return self

    def _extra(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "in_features": self.in_features,
            "out_features": self.out_features,
            "shapes": {n: list(p.shape) for n, p in self.params.items()},
            "params": {n: p.value.tolist() for n, p in self.params.items()},
            "hyper": self._extra(),
        }

    @classmethod
    def from_dict(cls, doc: dict):
        try:
            model = cls(int(doc["in_features"]), int(doc["out_features"]), **doc.get("hyper", {}))
            for name, p in model.params.items():
                value = np.array(doc["params"][name], dtype=np.float64, ndmin=2)
                if value.shape != p.shape:
                    raise ValueError(f"parameter {name}: expected shape {p.shape}, got {value.shape}")
                p.value[...] = value
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed model document: {exc}") from exc
        return model


def _gate_mix(gate: Tensor, keep: Tensor, flip: Tensor) -> Tensor:
    return ad.rsub_scalar(gate, 1.0) * keep + gate * flip


class Nlrl(_LogicModel):
    """Neural logic rule layer.

    ``and-only`` (default) negates the inputs, takes a soft conjunction and
    passes the result through a second negation gate, so any rule in
    conjunctive/De-Morgan form is reachable without the disjunction block.
    ``full`` mixes the conjunction with a soft disjunction via an output gate.
    """

    kind = "nlrl"

    def __init__(self, in_features: int, out_features: int = 1, variant: str = "and-only",
                 eps: float = 1e-7):
        if variant not in NLRL_VARIANTS:
            raise ValueError(f"variant must be one of {NLRL_VARIANTS}, got {variant!r}")
        self.in_features, self.out_features = in_features, out_features
        self.variant = variant
        self.eps = eps
        I, O = in_features, out_features
        self.params = {
            "G_neg": Tensor(np.zeros((I, O)), True, "G_neg"),
            "A": Tensor(np.zeros((I, O)), True, "A"),
            "G_out": Tensor(np.zeros((1, O)), True, "G_out"),
        }

    def _extra(self):
        return {"variant": self.variant, "eps": self.eps}

    def reset(self, rng: np.random.Generator) -> None:
        I, O = self.in_features, self.out_features
        self.params["G_neg"].value[...] = rng.normal(0.0, 1.0, size=(I, O))
        self.params["A"].value[...] = rng.uniform(0.0, 1.0, size=(I, O))
        self.params["G_out"].value[...] = rng.normal(0.0, 1.0, size=(1, O))

    def _negated_inputs(self, x: Tensor, o: int) -> Tensor:
        # n x I matrix of x-hat for output o
        gate = ad.tile_rows(ad.transpose(ad.sigmoid(ad.column(self.params["G_neg"], o))), x.rows)
        return _gate_mix(gate, x, ad.rsub_scalar(x, 1.0))

    def forward(self, x):
        x = ad.as_tensor(x)
        v = x.value
        if np.any((v < 0.0) | (v > 1.0)) or not np.all(np.isfinite(v)):
            raise DomainError("NLRL inputs must lie in [0, 1]")
        n = x.rows
        A = self.params["A"]
        outs = []
        for o in range(self.out_features):
            xh = self._negated_inputs(x, o)
            a_col = ad.column(A, o)
            z_and = ad.exp(ad.matmul(ad.log_abs_eps(xh, self.eps), a_col))
            gate = ad.tile_rows(ad.sigmoid(ad.column(self.params["G_out"], o)), n)
            if self.variant == "and-only":
                outs.append(_gate_mix(gate, z_and, ad.rsub_scalar(z_and, 1.0)))
            else:
                a_row = ad.tile_rows(ad.transpose(a_col), n)
                z_or = ad.rsub_scalar(ad.rowprod(ad.rsub_scalar(a_row * xh, 1.0)), 1.0)
                outs.append(_gate_mix(gate, z_and, z_or))
        return ad.hstack(outs)


class Nsr(_LogicModel):
    """Neural status register. ``forward`` returns the pair (y, 1 - y)."""

    kind = "nsr"

    def __init__(self, in_features: int, out_features: int = 1, lam: float = 1.0, redundancy: int = 1):
        if lam <= 0:
            raise ValueError("lam must be positive")
        if redundancy < 1:
            raise ValueError("redundancy must be at least 1")
        self.in_features, self.out_features = in_features, out_features
        self.lam = float(lam)
        self.redundancy = int(redundancy)
        I, P = in_features, out_features * redundancy
        self.params = {
            "V_op1": Tensor(np.zeros((I, P)), True, "V_op1"),
            "V_op2": Tensor(np.zeros((I, P)), True, "V_op2"),
            "W_sign": Tensor(np.zeros((1, P)), True, "W_sign"),
            "W_zero": Tensor(np.zeros((1, P)), True, "W_zero"),
            "b": Tensor(np.zeros((1, P)), True, "b"),
        }
        # paths for output o occupy columns o*R .. o*R + R - 1
        self._fold = Tensor(np.kron(np.eye(out_features), np.ones((redundancy, 1))))

    def _extra(self):
        return {"lam": self.lam, "redundancy": self.redundancy}

    def reset(self, rng: np.random.Generator) -> None:
        I, P = self.in_features, self.out_features * self.redundancy
        self.params["V_op1"].value[...] = rng.normal(0.0, 1.0, size=(I, P))
        self.params["V_op2"].value[...] = rng.normal(0.0, 1.0, size=(I, P))
        self.params["W_sign"].value[...] = rng.uniform(-1.0, 1.0, size=(1, P))
        self.params["W_zero"].value[...] = rng.uniform(-1.0, 1.0, size=(1, P))
        self.params["b"].value[...] = 0.0

    def difference(self, x: Tensor) -> Tensor:
        x = ad.as_tensor(x)
        op1 = ad.matmul(x, ad.softmax_cols(self.params["V_op1"]))
        op2 = ad.matmul(x, ad.softmax_cols(self.params["V_op2"]))
        return ad.mul_scalar(op1 - op2, self.lam)

    def logits(self, x) -> Tensor:
        x = ad.as_tensor(x)
        n = x.rows
        sign_bit = ad.tanh(self.difference(x))
        zero_bit = ad.rsub_scalar(ad.mul_scalar(sign_bit * sign_bit, 2.0), 1.0)
        p = self.params
        z = (sign_bit * ad.tile_rows(p["W_sign"], n) + zero_bit * ad.tile_rows(p["W_zero"], n)
             + ad.tile_rows(p["b"], n))
        return ad.matmul(z, self._fold)

    def forward(self, x):
        y = ad.sigmoid(self.logits(x))
        return y, ad.rsub_scalar(y, 1.0)


LOGIC_CLASSES = {"nlrl": Nlrl, "nsr": Nsr}
LOGIC_KINDS = tuple(LOGIC_CLASSES)
