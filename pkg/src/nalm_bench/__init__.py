"""Neural arithmetic logic modules and the single-module arithmetic benchmark."""
from .autodiff import DomainError, Graph, GraphError, ShapeError, Tensor, grad_check
from .backend import NAME as BACKEND
from .layers import (ARITHMETIC_KINDS, init_weights, load_model, make_model, save_model,
                     extract_expression, sparsity_error)
from .logic import LOGIC_KINDS, Nlrl, Nsr

__version__ = "0.1.0"

__all__ = [
    "Tensor", "Graph", "ShapeError", "GraphError", "DomainError", "grad_check", "BACKEND",
    "ARITHMETIC_KINDS", "LOGIC_KINDS", "init_weights", "make_model", "load_model", "save_model",
    "extract_expression", "sparsity_error", "Nlrl", "Nsr",
]
