"""Timed-automata model checker with a buffer-network case study."""

from .core import ModelError
from .modelspec import ModelSyntaxError, load_network, parse_model, parse_queries, print_model
from .verifier import Verdict, check, simulate

__all__ = [
    "ModelError",
    "ModelSyntaxError",
    "Verdict",
    "check",
    "load_network",
    "parse_model",
    "parse_queries",
    "print_model",
    "simulate",
]
