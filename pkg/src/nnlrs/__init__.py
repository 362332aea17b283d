"""Nonnegative low-rank and sparse graphs for semi-supervised learning."""

__version__ = "0.1.0"

from .graph import AffinityGraph, build_nnlrs_graph, knn_gaussian_graph
from .solver import NnlrsConfig, NnlrsSolution, solve_nnlrs
from .embedding import EfConfig, build_ef_graph, solve_ef
from .ssl import LabelProblem, error_rate, ghf_propagate, lgc_propagate

__all__ = [
    "AffinityGraph",
    "build_nnlrs_graph",
    "knn_gaussian_graph",
    "NnlrsConfig",
    "NnlrsSolution",
    "solve_nnlrs",
    "EfConfig",
    "build_ef_graph",
    "solve_ef",
    "LabelProblem",
    "error_rate",
    "ghf_propagate",
    "lgc_propagate",
]
