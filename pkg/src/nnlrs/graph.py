"""Affinity graphs from representation coefficients, plus the kNN baseline."""

import logging
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataio import MatrixFormatError, load_matrix, read_header, save_matrix
from .proximal import column_norms
from .solver import NnlrsConfig, solve_nnlrs

__all__ = [
    "AffinityGraph",
    "normalize_samples",
    "postprocess_coefficients",
    "symmetrize",
    "build_nnlrs_graph",
    "graph_from_coefficients",
    "knn_gaussian_graph",
    "laplacian",
    "normalized_laplacian",
    "save_graph",
    "load_graph",
]

log = logging.getLogger(__name__)

DEFAULT_THETA = 1e-4
GRAPH_HEADER = "lrs-graph v1 n={n}"
_HEADER_RE = re.compile(r"^lrs-graph v1 n=(\d+)$")


@dataclass
class AffinityGraph:
    W: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError(f"weight matrix must be square, got {W.shape}")
        if not np.isfinite(W).all():
            raise ValueError("weight matrix has non-finite entries")
        if (W < 0).any():
            raise ValueError("weight matrix has negative entries")
        if np.abs(W - W.T).max(initial=0.0) > 1e-12:
            raise ValueError("weight matrix is not symmetric")
        self.W = W

    @property
    def node_count(self):
        return self.W.shape[0]


def normalize_samples(X):
    """Scale every column to unit l2 norm; zero columns stay zero (with a warning)."""
    X = np.asarray(X, dtype=float)
    norms = column_norms(X)
    zero = norms == 0
    if zero.any():
        warnings.warn(f"{int(zero.sum())} zero sample(s) left unnormalized: {np.flatnonzero(zero).tolist()}",
                      RuntimeWarning, stacklevel=2)
    return X / np.where(zero, 1.0, norms)


def _unit_columns(Z):
    norms = column_norms(Z)
    # columns already unit up to rounding are left bit-identical
    scale = np.where((norms == 0) | (np.abs(norms - 1.0) <= 4 * np.finfo(float).eps), 1.0, norms)
    return Z / scale


def postprocess_coefficients(Z, theta=DEFAULT_THETA):
    """Normalize each coefficient column, then zero entries below ``theta``."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    Z = _unit_columns(np.asarray(Z, dtype=float))
    return np.where(Z >= theta, Z, 0.0)


def symmetrize(Zhat):
    Zhat = np.asarray(Zhat, dtype=float)
    if Zhat.ndim != 2 or Zhat.shape[0] != Zhat.shape[1]:
        raise ValueError(f"coefficient matrix must be square, got {Zhat.shape}")
    return AffinityGraph((Zhat + Zhat.T) / 2.0)


def graph_from_coefficients(Z, theta=DEFAULT_THETA):
    """Postprocess a nonnegative coefficient matrix and symmetrize it."""
    return symmetrize(postprocess_coefficients(np.maximum(Z, 0.0), theta))


def build_nnlrs_graph(X, cfg=None, theta=DEFAULT_THETA):
    """NNLRS graph: normalize, self-expressive solve, threshold, symmetrize.

    The graph is built from ``H_star``, which is exactly nonnegative. Solver
    diagnostics are stored in ``graph.info``.
    """
    cfg = cfg or NnlrsConfig()
    X = np.asarray(X, dtype=float)
    if X.shape[1] < 2:
        raise ValueError("need at least two samples")
    Xn = normalize_samples(X)
    sol = solve_nnlrs(Xn, Xn, cfg)
    g = graph_from_coefficients(sol.H_star, theta)
    g.info.update(method="nnlrs", converged=sol.converged, iterations=sol.iterations,
                  residual=sol.residual, theta=theta)
    g.info["solution"] = sol
    return g


def knn_gaussian_graph(X, k=5, sigma=1.0):
    """k-nearest-neighbour graph with Gaussian weights.

    Neighbours are Euclidean, self excluded, ties broken by lower index.
    Edge ``(i, j)`` gets ``exp(-||x_i - x_j||^2 / (2 sigma^2))`` if either
    endpoint lists the other among its ``k`` nearest.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    sq = (X * X).sum(axis=0)
    D2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X.T @ X, 0.0)
    np.fill_diagonal(D2, np.inf)
    nbrs = np.argsort(D2, axis=1, kind="stable")[:, :k]
    W = np.zeros((n, n))
    rows = np.repeat(np.arange(n), k)
    cols = nbrs.ravel()
    W[rows, cols] = np.exp(-D2[rows, cols] / (2.0 * sigma**2))
    g = AffinityGraph(np.maximum(W, W.T))
    g.info.update(method="knn", k=k, sigma=sigma)
    return g


def _weights(G):
    return G.W if isinstance(G, AffinityGraph) else np.asarray(G, dtype=float)


def laplacian(G):
    """``L = D - W``."""
    W = _weights(G)
    return np.diag(W.sum(axis=1)) - W


def normalized_laplacian(G):
    """``D^{-1/2} (D - W) D^{-1/2}``; isolated nodes get a zero row and column."""
    W = _weights(G)
    deg = W.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    pos = deg > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    L = np.diag(deg) - W
    return inv_sqrt[:, None] * L * inv_sqrt[None, :]


def save_graph(path, G, extra_header=()):
    W = _weights(G)
    save_matrix(path, W, header=[GRAPH_HEADER.format(n=W.shape[0]), *extra_header])


def load_graph(path):
    header = read_header(path)
    m = _HEADER_RE.match(header[0]) if header else None
    if m is None:
        raise MatrixFormatError(f"{path}: missing '# lrs-graph v1 n=<n>' header")
    n = int(m.group(1))
    W = load_matrix(path)
    if W.shape != (n, n):
        raise MatrixFormatError(f"{path}: header says n={n}, data is {W.shape[0]}x{W.shape[1]}")
    return AffinityGraph(W)
