"""Graph-based label propagation: harmonic functions (GHF) and LGC."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .graph import AffinityGraph, laplacian, normalized_laplacian

__all__ = ["LabelProblem", "Propagation", "ghf_propagate", "lgc_propagate", "error_rate"]

GHF_RIDGE = 1e-10
RESIDUAL_TOL = 1e-8


@dataclass
class LabelProblem:
    """One-hot label matrix plus the labeled index set.

    ``truth`` holds every node's label and is only used for evaluation.
    """

    Y: np.ndarray
    labeled: np.ndarray
    classes: int
    truth: np.ndarray = None

    @classmethod
    def from_labels(cls, truth, labeled, classes=None):
        truth = np.asarray(truth, dtype=int)
        labeled = np.unique(np.asarray(labeled, dtype=int))
        if classes is None:
            classes = int(truth.max()) + 1
        Y = np.zeros((len(truth), classes))
        Y[labeled, truth[labeled]] = 1.0
        return cls(Y=Y, labeled=labeled, classes=classes, truth=truth)

    @property
    def n(self):
        return self.Y.shape[0]

    @property
    def unlabeled(self):
        mask = np.ones(self.n, dtype=bool)
        mask[self.labeled] = False
        return np.flatnonzero(mask)


@dataclass
class Propagation:
    F: np.ndarray
    flagged: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def predictions(self):
        # np.argmax returns the first maximum, i.e. the lowest class index
        return np.argmax(self.F, axis=1)


def _weights(G):
    return G.W if isinstance(G, AffinityGraph) else np.asarray(G, dtype=float)


def _check_residual(Amat, F, B, what):
    res = np.linalg.norm(Amat @ F - B) / max(np.linalg.norm(B), 1.0)
    if res > RESIDUAL_TOL:
        cond = np.linalg.cond(Amat)
        raise np.linalg.LinAlgError(f"{what}: residual {res:.3g} exceeds {RESIDUAL_TOL} (condition ~{cond:.3g})")


def ghf_propagate(G, prob):
    """Harmonic-function propagation with labeled nodes clamped.

    Solves ``L_uu F_u = W_ul Y_l``. Unlabeled nodes in a connected component
    that contains no labeled node make ``L_uu`` singular; a ridge of 1e-10
    is then added and those nodes are returned in ``flagged``.
    """
    W = _weights(G)
    if len(prob.labeled) == 0:
        raise ValueError("no labeled nodes")
    missing = np.flatnonzero(prob.Y[prob.labeled].sum(axis=0) == 0)
    if missing.size:
        raise ValueError(f"classes without labeled samples: {missing.tolist()}")

    F = prob.Y.astype(float).copy()
    u, l = prob.unlabeled, prob.labeled
    if u.size == 0:
        return Propagation(F)

    _, comp = connected_components(W > 0, directed=False)
    anchored = np.isin(comp, np.unique(comp[l]))
    flagged = u[~anchored[u]]

    L = laplacian(W)
    Luu = L[np.ix_(u, u)]
    B = W[np.ix_(u, l)] @ prob.Y[l]
    if flagged.size:
        Luu = Luu + GHF_RIDGE * np.eye(u.size)
    try:
        Fu = scipy.linalg.solve(Luu, B, assume_a="pos")
    except (np.linalg.LinAlgError, ValueError):
        Fu = np.linalg.lstsq(Luu, B, rcond=None)[0]
    _check_residual(Luu, Fu, B, "harmonic solve")
    F[u] = Fu
    return Propagation(F, flagged=flagged)


def lgc_propagate(G, prob, mu=0.99):
    """Local and global consistency: solve ``(L~ + mu I) F = mu Y``.

    ``L~`` is the normalized Laplacian; the system is positive definite for
    any ``mu > 0``.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if len(prob.labeled) == 0:
        raise ValueError("no labeled nodes")
    Ln = normalized_laplacian(_weights(G))
    Amat = Ln + mu * np.eye(Ln.shape[0])
    B = mu * prob.Y
    F = scipy.linalg.solve(Amat, B, assume_a="pos")
    _check_residual(Amat, F, B, "LGC solve")
    return Propagation(F)


def error_rate(p, prob, eval_idx=None):
    """Percentage of misclassified nodes among ``eval_idx`` (default: unlabeled)."""
    idx = prob.unlabeled if eval_idx is None else np.asarray(eval_idx, dtype=int)
    if idx.size == 0:
        raise ValueError("empty evaluation set")
    wrong = np.count_nonzero(p.predictions[idx] != prob.truth[idx])
    return 100.0 * wrong / idx.size
