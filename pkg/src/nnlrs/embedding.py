"""Joint learning of a linear embedding and the NNLRS representation (NNLRS-EF).

The problem is::

    min_{Z,E,P}  ||Z||_* + beta ||Z||_1 + lambda ||E||_{2,1} + gamma ||X - P^T P X||_F^2
    s.t.         P X = P X Z + E,  Z >= 0

and is attacked by alternating two sub-solves: (Z, E) with P fixed, which is
an NNLRS problem on the projected data, and (E, P) with Z fixed, by an
inexact augmented Lagrangian method whose P-step is a smooth L-BFGS solve.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .graph import DEFAULT_THETA, graph_from_coefficients, normalize_samples
from .proximal import l1_norm, l21_norm, l21_shrink, nuclear_norm, svd
from .solver import NnlrsConfig, solve_nnlrs

__all__ = [
    "EfConfig",
    "EfSolution",
    "EpInfo",
    "ef_objective",
    "ef_constraint_residual",
    "reconstruction_error",
    "p_subproblem",
    "update_ze",
    "update_ep",
    "solve_ef",
    "pca_embed",
    "build_ef_graph",
    "build_pca_nnlrs_graph",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EfConfig:
    nnlrs: NnlrsConfig = field(default_factory=NnlrsConfig)
    gamma: float = 1.0
    reduced_dim: int = 100
    eps3: float = 1e-4
    outer_max: int = 30
    # inexact ALM for the (E, P) step
    mu0: float = 0.1
    mu_max: float = 1e10
    rho: float = 1.1
    eps1: float = 1e-6
    eps2: float = 1e-3
    inner_max_iter: int = 500
    # smooth minimizer for the P-subproblem
    lbfgs_maxiter: int = 200
    lbfgs_gtol: float = 1e-6

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.reduced_dim < 1:
            raise ValueError("reduced_dim must be >= 1")
        if min(self.eps1, self.eps2, self.eps3) <= 0:
            raise ValueError("tolerances must be positive")
        if self.rho <= 1 or self.mu0 <= 0 or self.mu_max < self.mu0:
            raise ValueError("need rho > 1 and 0 < mu0 <= mu_max")
        if min(self.outer_max, self.inner_max_iter, self.lbfgs_maxiter) < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.lbfgs_gtol <= 0:
            raise ValueError("lbfgs_gtol must be positive")


@dataclass
class EpInfo:
    iterations: int = 0
    converged: bool = False
    # P-steps where the smooth minimizer failed to lower its objective
    stalled_steps: int = 0
    gamma_history: list = field(default_factory=list)


@dataclass
class EfSolution:
    Z_star: np.ndarray
    P_star: np.ndarray
    E_star: np.ndarray
    outer_iterations: int
    converged: bool
    objective_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    # (outer iteration, block) pairs whose update was rejected for raising the objective
    rejected: list = field(default_factory=list)
    nnlrs_nonconverged: int = 0


def reconstruction_error(X, P):
    """``||X - P^T P X||_F^2``."""
    return float(np.linalg.norm(X - P.T @ (P @ X)) ** 2)


def ef_objective(X, Z, E, P, cfg):
    """Value of the joint objective (constraint residual reported separately)."""
    c = cfg.nnlrs
    return (nuclear_norm(Z) + c.beta * l1_norm(Z) + c.lam * l21_norm(E)
            + cfg.gamma * reconstruction_error(X, P))


def ef_constraint_residual(X, Z, E, P):
    """``||P X - P X Z - E||_F``."""
    PX = P @ X
    return float(np.linalg.norm(PX - PX @ Z - E))


def p_subproblem(P, X, R, E, Y1, mu, gamma):
    """Objective and gradient of the smooth P-step.

    ``f(P) = gamma ||X - P^T P X||^2 + mu/2 ||P R - E + Y1/mu||^2`` with
    ``R = X (I - Z)``.
    """
    PX = P @ X
    M = X - P.T @ PX
    N = P @ R - E + Y1 / mu
    f = gamma * np.sum(M * M) + 0.5 * mu * np.sum(N * N)
    grad = -2.0 * gamma * (PX @ M.T + (P @ M) @ X.T) + mu * (N @ R.T)
    return f, grad


def pca_embed(X, k):
    """Top-``k`` left singular directions of uncentered ``X`` as rows of P.

    If ``k`` exceeds the rank of ``X`` the extra rows come from the
    orthogonal complement returned by the full SVD, so P always has
    orthonormal rows.
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d={d}, got {k}")
    U, _, _ = svd(X, full_matrices=True)
    P = U[:, :k].T.copy()
    return P, P @ X


def update_ze(X, P, cfg, _return_solution=False):
    """(Z, E)-step: NNLRS on the projected data with ``A = P X``.

    Returns the exactly nonnegative split ``H_star`` as Z.
    """
    PX = P @ X
    sol = solve_nnlrs(PX, PX, cfg.nnlrs)
    if _return_solution:
        return sol.H_star, sol.E_star, sol
    return sol.H_star, sol.E_star


def _argmin_p(P, X, R, E, Y1, mu, cfg):
    shape = P.shape

    def fun(p):
        f, g = p_subproblem(p.reshape(shape), X, R, E, Y1, mu, cfg.gamma)
        return f, g.ravel()

    f0 = fun(P.ravel())[0]
    res = minimize(fun, P.ravel(), jac=True, method="L-BFGS-B",
                   options={"maxiter": cfg.lbfgs_maxiter, "gtol": cfg.lbfgs_gtol})
    if not np.isfinite(res.fun) or res.fun > f0:
        return P, False
    return res.x.reshape(shape), True


def _row_space_basis(X, P):
    """Orthonormal basis of span(X) if P's rows already lie in it, else None.

    Rows of P outside span(X) only add to the reconstruction term and
    receive no gradient, so when P starts inside span(X) the P-step can be
    run in rank(X) coordinates instead of d.
    """
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    r = int(np.sum(s > s[0] * 1e-13)) if s.size and s[0] > 0 else 0
    if r == 0 or r >= X.shape[0]:
        return None
    B = U[:, :r]
    outside = P - (P @ B) @ B.T
    if np.linalg.norm(outside) > 1e-10 * max(np.linalg.norm(P), 1e-300):
        return None
    return B


def update_ep(X, Z, P_init, cfg, E_init=None, return_info=False):
    """(E, P)-step by inexact ALM with Z fixed.

    Parameters
    ----------
    X : ndarray, shape (d, n)
    Z : ndarray, shape (n, n)
    P_init : ndarray, shape (k, d)
    cfg : EfConfig
    E_init : ndarray, shape (k, n), optional
        Warm start for E; zeros otherwise.
    return_info : bool
        Also return an :class:`EpInfo`.

    Returns
    -------
    E, P : ndarray
    """
    X = np.asarray(X, dtype=float)
    P = np.array(P_init, dtype=float)
    n = X.shape[1]
    E = np.zeros((P.shape[0], n)) if E_init is None else np.array(E_init, dtype=float)
    info = EpInfo()
    if np.linalg.norm(P @ X) == 0.0:
        E = np.zeros_like(E)
        info.converged = True
        return (E, P, info) if return_info else (E, P)

    B = _row_space_basis(X, P)
    if B is not None:
        Xw, P = B.T @ X, P @ B
    else:
        Xw = X
    R = Xw - Xw @ Z
    Y1 = np.zeros_like(E)
    mu = cfg.mu0
    info.gamma_history.append(cfg.gamma * reconstruction_error(Xw, P))
    for k in range(1, cfg.inner_max_iter + 1):
        PR = P @ R
        E_new = l21_shrink(PR + Y1 / mu, cfg.nnlrs.lam / mu)
        P_new, ok = _argmin_p(P, Xw, R, E_new, Y1, mu, cfg)
        info.stalled_steps += not ok
        r = P_new @ R - E_new
        Y1 = Y1 + mu * r
        mu = min(cfg.mu_max, cfg.rho * mu)
        scale = np.linalg.norm(P_new @ Xw)
        dE = np.linalg.norm(E_new - E)
        dP = np.linalg.norm(P_new - P)
        E, P = E_new, P_new
        info.gamma_history.append(cfg.gamma * reconstruction_error(Xw, P))
        info.iterations = k
        if scale == 0.0:
            break
        if (np.linalg.norm(r) / scale < cfg.eps1 and dE / scale < cfg.eps2
                and dP / scale < cfg.eps2):
            info.converged = True
            break
    if B is not None:
        P = P @ B.T
    return (E, P, info) if return_info else (E, P)


def solve_ef(X, cfg=None, P_init=None):
    """Alternate the (Z, E) and (E, P) steps until the iterates settle.

    A block update is kept only if it does not raise the joint objective
    (within 1e-9 relative); otherwise the previous block values are
    retained and the rejection is recorded. The outer loop stops when the
    largest Frobenius change among Z, P and E, relative to ``||P X||_F``,
    falls below ``eps3``.
    """
    cfg = cfg or EfConfig()
    X = np.asarray(X, dtype=float)
    d, n = X.shape
    if n < 2:
        raise ValueError("need at least two samples")
    if cfg.reduced_dim > d:
        raise ValueError(f"reduced_dim={cfg.reduced_dim} exceeds data dimension {d}")

    P = pca_embed(X, cfg.reduced_dim)[0] if P_init is None else np.array(P_init, dtype=float)
    Z = np.zeros((n, n))
    E = np.zeros((P.shape[0], n))
    have_point = False
    obj = np.inf
    objs, resids, rejected = [], [], []
    nonconv = 0
    converged = False
    t = 0

    def accept(new_obj, old_obj):
        return new_obj <= old_obj + 1e-9 * max(1.0, abs(old_obj))

    for t in range(1, cfg.outer_max + 1):
        Z_prev, P_prev, E_prev = Z, P, E

        Z_new, E_new, sol = update_ze(X, P, cfg, _return_solution=True)
        nonconv += not sol.converged
        new_obj = ef_objective(X, Z_new, E_new, P, cfg)
        if not have_point or accept(new_obj, obj):
            Z, E, obj = Z_new, E_new, new_obj
            have_point = True
        else:
            rejected.append((t, "ze"))

        E_new, P_new = update_ep(X, Z, P, cfg, E_init=E)
        new_obj = ef_objective(X, Z, E_new, P_new, cfg)
        if accept(new_obj, obj):
            E, P, obj = E_new, P_new, new_obj
        else:
            rejected.append((t, "ep"))

        objs.append(obj)
        resids.append(ef_constraint_residual(X, Z, E, P))
        scale = max(np.linalg.norm(P @ X), 1e-300)
        change = max(np.linalg.norm(Z - Z_prev), np.linalg.norm(P - P_prev),
                     np.linalg.norm(E - E_prev)) / scale
        if t > 1 and change < cfg.eps3:
            converged = True
            break
    return EfSolution(Z_star=Z, P_star=P, E_star=E, outer_iterations=t, converged=converged,
                      objective_history=objs, residual_history=resids, rejected=rejected,
                      nnlrs_nonconverged=nonconv)


def build_ef_graph(X, cfg=None, theta=DEFAULT_THETA):
    """NNLRS-EF graph: normalize samples, jointly learn (Z, P), threshold, symmetrize."""
    cfg = cfg or EfConfig()
    Xn = normalize_samples(X)
    sol = solve_ef(Xn, cfg)
    g = graph_from_coefficients(sol.Z_star, theta)
    g.info.update(method="nnlrs-ef", converged=sol.converged, outer_iterations=sol.outer_iterations,
                  nnlrs_nonconverged=sol.nnlrs_nonconverged, theta=theta)
    g.info["solution"] = sol
    return g


def build_pca_nnlrs_graph(X, reduced_dim, nnlrs_cfg=None, theta=DEFAULT_THETA):
    """PCA+NNLRS baseline: fixed PCA embedding of the normalized samples, then NNLRS."""
    nnlrs_cfg = nnlrs_cfg or NnlrsConfig()
    Xn = normalize_samples(X)
    _, PX = pca_embed(Xn, reduced_dim)
    sol = solve_nnlrs(PX, PX, nnlrs_cfg)
    g = graph_from_coefficients(sol.H_star, theta)
    g.info.update(method="pca+nnlrs", converged=sol.converged, iterations=sol.iterations, theta=theta)
    g.info["solution"] = sol
    return g
