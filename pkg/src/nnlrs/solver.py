"""LADMAP solver for nonnegative low-rank and sparse representation.

Solves::

    min_{Z,E}  ||Z||_* + beta ||Z||_1 + lambda ||E||_{2,1}
    s.t.       X = A Z + E,  Z >= 0

by splitting ``Z = H`` with ``H >= 0`` carrying the l1 term, linearizing the
quadratic coupling in the Z-update and growing the penalty adaptively.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .proximal import l1_norm, l21_norm, l21_shrink, nuclear_norm, soft_threshold, spectral_norm_sq, svt

__all__ = [
    "NnlrsConfig",
    "SolverState",
    "NnlrsSolution",
    "SolverError",
    "initial_state",
    "ladmap_step",
    "solve_nnlrs",
    "nnlrs_objective",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Numerical breakdown inside an iteration (NaN iterate, SVD failure)."""

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class NnlrsConfig:
    beta: float = 0.2
    lam: float = 10.0
    mu0: float = 0.1
    mu_max: float = 1e10
    rho0: float = 1.1
    eps1: float = 1e-6
    eps2: float = 1e-2
    max_iter: int = 1000
    # linearization constant is ||A||_2^2 + eta_offset; the Z-gradient of the
    # coupling term carries both A^T A and the identity from Z = H, so the
    # offset must be >= 1 for the proximal step to majorize it
    eta_offset: float = 1.0
    track_objective: bool = True

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.lam <= 0:
            raise ValueError("lam must be > 0")
        if self.mu0 <= 0 or self.mu_max < self.mu0:
            raise ValueError("need 0 < mu0 <= mu_max")
        if self.rho0 <= 1:
            raise ValueError("rho0 must be > 1")
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.eta_offset < 0:
            raise ValueError("eta_offset must be >= 0")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class SolverState:
    Z: np.ndarray
    H: np.ndarray
    E: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    mu: float
    eta1: float
    iteration: int = 0
    # scaled variable change of the last step, drives rho and the stopping rule
    change: float = np.inf


@dataclass
class NnlrsSolution:
    Z_star: np.ndarray
    H_star: np.ndarray
    E_star: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    iterations: int
    converged: bool
    feasibility_history: list = field(default_factory=list)
    objective_history: list = field(default_factory=list)
    mu: float = 0.0

    @property
    def residual(self):
        """Final relative primal residual ``||X - AZ - E||_F / ||X||_F``."""
        return self.feasibility_history[-1][0] if self.feasibility_history else 0.0


def nnlrs_objective(Z, E, cfg):
    """``||Z||_* + beta ||Z||_1 + lambda ||E||_{2,1}``."""
    return nuclear_norm(Z) + cfg.beta * l1_norm(Z) + cfg.lam * l21_norm(E)


def initial_state(X, A, cfg, eta1=None):
    """All-zero state with ``mu = mu0``."""
    m, n = A.shape[1], X.shape[1]
    if eta1 is None:
        eta1 = spectral_norm_sq(A) + cfg.eta_offset
    return SolverState(
        Z=np.zeros((m, n)),
        H=np.zeros((m, n)),
        E=np.zeros_like(X, dtype=float),
        Y1=np.zeros_like(X, dtype=float),
        Y2=np.zeros((m, n)),
        mu=cfg.mu0,
        eta1=float(eta1),
    )


def ladmap_step(X, A, state, cfg, x_norm=None):
    """One LADMAP iteration: Z, H, E updates, multipliers, then penalty."""
    mu, eta1 = state.mu, state.eta1
    if x_norm is None:
        x_norm = np.linalg.norm(X)
    k = state.iteration + 1

    # linearized Z-update: prox of the nuclear norm at a gradient step on q
    R1 = X - A @ state.Z - state.E + state.Y1 / mu
    R2 = state.Z - state.H + state.Y2 / mu
    if eta1 > 0:
        V = state.Z + (A.T @ R1 - R2) / eta1
        try:
            Z = svt(V, 1.0 / (eta1 * mu))
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"SVD failed in Z-update ({exc})", k) from exc
    else:
        # A == 0: the data term is constant in Z
        Z = svt(state.Z - R2, 1.0 / mu)
    H = np.maximum(soft_threshold(Z + state.Y2 / mu, cfg.beta / mu), 0.0)
    AZ = A @ Z
    E = l21_shrink(X - AZ + state.Y1 / mu, cfg.lam / mu)

    r_primal = X - AZ - E
    Y1 = state.Y1 + mu * r_primal
    Y2 = state.Y2 + mu * (Z - H)

    if not (np.isfinite(Z).all() and np.isfinite(E).all() and np.isfinite(Y1).all()):
        raise SolverError("non-finite iterate", k)

    dz = np.sqrt(eta1) * np.linalg.norm(Z - state.Z)
    dh = np.linalg.norm(H - state.H)
    de = np.linalg.norm(E - state.E)
    change = mu * max(dz, dh, de) / x_norm if x_norm > 0 else 0.0
    rho = cfg.rho0 if change < cfg.eps2 else 1.0
    return SolverState(
        Z=Z, H=H, E=E, Y1=Y1, Y2=Y2,
        mu=min(cfg.mu_max, rho * mu),
        eta1=eta1,
        iteration=k,
        change=change,
    )


def solve_nnlrs(X, A, cfg=None, eta1=None):
    """Run LADMAP until both stopping conditions hold or ``max_iter``.

    Non-convergence is not an error: the last iterate is returned with
    ``converged=False``.

    Parameters
    ----------
    X : ndarray, shape (d, n)
        Data, one sample per column.
    A : ndarray, shape (d, m)
        Dictionary; ``A = X`` for self-expression.
    cfg : NnlrsConfig, optional
    eta1 : float, optional
        Precomputed linearization constant, overriding
        ``||A||_2^2 + cfg.eta_offset``.

    Returns
    -------
    NnlrsSolution
    """
    cfg = cfg or NnlrsConfig()
    X = np.asarray(X, dtype=float)
    A = np.asarray(A, dtype=float)
    if X.size == 0 or A.size == 0:
        raise ValueError("X and A must be nonempty")
    if X.shape[0] != A.shape[0]:
        raise ValueError(f"row mismatch: X has {X.shape[0]}, A has {A.shape[0]}")

    x_norm = np.linalg.norm(X)
    if x_norm == 0.0:
        eta1 = 0.0
    state = initial_state(X, A, cfg, eta1=eta1)
    if x_norm == 0.0:
        return NnlrsSolution(
            Z_star=state.Z, H_star=state.H, E_star=state.E, Y1=state.Y1, Y2=state.Y2,
            iterations=0, converged=True, feasibility_history=[(0.0, 0.0)],
            objective_history=[0.0], mu=state.mu,
        )

    feas, objs = [], []
    converged = False
    for _ in range(cfg.max_iter):
        state = ladmap_step(X, A, state, cfg, x_norm=x_norm)
        res = np.linalg.norm(X - A @ state.Z - state.E) / x_norm
        feas.append((float(res), float(state.change)))
        if cfg.track_objective:
            objs.append(nnlrs_objective(state.Z, state.E, cfg))
        if res < cfg.eps1 and state.change < cfg.eps2:
            converged = True
            break
    if not converged:
        log.warning("LADMAP stopped at max_iter=%d (residual %.3g)", cfg.max_iter, feas[-1][0])
    return NnlrsSolution(
        Z_star=state.Z, H_star=state.H, E_star=state.E, Y1=state.Y1, Y2=state.Y2,
        iterations=state.iteration, converged=converged,
        feasibility_history=feas, objective_history=objs, mu=state.mu,
    )
