"""Closed-form proximal and thresholding operators.

All operators take and return dense ``numpy`` arrays and never modify their
inputs. Matrices are stored with samples as columns throughout the package.
"""

import numpy as np

__all__ = [
    "soft_threshold",
    "svt",
    "l21_shrink",
    "spectral_norm_sq",
    "svd",
    "nuclear_norm",
    "l1_norm",
    "l21_norm",
    "numerical_rank",
    "column_norms",
]

RANK_FLOOR = 1e-12


def svd(M, full_matrices=False):
    """Thin SVD with a fixed sign convention.

    The first entry of each left singular vector whose magnitude exceeds
    machine precision is made nonnegative; the matching right singular
    vector is flipped with it, so ``U @ diag(s) @ Vt`` is unchanged.
    """
    U, s, Vt = np.linalg.svd(M, full_matrices=full_matrices)
    if U.size == 0:
        return U, s, Vt
    tol = np.finfo(U.dtype).eps
    lead = np.argmax(np.abs(U) > tol, axis=0)
    signs = np.sign(U[lead, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    U = U * signs
    k = min(len(signs), Vt.shape[0])
    Vt = Vt.copy()
    Vt[:k] *= signs[:k, None]
    return U, s, Vt


def soft_threshold(M, tau):
    """Entrywise shrinkage ``sign(m) * max(|m| - tau, 0)``."""
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    M = np.asarray(M, dtype=float)
    return np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)


def svt(M, tau):
    """Singular value thresholding, the proximal map of ``tau * ||.||_*``.

    Parameters
    ----------
    M : array_like
        Input matrix.
    tau : float
        Nonnegative threshold applied to every singular value.

    Returns
    -------
    ndarray
        ``U @ diag(max(s - tau, 0)) @ Vt``.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the SVD does not converge.
    """
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return M.copy()
    U, s, Vt = svd(M)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    if not keep.any():
        return np.zeros_like(M)
    return (U[:, keep] * s[keep]) @ Vt[keep]


def l21_shrink(M, tau):
    """Column-wise shrinkage, the proximal map of ``tau * ||.||_{2,1}``.

    Each column is scaled by ``max(0, 1 - tau / ||m_j||)``; columns whose
    norm does not exceed ``tau`` (including zero columns) become exactly zero.
    """
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    M = np.asarray(M, dtype=float)
    norms = column_norms(M)
    scale = np.zeros_like(norms)
    nz = norms > tau
    scale[nz] = (norms[nz] - tau) / norms[nz]
    return M * scale


def column_norms(M):
    """Euclidean norm of every column, safe against underflow."""
    # rescale by the column max so tiny entries do not underflow when squared
    peak = np.abs(M).max(axis=0, initial=0.0)
    safe = np.where(peak > 0, peak, 1.0)
    return peak * np.linalg.norm(M / safe, axis=0)


def spectral_norm_sq(A, tol=1e-12, max_iter=1000):
    """Squared largest singular value of ``A``.

    Power iteration on the smaller Gram matrix; falls back to a full SVD if
    the Rayleigh quotient has not settled after ``max_iter`` sweeps.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        raise ValueError("spectral norm of an empty matrix")
    G = A.T @ A if A.shape[0] >= A.shape[1] else A @ A.T
    # deterministic start with support on every coordinate
    v = np.ones(G.shape[0]) + np.linspace(0.0, 1.0, G.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = G @ v
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
        if abs(new - est) <= tol * max(abs(new), 1e-300):
            # the Rayleigh quotient can stall on a start vector orthogonal
            # to the top eigenvector; one residual check guards against it
            if np.linalg.norm(G @ v - new * v) <= 1e-4 * max(new, 1e-300):
                return new
            break
        est = new
    return float(np.linalg.norm(A, 2) ** 2)


def nuclear_norm(M):
    return float(np.sum(np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)))


def l1_norm(M):
    return float(np.abs(M).sum())


def l21_norm(M):
    return float(column_norms(np.asarray(M, dtype=float)).sum())


def numerical_rank(M, floor=RANK_FLOOR):
    """Number of singular values above ``floor``."""
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    return int(np.sum(s > floor))
