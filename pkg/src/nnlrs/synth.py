"""Seeded synthetic union-of-subspaces data."""

from dataclasses import dataclass

import numpy as np


@dataclass
class SyntheticData:
    X: np.ndarray
    labels: np.ndarray
    corrupted: np.ndarray
    bases: list


def make_subspaces(
    n_subspaces=3,
    dim=2,
    ambient=20,
    per_subspace=15,
    noise=0.0,
    corrupt_fraction=0.0,
    corrupt_scale=1.0,
    seed=0,
):
    """Samples drawn from random independent linear subspaces.

    Each subspace gets an orthonormal basis from the QR factor of a Gaussian
    matrix and Gaussian coefficients. Samples are grouped by subspace, so the
    ground-truth blocks are contiguous. A fraction ``ceil(corrupt_fraction *
    n)`` of columns (chosen uniformly) receives additive Gaussian noise whose
    norm is ``corrupt_scale`` times the clean sample's norm.

    Uses numpy's PCG64 generator seeded with ``seed``.
    """
    if n_subspaces * dim > ambient:
        raise ValueError("subspaces cannot be independent: n_subspaces * dim > ambient")
    rng = np.random.default_rng(seed)
    blocks, bases = [], []
    for _ in range(n_subspaces):
        U, _ = np.linalg.qr(rng.standard_normal((ambient, dim)))
        bases.append(U)
        blocks.append(U @ rng.standard_normal((dim, per_subspace)))
    X = np.hstack(blocks)
    labels = np.repeat(np.arange(n_subspaces), per_subspace)
    n = X.shape[1]
    if noise > 0:
        X = X + noise * rng.standard_normal(X.shape)

    n_bad = int(np.ceil(corrupt_fraction * n - 1e-9)) if corrupt_fraction > 0 else 0
    corrupted = np.sort(rng.choice(n, size=n_bad, replace=False)) if n_bad else np.zeros(0, dtype=int)
    for j in corrupted:
        g = rng.standard_normal(ambient)
        X[:, j] += corrupt_scale * np.linalg.norm(X[:, j]) * g / np.linalg.norm(g)
    return SyntheticData(X=X, labels=labels, corrupted=corrupted, bases=bases)
