"""Table of worked examples for the proximal operators.

Shared by ``nnlrs selftest ops`` and the test-suite. Checks that need a
reference SVD use LAPACK's ``gesvd`` driver through scipy, a different code
path from the ``gesdd`` call the operators use.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .proximal import l21_shrink, soft_threshold, spectral_norm_sq, svt

__all__ = ["OpCheck", "operator_checks", "run_operator_checks"]


@dataclass
class OpCheck:
    name: str
    passed: bool
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)


def _ref_singular_values(M):
    return scipy.linalg.svd(M, compute_uv=False, lapack_driver="gesvd")


def _exact(name, got, want):
    got, want = np.asarray(got, dtype=float), np.asarray(want, dtype=float)
    ok = got.shape == want.shape and np.array_equal(got, want)
    return OpCheck(name, ok, "" if ok else f"got {got.tolist()}, want {want.tolist()}")


def _close(name, got, want, tol):
    got, want = np.asarray(got, dtype=float), np.asarray(want, dtype=float)
    err = float(np.abs(got - want).max()) if got.shape == want.shape else np.inf
    return OpCheck(name, err <= tol, f"max error {err:.3g} (tol {tol:g})")


def _svt_random_case():
    M = np.random.default_rng(0).standard_normal((5, 4))
    s = _ref_singular_values(M)
    tau = s[1]
    out = _ref_singular_values(svt(M, tau))
    want = np.maximum(s - tau, 0.0)
    rank = int(np.count_nonzero(out > 1e-10 * max(s[0], 1.0)))
    err = float(np.abs(out - want).max())
    ok = rank <= 1 and err <= 1e-10
    return OpCheck("svt(seeded 5x4, tau=sigma_2) has rank <= 1 and shrunk spectrum", ok,
                   f"rank {rank}, spectrum error {err:.3g}")


def _spectral_random_case():
    M = np.random.default_rng(0).standard_normal((10, 8))
    got = spectral_norm_sq(M)
    want = _ref_singular_values(M)[0] ** 2
    rel = abs(got - want) / want
    return OpCheck("spectral_norm_sq(seeded 10x8) matches sigma_1^2", rel <= 1e-6, f"relative error {rel:.3g}")


def operator_checks():
    """Yield one :class:`OpCheck` per worked example."""
    yield _close("soft_threshold([[1.2]], 0.5) == [[0.7]]", soft_threshold(np.array([[1.2]]), 0.5), [[0.7]], 1e-15)
    yield _exact("soft_threshold([[-0.3]], 0.5) == [[0]]", soft_threshold(np.array([[-0.3]]), 0.5), [[0.0]])
    yield _exact("soft_threshold([[-2, 3]], 1) == [[-1, 2]]", soft_threshold(np.array([[-2.0, 3.0]]), 1.0),
                 [[-1.0, 2.0]])
    yield _close("svt(diag(3,1), 2) == diag(1,0)", svt(np.diag([3.0, 1.0]), 2.0), np.diag([1.0, 0.0]), 1e-12)
    M = np.random.default_rng(1).standard_normal((4, 3))
    yield _close("svt(M, 0) == M", svt(M, 0.0), M, 1e-10)
    yield _svt_random_case()
    yield _close("l21_shrink((3,4), 1) == (2.4, 3.2)", l21_shrink(np.array([[3.0], [4.0]]), 1.0),
                 [[2.4], [3.2]], 1e-12)
    yield _exact("l21_shrink((3,4), 5) == (0,0)", l21_shrink(np.array([[3.0], [4.0]]), 5.0), [[0.0], [0.0]])
    yield _exact("l21_shrink(M, 0) == M", l21_shrink(M, 0.0), M)
    yield _close("spectral_norm_sq(I3) == 1", spectral_norm_sq(np.eye(3)), 1.0, 1e-12)
    yield _close("spectral_norm_sq(diag(2,1)) == 4", spectral_norm_sq(np.diag([2.0, 1.0])), 4.0, 1e-12)
    yield _spectral_random_case()


def run_operator_checks():
    return list(operator_checks())
