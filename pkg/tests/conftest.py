import functools

import numpy as np
import pytest

import nnlrs.embedding
import nnlrs.graph
import nnlrs.solver

# every solve_nnlrs call made by the suite, as
# (converged, relative residual, min entry of H_star)
SOLVE_LOG = []

# acceptance criterion number -> (passed or None when skipped, message)
ACCEPTANCE = {}

_original_solve = nnlrs.solver.solve_nnlrs


@functools.wraps(_original_solve)
def _recording_solve(X, A, cfg=None, eta1=None):
    sol = _original_solve(X, A, cfg, eta1)
    hmin = float(sol.H_star.min()) if sol.H_star.size else 0.0
    SOLVE_LOG.append((sol.converged, sol.residual, hmin))
    return sol


@pytest.fixture(autouse=True)
def _record_solves(monkeypatch):
    for mod in (nnlrs.solver, nnlrs.graph, nnlrs.embedding):
        monkeypatch.setattr(mod, "solve_nnlrs", _recording_solve)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, msg = ACCEPTANCE[k]
        tag = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        terminalreporter.write_line(f"criterion {k:2d}: {tag}  {msg}")
