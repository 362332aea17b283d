"""Randomized semi-supervised trials and result tables.

Every random choice is drawn from numpy's PCG64 generator. The subsample of
trial ``t`` is seeded with ``(seed, t)`` and its label split for the ``i``-th
fraction with ``(seed, t, i)``, so one graph per trial serves all fractions
and the outputs do not depend on the worker count.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataio import Dataset
from .embedding import EfConfig, build_ef_graph, build_pca_nnlrs_graph
from .graph import DEFAULT_THETA, build_nnlrs_graph, knn_gaussian_graph
from .solver import NnlrsConfig
from .ssl import LabelProblem, error_rate, ghf_propagate, lgc_propagate

__all__ = [
    "METHODS",
    "PROPAGATIONS",
    "ExperimentSpec",
    "ResultRow",
    "ResultTable",
    "sample_trial",
    "build_graph",
    "run_experiment",
    "beta_sweep",
]

log = logging.getLogger(__name__)

METHODS = ("nnlrs", "nnlrs-ef", "pca+nnlrs", "knn")
PROPAGATIONS = ("ghf", "lgc")
DEFAULT_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
FAILURE_LIMIT = 0.10


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines an experiment's output.

    ``samples_per_class`` and ``subjects_per_trial`` subsample each trial;
    ``None`` keeps every sample or class. ``reduced_dim`` is shared by
    ``nnlrs-ef`` and ``pca+nnlrs``.
    """

    method: str = "nnlrs"
    propagation: str = "lgc"
    label_fractions: tuple = DEFAULT_FRACTIONS
    trials: int = 50
    seed: int = 0
    samples_per_class: int = None
    subjects_per_trial: int = None
    nnlrs: NnlrsConfig = field(default_factory=NnlrsConfig)
    ef: EfConfig = field(default_factory=EfConfig)
    knn_k: int = 5
    knn_sigma: float = 1.0
    theta: float = DEFAULT_THETA
    lgc_mu: float = 0.99

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.propagation not in PROPAGATIONS:
            raise ValueError(f"unknown propagation {self.propagation!r}; choose from {', '.join(PROPAGATIONS)}")
        fr = tuple(float(f) for f in self.label_fractions)
        if not fr:
            raise ValueError("need at least one label fraction")
        if any(not 0 < f <= 1 for f in fr):
            raise ValueError("label fractions must lie in (0, 1]")
        object.__setattr__(self, "label_fractions", fr)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for name in ("samples_per_class", "subjects_per_trial"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be >= 1")

    def with_(self, **kw):
        return replace(self, **kw)

    def describe(self):
        """Flat ``key=value`` lines, used as output headers."""
        d = asdict(self)
        nn, ef = d.pop("nnlrs"), d.pop("ef")
        ef.pop("nnlrs")
        lines = [f"{k}={_fmt_value(v)}" for k, v in d.items()]
        lines += [f"solver.{k}={_fmt_value(v)}" for k, v in nn.items()]
        lines += [f"ef.{k}={_fmt_value(v)}" for k, v in ef.items()]
        return lines


def _fmt_value(v):
    if isinstance(v, (tuple, list)):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ResultRow:
    method: str
    propagation: str
    beta: float
    fraction: float
    trials: int
    completed: int
    mean_error: float
    std_error: float
    nonconverged: int
    failures: int


CSV_COLUMNS = ("method", "propagation", "beta", "fraction", "trials", "completed",
               "mean_error", "std_error", "nonconverged", "failures")


@dataclass
class ResultTable:
    """Aggregated rows plus the per-trial errors behind them.

    ``errors[(beta, fraction)]`` lists the error of each trial in trial
    order, with ``nan`` for failed trials.
    """

    rows: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    header: list = field(default_factory=list)
    failed_trials: int = 0
    total_trials: int = 0

    @property
    def failure_rate(self):
        return self.failed_trials / self.total_trials if self.total_trials else 0.0

    @property
    def excessive_failures(self):
        return self.failure_rate > FAILURE_LIMIT

    def extend(self, other):
        self.rows.extend(other.rows)
        self.errors.update(other.errors)
        self.failed_trials += other.failed_trials
        self.total_trials += other.total_trials

    def to_csv(self):
        out = [f"# {h}" for h in self.header]
        out.append(",".join(CSV_COLUMNS))
        for r in self.rows:
            out.append(",".join(_csv_cell(getattr(r, c)) for c in CSV_COLUMNS))
        return "\n".join(out) + "\n"

    def to_text(self):
        head = ["method", "prop", "beta", "labels %", "trials", "ok", "error %", "std", "nonconv", "failed"]
        body = []
        for r in self.rows:
            body.append([
                r.method, r.propagation, "-" if r.beta is None else f"{r.beta:g}",
                f"{100 * r.fraction:g}", str(r.trials), str(r.completed),
                _fixed(r.mean_error), _fixed(r.std_error), str(r.nonconverged), str(r.failures),
            ])
        widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(head)]
        lines = [f"# {h}" for h in self.header]
        lines.append("  ".join(h.rjust(w) for h, w in zip(head, widths)))
        lines.append("  ".join("-" * w for w in widths))
        for b in body:
            lines.append("  ".join(c.rjust(w) for c, w in zip(b, widths)))
        return "\n".join(lines) + "\n"

    def write(self, outdir):
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "results.csv").write_text(self.to_csv(), encoding="utf-8")
        (outdir / "results.txt").write_text(self.to_text(), encoding="utf-8")
        return outdir / "results.csv", outdir / "results.txt"


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _fixed(v):
    return "nan" if math.isnan(v) else f"{v:.2f}"


def _trial_subsample(ds, spec, trial_index):
    rng = np.random.default_rng([spec.seed, trial_index])
    classes = np.unique(ds.labels)
    if spec.subjects_per_trial is not None:
        if spec.subjects_per_trial > classes.size:
            raise ValueError(f"subjects_per_trial={spec.subjects_per_trial} but only {classes.size} classes")
        classes = np.sort(rng.choice(classes, size=spec.subjects_per_trial, replace=False))
    cols = []
    for c in classes:
        members = np.flatnonzero(ds.labels == c)
        if spec.samples_per_class is not None:
            if members.size < spec.samples_per_class:
                raise ValueError(f"class {c} has {members.size} samples, {spec.samples_per_class} requested")
            members = np.sort(rng.choice(members, size=spec.samples_per_class, replace=False))
        cols.append(members)
    cols = np.concatenate(cols)
    # relabel to 0..c-1 so every retained class owns a column of Y
    truth = np.searchsorted(classes, ds.labels[cols])
    return cols, truth


def _label_split(truth, fraction, seed, trial_index, fraction_index):
    rng = np.random.default_rng([seed, trial_index, fraction_index])
    labeled = []
    for c in range(int(truth.max()) + 1):
        members = np.flatnonzero(truth == c)
        m = max(1, math.ceil(fraction * members.size - 1e-9))
        labeled.append(np.sort(rng.choice(members, size=min(m, members.size), replace=False)))
    return np.concatenate(labeled)


def sample_trial(ds, spec, trial_index, fraction=None):
    """Subsample one trial and choose its labeled nodes.

    Returns ``(X_sub, truth, labeled)``. Each class gets
    ``ceil(fraction * count)`` labeled samples, at least one. ``fraction``
    defaults to the first entry of ``spec.label_fractions``.
    """
    if fraction is None:
        fraction = spec.label_fractions[0]
        fi = 0
    else:
        fi = spec.label_fractions.index(fraction) if fraction in spec.label_fractions else len(spec.label_fractions)
    cols, truth = _trial_subsample(ds, spec, trial_index)
    labeled = _label_split(truth, fraction, spec.seed, trial_index, fi)
    return ds.X[:, cols], truth, labeled


def build_graph(X, spec):
    """Build the graph ``spec.method`` names on ``X``; returns ``(graph, converged)``."""
    if spec.method == "nnlrs":
        g = build_nnlrs_graph(X, spec.nnlrs, spec.theta)
        ok = g.info["converged"]
    elif spec.method == "nnlrs-ef":
        g = build_ef_graph(X, replace(spec.ef, nnlrs=spec.nnlrs), spec.theta)
        ok = g.info["converged"] and g.info["nnlrs_nonconverged"] == 0
    elif spec.method == "pca+nnlrs":
        g = build_pca_nnlrs_graph(X, spec.ef.reduced_dim, spec.nnlrs, spec.theta)
        ok = g.info["converged"]
    else:
        g = knn_gaussian_graph(X, spec.knn_k, spec.knn_sigma)
        ok = True
    return g, bool(ok)


def _propagate(g, prob, spec):
    if spec.propagation == "ghf":
        return ghf_propagate(g, prob)
    return lgc_propagate(g, prob, spec.lgc_mu)


def _run_trial(ds, spec, trial_index, graph=None):
    """Errors for every fraction of one trial, ``nan`` where it failed."""
    nf = len(spec.label_fractions)
    try:
        cols, truth = _trial_subsample(ds, spec, trial_index)
        if graph is None:
            graph = build_graph(ds.X[:, cols], spec)
    except Exception as exc:  # recorded as a failed trial, the experiment goes on
        log.warning("trial %d: graph construction failed: %s", trial_index, exc)
        return trial_index, [math.nan] * nf, False
    g, converged = graph
    errs = []
    for fi, fraction in enumerate(spec.label_fractions):
        try:
            labeled = _label_split(truth, fraction, spec.seed, trial_index, fi)
            prob = LabelProblem.from_labels(truth, labeled)
            if prob.unlabeled.size == 0:
                raise ValueError("no unlabeled samples left to evaluate")
            errs.append(error_rate(_propagate(g, prob, spec), prob))
        except Exception as exc:
            log.warning("trial %d, fraction %g: %s", trial_index, fraction, exc)
            errs.append(math.nan)
    return trial_index, errs, converged


def _trial_job(args):
    return _run_trial(*args)


def _subsamples_fixed(spec):
    return spec.samples_per_class is None and spec.subjects_per_trial is None


def run_experiment(spec, ds, workers=1):
    """Run every (trial, fraction) of ``spec`` on ``ds``.

    Hard failures are logged and counted; check ``excessive_failures`` on the
    returned table for the more-than-10%-failed condition.
    """
    if not isinstance(ds, Dataset):
        raise TypeError("ds must be a Dataset")
    shared = None
    if _subsamples_fixed(spec):
        # every trial sees the same samples, so the graph is built once
        try:
            shared = build_graph(ds.X, spec)
        except Exception as exc:
            log.warning("graph construction failed: %s", exc)
            shared = None
            results = [(t, [math.nan] * len(spec.label_fractions), False) for t in range(spec.trials)]
        else:
            results = [_run_trial(ds, spec, t, shared) for t in range(spec.trials)]
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_job, [(ds, spec, t) for t in range(spec.trials)]))
    else:
        results = [_run_trial(ds, spec, t) for t in range(spec.trials)]
    results.sort(key=lambda r: r[0])

    beta = None if spec.method == "knn" else spec.nnlrs.beta
    table = ResultTable(header=[f"dataset={ds.name}", "rng=numpy PCG64", *spec.describe()])
    nonconv = sum(not r[2] for r in results)
    for fi, fraction in enumerate(spec.label_fractions):
        errs = np.array([r[1][fi] for r in results])
        ok = errs[~np.isnan(errs)]
        mean = float(ok.mean()) if ok.size else math.nan
        std = float(ok.std(ddof=1)) if ok.size > 1 else (0.0 if ok.size else math.nan)
        table.rows.append(ResultRow(
            method=spec.method, propagation=spec.propagation, beta=beta, fraction=fraction,
            trials=spec.trials, completed=int(ok.size), mean_error=mean, std_error=std,
            nonconverged=nonconv, failures=int(errs.size - ok.size),
        ))
        table.errors[(beta, fraction)] = errs.tolist()
        table.failed_trials += int(errs.size - ok.size)
        table.total_trials += int(errs.size)
    return table


def beta_sweep(spec, ds, betas, workers=1):
    """One ``run_experiment`` per sparsity weight, all on the same splits."""
    if spec.method == "knn":
        raise ValueError("beta sweep needs an NNLRS-based method")
    if not betas:
        raise ValueError("need at least one beta")
    table = None
    for b in betas:
        sub = run_experiment(spec.with_(nnlrs=spec.nnlrs.with_(beta=float(b))), ds, workers)
        if table is None:
            table = sub
            table.header = [h for h in sub.header if not h.startswith("solver.beta=")]
            table.header.append("betas=" + ",".join(repr(float(x)) for x in betas))
        else:
            table.extend(sub)
    return table
