"""Command-line interface.

Settings are layered: dataclass defaults, then an optional INI file
(``--config``), then command-line flags. Every solver field is reachable as
``--solver.<name>`` (INI section ``[solver]``) and every embedding field as
``--ef.<name>`` (section ``[ef]``); experiment settings live in
``[experiment]``.

Exit codes: 0 success, 1 usage or input error, 2 too many failed trials or
failed self-checks.
"""

import argparse
import configparser
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import Dataset, MatrixFormatError, load_dataset, load_matrix, save_labels, save_matrix
from .embedding import EfConfig, solve_ef
from .experiment import METHODS, PROPAGATIONS, ExperimentSpec, beta_sweep, build_graph, run_experiment
from .graph import graph_from_coefficients, normalize_samples, save_graph
from .selftest import run_operator_checks
from .solver import NnlrsConfig
from .synth import make_subspaces

log = logging.getLogger("nnlrs")

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2

SOLVER_FIELDS = {f.name: f for f in fields(NnlrsConfig)}
EF_FIELDS = {f.name: f for f in fields(EfConfig) if f.name != "nnlrs"}
# experiment keys: INI name -> (ExperimentSpec field, converter)
EXPERIMENT_KEYS = {
    "method": ("method", str),
    "propagation": ("propagation", str),
    "fractions": ("label_fractions", lambda s: tuple(float(x) for x in str(s).split(",") if x.strip())),
    "trials": ("trials", int),
    "seed": ("seed", int),
    "samples_per_class": ("samples_per_class", int),
    "subjects_per_trial": ("subjects_per_trial", int),
    "knn_k": ("knn_k", int),
    "knn_sigma": ("knn_sigma", float),
    "theta": ("theta", float),
    "lgc_mu": ("lgc_mu", float),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _to_bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _converter(f):
    t = type(f.default)
    if t is bool:
        return _to_bool
    return t


def _add_config_options(p, ef=False):
    g = p.add_argument_group("configuration")
    g.add_argument("--config", type=Path, help="INI file with [solver], [ef] and [experiment] sections")
    for name, f in SOLVER_FIELDS.items():
        g.add_argument(f"--solver.{name}", dest=f"solver.{name}", metavar=type(f.default).__name__.upper(),
                       help=f"(default {f.default})")
    if ef:
        for name, f in EF_FIELDS.items():
            g.add_argument(f"--ef.{name}", dest=f"ef.{name}", metavar=type(f.default).__name__.upper(),
                           help=f"(default {f.default})")


def _add_data_options(p, labels=True):
    p.add_argument("--data", type=Path, required=True, help="matrix file, one sample per column")
    if labels:
        p.add_argument("--labels", type=Path, required=True, help="single-column integer label file")
    p.add_argument("--rows-are-samples", action="store_true", help="the matrix file has one sample per row")


def _add_experiment_options(p):
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--propagation", choices=PROPAGATIONS)
    p.add_argument("--fractions", help="comma-separated label fractions (default 0.1,...,0.6)")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples-per-class", dest="samples_per_class", type=int)
    p.add_argument("--subjects-per-trial", dest="subjects_per_trial", type=int)
    p.add_argument("--knn-k", dest="knn_k", type=int)
    p.add_argument("--knn-sigma", dest="knn_sigma", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--lgc-mu", dest="lgc_mu", type=float)
    p.add_argument("--workers", type=int, default=1, help="parallel trial workers (default 1)")
    p.add_argument("--out", type=Path, required=True, help="output directory for results.csv/results.txt")


def _read_ini(path):
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    known = {"solver": SOLVER_FIELDS, "ef": EF_FIELDS, "experiment": EXPERIMENT_KEYS}
    for section in cp.sections():
        if section not in known:
            raise UsageError(f"{path}: unknown section [{section}]")
        for key in cp[section]:
            if key not in known[section]:
                raise UsageError(f"{path}: unknown key '{key}' in [{section}]")
    return cp


def resolve_spec(args):
    """Build the :class:`ExperimentSpec` from defaults, INI file and flags."""
    solver, ef, exp = {}, {}, {}
    cp = _read_ini(args.config) if getattr(args, "config", None) else None

    def take(section, table, conv_of, store, cli_prefix):
        if cp is not None and cp.has_section(section):
            for key, raw in cp[section].items():
                store[key] = (raw, f"[{section}] {key}")
        for key in table:
            v = getattr(args, f"{cli_prefix}{key}", None)
            if v is not None:
                store[key] = (v, f"--{cli_prefix}{key}".replace("_", "-") if not cli_prefix else f"--{cli_prefix}{key}")
        out = {}
        for key, (raw, where) in store.items():
            try:
                out[key] = conv_of(key)(raw)
            except ValueError as exc:
                raise UsageError(f"bad value for {where}: {exc}") from None
        return out

    solver = take("solver", SOLVER_FIELDS, lambda k: _converter(SOLVER_FIELDS[k]), solver, "solver.")
    ef = take("ef", EF_FIELDS, lambda k: _converter(EF_FIELDS[k]), ef, "ef.")
    exp = take("experiment", EXPERIMENT_KEYS, lambda k: EXPERIMENT_KEYS[k][1], exp, "")
    try:
        nn = NnlrsConfig(**solver)
        efc = EfConfig(nnlrs=nn, **ef)
        return ExperimentSpec(nnlrs=nn, ef=efc, **{EXPERIMENT_KEYS[k][0]: v for k, v in exp.items()})
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _load(args, labels=True):
    if labels:
        return load_dataset(args.data, args.labels, rows_are_samples=args.rows_are_samples, name=args.data.name)
    X = load_matrix(args.data, rows_are_samples=args.rows_are_samples)
    return Dataset(X=X, labels=np.zeros(X.shape[1], dtype=int), name=args.data.name)


def cmd_synth_make(args):
    data = make_subspaces(n_subspaces=args.subspaces, dim=args.dim, ambient=args.ambient,
                          per_subspace=args.per_subspace, noise=args.noise,
                          corrupt_fraction=args.corrupt_fraction, corrupt_scale=args.corrupt_scale, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    header = [
        "synthetic union of subspaces, one sample per column",
        f"seed={args.seed}", "rng=numpy PCG64",
        f"subspaces={args.subspaces}", f"dim={args.dim}", f"ambient={args.ambient}",
        f"per_subspace={args.per_subspace}", f"noise={args.noise!r}",
        f"corrupt_fraction={args.corrupt_fraction!r}", f"corrupt_scale={args.corrupt_scale!r}",
    ]
    save_matrix(args.out / "X.csv", data.X, header=header)
    save_labels(args.out / "labels.csv", data.labels, header=[f"seed={args.seed}"])
    save_labels(args.out / "corrupted.csv", data.corrupted, header=[f"seed={args.seed}", "corrupted column indices"])
    print(f"wrote {data.X.shape[0]}x{data.X.shape[1]} matrix to {args.out}")
    return EXIT_OK


def cmd_graph_build(args):
    spec = resolve_spec(args)
    ds = _load(args, labels=False)
    g, converged = build_graph(ds.X, spec)
    header = [f"method={spec.method}", f"dataset={ds.name}"]
    header += [h for h in spec.describe() if h.startswith(("solver.", "theta=", "knn_"))
               or (spec.method in ("nnlrs-ef", "pca+nnlrs") and h.startswith("ef."))]
    header.append(f"converged={converged}")
    save_graph(args.out, g, extra_header=header)
    print(f"{spec.method} graph on {g.node_count} nodes, {int(np.count_nonzero(g.W) // 2)} edges, "
          f"converged={converged} -> {args.out}")
    return EXIT_OK


def cmd_ef_run(args):
    spec = resolve_spec(args)
    ds = _load(args, labels=False)
    sol = solve_ef(normalize_samples(ds.X), spec.ef)
    args.out.mkdir(parents=True, exist_ok=True)
    header = [f"dataset={ds.name}", *[h for h in spec.describe() if h.startswith(("solver.", "ef.", "theta="))]]
    save_matrix(args.out / "projection.csv", sol.P_star, header=header + ["projection P, reduced_dim x d"])
    save_graph(args.out / "graph.csv", graph_from_coefficients(sol.Z_star, spec.theta), extra_header=header)
    lines = [f"# {h}" for h in header]
    lines.append(f"outer_iterations={sol.outer_iterations}")
    lines.append(f"converged={sol.converged}")
    lines.append(f"rejected_updates={len(sol.rejected)}")
    lines.append(f"nnlrs_nonconverged={sol.nnlrs_nonconverged}")
    lines.append("objective=" + ",".join(repr(float(v)) for v in sol.objective_history))
    (args.out / "ef.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"NNLRS-EF: {sol.outer_iterations} outer iterations, converged={sol.converged}, "
          f"objective {sol.objective_history[-1]:.6g} -> {args.out}")
    return EXIT_OK


def _finish(table, out):
    table.write(out)
    sys.stdout.write(table.to_text())
    if table.excessive_failures:
        log.error("%d of %d trials failed", table.failed_trials, table.total_trials)
        return EXIT_FAILED
    return EXIT_OK


def cmd_ssl_run(args):
    spec = resolve_spec(args)
    ds = _load(args)
    return _finish(run_experiment(spec, ds, workers=args.workers), args.out)


def cmd_sweep_beta(args):
    spec = resolve_spec(args)
    try:
        betas = [float(b) for b in args.betas.split(",") if b.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --betas: {exc}") from None
    ds = _load(args)
    try:
        table = beta_sweep(spec, ds, betas, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return _finish(table, args.out)


def cmd_selftest_ops(args):
    checks = run_operator_checks()
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}" + (f"  [{c.detail}]" if c.detail else ""))
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} operator checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAILED


def build_parser():
    p = _Parser(prog="nnlrs", description="Nonnegative low-rank sparse graphs for semi-supervised learning.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    top = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def group(name, help):
        return top.add_parser(name, help=help).add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = group("synth", "synthetic data").add_parser("make", help="write a seeded union-of-subspaces dataset")
    q.add_argument("--out", type=Path, required=True, help="output directory")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--subspaces", type=int, default=3)
    q.add_argument("--dim", type=int, default=2)
    q.add_argument("--ambient", type=int, default=20)
    q.add_argument("--per-subspace", dest="per_subspace", type=int, default=15)
    q.add_argument("--noise", type=float, default=0.0)
    q.add_argument("--corrupt-fraction", dest="corrupt_fraction", type=float, default=0.0)
    q.add_argument("--corrupt-scale", dest="corrupt_scale", type=float, default=1.0)
    q.set_defaults(func=cmd_synth_make)

    q = group("graph", "graph construction").add_parser("build", help="build one affinity graph")
    _add_data_options(q, labels=False)
    q.add_argument("--method", choices=METHODS)
    q.add_argument("--knn-k", dest="knn_k", type=int)
    q.add_argument("--knn-sigma", dest="knn_sigma", type=float)
    q.add_argument("--theta", type=float)
    q.add_argument("--out", type=Path, required=True, help="graph file to write")
    _add_config_options(q, ef=True)
    q.set_defaults(func=cmd_graph_build)

    q = group("ef", "joint embedding").add_parser("run", help="learn a projection and graph jointly")
    _add_data_options(q, labels=False)
    q.add_argument("--theta", type=float)
    q.add_argument("--out", type=Path, required=True, help="output directory")
    _add_config_options(q, ef=True)
    q.set_defaults(func=cmd_ef_run)

    q = group("ssl", "semi-supervised experiments").add_parser("run", help="randomized label-propagation trials")
    _add_data_options(q)
    _add_experiment_options(q)
    _add_config_options(q, ef=True)
    q.set_defaults(func=cmd_ssl_run)

    q = group("sweep", "parameter sweeps").add_parser("beta", help="repeat an experiment over sparsity weights")
    _add_data_options(q)
    _add_experiment_options(q)
    q.add_argument("--betas", default="0,0.2,100", help="comma-separated values (default 0,0.2,100)")
    _add_config_options(q, ef=True)
    q.set_defaults(func=cmd_sweep_beta)

    q = group("selftest", "built-in checks").add_parser("ops", help="run the proximal-operator example table")
    q.set_defaults(func=cmd_selftest_ops)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"nnlrs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MatrixFormatError, OSError) as exc:
        print(f"nnlrs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"nnlrs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
