import numpy as np
import pytest

from nnlrs.cli import build_parser, main, resolve_spec
from nnlrs.dataio import load_labels, load_matrix, read_header
from nnlrs.graph import load_graph


@pytest.fixture
def data_dir(tmp_path):
    assert main(["synth", "make", "--out", str(tmp_path / "d"), "--seed", "2"]) == 0
    return tmp_path / "d"


def test_synth_make(data_dir):
    X = load_matrix(data_dir / "X.csv")
    assert X.shape == (20, 45)
    assert "seed=2" in read_header(data_dir / "X.csv")
    assert load_labels(data_dir / "labels.csv").tolist() == [0] * 15 + [1] * 15 + [2] * 15


def test_graph_build(data_dir, tmp_path):
    out = tmp_path / "g.csv"
    assert main(["graph", "build", "--data", str(data_dir / "X.csv"), "--out", str(out),
                 "--solver.beta", "0.3", "--theta", "0.001"]) == 0
    g = load_graph(out)
    assert g.node_count == 45
    header = read_header(out)
    assert "solver.beta=0.3" in header and "theta=0.001" in header


def test_knn_graph_with_rows_as_samples(tmp_path):
    p = tmp_path / "pts.csv"
    p.write_text("0,0\n0,1\n5,5\n")
    out = tmp_path / "g.csv"
    assert main(["graph", "build", "--data", str(p), "--rows-are-samples", "--method", "knn",
                 "--knn-k", "1", "--out", str(out)]) == 0
    W = load_graph(out).W
    assert W.shape == (3, 3) and W[0, 1] == pytest.approx(np.exp(-0.5))


def test_ssl_run_and_config_layering(data_dir, tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[solver]\nbeta = 0.5\nlam = 5\n[experiment]\ntrials = 2\nfractions = 0.2\n"
                   "propagation = ghf\n")
    out = tmp_path / "r"
    rc = main(["ssl", "run", "--data", str(data_dir / "X.csv"), "--labels", str(data_dir / "labels.csv"),
               "--config", str(ini), "--solver.lam", "2", "--out", str(out)])
    assert rc == 0
    csv = (out / "results.csv").read_text()
    assert "# solver.beta=0.5" in csv and "# solver.lam=2.0" in csv and "# trials=2" in csv
    assert "nnlrs,ghf,0.5,0.2,2,2," in csv
    assert (out / "results.txt").read_text() in capsys.readouterr().out


def test_resolve_spec_defaults():
    args = build_parser().parse_args(["ssl", "run", "--data", "x", "--labels", "y", "--out", "o"])
    spec = resolve_spec(args)
    assert spec.nnlrs.beta == 0.2 and spec.nnlrs.lam == 10.0 and spec.trials == 50
    args = build_parser().parse_args(["ssl", "run", "--data", "x", "--labels", "y", "--out", "o",
                                      "--ef.gamma", "2.5", "--solver.track_objective", "false"])
    spec = resolve_spec(args)
    assert spec.ef.gamma == 2.5 and spec.nnlrs.track_objective is False


def test_sweep_beta(data_dir, tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", "beta", "--data", str(data_dir / "X.csv"), "--labels", str(data_dir / "labels.csv"),
                 "--trials", "1", "--fractions", "0.1", "--betas", "0,0.2", "--out", str(out)]) == 0
    rows = [l for l in (out / "results.csv").read_text().splitlines() if l.startswith("nnlrs,")]
    assert [r.split(",")[2] for r in rows] == ["0.0", "0.2"]
    assert "# betas=0.0,0.2" in (out / "results.csv").read_text()


def test_ef_run(tmp_path):
    d = tmp_path / "d"
    assert main(["synth", "make", "--out", str(d), "--ambient", "30", "--per-subspace", "6"]) == 0
    out = tmp_path / "ef"
    assert main(["ef", "run", "--data", str(d / "X.csv"), "--ef.reduced_dim", "6", "--ef.outer_max", "2",
                 "--out", str(out)]) == 0
    assert load_matrix(out / "projection.csv").shape == (6, 30)
    assert load_graph(out / "graph.csv").node_count == 18
    assert "outer_iterations=" in (out / "ef.txt").read_text()


def test_selftest_ops(capsys):
    assert main(["selftest", "ops"]) == 0
    assert "12/12 operator checks passed" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["ssl", "run", "--data", "x"],
    ["ssl", "run", "--data", "x", "--labels", "y", "--out", "o", "--method", "lle"],
])
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


def test_bad_values_exit_1(data_dir, tmp_path, capsys):
    base = ["ssl", "run", "--data", str(data_dir / "X.csv"), "--labels", str(data_dir / "labels.csv"),
            "--out", str(tmp_path / "o")]
    assert main(base + ["--solver.beta", "abc"]) == 1
    assert main(base + ["--solver.beta", "-1"]) == 1
    ini = tmp_path / "bad.ini"
    ini.write_text("[solver]\nbogus = 1\n")
    assert main(base + ["--config", str(ini)]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_parse_errors_exit_1(tmp_path, capsys):
    p = tmp_path / "X.csv"
    p.write_text("1,2\n3\n")
    y = tmp_path / "y.csv"
    y.write_text("0\n1\n")
    assert main(["ssl", "run", "--data", str(p), "--labels", str(y), "--out", str(tmp_path / "o")]) == 1
    assert "X.csv:2" in capsys.readouterr().err
    assert main(["graph", "build", "--data", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "g")]) == 1


def test_excessive_failures_exit_2(tmp_path):
    X = tmp_path / "X.csv"
    X.write_text("0,1,5,6\n0,1,5,6\n")
    y = tmp_path / "y.csv"
    y.write_text("0\n0\n1\n1\n")
    rc = main(["ssl", "run", "--data", str(X), "--labels", str(y), "--method", "knn", "--knn-k", "1",
               "--fractions", "1.0", "--trials", "2", "--out", str(tmp_path / "o")])
    assert rc == 2
    assert (tmp_path / "o" / "results.csv").exists()
