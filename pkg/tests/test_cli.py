import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from gini_mds import cli
from gini_mds.data import Dataset, SimSpec, gen_heavy_tailed, write_csv
from gini_mds.errors import NumericError
from gini_mds.evaluate import evaluate_embedding


def _csv(path, X, labels=None):
    write_csv(Dataset(np.asarray(X, float), None if labels is None else np.asarray(labels),
                      label_names=None if labels is None else ["a", "b"],
                      label_column=None if labels is None else "cls"), path)
    return str(path)


def _json(path):
    with open(path) as fh:
        return json.load(fh)


def _coords(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


@pytest.fixture
def blobs(tmp_path, rng):
    X = np.vstack([rng.normal(size=(15, 4)), rng.normal(size=(15, 4)) + 4])
    return _csv(tmp_path / "blobs.csv", X, np.repeat([0, 1], 15))


def test_embed_unit_square(tmp_path):
    src = _csv(tmp_path / "sq.csv", [[0, 0], [1, 0], [0, 1], [1, 1]])
    out = tmp_path / "out"
    assert cli.main(["embed", src, "--metric", "euclidean", "--dims", "2", "--out-dir", str(out)]) == 0
    manifest = _json(out / "manifest.json")
    assert manifest["results"]["stress"] < 1e-8
    assert _coords(out / "coords.csv").shape == (4, 2)
    assert manifest["command"] == "embed" and manifest["version"]
    assert set(manifest["timings"]) >= {"load", "distances", "embed"}


def test_embed_two_rows_reports_gini_distance(tmp_path):
    src = _csv(tmp_path / "two.csv", [[10, 1200], [10, 12]])
    out = tmp_path / "out"
    assert cli.main(["embed", src, "--nu", "2", "--dims", "1", "--out-dir", str(out)]) == 0
    assert _json(out / "manifest.json")["results"]["distances"] == [594.0]


def test_embed_gini_needs_nu(tmp_path, capsys):
    src = _csv(tmp_path / "two.csv", [[10, 1200], [10, 12]])
    assert cli.main(["embed", src, "--out-dir", str(tmp_path)]) == 2
    assert "--nu" in capsys.readouterr().err


def test_embed_with_stress_loss_and_tune(blobs, tmp_path):
    out = tmp_path / "out"
    code = cli.main(["embed", blobs, "--label-column", "cls", "--tune", "--grid", "1.5:3:4",
                     "--folds", "3", "--loss", "sammon", "--out-dir", str(out)])
    assert code == 0
    res = _json(out / "manifest.json")["results"]
    assert res["nu"] in (1.5, 2.0, 2.5, 3.0)
    assert res["tune"]["nu_star"] == res["nu"]
    root = ET.parse(out / "scatter.svg").getroot()
    assert len([e for e in root.iter() if e.get("class") == "point"]) == 30


def test_tune_singleton_grid(blobs, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["tune", blobs, "--label-column", "cls", "--grid", "2:2:1", "--out-dir", str(out)]) == 0
    report = _json(out / "tune_report.json")
    assert report["nu_star"] == 2.0
    assert len(report["per_nu"]) == 1


def test_tune_default_grid_and_byte_identical_reruns(blobs, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["tune", blobs, "--label-column", "cls", "--dims", "1", "--seed", "3",
                         "--out-dir", str(out)]) == 0
    assert len(_json(a / "tune_report.json")["per_nu"]) == 30
    assert (a / "tune_report.json").read_bytes() == (b / "tune_report.json").read_bytes()
    assert (a / "coords.csv").read_bytes() == (b / "coords.csv").read_bytes()


def test_tune_rejects_single_fold_without_flag(blobs, tmp_path):
    args = ["tune", blobs, "--label-column", "cls", "--grid", "2:2:1", "--out-dir", str(tmp_path)]
    assert cli.main(args + ["--folds", "1"]) == 2
    assert cli.main(args + ["--no-cv"]) == 0


def test_eval_identity_coordinates(tmp_path, rng):
    X = rng.normal(size=(20, 3))
    src = _csv(tmp_path / "x.csv", X, np.arange(20) % 2)
    coords = tmp_path / "c.csv"
    coords.write_text(cli._coords_csv(X))
    out = tmp_path / "out"
    assert cli.main(["eval", src, str(coords), "--labels", "cls", "--out-dir", str(out)]) == 0
    rep = _json(out / "eval_report.json")
    assert rep["trustworthiness"] == 1.0
    assert rep["pearson"] == pytest.approx(1.0, abs=1e-12)
    lib = evaluate_embedding(X, X, np.arange(20) % 2).to_dict()
    for key in ("nn_agreement", "silhouette", "spearman"):
        assert rep[key] == lib[key]


def test_eval_without_labels_and_row_mismatch(tmp_path, rng):
    X = rng.normal(size=(20, 3))
    src = _csv(tmp_path / "x.csv", X)
    coords = tmp_path / "c.csv"
    coords.write_text(cli._coords_csv(X[:, :2]))
    out = tmp_path / "out"
    assert cli.main(["eval", src, str(coords), "--out-dir", str(out)]) == 0
    rep = _json(out / "eval_report.json")
    assert rep["nn_agreement"] is None and rep["silhouette"] is None
    short = tmp_path / "short.csv"
    short.write_text(cli._coords_csv(X[:19, :2]))
    assert cli.main(["eval", src, str(short), "--out-dir", str(out)]) == 3


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["simulate", "--reps", "2", "--seed", "7", "--n", "40", "--T", "2", "--grid", "1.5:3:4"]
    assert cli.main(args + ["--out-dir", str(a)]) == 0
    assert cli.main(args + ["--out-dir", str(b)]) == 0
    assert (a / "per_rep.csv").read_bytes() == (b / "per_rep.csv").read_bytes()
    with open(a / "per_rep.csv") as fh:
        rows = list(csv.DictReader(fh))
    agg = _json(a / "aggregate.json")
    pearson = np.array([float(r["pearson"]) for r in rows])
    assert agg["pearson"]["mean"] == pytest.approx(pearson.mean(), rel=1e-12)
    assert agg["pearson"]["se"] == pytest.approx(pearson.std(ddof=1) / np.sqrt(2), rel=1e-12)
    assert agg["reps"] == 2


def test_contaminate_command(tmp_path):
    ds = gen_heavy_tailed(SimSpec(n=100, seed=1))
    src = tmp_path / "x.csv"
    write_csv(ds, src)
    out0, out2 = tmp_path / "zero", tmp_path / "two"
    assert cli.main(["contaminate", str(src), "--fraction", "0", "--out-dir", str(out0)]) == 0
    assert _json(out0 / "indices.json")["indices"] == []
    assert (out0 / "contaminated.csv").read_text() == src.read_text()
    assert cli.main(["contaminate", str(src), "--fraction", "0.02", "--seed", "4",
                     "--out-dir", str(out2)]) == 0
    assert len(_json(out2 / "indices.json")["indices"]) == 2


def test_replay_reproduces_outputs(blobs, tmp_path):
    first = tmp_path / "first"
    assert cli.main(["embed", blobs, "--label-column", "cls", "--nu", "2.5",
                     "--out-dir", str(first)]) == 0
    again = tmp_path / "again"
    assert cli.main(["replay", str(first / "manifest.json"), "--out-dir", str(again)]) == 0
    assert (first / "coords.csv").read_bytes() == (again / "coords.csv").read_bytes()


def test_data_errors_exit_3(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3,oops\n")
    assert cli.main(["embed", str(bad), "--nu", "2", "--out-dir", str(tmp_path)]) == 3
    assert cli.main(["embed", str(tmp_path / "missing.csv"), "--nu", "2",
                     "--out-dir", str(tmp_path)]) == 3


def test_numeric_failure_exit_4(blobs, tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericError("eigendecomposition failed")

    monkeypatch.setattr(cli, "classical_mds", boom)
    assert cli.main(["embed", blobs, "--label-column", "cls", "--nu", "2",
                     "--out-dir", str(tmp_path)]) == 4


def test_bad_config_exit_2(blobs, tmp_path):
    assert cli.main(["embed", blobs, "--nu", "0.5", "--label-column", "cls",
                     "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["tune", blobs, "--grid", "3:2:4", "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["simulate", "--reps", "0", "--out-dir", str(tmp_path)]) == 2


def test_threads_env_fallback(blobs, tmp_path, monkeypatch):
    monkeypatch.setenv("GINI_MDS_THREADS", "2")
    out = tmp_path / "out"
    assert cli.main(["embed", blobs, "--label-column", "cls", "--nu", "2", "--out-dir", str(out)]) == 0
    assert cli.main(["embed", blobs, "--label-column", "cls", "--nu", "2", "--threads", "1",
                     "--out-dir", str(tmp_path / "one")]) == 0
    assert (out / "coords.csv").read_bytes() == (tmp_path / "one" / "coords.csv").read_bytes()
