import json
import os

import numpy as np
import pytest

from conftest import correlated_columns
from main import main


@pytest.fixture
def data_csv(write_csv):
    return write_csv("data.csv", correlated_columns(3, n=80), header=("x1", "x2", "x3"))


def _learn(path, out_dir, iters=60, burnin=30, *extra):
    return main(["learn", "--input", path, "--out-dir", str(out_dir), "--iters", str(iters), "--burnin", str(burnin), "--seed", "4", *extra])


class TestLearnCommand:
    def test_writes_every_artifact(self, data_csv, tmp_path):
        out = tmp_path / "out"
        assert _learn(data_csv, out) == 0
        for name in ("data.graph.dot", "data.graph.graphml", "data.graph.json", "data.trace.csv", "data.trace.json", "data.manifest.json"):
            assert (out / name).is_file(), name
        manifest = json.load(open(out / "data.manifest.json"))
        assert manifest["command"] == "learn"
        assert manifest["seeds"]["chain"] == 4
        assert data_csv in manifest["inputs"]
        sidecar = json.load(open(out / "data.trace.json"))
        assert sidecar["labels"] == ["x1", "x2", "x3"]
        assert sidecar["n_burnin"] == 30

    def test_repeat_run_is_byte_identical(self, data_csv, tmp_path):
        assert _learn(data_csv, tmp_path / "one") == 0
        assert _learn(data_csv, tmp_path / "two") == 0
        for name in ("data.graph.dot", "data.graph.graphml", "data.graph.json", "data.trace.csv", "data.trace.json"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_single_post_burnin_iteration(self, data_csv, tmp_path):
        assert _learn(data_csv, tmp_path, 100, 99) == 0

    def test_subsample_and_csv_edges(self, data_csv, tmp_path):
        assert _learn(data_csv, tmp_path, 60, 30, "--rows", "40", "--format", "csv") == 0
        assert (tmp_path / "data.graph.csv").is_file()
        assert json.load(open(tmp_path / "data.trace.json"))["rows_used"] == 40

    def test_missing_input(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.csv")
        assert _learn(missing, tmp_path) == 2
        assert "nope.csv" in capsys.readouterr().err

    def test_burnin_not_below_iterations(self, data_csv, tmp_path):
        assert _learn(data_csv, tmp_path, 10, 10) == 2

    def test_too_many_rows(self, data_csv, tmp_path):
        assert _learn(data_csv, tmp_path, 60, 30, "--rows", "81") == 2
        assert not (tmp_path / "data.trace.csv").exists()


class TestDistanceCommand:
    def test_self_distance(self, data_csv, tmp_path, capsys):
        _learn(data_csv, tmp_path)
        trace = str(tmp_path / "data.trace.csv")
        assert main(["distance", trace, trace, "--out-dir", str(tmp_path)]) == 0
        report = json.load(open(tmp_path / "data.trace__data.trace.distance.json"))
        assert report["delta"] == 0.0
        assert report["abs_corr"] == 1.0
        assert report["n_post"] == 30
        assert "delta" in capsys.readouterr().out

    def test_length_mismatch(self, data_csv, tmp_path):
        _learn(data_csv, tmp_path / "a", 60, 30)
        _learn(data_csv, tmp_path / "b", 80, 30)
        code = main(["distance", str(tmp_path / "a" / "data.trace.csv"), str(tmp_path / "b" / "data.trace.csv"), "--out-dir", str(tmp_path)])
        assert code == 3

    def test_truncation_flag(self, data_csv, tmp_path):
        _learn(data_csv, tmp_path / "a", 60, 30)
        _learn(data_csv, tmp_path / "b", 80, 30)
        code = main([
            "distance", str(tmp_path / "a" / "data.trace.csv"), str(tmp_path / "b" / "data.trace.csv"),
            "--out-dir", str(tmp_path), "--truncate-min",
        ])
        assert code == 0

    def test_sidecar_required_without_burnin(self, data_csv, tmp_path):
        _learn(data_csv, tmp_path)
        trace = tmp_path / "data.trace.csv"
        os.remove(tmp_path / "data.trace.json")
        assert main(["distance", str(trace), str(trace), "--out-dir", str(tmp_path)]) == 2
        assert main(["distance", str(trace), str(trace), "--out-dir", str(tmp_path), "--burnin", "30"]) == 0


class TestBignetCommand:
    @pytest.fixture
    def corr_csv(self, write_csv, rng):
        corr = np.corrcoef(rng.normal(size=(30, 8)), rowvar=False)
        corr = (corr + corr.T) / 2
        np.fill_diagonal(corr, 1.0)
        return write_csv("corr.csv", corr, header=[f"d{i}" for i in range(8)])

    def test_complete_graph_at_zero(self, corr_csv, tmp_path):
        assert main(["bignet", "--corr", corr_csv, "--tau", "0.0", "--out-dir", str(tmp_path)]) == 0
        stats = json.load(open(tmp_path / "corr.stats.json"))
        assert stats["edges"] == 28
        assert stats["nodes_nonzero_degree"] == 8
        assert (tmp_path / "corr.edges.csv").is_file()
        assert (tmp_path / "corr.network.graphml").is_file()

    def test_class_statistics(self, corr_csv, tmp_path):
        classes = tmp_path / "classes.csv"
        classes.write_text("node,class\n" + "".join(f"d{i},{'ab'[i % 2]}\n" for i in range(8)))
        assert main(["bignet", "--corr", corr_csv, "--classes", str(classes), "--tau", "0.1", "--out-dir", str(tmp_path)]) == 0
        stats = json.load(open(tmp_path / "corr.stats.json"))
        assert set(stats["class_stats"]["per_class"]) == {"a", "b"}
        assert stats["class_stats"]["classified_total"] == 8

    def test_network_distance_to_itself(self, corr_csv, tmp_path):
        assert main(["bignet", "--corr", corr_csv, "--corr-b", corr_csv, "--out-dir", str(tmp_path)]) == 0
        assert json.load(open(tmp_path / "corr.stats.json"))["network_hellinger"] == 0.0

    def test_npmi_input(self, tmp_path):
        rng = np.random.default_rng(0)
        lines = ["disease\tsymptom\tnpmi"]
        for d in range(12):
            for s in range(15):
                lines.append(f"dis{d}\tsym{s}\t{rng.uniform(-1, 1):.4f}")
        npmi = tmp_path / "dph.tsv"
        npmi.write_text("\n".join(lines) + "\n")
        assert main(["bignet", "--npmi", str(npmi), "--tau", "0.3", "--out-dir", str(tmp_path), "--threads", "2"]) == 0
        stats = json.load(open(tmp_path / "dph.stats.json"))
        assert stats["nodes_total"] == 12

    def test_corr_b_needs_dense_input(self, tmp_path, corr_csv):
        npmi = tmp_path / "dph.csv"
        npmi.write_text("a,x,0.5\na,y,0.1\nb,x,0.2\nb,y,0.9\n")
        assert main(["bignet", "--npmi", str(npmi), "--corr-b", corr_csv, "--out-dir", str(tmp_path)]) == 2

    def test_invalid_matrix(self, write_csv, tmp_path):
        bad = write_csv("bad.csv", np.array([[1.0, 1.5], [1.5, 1.0]]))
        assert main(["bignet", "--corr", bad, "--out-dir", str(tmp_path)]) == 2


WINE_WHITE = os.getenv("SRGG_WINE_WHITE")
WINE_RED = os.getenv("SRGG_WINE_RED")


@pytest.mark.slow
@pytest.mark.skipif(not (WINE_WHITE and WINE_RED), reason="SRGG_WINE_WHITE / SRGG_WINE_RED not set")
def test_wine_models(tmp_path):
    for path in (WINE_WHITE, WINE_RED):
        code = main(["learn", "--input", path, "--delimiter", ";", "--rows", "300", "--seed", "1", "--out-dir", str(tmp_path)])
        assert code == 0
    white_stem = os.path.splitext(os.path.basename(WINE_WHITE))[0]
    graph = json.load(open(tmp_path / f"{white_stem}.graph.json"))
    pairs = {frozenset((link["source"], link["target"])) for link in graph["links"]}
    for a, b in [
        ("free sulfur dioxide", "total sulfur dioxide"),
        ("residual sugar", "density"),
        ("density", "alcohol"),
        ("alcohol", "quality"),
        ("volatile acidity", "quality"),
    ]:
        assert frozenset((a, b)) in pairs, (a, b)

    red_stem = os.path.splitext(os.path.basename(WINE_RED))[0]
    code = main([
        "distance", str(tmp_path / f"{white_stem}.trace.csv"), str(tmp_path / f"{red_stem}.trace.csv"),
        "--out-dir", str(tmp_path),
    ])
    assert code == 0
    report = json.load(open(tmp_path / f"{white_stem}.trace__{red_stem}.trace.distance.json"))
    assert 0.0 < report["d_hellinger"] < 1.0
    assert min(report["d_max"]) > 0.0
    assert report["delta"] > 0.0
