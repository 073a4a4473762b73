import json
import subprocess
import sys

import pytest

from spatial_leader.cli import run_command
from spatial_leader.corpus import Institution

from conftest import gravity_corpus, rec, write_corpus

FULL_PIPELINE = [
    ["validate"],
    ["lambda", "--by-year"],
    ["build", "--lambda", "1.32"],
    ["rank", "--metric", "spatialleaderrank", "--lambda", "1.32"],
    ["rank", "--metric", "leaderrank"],
    ["rank", "--metric", "pagerank"],
    ["rank", "--metric", "indegree"],
    ["rank", "--metric", "betweenness"],
    ["rank", "--metric", "closeness"],
    ["rank", "--metric", "publication"],
    ["eval", "--lambda", "1.32"],
    ["powerlaw"],
    ["kde", "--grid-shape", "18x36"],
]


def run(args, out):
    return run_command(args + ["--out", str(out)])


def test_rank_toy_corpus(tmp_path):
    assert run(["rank", "--metric", "spatialleaderrank", "--lambda", "1.32", "--toy"], tmp_path) == 0
    lines = (tmp_path / "ranking_spatialleaderrank.csv").read_text().splitlines()
    assert lines[0].startswith("# metric=spatialleaderrank")
    assert "converged=true" in lines[0]
    assert [ln.split(",")[1] for ln in lines[2:]] == ["a", "c", "b", "d"]


def test_validate_reports_dropped_record(tmp_path, capsys):
    inst = {k: Institution(k, k, 0.0, float(i), "US") for i, k in enumerate("ab")}
    pubs, inst_path = write_corpus(
        tmp_path, [rec("ok", [("a", True), ("b", False)]), rec("solo", [("a", True)])], inst
    )
    assert run(["validate", "--pubs", str(pubs), "--inst", str(inst_path)], tmp_path / "o") == 0
    assert "dropped=1" in capsys.readouterr().out
    text = (tmp_path / "o" / "validation.csv").read_text()
    assert "solo,single-institution" in text


def test_unknown_metric_and_flag_exit_1(tmp_path, capsys):
    assert run(["rank", "--metric", "bogus", "--toy"], tmp_path) == 1
    err = capsys.readouterr().err
    assert "usage:" in err
    assert run(["frobnicate"], tmp_path) == 1
    assert run(["rank", "--metric", "pagerank", "--toy", "--nope"], tmp_path) == 1


def test_build_requires_lambda(tmp_path, capsys):
    assert run(["build", "--toy"], tmp_path) == 1
    assert "--lambda" in capsys.readouterr().err


def test_missing_input_file_exit_1(tmp_path, capsys):
    assert run(["validate", "--pubs", str(tmp_path / "nope.jsonl"), "--inst", str(tmp_path / "x.csv")], tmp_path) == 1
    assert "nope.jsonl" in capsys.readouterr().err


def test_unwritable_destination_exit_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run_command(["build", "--toy", "--lambda", "1", "--out", str(blocker / "sub")]) == 1
    assert str(blocker) in capsys.readouterr().err


def test_rank_deficient_gravity_exit_2(tmp_path, capsys):
    # a single pair cannot support five coefficients
    assert run(["lambda", "--toy", "--years", "2017:2017"], tmp_path) == 2
    assert "too few samples" in capsys.readouterr().err


def test_empty_ranking_header_only(tmp_path):
    inst = {k: Institution(k, k, 0.0, float(i), "US") for i, k in enumerate("ab")}
    pubs, inst_path = write_corpus(tmp_path, [rec("solo", [("a", True)])], inst)
    assert run(["rank", "--metric", "leaderrank", "--pubs", str(pubs), "--inst", str(inst_path)], tmp_path / "o") == 0
    assert (tmp_path / "o" / "ranking_leaderrank.csv").read_text() == "rank,institution_id,score\n"


def test_json_and_csv_parity(tmp_path):
    for fmt in ("csv", "json"):
        assert run(["rank", "--metric", "spatialleaderrank", "--lambda", "1.32", "--toy", "--format", fmt], tmp_path) == 0
    csv_rows = [ln.split(",") for ln in (tmp_path / "ranking_spatialleaderrank.csv").read_text().splitlines()[2:]]
    doc = json.loads((tmp_path / "ranking_spatialleaderrank.json").read_text())
    assert doc["converged"] is True
    assert [(str(r["rank"]), r["institution_id"], float(r["score"])) for r in doc["rows"]] == [
        (a, b, float(c)) for a, b, c in csv_rows
    ]


def test_estimate_then_build_equals_explicit_lambda(tmp_path, capsys):
    records, inst = gravity_corpus(seed=1)
    pubs, inst_path = write_corpus(tmp_path, records, inst)
    src = ["--pubs", str(pubs), "--inst", str(inst_path)]
    assert run(["lambda"] + src, tmp_path / "fit") == 0
    printed = capsys.readouterr().out.strip().split("=", 1)[1]
    assert float(printed) > 0
    assert run(["build", "--lambda", "estimate"] + src, tmp_path / "est") == 0
    assert run(["build", "--lambda", printed] + src, tmp_path / "explicit") == 0
    for name in ("network.csv", "leadership_mass.csv"):
        assert (tmp_path / "est" / name).read_bytes() == (tmp_path / "explicit" / name).read_bytes()


def test_full_pipeline_outputs(tmp_path):
    for args in FULL_PIPELINE:
        assert run(args + ["--toy"], tmp_path) == 0, args
    names = sorted(p.name for p in tmp_path.iterdir())
    for expected in ("network.csv", "leadership_mass.csv", "evaluation.csv", "kde_grid.csv",
                     "powerlaw.csv", "distance_summary.csv", "gravity_fit.txt", "gravity_fit.json",
                     "lambda_by_year.csv", "index_correlation.csv", "validation.csv"):
        assert expected in names
    evaluation = (tmp_path / "evaluation.csv").read_text().splitlines()
    assert evaluation[0] == "index,impact_metric,measure,value"
    assert len(evaluation) - 1 == 7 * 4 * (2 + 7)
    grid = (tmp_path / "kde_grid.csv").read_text().splitlines()
    assert grid[0] == "-90,90,-180,180,18,36,100"
    assert len(grid) == 19


def test_bad_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SLR_THREADS", "zero")
    assert run(["validate", "--toy"], tmp_path) == 1
    monkeypatch.setenv("SLR_THREADS", "4")
    assert run(["validate", "--toy"], tmp_path) == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "spatial_leader", "rank", "--metric", "bogus", "--toy", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 1
    assert "usage:" in proc.stderr
