import json
import socket
import subprocess
import sys
import time
import urllib.request

import pytest

from foodprompts.cli import main
from foodprompts.persistence import load_model, parse_report

TOY_CORPUS = "toast butter\ntoast butter jam\ntoast\ncoffee milk\n"


@pytest.fixture
def toy_corpus_file(tmp_path):
    path = tmp_path / "toy.corpus"
    path.write_text(TOY_CORPUS, encoding="utf-8")
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_build_reports_counts(tmp_path, toy_corpus_file, capsys):
    out_path = tmp_path / "toy.model"
    code, out, _ = run(capsys, "build", "--corpus", toy_corpus_file, "--out", out_path)
    assert code == 0
    assert "5 foods" in out and "4 pairs" in out and "4 meals" in out
    model = load_model(out_path.read_bytes())
    assert model.total_meals == 4


def test_build_is_byte_deterministic(tmp_path, toy_corpus_file, capsys):
    first = tmp_path / "a.model"
    second = tmp_path / "b.model"
    run(capsys, "build", "--corpus", toy_corpus_file, "--out", first, "--label", "toy")
    run(capsys, "build", "--corpus", toy_corpus_file, "--out", second, "--label", "toy")
    assert first.read_bytes() == second.read_bytes()


def test_build_empty_corpus_exits_one(tmp_path, capsys):
    empty = tmp_path / "empty.corpus"
    empty.write_text("# nothing\n", encoding="utf-8")
    code, _, err = run(capsys, "build", "--corpus", empty, "--out", tmp_path / "x.model")
    assert code == 1
    assert "no meals" in err


def test_missing_file_exits_two(tmp_path, capsys):
    code, _, err = run(
        capsys, "build", "--corpus", tmp_path / "absent.corpus", "--out", tmp_path / "x"
    )
    assert code == 2


def test_build_min_pair_count_prunes(tmp_path, toy_corpus_file, capsys):
    out_path = tmp_path / "pruned.model"
    code, out, _ = run(
        capsys,
        "build", "--corpus", toy_corpus_file, "--out", out_path,
        "--min-pair-count", "2",
    )
    assert code == 0
    model = load_model(out_path.read_bytes())
    assert model.pair_counts == {("butter", "toast"): 2}


@pytest.fixture
def toy_model_file(tmp_path, toy_corpus_file, capsys):
    path = tmp_path / "toy.model"
    main(["build", "--corpus", str(toy_corpus_file), "--out", str(path)])
    capsys.readouterr()
    return path


def test_recommend_table(toy_model_file, capsys):
    code, out, _ = run(capsys, "recommend", "--model", toy_model_file, "toast")
    assert code == 0
    lines = [l for l in out.splitlines() if l and not l.startswith(("food", "-"))]
    assert lines[0].startswith("butter") and "2" in lines[0]
    assert lines[1].startswith("jam")


def test_recommend_structured(toy_model_file, capsys):
    code, out, _ = run(
        capsys, "recommend", "--model", toy_model_file, "toast", "--format", "structured"
    )
    assert code == 0
    recs = json.loads(out)
    assert [r["food"] for r in recs] == ["butter", "jam"]
    assert recs[0]["score"] == 2.0


def test_recommend_unknown_food_warns_but_succeeds(toy_model_file, capsys):
    code, out, err = run(capsys, "recommend", "--model", toy_model_file, "dragonfruit")
    assert code == 0
    assert "dragonfruit" in err
    assert "butter" not in out


def test_recommend_limit_one(toy_model_file, capsys):
    code, out, _ = run(
        capsys, "recommend", "--model", toy_model_file, "toast", "--limit", "1"
    )
    rows = [l for l in out.splitlines() if l and not l.startswith(("food", "-"))]
    assert len(rows) == 1


def test_evaluate_writes_report(tmp_path, capsys):
    corpus = tmp_path / "rep.corpus"
    corpus.write_text("A B\nA B\nA B\n", encoding="utf-8")
    report_path = tmp_path / "report.json"
    code, out, _ = run(
        capsys,
        "evaluate", "--corpus", corpus, "--ks", "1,5", "--out", report_path,
    )
    assert code == 0
    report = parse_report(report_path.read_text(encoding="utf-8"))
    assert report.cases_evaluated == 6
    assert report.recall_at_k[1] == 1.0
    assert "cases evaluated: 6" in out


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_serve_answers_health_check(tmp_path, toy_model_file):
    port = free_port()
    proc = subprocess.Popen(
        [
            sys.executable, "-m", "foodprompts", "serve",
            "--listen", f"127.0.0.1:{port}",
            "--model", str(toy_model_file),
            "--arm-policy", "fixed:generated",
            "--log-dir", str(tmp_path / "serve-logs"),
        ],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        deadline = time.time() + 15
        body = None
        while time.time() < deadline:
            try:
                with urllib.request.urlopen(
                    f"http://127.0.0.1:{port}/health", timeout=1
                ) as resp:
                    body = json.loads(resp.read())
                break
            except OSError:
                time.sleep(0.2)
        assert body is not None, "service never came up"
        assert body["status"] == "ok"
        assert body["model_loaded"] is True
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_stats_structured_round_trip(tmp_path, capsys):
    recall_line = json.dumps(
        {
            "recall_id": "r1",
            "respondent_id": "p1",
            "arm": "handcoded",
            "submitted_at": "2024-05-02T09:00:00+00:00",
            "duration_minutes": 10,
            "energy_kcal": 1800,
            "device_class": "desktop",
            "meals": [{"name": "b", "entries": ["toast", "butter"]}],
        }
    )
    event_line = json.dumps(
        {
            "recall_id": "r1",
            "meal_index": 0,
            "prompt_type": "handcoded",
            "shown": ["butter", "jam"],
            "accepted": ["butter"],
        }
    )
    recall_log = tmp_path / "recalls.jsonl"
    event_log = tmp_path / "events.jsonl"
    recall_log.write_text(recall_line + "\n", encoding="utf-8")
    event_log.write_text(event_line + "\n", encoding="utf-8")

    code, out, _ = run(
        capsys,
        "stats", "--recall-log", recall_log, "--event-log", event_log,
        "--format", "structured",
    )
    assert code == 0
    arms = json.loads(out)["arms"]
    assert arms["handcoded"]["precision"] == 0.5
    assert arms["handcoded"]["recalls"] == 1
    assert arms["generated"]["recalls"] == 0

    code, table, _ = run(
        capsys, "stats", "--recall-log", recall_log, "--event-log", event_log
    )
    assert code == 0
    assert "precision" in table and "0.5000" in table
