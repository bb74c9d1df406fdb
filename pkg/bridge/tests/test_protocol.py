import io
import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from fair_context_adapter import AdapterSession, handle_line, make_backend, serve
from fair_context_adapter.backends import BackendUnavailable, MeanBackend

GOLDEN = Path(__file__).parent / "golden" / "mean_session.json"


def _session(max_context=None):
    return AdapterSession(backend=MeanBackend(), model_name="mean",
                          max_context=max_context)


def _spawn(*extra):
    return subprocess.Popen(
        [sys.executable, "-m", "fair_context_adapter.cli", "--model", "mean", *extra],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1)


def test_golden_transcript_subprocess():
    doc = json.loads(GOLDEN.read_text())
    proc = _spawn("--max-context", "3")
    try:
        for step in doc["steps"]:
            proc.stdin.write(json.dumps(step["send"]) + "\n")
            proc.stdin.flush()
            reply = json.loads(proc.stdout.readline())
            for key, value in step["expect"].items():
                assert reply.get(key) == value, (step, reply)
            if "message_contains" in step:
                assert step["message_contains"] in reply.get("message", ""), reply
        proc.stdin.write(json.dumps({"type": "bye"}) + "\n")
        proc.stdin.flush()
        assert proc.wait(timeout=10) == 0
    finally:
        proc.kill()


def test_hello_ready_handshake():
    reply, keep = handle_line(_session(), json.dumps({"type": "hello", "version": 1}))
    assert keep
    assert reply["type"] == "ready"
    assert reply["model"] == "mean"
    assert reply["max_context"] is None
    assert reply["package_version"] == "builtin"


def test_bye_stops_session():
    reply, keep = handle_line(_session(), json.dumps({"type": "bye"}))
    assert reply is None and not keep


def test_malformed_line_error_with_null_id_and_continues():
    reply, keep = handle_line(_session(), "this is not json")
    assert keep
    assert reply["type"] == "error" and reply["id"] is None

    # session still serves afterwards
    ok, keep = handle_line(_session(), json.dumps(
        {"type": "predict", "id": 9, "context_x": [[1.0]], "context_y": [1.0],
         "query_x": [[0.0]]}))
    assert keep and ok["type"] == "proba" and ok["p1"] == [1.0]


def test_blank_lines_ignored():
    reply, keep = handle_line(_session(), "   \n")
    assert reply is None and keep


def test_ragged_context_rejected():
    reply, _ = handle_line(_session(), json.dumps(
        {"type": "predict", "id": 1, "context_x": [[1.0], [2.0, 3.0]],
         "context_y": [0.0, 1.0], "query_x": [[0.0]]}))
    assert reply["type"] == "error" and "rectangular" in reply["message"]


def test_bool_entries_rejected():
    reply, _ = handle_line(_session(), json.dumps(
        {"type": "predict", "id": 1, "context_x": [[True]], "context_y": [1.0],
         "query_x": [[0.0]]}))
    assert reply["type"] == "error"


def test_query_width_mismatch_rejected():
    reply, _ = handle_line(_session(), json.dumps(
        {"type": "predict", "id": 2, "context_x": [[1.0, 2.0]], "context_y": [1.0],
         "query_x": [[0.0]]}))
    assert reply["type"] == "error" and "width" in reply["message"]


def test_oversized_context_names_limit():
    reply, _ = handle_line(_session(max_context=2), json.dumps(
        {"type": "predict", "id": 3, "context_x": [[1.0], [2.0], [3.0]],
         "context_y": [0.0, 1.0, 0.0], "query_x": [[0.0]]}))
    assert reply["type"] == "error"
    assert "max_context is 2" in reply["message"]


def test_single_class_context_scores_that_class():
    for label, expect in ((1.0, 1.0), (0.0, 0.0)):
        reply, _ = handle_line(_session(), json.dumps(
            {"type": "predict", "id": 4, "context_x": [[1.0], [2.0]],
             "context_y": [label, label], "query_x": [[0.0], [9.0]]}))
        assert reply["p1"] == [expect, expect]
        assert all(p >= 0.9 for p in reply["p1"]) or label == 0.0


def test_response_ids_bijective_in_order():
    session = _session()
    ids = [7, 3, 11, 3, 0]
    seen = []
    for req_id in ids:
        reply, _ = handle_line(session, json.dumps(
            {"type": "predict", "id": req_id, "context_x": [[1.0], [2.0]],
             "context_y": [0.0, 1.0], "query_x": [[0.0]]}))
        seen.append(reply["id"])
    assert seen == ids


def test_serve_loop_streams():
    lines = [
        json.dumps({"type": "hello", "version": 1}),
        json.dumps({"type": "predict", "id": 1, "context_x": [[0.0], [1.0]],
                    "context_y": [1.0, 0.0], "query_x": [[2.0]]}),
        json.dumps({"type": "bye"}),
        json.dumps({"type": "predict", "id": 2, "context_x": [[0.0]],
                    "context_y": [1.0], "query_x": [[2.0]]}),
    ]
    out = io.StringIO()
    code = serve(_session(), instream=iter(line + "\n" for line in lines), outstream=out)
    assert code == 0
    replies = [json.loads(line) for line in out.getvalue().splitlines()]
    assert [r["type"] for r in replies] == ["ready", "proba"]   # nothing after bye


def test_unknown_model_exits_with_error():
    proc = subprocess.run(
        [sys.executable, "-m", "fair_context_adapter.cli", "--model", "nope"],
        capture_output=True, text=True)
    assert proc.returncode == 2


def test_missing_model_package_reports_cleanly():
    missing = [name for name in ("tabpfn", "tabicl", "tabdpt")
               if not _importable(name)]
    if not missing:
        pytest.skip("all real model packages are installed here")
    with pytest.raises(BackendUnavailable, match=missing[0]):
        make_backend(missing[0])


def _importable(name):
    import importlib.util

    return importlib.util.find_spec(name) is not None


@pytest.mark.skipif(shutil.which("fair-context") is None,
                    reason="primary CLI not on PATH")
def test_end_to_end_with_primary_cli(tmp_path):
    data = tmp_path / "data.csv"
    subprocess.run(["fair-context", "synth", "--n", "200", "--m-z", "2",
                    "--label-weights", "1.0", "--seed", "4", "--out", str(data)],
                   check=True, capture_output=True)
    out = tmp_path / "records.jsonl"
    adapter_cmd = f"{sys.executable} -m fair_context_adapter.cli --model mean"
    proc = subprocess.run(
        ["fair-context", "evaluate", "--data", str(data), "--target", "target",
         "--sensitive", "sensitive", "--method", "vanilla",
         "--predictor", f"external:{adapter_cmd}",
         "--seeds", "1", "--folds", "2", "--jobs", "1", "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == 2
    # the mean backend scores every query with the context positive rate
    assert all(0.0 <= r["accuracy"] <= 1.0 for r in records)
