"""CLI tests: subcommand flows and exit-code contract."""

import json

import pytest

from statescope.cli import main
from statescope.traces import session_from_json


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_synth_deterministic_output_files(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        code, _, _ = run(capsys, "synth", "--device", "vision", "--seed", "7",
                         "--windows-per-state", "6", "--window-ms", "100", "--out", str(out))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    sess = session_from_json(a.read_text())
    assert len(sess.windows) == 18


def test_synth_different_seeds_differ(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "synth", "--device", "vision", "--seed", "1",
        "--windows-per-state", "6", "--window-ms", "100", "--out", str(a))
    run(capsys, "synth", "--device", "vision", "--seed", "2",
        "--windows-per-state", "6", "--window-ms", "100", "--out", str(b))
    assert a.read_bytes() != b.read_bytes()


def test_unknown_algorithm_exit_1(tmp_path, capsys):
    code, _, err = run(
        capsys, "pipeline", "--session-dir", str(tmp_path), "--session-id", "x",
        "--algorithm", "kmedoids",
    )
    assert code == 1
    assert "kmedoids" in err


def test_unknown_fixture_exit_1(tmp_path, capsys):
    code, _, err = run(capsys, "synth", "--device", "toaster", "--out", str(tmp_path / "s.json"))
    assert code == 1
    assert "toaster" in err


def test_missing_file_exit_2(tmp_path, capsys):
    code, _, err = run(
        capsys, "ingest", "--session-dir", str(tmp_path), "--session-id", "x",
        "--power", str(tmp_path / "nope.csv"),
    )
    assert code == 2
    assert "i/o error" in err


def test_full_cli_flow(tmp_path, capsys):
    data = tmp_path / "store"
    session_file = tmp_path / "session.json"
    replay_file = tmp_path / "replay.json"

    code, _, _ = run(capsys, "synth", "--device", "vision", "--seed", "0",
                     "--windows-per-state", "12", "--window-ms", "200",
                     "--session-id", "dev", "--out", str(session_file))
    assert code == 0
    code, _, _ = run(capsys, "synth", "--device", "vision", "--seed", "5",
                     "--windows-per-state", "12", "--window-ms", "200",
                     "--session-id", "replay", "--out", str(replay_file))
    assert code == 0

    code, out, _ = run(capsys, "ingest", "--session-dir", str(data), "--session", str(session_file))
    assert code == 0
    assert json.loads(out)["session_id"] == "dev"

    code, out, _ = run(capsys, "pipeline", "--session-dir", str(data), "--session-id", "dev",
                       "--n-iter", "300", "--perplexity", "8")
    assert code == 0
    manifest = json.loads(out)["artifacts"]
    assert "correlation.json" in manifest

    groups = tmp_path / "groups.json"
    groups.write_text(json.dumps({"active": ["idle", "detecting"], "off": ["off"]}))
    code, out, _ = run(capsys, "collage", "--session-dir", str(data), "--session-id", "dev",
                       "--groups", str(groups))
    assert code == 0
    assert {s["name"] for s in json.loads(out)["fsm"]["states"]} == {"off", "active"}

    code, out, _ = run(capsys, "train", "--session-dir", str(data), "--session-id", "dev")
    assert code == 0
    assert json.loads(out)["holdout"]["accuracy"] >= 0.9

    code, out, _ = run(capsys, "verify", "--session-dir", str(data), "--session-id", "dev",
                       "--replay-file", str(replay_file))
    assert code == 0
    lines = [json.loads(ln) for ln in out.splitlines() if ln]
    assert len(lines) == 36
    assert all(step["predicted"] in {"off", "active", "UNKNOWN"} for step in lines)


def test_cli_pipeline_reruns_byte_identical(tmp_path, capsys):
    data = tmp_path / "store"
    session_file = tmp_path / "session.json"
    run(capsys, "synth", "--device", "vision", "--seed", "3", "--windows-per-state", "12",
        "--window-ms", "200", "--session-id", "dev", "--out", str(session_file))
    run(capsys, "ingest", "--session-dir", str(data), "--session", str(session_file))

    outs = []
    for _ in range(2):
        code, out, _ = run(capsys, "pipeline", "--session-dir", str(data), "--session-id", "dev",
                           "--n-iter", "300", "--perplexity", "8")
        assert code == 0
        outs.append(out)
        artifacts = {
            name: (data / "dev" / entry["file"]).read_bytes()
            for name, entry in json.loads(out)["artifacts"].items()
        }
        outs.append(artifacts)
    assert outs[0] == outs[2]
    assert outs[1] == outs[3]


def test_argparse_misuse_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["pipeline", "--bogus-flag"])
    assert exc.value.code == 1
