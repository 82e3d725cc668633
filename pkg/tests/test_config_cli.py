"""Config loading and the operator CLI (exit codes, wiring)."""

import json
import subprocess
import sys

import pytest
import yaml

from conftest import BENCHMARKS, FIXTURES
from proverkit.cli import main
from proverkit.config import ConfigError, load_config

MOCK_PROJECT = FIXTURES / "leanproj"


def write_config(tmp_path, **overrides):
    payload = {
        "project": {"root": str(MOCK_PROJECT.resolve()),
                    "settle_quiet": 0.05, "settle_max": 10.0},
        "use_mock_server": True,
    }
    payload.update(overrides)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(payload), encoding="utf-8")
    return path


# -- config -------------------------------------------------------------------


def test_defaults_without_file():
    config = load_config(None)
    assert config.protocol_version == "2024-11-05"
    assert config.default_budget == 50.0
    assert config.network_enabled is False
    assert config.cassette_mode == "replay"


def test_unknown_keys_rejected(tmp_path):
    path = write_config(tmp_path)
    raw = yaml.safe_load(path.read_text())
    raw["budgett"] = 10
    path.write_text(yaml.safe_dump(raw))
    with pytest.raises(ConfigError, match="budgett"):
        load_config(path)


def test_unknown_nested_keys_rejected(tmp_path):
    path = write_config(tmp_path, project={"root": str(MOCK_PROJECT), "rooot": "x"})
    with pytest.raises(ConfigError, match="rooot"):
        load_config(path)


def test_missing_project_root_rejected(tmp_path):
    path = write_config(tmp_path, project={"root": "does/not/exist"})
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(path)


def test_endpoints_parse_and_duplicate_ids_rejected(tmp_path):
    endpoints = [{"id": "gen", "base_url": "https://x", "model": "m",
                  "auth_env": "GEN_KEY", "price_in": 1e-6, "price_out": 2e-6}]
    path = write_config(tmp_path, providers={"endpoints": endpoints,
                                             "generator": "gen"})
    config = load_config(path)
    assert config.providers.endpoints["gen"].auth_env == "GEN_KEY"
    assert config.providers.generator == "gen"

    path = write_config(tmp_path, providers={"endpoints": endpoints * 2})
    with pytest.raises(ConfigError, match="duplicate endpoint"):
        load_config(path)


def test_bad_cassette_mode_rejected(tmp_path):
    path = write_config(tmp_path, cassette_mode="yolo")
    with pytest.raises(ConfigError):
        load_config(path)


def test_shipped_role_defaults_are_config_not_code():
    config = load_config(None)
    assert config.providers.generator == "gemini-3-pro-preview"
    assert config.providers.verifier == "gemini-3-pro-preview"
    assert config.providers.hint == "gpt-5.2"


# -- CLI ----------------------------------------------------------------------


def test_cli_usage_error_exits_2(capsys):
    assert main(["no-such-command"]) == 2


def test_cli_bad_config_path_exits_2(capsys):
    assert main(["--config", "missing.yaml", "blueprint", "validate",
                 str(FIXTURES / "blueprints" / "band.tex")]) == 2


def test_blueprint_validate_ok(capsys):
    code = main(["blueprint", "validate", str(FIXTURES / "blueprints" / "band.tex")])
    assert code == 0
    assert "well-formed" in capsys.readouterr().out


def test_blueprint_validate_cycle_exits_1(tmp_path, capsys):
    doc = (FIXTURES / "blueprints" / "band.tex").read_text()
    doc = doc.replace("\\lean{Toy.horizon}\n\\leanok",
                      "\\lean{Toy.horizon}\n\\uses{t:main}")
    path = tmp_path / "cyclic.tex"
    path.write_text(doc)
    assert main(["blueprint", "validate", str(path)]) == 1
    out = capsys.readouterr().out
    assert "cycle" in out and "t:main" in out


def test_blueprint_order_prints_fixture_order(capsys):
    code = main(["blueprint", "order", str(FIXTURES / "blueprints" / "band.tex")])
    assert code == 0
    lines = capsys.readouterr().out.split()
    assert lines == ["d:horizon", "l:lower", "l:upper", "t:main"]


def test_blueprint_status_against_fixture_project(tmp_path, capsys):
    config = write_config(tmp_path,
                          project={"root": str((FIXTURES / "statusproj").resolve()),
                                   "settle_quiet": 0.05, "settle_max": 10.0})
    code = main(["--config", str(config), "blueprint", "status",
                 str(FIXTURES / "blueprints" / "band.tex"),
                 "--project", str(FIXTURES / "statusproj")])
    assert code == 0
    out = capsys.readouterr().out
    assert "l:lower: proved" in out
    assert "l:upper: sorried" in out
    assert "t:main: sorried" in out


def test_blueprint_status_overrides_config_project_root(tmp_path, capsys):
    # config points at a different project; --project must win for both
    # the scan and the diagnostics source
    config = write_config(tmp_path)  # root = leanproj
    code = main(["--config", str(config), "blueprint", "status",
                 str(FIXTURES / "blueprints" / "band.tex"),
                 "--project", str(FIXTURES / "statusproj")])
    assert code == 0
    out = capsys.readouterr().out
    assert "l:upper: sorried" in out


def test_blueprint_parse_roundtrips(capsys):
    code = main(["blueprint", "parse", str(FIXTURES / "blueprints" / "band.tex")])
    assert code == 0
    out = capsys.readouterr().out
    assert "\\begin{theorem}" in out and "\\uses{l:lower, l:upper}" in out


def test_blueprint_parse_json_emits_structured_graph(capsys):
    code = main(["blueprint", "parse", "--json",
                 str(FIXTURES / "blueprints" / "band.tex")])
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["root"] == "t:main"
    assert [n["id"] for n in data["nodes"]][:2] == ["d:horizon", "l:lower"]


def test_prove_scripted_success_and_failure(tmp_path, capsys):
    config = write_config(tmp_path)
    stub = tmp_path / "band.lean"
    stub.write_text("theorem band_holds : 21 <= 84 := by sorry\n")
    script = {
        "modes": {"with_informal": {"band": {
            "informal_accept": True,
            "hinted_attempts": ["theorem band_holds : 21 <= 84 := by decide"],
        }}}}
    script_path = tmp_path / "script.yaml"
    script_path.write_text(yaml.safe_dump(script))

    code = main(["--config", str(config), "prove", str(stub),
                 "--mode", "informal", "--driver-script", str(script_path),
                 "--out", str(tmp_path / "sessions")])
    assert code == 0
    assert (tmp_path / "sessions" / "band" / "solution.lean").exists()
    transcript = (tmp_path / "sessions" / "band" / "transcript.jsonl").read_text()
    assert '"outcome": "proved"' in transcript

    failing = {"modes": {"direct": {"band": {
        "attempts": ["theorem band_holds : 21 <= 84 := by mystery_step"]}}}}
    script_path.write_text(yaml.safe_dump(failing))
    code = main(["--config", str(config), "prove", str(stub),
                 "--mode", "direct", "--driver-script", str(script_path),
                 "--out", str(tmp_path / "sessions2")])
    assert code == 1


def test_prove_zero_budget_exits_1(tmp_path, capsys):
    config = write_config(tmp_path)
    stub = tmp_path / "b.lean"
    stub.write_text("theorem b : 1 = 1 := by sorry\n")
    code = main(["--config", str(config), "prove", str(stub),
                 "--mode", "direct", "--budget", "0",
                 "--out", str(tmp_path / "s")])
    assert code == 1
    transcript = (tmp_path / "s" / "b" / "transcript.jsonl").read_text()
    assert "budget_exhausted" in transcript


def test_bench_run_emits_report_rows(tmp_path, capsys):
    config = write_config(tmp_path)
    out = tmp_path / "bench_out"
    code = main(["--config", str(config), "bench", "run",
                 "--manifest", str(BENCHMARKS / "manifest.yaml"),
                 "--mode", "subagent", "--out", str(out)])
    assert code == 0
    table = capsys.readouterr().out
    assert "A1" in table and "B6" in table
    report = json.loads((out / "report.json").read_text())
    assert report["solved_count"] == 12
    # per-problem budget overrides flow into the session transcripts
    a5 = (out / "A5" / "transcript.jsonl").read_text().splitlines()
    outcome = json.loads(a5[-1])
    assert outcome["budget_limit"] == 1000.0
    b6 = json.loads((out / "B6" / "transcript.jsonl").read_text().splitlines()[-1])
    assert b6["budget_limit"] == 300.0


def test_bench_report_from_logs_matches_run(tmp_path, capsys):
    config = write_config(tmp_path)
    out = tmp_path / "bench_out"
    main(["--config", str(config), "bench", "run",
          "--manifest", str(BENCHMARKS / "manifest.yaml"),
          "--mode", "direct", "--out", str(out)])
    run_table = capsys.readouterr().out
    code = main(["bench", "report", "--manifest", str(BENCHMARKS / "manifest.yaml"),
                 "--out", str(out)])
    assert code == 0
    report_table = capsys.readouterr().out
    assert report_table.splitlines()[0] == run_table.splitlines()[0]


def test_bench_empty_manifest_exits_2(tmp_path, capsys):
    manifest = tmp_path / "empty.yaml"
    manifest.write_text("problems: []\n")
    code = main(["bench", "run", "--manifest", str(manifest)])
    assert code == 2


def test_bench_deterministic_reports(tmp_path):
    config = write_config(tmp_path)
    outputs = []
    for name in ("one", "two"):
        out = tmp_path / name
        main(["--config", str(config), "bench", "run",
              "--manifest", str(BENCHMARKS / "manifest.yaml"),
              "--mode", "informal", "--out", str(out)])
        outputs.append((out / "report.json").read_bytes())
    assert outputs[0] == outputs[1]


def test_bench_parallel_matches_sequential(tmp_path):
    config = write_config(tmp_path)
    out_seq = tmp_path / "seq"
    out_par = tmp_path / "par"
    assert main(["--config", str(config), "bench", "run",
                 "--manifest", str(BENCHMARKS / "manifest.yaml"),
                 "--mode", "subagent", "--out", str(out_seq)]) == 0
    assert main(["--config", str(config), "bench", "run",
                 "--manifest", str(BENCHMARKS / "manifest.yaml"),
                 "--mode", "subagent", "--out", str(out_par),
                 "--parallel", "4"]) == 0
    assert (out_seq / "report.json").read_bytes() == \
           (out_par / "report.json").read_bytes()


def test_search_index_and_query(tmp_path, capsys):
    out = tmp_path / "idx"
    corpus = FIXTURES / "corpus"
    code = main(["search", "index",
                 f"mathlib={corpus / 'mathlib_stub'}",
                 f"flt={corpus / 'flt_stub'}",
                 "--out", str(out)])
    assert code == 0
    assert "indexed 12 declarations" in capsys.readouterr().out
    code = main(["search", "query", "commutativity of addition",
                 "--index", str(out), "-k", "3"])
    assert code == 0
    assert "Nat.add_comm" in capsys.readouterr().out


def test_serve_stdio_end_to_end(tmp_path):
    config = write_config(tmp_path)
    requests = [
        {"jsonrpc": "2.0", "id": 1, "method": "initialize", "params": {}},
        {"jsonrpc": "2.0", "id": 2, "method": "tools/list"},
    ]
    stdin = "".join(json.dumps(r) + "\n" for r in requests)
    proc = subprocess.run(
        [sys.executable, "-m", "proverkit.cli", "--config", str(config), "serve"],
        input=stdin.encode(), capture_output=True, timeout=60,
    )
    assert proc.returncode == 0  # EOF on stdin exits cleanly
    lines = [json.loads(l) for l in proc.stdout.decode().splitlines()]
    assert lines[0]["id"] == 1
    tools = {t["name"] for t in lines[1]["result"]["tools"]}
    assert len(tools) >= 9
    assert {"lean_goal", "discuss_partner", "leandex_search",
            "informal_prover"} <= tools


def test_serve_missing_toolchain_exits_2(tmp_path, capsys):
    config = write_config(tmp_path, use_mock_server=False,
                          project={"root": str(MOCK_PROJECT.resolve()),
                                   "server_command": ["definitely-not-lake", "serve"]})
    code = main(["--config", str(config), "serve"])
    assert code == 2
    assert "not found" in capsys.readouterr().err
