import hashlib
import json

import pytest

from fmab.cli import COMMANDS, build_parser, main


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _write_cfg(tmp_path, **over):
    cfg = {
        "graph_process": {"kind": "er_hom", "n": 4, "p": 0.5},
        "reward_model": {"means": [0.9, 0.2, 0.5, 0.1]},
        "horizon": 200,
        "policy": {"t0": 80},
        "seed": 1,
    }
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_bounds_table(capsys):
    code, out, _ = _run(capsys, "bounds", "--n", "10", "--gap", "0.2", "--delta", "0.1")
    assert code == 0
    rows = dict(line.split(",") for line in out.strip().splitlines())
    assert float(rows["identification_time_lower_bound"]) == pytest.approx(37.078165, abs=1e-6)
    assert float(rows["kl_confidence"]) == pytest.approx(1.757780, abs=1e-6)


def test_diag_kernel_prints_closed_forms(capsys):
    code, out, _ = _run(capsys, "diag-kernel", "--n", "5", "--p", "0.3")
    assert code == 0
    assert "diagonal 0.554620" in out
    assert "lambda2 0.443275" in out
    assert "gamma 0.556725" in out


def test_conductance_capability_exit_code(capsys):
    code, _, err = _run(capsys, "diag-kernel", "--n", "30", "--p", "0.3", "--conductance")
    assert code == 2
    assert "exceeds 24" in err
    code, out, _ = _run(capsys, "diag-kernel", "--n", "8", "--p", "0.5", "--conductance", "--seed", "2")
    assert code == 0 and "sampled conductance" in out


def test_config_errors_exit_one(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"horizon\": ,\n}")
    code, _, err = _run(capsys, "simulate", "--config", str(bad))
    assert code == 1 and "bad.json:2:" in err
    code, _, err = _run(capsys, "simulate", "--config", str(_write_cfg(tmp_path, extra_field=1)))
    assert code == 1 and "extra_field" in err
    code, _, _ = _run(capsys, "bounds", "--n", "10", "--gap", "0.2", "--unknown")
    assert code == 1
    code, _, _ = _run(capsys, "simulate")
    assert code == 1


def test_simulate_writes_trace_summary_and_manifest(capsys, tmp_path):
    cfg = _write_cfg(tmp_path)
    out_dir = tmp_path / "results"
    code, _, _ = _run(capsys, "simulate", "--config", str(cfg), "--seed", "7", "--out", str(out_dir))
    assert code == 0
    names = {p.name for p in out_dir.iterdir()}
    assert {"trace.csv", "summary.json", "aggregate.csv", "manifest.json"} <= names
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["resolved"]["seed"] == 7
    for name, digest in manifest["files"].items():
        assert hashlib.sha256((out_dir / name).read_bytes()).hexdigest() == digest
    assert len((out_dir / "trace.csv").read_text().splitlines()) == 201


def test_flags_override_config(capsys, tmp_path):
    cfg = _write_cfg(tmp_path, policy={})
    out_dir = tmp_path / "o"
    code, _, _ = _run(capsys, "simulate", "--config", str(cfg), "--T", "5000", "--c2", "0.3", "--no-trace", "--out", str(out_dir))
    assert code == 0
    resolved = json.loads((out_dir / "manifest.json").read_text())["resolved"]
    assert resolved["horizon"] == 5000
    assert resolved["policy"]["sizing"]["c2"] == 0.3
    assert resolved["seed"] == 1
    assert not (out_dir / "trace.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ("simulate", "--config", "{cfg}", "--seed", "3", "--runs", "3"),
        ("sweep-nav", "--n", "8", "--p-list", "0.3,0.6", "--runs", "5", "--t0", "50", "--extra", "200"),
        ("regret-suite", "--n-list", "5", "--T", "800", "--runs", "3"),
        ("diag-tv", "--n", "10", "--T", "20"),
        ("bounds", "--n", "10", "--gap", "0.2", "--alpha", "0.01", "--beta", "0.05"),
    ],
)
def test_seed_determines_outputs(capsys, tmp_path, argv):
    cfg = _write_cfg(tmp_path)
    argv = [a.replace("{cfg}", str(cfg)) for a in argv]
    digests = []
    for k in range(2):
        out_dir = tmp_path / f"run{k}"
        assert main(argv + ["--out", str(out_dir), "--seed", "11"]) == 0
        digests.append(json.loads((out_dir / "manifest.json").read_text())["files"])
    capsys.readouterr()
    assert digests[0] == digests[1]
    assert digests[0]


def test_json_format_option(capsys, tmp_path):
    out_dir = tmp_path / "j"
    assert main(["diag-tv", "--n", "8", "--T", "10", "--format", "json", "--out", str(out_dir)]) == 0
    capsys.readouterr()
    doc = json.loads((out_dir / "tv_diag.json").read_text())
    assert doc["columns"][0] == "t" and len(doc["rows"]) == 10


def test_diag_tv_bad_start(capsys):
    code, _, err = _run(capsys, "diag-tv", "--start", "somewhere")
    assert code == 1 and "--start" in err


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_help_lists_constants_and_defaults(capsys, command):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args([command, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for flag in ("--c0", "--c1", "--c2", "--c3", "--eta", "--kappa", "--C ", "--C-prime", "--seed", "--jobs", "--out", "--config"):
        assert flag in text
    assert "default" in text


def test_config_rejected_outside_simulate(capsys, tmp_path):
    code, _, err = _run(capsys, "bounds", "--n", "5", "--gap", "0.1", "--config", str(_write_cfg(tmp_path)))
    assert code == 1 and "only read by simulate" in err
