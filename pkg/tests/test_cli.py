"""Command-line behavior: artifacts, manifests, reruns, failure exits."""

import json
import math
import os
from pathlib import Path

import pytest
from click.testing import CliRunner

from slewsafe import cli, stability
from slewsafe.config import config_fingerprint, load_config

ROOT = Path(__file__).resolve().parent.parent
SCENARIO = ROOT / "scenarios" / "open_floor.yaml"

TINY_YAML = """\
radius_grid: [0.5]
boom_length_grid: [0.9144]
speed_fractions: [1.0]
"""


@pytest.fixture()
def runner():
    return CliRunner()


def write_tiny_config(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(TINY_YAML, encoding="utf-8")
    return path


def snapshot(out_dir):
    return {p.name: p.read_bytes() for p in sorted(Path(out_dir).iterdir())}


def test_loadchart_writes_csv_and_manifest(runner, tmp_path):
    cfg = write_tiny_config(tmp_path)
    out = tmp_path / "out"
    result = runner.invoke(cli.main, ["loadchart", "--config", str(cfg),
                                      "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "loadchart.csv: 1 rows" in result.output
    text = (out / "loadchart.csv").read_text(encoding="utf-8")
    assert text.startswith("# config_fingerprint=")
    manifest = json.loads((out / "loadchart_manifest.json").read_text())
    assert manifest["command"] == "loadchart"
    assert manifest["config_path"] == str(cfg)
    expected = config_fingerprint(load_config(cfg))
    assert manifest["config_fingerprint"] == expected


def test_config_via_environment_variable(runner, tmp_path):
    cfg = write_tiny_config(tmp_path)
    out = tmp_path / "out"
    result = runner.invoke(cli.main, ["loadchart", "--out", str(out)],
                           env={"SLEWSAFE_CONFIG": str(cfg)})
    assert result.exit_code == 0, result.output
    manifest = json.loads((out / "loadchart_manifest.json").read_text())
    assert manifest["config_path"] == str(cfg)


def test_rerun_is_byte_identical(runner, tmp_path):
    cfg = write_tiny_config(tmp_path)
    out = tmp_path / "out"
    args = ["speedlimits", "--config", str(cfg), "--out", str(out)]
    assert runner.invoke(cli.main, args).exit_code == 0
    before = snapshot(out)
    assert runner.invoke(cli.main, args).exit_code == 0
    assert snapshot(out) == before
    assert set(before) == {"speedlimits.csv", "speedlimits_manifest.json"}


def test_failmap_writes_both_artifacts(runner, tmp_path):
    cfg = write_tiny_config(tmp_path)
    out = tmp_path / "out"
    result = runner.invoke(cli.main, ["failmap", "--config", str(cfg),
                                      "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "failmap_unshaped.csv").exists()
    assert (out / "failmap_shaped.csv").exists()


def test_compare_matches_library_output(runner, tmp_path):
    cfg_path = write_tiny_config(tmp_path)
    out = tmp_path / "out"
    result = runner.invoke(cli.main, ["compare", "--config", str(cfg_path),
                                      "--out", str(out)])
    assert result.exit_code == 0, result.output
    direct = tmp_path / "direct"
    stability.run_analysis("compare", load_config(cfg_path), direct)
    assert (out / "compare.csv").read_bytes() == \
        (direct / "compare.csv").read_bytes()


def test_malformed_config_names_the_field(runner, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("crane:\n  payload_mass: -1.0\n", encoding="utf-8")
    result = runner.invoke(cli.main, ["loadchart", "--config", str(bad),
                                      "--out", str(tmp_path / "out")])
    assert result.exit_code != 0
    assert "payload_mass" in result.output


def test_trial_constant_rate_shaped(runner, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(cli.main, ["trial", str(SCENARIO), "--shaped",
                                      "--rate-deg-s", "11.459",
                                      "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "completed=True" in result.output
    assert "tipped=False" in result.output
    for name in ("trial_commands.csv", "trial_states.csv",
                 "trial_metrics.csv", "trial_manifest.json"):
        assert (out / name).exists(), name
    header = (out / "trial_states.csv").read_text().splitlines()[0]
    assert header == "time," + ",".join(
        ("alpha", "alpha_dot", "theta1", "theta2", "tip_margin",
         "payload_x", "payload_y"))


def test_trial_planned_reference(runner, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(cli.main, ["trial", str(SCENARIO), "--shaped",
                                      "--plan", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "completed=True" in result.output


def test_trial_full_rate_unshaped_reports_tip(runner, tmp_path):
    sc = load_config(None).crane
    rate = math.degrees(sc.speed_limit)
    result = runner.invoke(cli.main, ["trial", str(SCENARIO), "--unshaped",
                                      "--rate-deg-s", f"{rate}",
                                      "--out", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    assert "tipped=True" in result.output
    assert "CT=n/a" in result.output


def test_trial_requires_exactly_one_command_source(runner, tmp_path):
    result = runner.invoke(cli.main, ["trial", str(SCENARIO),
                                      "--out", str(tmp_path)])
    assert result.exit_code != 0
    both = runner.invoke(cli.main, ["trial", str(SCENARIO), "--plan",
                                    "--rate-deg-s", "5", "--out",
                                    str(tmp_path)])
    assert both.exit_code != 0


def test_serve_rejects_bad_port(runner):
    result = runner.invoke(cli.main, ["serve", "--port", "99999999",
                                      "--scenarios",
                                      str(ROOT / "scenarios")])
    assert result.exit_code != 0
    assert "99999999" in result.output


def test_serve_smoke(tmp_path):
    import subprocess
    import time

    import httpx

    env = dict(os.environ, PYTHONUNBUFFERED="1")
    proc = subprocess.Popen(
        ["python3", "-m", "slewsafe.cli", "serve", "--port", "8731",
         "--scenarios", str(ROOT / "scenarios")],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL, env=env)
    try:
        deadline = time.monotonic() + 30.0
        last = None
        while time.monotonic() < deadline:
            try:
                resp = httpx.get("http://127.0.0.1:8731/healthz", timeout=1.0)
                assert resp.json()["status"] == "ok"
                return
            except (httpx.HTTPError, AssertionError) as exc:
                last = exc
                time.sleep(0.25)
        raise AssertionError(f"server never came up: {last!r}")
    finally:
        proc.terminate()
        proc.wait(timeout=10)
