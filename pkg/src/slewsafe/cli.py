"""Batch front door: envelope artifacts, scripted trials, the live server.

Every artifact-producing subcommand drops a manifest next to its CSVs
recording what ran: command kind, config path, parameter overrides, and
the fingerprint of the effective configuration.  Nothing in the outputs
depends on wall time, so rerunning a command over the same inputs
rewrites every file byte for byte.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import click

from . import session as trials
from . import dynamics, shaper, stability
from .config import (CONFIG_ENV_VAR, AnalysisConfig, DEFAULT_TIMESTEP,
                     config_fingerprint, load_config)

_CONFIG_OPTION = click.option(
    "--config", "config_path",
    type=click.Path(exists=True, dir_okay=False), default=None,
    envvar=CONFIG_ENV_VAR,
    help=f"analysis config YAML (default: ${CONFIG_ENV_VAR} or built-ins)")

_OUT_OPTION = click.option(
    "--out", "out_dir", type=click.Path(file_okay=False), default=".",
    show_default=True, help="artifact output directory")


@click.group()
def main():
    """Crane slewing safety toolkit."""


def _load(config_path):
    try:
        return load_config(config_path)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from None


def _write_manifest(out_dir, kind, config_path, overrides, analysis) -> None:
    payload = {"command": kind,
               "config_path": str(config_path) if config_path else None,
               "out_dir": str(out_dir),
               "overrides": overrides,
               "config_fingerprint": config_fingerprint(analysis)}
    path = Path(out_dir) / f"{kind}_manifest.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _run_batch(kind, config_path, out_dir) -> None:
    analysis = _load(config_path)
    try:
        rows = stability.run_analysis(kind, analysis, out_dir)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    _write_manifest(out_dir, kind, config_path, {}, analysis)
    for name, count in sorted(rows.items()):
        click.echo(f"{name}: {count} rows")


@main.command()
@_CONFIG_OPTION
@_OUT_OPTION
def loadchart(config_path, out_dir):
    """Static payload limits over the (radius, boom length) grid."""
    _run_batch("loadchart", config_path, out_dir)


@main.command()
@_CONFIG_OPTION
@_OUT_OPTION
def failmap(config_path, out_dir):
    """Chart-load slews at several speeds, raw and filtered, per cell."""
    _run_batch("failmap", config_path, out_dir)


@main.command()
@_CONFIG_OPTION
@_OUT_OPTION
def speedlimits(config_path, out_dir):
    """Fastest stable slew rate per radius at the chart-limit payload."""
    _run_batch("speedlimits", config_path, out_dir)


@main.command()
@_CONFIG_OPTION
@_OUT_OPTION
def compare(config_path, out_dir):
    """Raw-vs-filtered speed-limit study over the chart payloads."""
    _run_batch("compare", config_path, out_dir)


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--shaped/--unshaped", default=False,
              help="route commands through the swing-cancelling filter")
@click.option("--rate-deg-s", type=float, default=None,
              help="constant slew rate magnitude, deg/s")
@click.option("--plan", is_flag=True,
              help="follow a planned rest-to-rest reference at the speed limit")
@_OUT_OPTION
def trial(scenario, shaped, rate_deg_s, plan, out_dir):
    """Run one scripted trial of SCENARIO and write its logs."""
    if plan == (rate_deg_s is not None):
        raise click.UsageError("provide exactly one of --rate-deg-s or --plan")
    try:
        sc = trials.load_scenario(scenario)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from None
    cfg = sc.crane
    if plan:
        spec = None
        if shaped:
            wn = dynamics.natural_frequency(cfg.rope_length, cfg.gravity)
            spec = shaper.design_mumzv(wn, trials.TRIAL_DEFLECTION_RATIO)
        command = shaper.plan_slew_command(
            abs(sc.goal_angle - sc.start_angle), cfg.speed_limit,
            cfg.accel_gain, spec, sample_period=DEFAULT_TIMESTEP)
    else:
        command = math.radians(rate_deg_s)
    try:
        rec = trials.run_automated_trial(sc, command, shaped)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trials.write_trial_csvs(rec, out / "trial_commands.csv",
                            out / "trial_states.csv", out / "trial_metrics.csv")
    _write_manifest(out_dir, "trial", scenario,
                    {"shaped": shaped, "rate_deg_s": rate_deg_s, "plan": plan},
                    AnalysisConfig(crane=cfg))
    m = rec.metrics
    ct = "n/a" if m.completion_time is None else f"{m.completion_time:.3f}s"
    click.echo(f"MS={m.max_swing_deg:.2f}deg CR={m.collision_count} CT={ct} "
               f"tipped={m.tipped} completed={m.completed}")


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--scenarios", "scenario_dir", envvar="SLEWSAFE_SCENARIOS",
              type=click.Path(exists=True, file_okay=False), required=True,
              help="directory of scenario YAML files "
                   "(default: $SLEWSAFE_SCENARIOS)")
@click.option("--ui", "ui_dir", default=None,
              type=click.Path(exists=True, file_okay=False),
              help="serve a static operator console from this directory "
                   "at /ui")
def serve(port, host, scenario_dir, ui_dir):
    """Serve live trial sessions and batch analyses over HTTP/WebSocket."""
    import uvicorn

    from .service import create_app

    try:
        app = create_app(scenario_dir, ui_dir=ui_dir)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, ValueError, OverflowError) as exc:
        raise click.ClickException(f"cannot serve on {host}:{port}: {exc}") \
            from None


if __name__ == "__main__":
    main()
