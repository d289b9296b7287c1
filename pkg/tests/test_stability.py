"""Static envelope, dynamic failure map, speed limits, paired compare."""

import dataclasses
import math
import warnings

import numpy as np
import pytest

import oracles
from slewsafe import dynamics, stability
from slewsafe.config import AnalysisConfig, CraneConfig
from slewsafe.dynamics import SwingState, tip_over_margin

CFG = CraneConfig()
AN = AnalysisConfig()
VL = CFG.speed_limit


# ------------------------------------------------------------- speed scaling


def test_speed_scaling_model_to_full_scale():
    # 6.6 deg/s on the slow pendulum maps to the model's allowed rate
    out = stability.speed_scaling(6.6, 0.908, 4.47)
    assert out == pytest.approx(32.51, rel=1e-3)


def test_speed_scaling_identity_and_ratio():
    assert stability.speed_scaling(0.4, 2.5, 2.5) == 0.4
    assert stability.speed_scaling(1.0, 1.0, 2.0) == 2.0


def test_speed_scaling_rejects_nonpositive_frequencies():
    with pytest.raises(ValueError):
        stability.speed_scaling(1.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        stability.speed_scaling(-1.0, 1.0, 2.0)


# ---------------------------------------------------------- static envelope


def test_static_limit_matches_worked_example():
    cfg = dataclasses.replace(CFG, footprint_half_width=0.2,
                              structure_com_offset=0.1,
                              bending_moment_limit=None)
    assert stability.static_load_limit(0.7, 0.9144, cfg) == pytest.approx(3.465, abs=1e-9)


@pytest.mark.parametrize("radius", [0.35, 0.55, 0.7])
@pytest.mark.parametrize("cap", [None, 3.45])
def test_static_limit_matches_mass_scan_oracle(radius, cap):
    cfg = dataclasses.replace(CFG, bending_moment_limit=cap)
    lim = stability.static_load_limit(radius, 0.9144, cfg)
    scan = oracles.static_mass_scan(
        dataclasses.replace(cfg, boom_length=0.9144).at_radius(radius), radius)
    assert lim == pytest.approx(scan, abs=1.5e-3)  # scan steps 1 g at a time


def test_static_limit_monotone_in_radius():
    cfg = dataclasses.replace(CFG, bending_moment_limit=None)
    limits = [stability.static_load_limit(r, 0.9144, cfg)
              for r in np.linspace(0.2, 0.9, 15)]
    assert all(a > b for a, b in zip(limits, limits[1:]))


def test_static_limit_margin_sign_at_the_edge():
    """At the limit the crane balances; one percent more payload tips it."""
    cfg = dataclasses.replace(CFG, bending_moment_limit=None)
    lim = stability.static_load_limit(0.6, 0.9144, cfg)
    rest = SwingState(0.0, 0.0, 0.0, 0.0)
    at = dataclasses.replace(cfg, boom_length=0.9144, payload_mass=lim).at_radius(0.6)
    over = dataclasses.replace(at, payload_mass=lim * 1.01)
    margins_at = [tip_over_margin(math.radians(d), rest, at) for d in range(360)]
    margins_over = [tip_over_margin(math.radians(d), rest, over) for d in range(360)]
    assert min(margins_at) >= -1e-9
    assert min(margins_over) < 0.0


def test_static_limit_bending_cap_binds():
    cfg = dataclasses.replace(CFG, bending_moment_limit=1.0)
    lim = stability.static_load_limit(0.5, 0.9144, cfg)
    assert lim == pytest.approx(1.0 / (CFG.gravity * 0.5), rel=1e-12)


def test_static_limit_zero_when_structure_tips_alone():
    # counterweight so far back the crane falls over backwards unloaded
    cfg = dataclasses.replace(CFG, structure_com_offset=0.3,
                              footprint_half_width=0.1,
                              bending_moment_limit=None)
    assert stability.static_load_limit(0.5, 0.9144, cfg) == 0.0


def test_static_limit_rejects_unreachable_radius():
    with pytest.raises(ValueError, match="unreachable"):
        stability.static_load_limit(1.0, 0.9144, CFG)


def test_load_chart_skips_unreachable_cells():
    chart = stability.build_load_chart((0.3, 0.7), (0.6096, 0.9144), CFG)
    assert [(c.radius, c.boom_length) for c in chart] == [
        (0.3, 0.6096), (0.3, 0.9144), (0.7, 0.9144)]
    assert all(c.static_limit > 0.0 for c in chart)


def test_load_chart_warns_when_empty():
    with pytest.warns(UserWarning, match="empty chart"):
        chart = stability.build_load_chart((2.0,), (0.9144,), CFG)
    assert chart == []


def test_load_chart_rejects_empty_grids():
    with pytest.raises(ValueError):
        stability.build_load_chart((), (0.9144,), CFG)


# ----------------------------------------------------------- max safe speed


def test_max_safe_speed_bisection_invariants():
    m = stability.static_load_limit(0.7, 0.9144, CFG)
    res = stability.max_safe_speed(0.7, m, False, CFG)
    assert not res.capped
    assert 0.0 < res.max_safe_speed < VL
    cfg_r = dataclasses.replace(CFG, payload_mass=m).at_radius(0.7)
    ok = stability.run_90deg_maneuver(cfg_r, res.max_safe_speed, None, AN)
    assert ok.outcome == stability.OUTCOME_STABLE
    just_over = res.max_safe_speed + 2.0 * AN.speed_resolution
    bad = stability.run_90deg_maneuver(cfg_r, just_over, None, AN)
    assert bad.outcome == stability.OUTCOME_TIPPED


def test_max_safe_speed_capped_when_limit_is_stable():
    res = stability.max_safe_speed(0.7, 0.2, False, CFG)
    assert res.capped
    assert res.max_safe_speed == VL
    assert res.maneuver_time_90deg is not None


def test_max_safe_speed_zero_when_statically_inadmissible():
    res = stability.max_safe_speed(0.7, 5.0, False, CFG)
    assert res.max_safe_speed == 0.0
    assert not res.capped
    assert res.maneuver_time_90deg is None


def test_max_safe_speed_rejects_bad_resolution():
    with pytest.raises(ValueError):
        stability.max_safe_speed(0.7, 0.2, False, CFG, resolution=0.0)


def test_shaped_dominates_unshaped_across_chart():
    """Filtering the command never shrinks the stable-speed envelope."""
    for cell in stability.build_load_chart(AN.radius_grid, (0.9144,), CFG):
        uns = stability.max_safe_speed(cell.radius, cell.static_limit, False, CFG)
        sha = stability.max_safe_speed(cell.radius, cell.static_limit, True, CFG)
        assert sha.max_safe_speed >= uns.max_safe_speed


# -------------------------------------------------------------- failure map


def test_failure_map_texture_at_defaults():
    chart = stability.build_load_chart(AN.radius_grid, (0.9144,), CFG)
    unshaped = stability.dynamic_failure_map(chart, (1.0,), False, CFG)
    shaped = stability.dynamic_failure_map(chart, (1.0,), True, CFG)
    u_tip = {c.radius for c in unshaped
             if any(d.outcome == stability.OUTCOME_TIPPED for d in c.dynamic_results)}
    s_tip = {c.radius for c in shaped
             if any(d.outcome == stability.OUTCOME_TIPPED for d in c.dynamic_results)}
    assert 0.7 in u_tip          # rated load at longest reach tips unshaped
    assert len(s_tip) < len(u_tip)


def test_failure_map_appends_one_result_per_fraction():
    chart = stability.build_load_chart((0.4,), (0.9144,), CFG)
    out = stability.dynamic_failure_map(chart, (0.5, 1.0), False, CFG)
    assert len(out) == 1
    results = out[0].dynamic_results
    assert [d.speed_fraction for d in results] == [0.5, 1.0]
    assert all(not d.shaped for d in results)
    assert all(d.outcome in ("stable", "tipped", "invalid") for d in results)


def test_failure_map_survives_a_hopeless_cell():
    # a cell whose payload is far past the static envelope starts tipped;
    # the sweep records the outcome instead of raising
    chart = [stability.StabilityCell(0.7, 0.9144, 50.0)]
    out = stability.dynamic_failure_map(chart, (0.5,), False, CFG)
    assert out[0].dynamic_results[0].outcome == stability.OUTCOME_TIPPED


# ------------------------------------------------------------------ compare


def test_compare_zero_payload_pair_is_equal_time():
    rows = stability.compare_shaped_unshaped([(0.5, 0.0)], CFG)
    row = rows[0]
    assert row.unshaped.capped and row.shaped.capped
    assert row.classification == "equal-time"


def test_compare_rated_pair_at_longest_reach_is_faster():
    m = stability.static_load_limit(0.7, 0.9144, CFG)
    row = stability.compare_shaped_unshaped([(0.7, m)], CFG)[0]
    assert not row.unshaped.capped
    assert row.shaped.capped
    assert row.classification == "faster"
    assert row.time_reduction_pct >= 38.0


def test_compare_inadmissible_pair_is_no_motion():
    row = stability.compare_shaped_unshaped([(0.7, 5.0)], CFG)[0]
    assert row.classification == "no-motion"
    assert row.time_reduction_pct == 0.0


# ------------------------------------------------------------ CSV artifacts


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_load_chart_csv_layout(tmp_path):
    chart = stability.build_load_chart((0.3, 0.7), (0.9144,), CFG)
    p = tmp_path / "loadchart.csv"
    stability.write_load_chart_csv(p, chart, AN)
    lines = _read(p).decode().splitlines()
    assert lines[0].startswith("# config_fingerprint=")
    assert lines[1] == "radius_m,boom_length_m,max_payload_kg"
    assert len(lines) == 2 + len(chart)


def test_failure_map_csv_has_none_as_empty_field(tmp_path):
    cell = stability.StabilityCell(0.7, 0.9144, 0.5, [
        stability.DynamicResult(1.0, False, "tipped", 0.2, None)])
    p = tmp_path / "failmap.csv"
    stability.write_failure_map_csv(p, [cell], AN)
    last = _read(p).decode().splitlines()[-1]
    assert last.endswith("tipped," + f"{math.degrees(0.2):.9g}" + ",")


def test_speed_limit_csv_rows_round_trip(tmp_path):
    res = [stability.max_safe_speed(0.5, 0.2, s, CFG) for s in (False, True)]
    p = tmp_path / "speedlimits.csv"
    stability.write_speed_limits_csv(p, res, AN)
    lines = _read(p).decode().splitlines()
    assert lines[1].split(",")[:3] == ["radius_m", "payload_kg", "shaped"]
    assert lines[2].split(",")[2] == "0"  # bools written as 1/0
    assert lines[3].split(",")[2] == "1"


def test_csv_outputs_are_byte_identical_across_runs(tmp_path):
    for name in ("a", "b"):
        chart = stability.build_load_chart(AN.radius_grid, (0.9144,), CFG)
        mapped = stability.dynamic_failure_map(chart, (0.5, 1.0), False, CFG)
        stability.write_failure_map_csv(tmp_path / f"{name}.csv", mapped, AN)
    assert _read(tmp_path / "a.csv") == _read(tmp_path / "b.csv")


def test_compare_csv_classification_column(tmp_path):
    rows = stability.compare_shaped_unshaped([(0.5, 0.0)], CFG)
    p = tmp_path / "compare.csv"
    stability.write_compare_csv(p, rows, AN)
    lines = _read(p).decode().splitlines()
    assert lines[1].split(",")[-1] == "classification"
    assert lines[2].split(",")[-1] == "equal-time"
