from __future__ import annotations

import asyncio
import json
import math

import pytest

from cosmic_mu import main
from cosmic_mu.config import parse_config
from cosmic_mu.const import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, SPEED_OF_LIGHT
from cosmic_mu.export import write_results
from cosmic_mu.runner import ScenarioRunner, chunks, run_scenario

PRIME = "′"


def _run(document: dict, chunk_size: int | None = None):
    config = parse_config(json.dumps(document))
    runner = ScenarioRunner(config, "test") if chunk_size is None else ScenarioRunner(config, "test", chunk_size)
    return asyncio.run(runner.run())


def _write(tmp_path, document: dict) -> str:
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


def test_chunks_cover_every_trial():
    assert chunks(10, 4) == [(0, 4), (4, 4), (8, 2)]
    assert chunks(3, 10) == [(0, 3)]
    assert sum(count for _, count in chunks(100_001, 25_000)) == 100_001


def test_dilation_summary():
    output = _run({"scenario": "dilation", "g": 9.8, "h": 10, "t": 3.156e7})
    stats = output.summary["statistics"]
    assert stats["crossover_seconds"] == pytest.approx(SPEED_OF_LIGHT / 9.8)
    assert stats["crossover_seconds"] == pytest.approx(3.06e7, rel=2e-3)
    assert stats["offset_seconds"] == pytest.approx(3.44e-8, rel=5e-3)
    assert stats["separation"] == "timelike"
    assert [f["kind"] for f in output.summary["findings"]] == ["timelike_simultaneity"]
    assert output.summary["tool_version"] == "test"
    assert output.summary["schema_version"] == 1


def test_dilation_before_crossover_has_no_finding():
    output = _run({"scenario": "dilation", "g": 9.8, "h": 10, "t": 1.0})
    assert output.summary["statistics"]["separation"] == "spacelike"
    assert output.summary["findings"] == []


def test_bell_reaches_quantum_chsh():
    output = _run({"scenario": "bell", "trials": 100_000})
    stats = output.summary["statistics"]
    assert 2.78 <= stats["chsh"] <= 2.88
    assert stats["ordering"][:2] == ["A1", "B1"]
    assert len(output.tables["correlations"]) == 4
    for row in output.tables["correlations"]:
        assert row["correlation"] == pytest.approx(row["oracle"], abs=5 * row["stderr"] + 1e-3)
    assert {e["kind"] for e in output.documents["layout"]["edges"]} <= {"NI"}


def test_bell_equal_angles_never_agree():
    angles = {"a": 0.9, "a_prime": 0.9, "b": 0.9, "b_prime": 0.9}
    output = _run({"scenario": "bell", "trials": 100_000, "angles": angles})
    assert all(row["equal_outcomes"] == 0 for row in output.tables["correlations"])
    assert output.summary["statistics"]["chsh"] == pytest.approx(2.0)


def test_double_bell_forced_dual_ni_reports_loop():
    output = _run(
        {"scenario": "double-bell", "trials": 20_000, "geometry": {"force_dual_ni": True}, "field": {"points": 64}}
    )
    stats = output.summary["statistics"]
    assert stats["forced_cycle"] == ["A2" + PRIME, "A1", "B2", "B1" + PRIME, "A2" + PRIME]
    assert "causal_loop" in [f["kind"] for f in output.summary["findings"]]
    assert stats["timelike"]["all_timelike"]
    assert stats["mu_ordered_loop"] is None
    assert len(stats["ni_edges"]) == 2
    for name in ("unprimed", "primed"):
        assert stats["chsh"][name] == pytest.approx(2 * math.sqrt(2), abs=0.15)
    assert [row["rank"] for row in output.tables["orderings"]] == list(range(8))
    assert len(output.tables["correlations"]) == 8


def test_double_bell_without_forcing_has_no_findings():
    output = _run({"scenario": "double-bell", "trials": 2_000, "field": {"points": 64}})
    assert "forced_cycle" not in output.summary["statistics"]
    assert output.summary["findings"] == []


def test_results_do_not_depend_on_chunk_size():
    document = {"scenario": "double-bell", "trials": 3_000, "field": {"points": 64}}
    whole = _run(document)
    pieces = _run(document, chunk_size=700)
    assert whole.summary == pieces.summary
    assert whole.tables == pieces.tables

    bell = {"scenario": "bell", "trials": 5_000}
    assert _run(bell).tables == _run(bell, chunk_size=1_234).tables


def test_reruns_are_byte_identical(tmp_path):
    document = {"scenario": "double-bell", "seed": 11, "trials": 2_000, "field": {"points": 64}}
    first = {p.name: p.read_bytes() for p in write_results(_run(document), tmp_path / "out")}
    second = {p.name: p.read_bytes() for p in write_results(_run(document), tmp_path / "out")}
    assert set(first) == {"summary.json", "correlations.csv", "orderings.csv", "layout.json"}
    assert first == second


def test_different_seeds_differ():
    document = {"scenario": "bell", "trials": 2_000}
    assert _run(document).tables != _run({**document, "seed": 5}).tables


def test_foliation_levels_are_spacelike_and_disjoint():
    output = _run(
        {"scenario": "foliation", "field": {"epsilon": 0.08, "target": "mu", "points": 64, "duration": 3.0}}
    )
    stats = output.summary["statistics"]
    assert stats["timelike"]["all_timelike"]
    assert len(stats["levels"]) == 5
    assert all(level["spacelike"] for level in stats["levels"])
    assert stats["disjoint"]
    assert output.summary["findings"] == []
    assert {row["mu0"] for row in output.tables["foliation"]} == {level["mu0"] for level in stats["levels"]}
    assert list(output.tables["foliation"][0]) == ["mu0", "index", "x", "crossing_time"]
    assert list(output.tables["field"][0]) == ["time", "index", "x", "mu", "mu_dot"]
    assert [row["index"] for row in output.tables["foliation"][:3]] == [0, 1, 2]


def test_foliation_out_of_range_level_is_a_finding():
    output = _run({"scenario": "foliation", "field": {"points": 32, "duration": 1.0, "levels": [0.5, 40.0]}})
    assert [f["kind"] for f in output.summary["findings"]] == ["level_out_of_range"]
    assert [level["mu0"] for level in output.summary["statistics"]["levels"]] == [0.5]


def test_frame_scan_flips_only_spacelike_pairs():
    output = _run({"scenario": "frame-scan", "field": {"points": 64}})
    stats = output.summary["statistics"]
    assert stats["spacelike_flips"] > 0
    assert stats["timelike_flips"] == []
    assert stats["field_ordering_invariant"]
    assert len(stats["frames"]) == 7
    rest = next(f for f in stats["frames"] if f["velocity"] == 0.0)
    assert rest["flips"] == []


@pytest.mark.parametrize("layout", ["double-bell", "einstein"])
def test_frame_scan_other_layouts(layout):
    output = _run({"scenario": "frame-scan", "frame_scan": {"layout": layout}, "field": {"points": 64}})
    assert output.summary["statistics"]["timelike_flips"] == []
    assert output.summary["statistics"]["field_ordering_invariant"]


def test_main_writes_results(tmp_path):
    config = _write(tmp_path, {"scenario": "dilation", "g": 9.8, "h": 10, "t": 3.156e7})
    out = tmp_path / "results"
    assert main(["--config", config, "--out", str(out), "--format", "json"]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["scenario"] == "dilation"
    assert summary["parameters"]["output"]["format"] == "json"


def test_main_applies_seed_and_trial_overrides(tmp_path):
    config = _write(tmp_path, {"scenario": "bell", "trials": 50})
    out = tmp_path / "results"
    assert main(["--config", config, "--out", str(out), "--seed", "3", "--trials", "100"]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["seed"] == 3
    assert summary["trials"] == 100
    assert (out / "correlations.csv").read_text(encoding="utf-8").startswith("experiment,a_angle,b_angle")


def test_main_usage_errors(tmp_path):
    assert main(["--help"]) == EXIT_OK
    assert main([]) == EXIT_USAGE
    assert main(["--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["--config", _write(tmp_path, {"seed": 1})]) == EXIT_USAGE
    assert main(["--config", _write(tmp_path, {"scenario": "bell"}), "--trials", "0"]) == EXIT_USAGE


def test_main_runtime_error(tmp_path):
    config = _write(tmp_path, {"scenario": "foliation", "field": {"points": 32, "dt": 10.0}})
    assert main(["--config", config, "--out", str(tmp_path / "results")]) == EXIT_RUNTIME


def test_run_scenario_matches_runner():
    document = {"scenario": "bell", "trials": 1_000}
    output = asyncio.run(run_scenario(parse_config(json.dumps(document)), "test"))
    assert output.summary == _run(document).summary
    assert output.tables == _run(document).tables


def test_foliation_csv_columns(tmp_path):
    document = {"scenario": "foliation", "field": {"points": 32, "duration": 1.0, "levels": [0.5]}}
    write_results(_run(document), tmp_path)
    assert (tmp_path / "foliation.csv").read_text(encoding="utf-8").startswith("mu0,index,x,crossing_time\n")
    assert (tmp_path / "field.csv").read_text(encoding="utf-8").startswith("time,index,x,mu,mu_dot\n")
