import dataclasses
import json
import math

import pytest

from mmwave_cg.game import partition_utility
from mmwave_cg.harness import (RUNS_HEADER, SUMMARY_HEADER, ConfigError, EmptyInput,
                               ExperimentConfig, RunRecord, SweepSpec, config_from_dict, emit,
                               execute_point, load_config, paired_comparison, parse_records,
                               point_scenario, records_csv, run_point, run_sweep, summarize)
from mmwave_cg.scenario import ScenarioConfig

SMALL = ExperimentConfig(
    scenario=ScenarioConfig(num_cells=2, num_access_links=4, num_d2d_links=2, num_subchannels=3),
    num_replications=3, base_seed=11, sweep=SweepSpec("NumSubchannels", (2, 3)))


def test_paired_scenarios():
    a = execute_point(SMALL, 3, "CG", 1)
    b = execute_point(SMALL, 3, "RA", 1)
    assert a.scenario == b.scenario
    assert a.record.seed == b.record.seed
    assert point_scenario(SMALL, 3, 1) == a.scenario
    assert point_scenario(SMALL, 3, 2) != a.scenario


def test_cg_never_below_ra():
    for rep in range(3):
        cg, ra = run_point(SMALL, 2, "CG", rep), run_point(SMALL, 2, "RA", rep)
        assert cg.sum_rate_bps >= ra.sum_rate_bps


def test_no_interference_same_rate():
    cfg = ExperimentConfig(scenario=ScenarioConfig(num_cells=1, num_access_links=1, num_d2d_links=0,
                                                   num_subchannels=2), num_replications=1)
    assert run_point(cfg, 0, "CG", 0).sum_rate_bps == run_point(cfg, 0, "RA", 0).sum_rate_bps


def test_ra_record_matches_partition():
    res = execute_point(SMALL, 3, "RA", 0)
    assert res.record.sum_rate_bps == partition_utility(res.scenario, SMALL.radio, res.partition)
    assert res.record.iterations == 0


def test_sweep_shape_and_order():
    records = run_sweep(SMALL)
    assert len(records) == 2 * 3 * 3
    keys = [(r.sweep_value, r.scheme) for r in records]
    assert keys == sorted(keys, key=lambda k: (k[0], ("CG", "PCG", "RA").index(k[1])))
    for r in records:
        if r.scheme == "CG" and not r.nash_certified:
            assert r.iterations == SMALL.game.max_iterations


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(schemes=())
    with pytest.raises(ConfigError):
        ExperimentConfig(schemes=("XX",))
    with pytest.raises(ConfigError):
        ExperimentConfig(num_replications=0)
    with pytest.raises(ConfigError):
        SweepSpec("NumSubchannels", (3, 3))
    with pytest.raises(ConfigError):
        SweepSpec("NumD2DLinks", (-1, 2))
    with pytest.raises(ConfigError, match="infeasible"):
        ExperimentConfig(sweep=SweepSpec("NumSubchannels", (3, 4, 5)))


def test_config_from_dict_units():
    cfg = config_from_dict({"radio": {"tx_power_dbm": 20, "subchannel_bandwidth_mhz": 100,
                                      "bs_beamwidth_deg": 60, "carrier_frequency_ghz": 30},
                            "experiment": {"schemes": ["CG", "RA"]},
                            "sweep": {"variable": "NumD2DLinks", "values": [0, 5]}})
    assert cfg.radio.tx_power_watts == pytest.approx(0.1)
    assert cfg.radio.subchannel_bandwidth_hz == pytest.approx(100e6)
    assert cfg.radio.bs_beamwidth == pytest.approx(math.pi / 3)
    assert cfg.radio.carrier_wavelength == pytest.approx(0.00999308, rel=1e-5)
    assert cfg.sweep.values == (0, 5)
    with pytest.raises(ConfigError):
        config_from_dict({"radio": {"tx_power_watts": 1}})
    with pytest.raises(ConfigError):
        config_from_dict({"extra": {}})


def test_shipped_configs_load():
    for name in ("fig1_subchannels", "fig2_d2d_links", "smoke"):
        cfg = load_config(f"configs/{name}.toml")
        assert cfg.sweep is not None
    with pytest.raises(ConfigError):
        load_config("configs/missing.toml")


def test_summarize_single():
    r = RunRecord(9, "RA", 1, 5.0, 0, False, 1.0)
    (row,) = summarize([r])
    assert (row.mean_bps, row.std_bps, row.ci95_bps) == (5.0, 0.0, 0.0)
    with pytest.raises(EmptyInput):
        summarize([])


def test_summarize_improvement():
    recs = [RunRecord(9, s, i, v, 0, True, 0.0)
            for i, (s, v) in enumerate([("CG", 13.0), ("CG", 13.0), ("RA", 10.0), ("RA", 10.0)])]
    rows = {r.scheme: r for r in summarize(recs)}
    assert rows["RA"].cg_improvement == pytest.approx(0.3)
    assert rows["CG"].cg_improvement is None
    cmp = paired_comparison(recs, 9, "CG", "RA")
    assert cmp.mean_diff_bps == 3.0 and cmp.significant


def test_emit_round_trip(tmp_path):
    records = run_sweep(dataclasses.replace(SMALL, num_replications=2))
    summary = summarize(records)
    paths = emit(records, summary, tmp_path)
    assert [p.name for p in paths] == ["runs.csv", "summary.csv", "results.json"]
    text = (tmp_path / "runs.csv").read_text()
    assert text.splitlines()[0] == RUNS_HEADER
    assert "\r" not in text
    assert parse_records(text) == records
    lines = (tmp_path / "summary.csv").read_text().splitlines()
    assert lines[0] == SUMMARY_HEADER and len(lines) - 1 == 2 * 3
    doc = json.loads((tmp_path / "results.json").read_text())
    assert set(doc["runs"][0]) == set(RUNS_HEADER.split(","))


def test_emit_reports_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit([RunRecord(1, "RA", 1, 1.0, 0, False, 0.0)], [], blocker / "sub")


def test_parallel_matches_serial():
    from mmwave_cg.harness import run_points
    serial = run_points(SMALL, [2, 3], jobs=1)
    parallel = run_points(SMALL, [2, 3], jobs=2)
    assert records_csv(serial, include_wall_time=False) == records_csv(parallel, include_wall_time=False)
