"""Monte Carlo experiments: config parsing, paired replications, sweeps, CSV/JSON output."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .baselines import cg_run, pcg_run, random_allocation
from .channel import (RadioParams, dbm_per_mhz_to_watts_per_hz, dbm_to_watts,
                      wavelength_from_ghz)
from .game import GameConfig, Partition, UtilityTrace, partition_utility
from .scenario import Scenario, ScenarioConfig, generate_scenario

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

SCHEMES = ("CG", "PCG", "RA")
SWEEP_VARIABLES = {"NumSubchannels": "num_subchannels", "NumD2DLinks": "num_d2d_links"}
OUT_DIR_ENV = "MMWAVE_CG_OUT_DIR"

RUNS_HEADER = "sweep_value,scheme,seed,sum_rate_bps,iterations,nash_certified,wall_time_ms"
SUMMARY_HEADER = "sweep_value,scheme,n,mean_bps,std_bps,ci95_bps,cg_improvement"


class ConfigError(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[int, ...]

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {sorted(SWEEP_VARIABLES)}, got {self.variable!r}")
        if not self.values:
            raise ConfigError("sweep values must not be empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        floor = 1 if self.variable == "NumSubchannels" else 0
        if self.values[0] < floor:
            raise ConfigError(f"{self.variable} values must be >= {floor}")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    radio: RadioParams = field(default_factory=RadioParams)
    game: GameConfig = field(default_factory=GameConfig)
    schemes: tuple[str, ...] = SCHEMES
    num_replications: int = 200
    base_seed: int = 20170101
    sweep: SweepSpec | None = None

    def __post_init__(self):
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ConfigError(f"unknown schemes {sorted(unknown)}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("schemes must not repeat")
        if self.num_replications < 1:
            raise ConfigError("num_replications must be >= 1")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be >= 0")
        for value in self.point_values():
            sc = self.scenario_at(value)
            if sc.num_access_links:
                per_cell = math.ceil(sc.num_access_links / sc.num_cells)
                if per_cell > sc.num_subchannels:
                    raise ConfigError(
                        f"infeasible point {value}: {per_cell} access links per cell "
                        f"> {sc.num_subchannels} sub-channels")

    def point_values(self) -> tuple[int, ...]:
        return self.sweep.values if self.sweep else (0,)

    def scenario_at(self, sweep_value: int) -> ScenarioConfig:
        """Scenario config of one sweep point (the base scenario when there is no sweep)."""
        if self.sweep is None:
            return self.scenario
        try:
            return dataclasses.replace(self.scenario, **{SWEEP_VARIABLES[self.sweep.variable]: sweep_value})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def with_seed(self, base_seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, base_seed=base_seed)


@dataclass(frozen=True)
class RunRecord:
    sweep_value: int
    scheme: str
    seed: int
    sum_rate_bps: float
    iterations: int
    nash_certified: bool
    wall_time_ms: float


@dataclass(frozen=True)
class PointResult:
    record: RunRecord
    scenario: Scenario
    partition: Partition
    trace: UtilityTrace | None


def replication_seeds(base_seed: int, sweep_value: int, replication: int) -> tuple[int, int, int]:
    """(scenario, random-allocation, game) seeds of one replication.

    SeedSequence(entropy=base_seed, spawn_key=(sweep_value, replication)); the
    scheme never enters, so every scheme sees the same scenario and the same
    initial random allocation.
    """
    ss = np.random.SeedSequence(base_seed, spawn_key=(sweep_value, replication))
    a, b, c = (int(x) for x in ss.generate_state(3, dtype=np.uint64))
    return a, b, c & 0x7FFF_FFFF_FFFF_FFFF


def _run_scheme(config: ExperimentConfig, scenario: Scenario, scheme: str, sweep_value: int,
                seeds: tuple[int, int, int]) -> PointResult:
    scenario_seed, ra_seed, game_seed = seeds
    start = time.perf_counter()
    initial = random_allocation(scenario, ra_seed)
    trace = None
    if scheme == "RA":
        partition = initial
        utility = partition_utility(scenario, config.radio, initial)
        iterations, certified = 0, False
    else:
        game = dataclasses.replace(config.game, rng_seed=game_seed)
        solver = cg_run if scheme == "CG" else pcg_run
        partition, trace = solver(scenario, config.radio, game, initial)
        utility, iterations, certified = trace.final_utility, trace.iterations, trace.nash_certified
    wall_ms = (time.perf_counter() - start) * 1e3
    record = RunRecord(sweep_value, scheme, scenario_seed, utility, iterations, certified, wall_ms)
    return PointResult(record, scenario, partition, trace)


def point_scenario(config: ExperimentConfig, sweep_value: int, replication: int) -> Scenario:
    seeds = replication_seeds(config.base_seed, sweep_value, replication)
    sc = dataclasses.replace(config.scenario_at(sweep_value), rng_seed=seeds[0])
    return generate_scenario(sc)


def execute_point(config: ExperimentConfig, sweep_value: int, scheme: str, replication: int) -> PointResult:
    seeds = replication_seeds(config.base_seed, sweep_value, replication)
    return _run_scheme(config, point_scenario(config, sweep_value, replication), scheme, sweep_value, seeds)


def run_point(config: ExperimentConfig, sweep_value: int, scheme: str, replication_index: int) -> RunRecord:
    return execute_point(config, sweep_value, scheme, replication_index).record


def execute_replication(config: ExperimentConfig, sweep_value: int, replication: int) -> list[PointResult]:
    """All configured schemes on one shared scenario."""
    seeds = replication_seeds(config.base_seed, sweep_value, replication)
    scenario = point_scenario(config, sweep_value, replication)
    return [_run_scheme(config, scenario, s, sweep_value, seeds) for s in config.schemes]


def _replication_records(args) -> list[RunRecord]:
    config, value, rep = args
    return [r.record for r in execute_replication(config, value, rep)]


def _record_order(config: ExperimentConfig):
    rank = {s: i for i, s in enumerate(config.schemes)}
    return lambda r: (r.sweep_value, rank[r.scheme])


def run_points(config: ExperimentConfig, values: Sequence[int], jobs: int = 1) -> list[RunRecord]:
    tasks = [(config, v, rep) for v in values for rep in range(config.num_replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_replication_records, tasks, chunksize=4))
    else:
        chunks = [_replication_records(t) for t in tasks]
    # Stable sort keeps replication order within each (value, scheme).
    records = [r for chunk in chunks for r in chunk]
    return sorted(records, key=_record_order(config))


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> list[RunRecord]:
    if config.sweep is None:
        raise ConfigError("config has no [sweep] section")
    return run_points(config, config.sweep.values, jobs)


# -- statistics --------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    sweep_value: int
    scheme: str
    n: int
    mean_bps: float
    std_bps: float
    ci95_bps: float
    cg_improvement: float | None  # (mean_CG - mean) / mean, None for CG itself


def _ci95(std: float, n: int) -> float:
    return float(stats.t.ppf(0.975, n - 1) * std / math.sqrt(n)) if n > 1 else 0.0


def summarize(records: Sequence[RunRecord]) -> list[SummaryRow]:
    if not records:
        raise EmptyInput("no records to summarize")
    groups: dict[tuple[int, str], list[float]] = {}
    for r in records:
        groups.setdefault((r.sweep_value, r.scheme), []).append(r.sum_rate_bps)
    means = {k: float(np.mean(v)) for k, v in groups.items()}
    rows = []
    for (value, scheme), rates in groups.items():
        n = len(rates)
        std = float(np.std(rates, ddof=1)) if n > 1 else 0.0
        cg = means.get((value, "CG"))
        improvement = None
        if scheme != "CG" and cg is not None and means[(value, scheme)] > 0:
            improvement = (cg - means[(value, scheme)]) / means[(value, scheme)]
        rows.append(SummaryRow(value, scheme, n, means[(value, scheme)], std, _ci95(std, n), improvement))
    return rows


@dataclass(frozen=True)
class PairedComparison:
    n: int
    mean_diff_bps: float
    ci95_bps: float

    @property
    def significant(self) -> bool:
        return self.mean_diff_bps - self.ci95_bps > 0


def paired_comparison(records: Iterable[RunRecord], sweep_value: int, better: str, worse: str) -> PairedComparison:
    """Paired-t interval on per-replication differences ``better - worse``."""
    records = list(records)
    a = [r.sum_rate_bps for r in records if r.sweep_value == sweep_value and r.scheme == better]
    b = [r.sum_rate_bps for r in records if r.sweep_value == sweep_value and r.scheme == worse]
    if not a or len(a) != len(b):
        raise EmptyInput(f"no paired records for {better} vs {worse} at {sweep_value}")
    diff = np.asarray(a) - np.asarray(b)
    std = float(np.std(diff, ddof=1)) if len(diff) > 1 else 0.0
    return PairedComparison(len(diff), float(diff.mean()), _ci95(std, len(diff)))


# -- output ------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def records_csv(records: Iterable[RunRecord], include_wall_time: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = RUNS_HEADER.split(",")
    if not include_wall_time:
        header = header[:-1]
    w.writerow(header)
    for r in records:
        row = [_fmt(getattr(r, h)) for h in header]
        w.writerow(row)
    return buf.getvalue()


def summary_csv(rows: Iterable[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER.split(","))
    for r in rows:
        w.writerow([_fmt(getattr(r, h)) for h in SUMMARY_HEADER.split(",")])
    return buf.getvalue()


def parse_records(text: str) -> list[RunRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != RUNS_HEADER.split(","):
        raise ValueError(f"unexpected header {reader.fieldnames}")
    return [RunRecord(int(row["sweep_value"]), row["scheme"], int(row["seed"]),
                      float(row["sum_rate_bps"]), int(row["iterations"]),
                      row["nash_certified"] == "true", float(row["wall_time_ms"]))
            for row in reader]


def emit(records: Sequence[RunRecord], summary: Sequence[SummaryRow], out_dir: str | Path,
         write_json: bool = True) -> list[Path]:
    """Write runs.csv, summary.csv and (optionally) results.json into ``out_dir``."""
    out = Path(out_dir)
    paths = [out / "runs.csv", out / "summary.csv"]
    try:
        out.mkdir(parents=True, exist_ok=True)
        for path, text in zip(paths, (records_csv(records), summary_csv(summary))):
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        if write_json:
            paths.append(out / "results.json")
            doc = {"runs": [dataclasses.asdict(r) for r in records],
                   "summary": [dataclasses.asdict(s) for s in summary]}
            with open(paths[-1], "w", encoding="utf-8", newline="") as fh:
                fh.write(json.dumps(doc, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return paths


def resolve_out_dir(cli_value: str | None, default: str = "results") -> Path:
    return Path(os.environ.get(OUT_DIR_ENV) or cli_value or default)


# -- config files ------------------------------------------------------------

_RADIO_KEYS = {
    "tx_power_dbm": ("tx_power_watts", dbm_to_watts),
    "path_loss_exponent": ("path_loss_exponent", float),
    "carrier_frequency_ghz": ("carrier_wavelength", wavelength_from_ghz),
    "mui_factor": ("mui_factor", float),
    "noise_psd_dbm_per_mhz": ("noise_psd", dbm_per_mhz_to_watts_per_hz),
    "subchannel_bandwidth_mhz": ("subchannel_bandwidth_hz", lambda v: float(v) * 1e6),
    "transceiver_efficiency": ("transceiver_efficiency", float),
    "bs_beamwidth_deg": ("bs_beamwidth", math.radians),
    "ue_beamwidth_deg": ("ue_beamwidth", math.radians),
}
_SCENARIO_KEYS = {
    "region_radius_m": ("region_radius", float),
    "num_cells": ("num_cells", int),
    "num_access_links": ("num_access_links", int),
    "num_d2d_links": ("num_d2d_links", int),
    "d2d_max_distance_m": ("d2d_max_distance", float),
    "num_subchannels": ("num_subchannels", int),
}
_GAME_KEYS = {
    "max_iterations": ("max_iterations", int),
    "stall_threshold": ("stall_threshold", int),
    "enable_two_step": ("enable_two_step", bool),
}


def _section(doc: dict, name: str, keys: dict) -> dict:
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    unknown = set(raw) - set(keys)
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return {keys[k][0]: keys[k][1](v) for k, v in raw.items()}


def config_from_dict(doc: dict) -> ExperimentConfig:
    unknown = set(doc) - {"scenario", "radio", "game", "experiment", "sweep"}
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    try:
        exp = dict(doc.get("experiment", {}))
        extra = set(exp) - {"schemes", "num_replications", "base_seed"}
        if extra:
            raise ConfigError(f"unknown keys in [experiment]: {sorted(extra)}")
        sweep = None
        if "sweep" in doc:
            s = doc["sweep"]
            sweep = SweepSpec(str(s["variable"]), tuple(int(v) for v in s["values"]))
        return ExperimentConfig(
            scenario=ScenarioConfig(**_section(doc, "scenario", _SCENARIO_KEYS)),
            radio=RadioParams(**_section(doc, "radio", _RADIO_KEYS)),
            game=GameConfig(**_section(doc, "game", _GAME_KEYS)),
            schemes=tuple(exp.get("schemes", SCHEMES)),
            num_replications=int(exp.get("num_replications", 200)),
            base_seed=int(exp.get("base_seed", ExperimentConfig.base_seed)),
            sweep=sweep,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_dict(doc)
