"""Command line entry point: ``mmwave-cg {run,sweep,oracle,validate,generate}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .baselines import brute_force_optimal
from .channel import DomainError, RadioParams
from .harness import (ConfigError, ExperimentConfig, emit, load_config, resolve_out_dir,
                      run_points, summarize)
from .oracle import DEFAULT_BUDGET, InstanceTooLarge
from .scenario import (ScenarioError, generate_scenario, load_scenario, save_scenario,
                       validate_scenario)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_BUDGET = 0, 1, 2, 3

log = logging.getLogger("mmwave_cg")


def _config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        config = config.with_seed(args.seed)
    return config


def _report(records, args) -> None:
    summary = summarize(records)
    for path in emit(records, summary, resolve_out_dir(args.out_dir)):
        log.info("wrote %s", path)
    for row in summary:
        gain = "" if row.cg_improvement is None else f"  CG gain {100 * row.cg_improvement:+.1f}%"
        print(f"{row.sweep_value:>4} {row.scheme:<4} mean {row.mean_bps / 1e9:9.3f} Gbit/s "
              f"+/- {row.ci95_bps / 1e9:.3f}{gain}")


def cmd_run(args) -> int:
    config = _config(args)
    if args.value is not None:
        if config.sweep is None:
            raise ConfigError("--value needs a [sweep] section naming the variable")
        value = args.value
        config = dataclasses.replace(config, sweep=dataclasses.replace(config.sweep, values=(value,)))
    else:
        config = dataclasses.replace(config, sweep=None)
        value = 0
    _report(run_points(config, [value], jobs=args.jobs), args)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _config(args)
    if config.sweep is None:
        raise ConfigError("config has no [sweep] section")
    _report(run_points(config, config.sweep.values, jobs=args.jobs), args)
    return EXIT_OK


def cmd_oracle(args) -> int:
    scenario = load_scenario(args.scenario)
    radio = load_config(args.config).radio if args.config else RadioParams()
    partition, utility = brute_force_optimal(scenario, radio, budget=args.budget)
    doc = {"assignment": list(partition.assignment), **partition.to_dict(), "utility_bps": utility}
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_validate(args) -> int:
    ok = True
    if args.config:
        config = load_config(args.config)
        print(f"config {args.config}: ok ({len(config.point_values())} point(s), "
              f"{config.num_replications} replications, schemes {','.join(config.schemes)})")
    if args.scenario:
        problems = validate_scenario(load_scenario(args.scenario))
        for v in problems:
            print(f"{v.code}: {v.message}")
        print(f"scenario {args.scenario}: {'ok' if not problems else f'{len(problems)} violation(s)'}")
        ok = not problems
    return EXIT_OK if ok else EXIT_CONFIG


def cmd_generate(args) -> int:
    config = _config(args)
    sc = config.scenario_at(args.value) if args.value is not None else config.scenario
    if args.seed is not None:
        sc = dataclasses.replace(sc, rng_seed=args.seed)
    save_scenario(generate_scenario(sc), args.output)
    print(args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmwave-cg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="experiment TOML file (defaults mirror Table-1 settings)")
        if seed:
            p.add_argument("--seed", type=int, help="override the base seed")

    p = sub.add_parser("run", help="all schemes x replications at one point")
    common(p)
    p.add_argument("--value", type=int, help="value of the sweep variable for this point")
    p.add_argument("--out-dir")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="reproduce a figure: every sweep value x scheme x replication")
    common(p)
    p.add_argument("--out-dir")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="exhaustive optimum of a saved scenario")
    common(p, seed=False)
    p.add_argument("--scenario", required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("validate", help="check a config and/or a saved scenario")
    common(p, seed=False)
    p.add_argument("--scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="draw a scenario and save it as JSON")
    common(p)
    p.add_argument("--value", type=int, help="apply this sweep value first")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InstanceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, DomainError, ScenarioError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
