"""Comparison schemes: random allocation (RA), partial game (PCG), full game (CG)."""

from __future__ import annotations

import numpy as np

from .channel import RadioParams
from .game import GameConfig, Partition, UtilityTrace, run_coalition_formation
from .oracle import DEFAULT_BUDGET, brute_force_assignment
from .scenario import InfeasibleScenario, Scenario


def random_allocation(scenario: Scenario, seed: int) -> Partition:
    """Uniform slot per link in id order; access links avoid slots their BS already uses."""
    rng = np.random.Generator(np.random.PCG64(seed))
    n_slots = scenario.num_subchannels
    used: dict[int, set[int]] = {}
    assignment = []
    for link in scenario.links:
        if link.bs_id is None:
            assignment.append(int(rng.integers(n_slots)))
            continue
        taken = used.setdefault(link.bs_id, set())
        free = [c for c in range(n_slots) if c not in taken]
        if not free:
            raise InfeasibleScenario(f"base station {link.bs_id} has more access links than slots")
        c = free[int(rng.integers(len(free)))]
        taken.add(c)
        assignment.append(c)
    return Partition.for_scenario(scenario, assignment)


def cg_run(scenario: Scenario, params: RadioParams, game_config: GameConfig,
           initial: Partition | None = None) -> tuple[Partition, UtilityTrace]:
    if initial is None:
        initial = random_allocation(scenario, game_config.rng_seed)
    return run_coalition_formation(scenario, params, game_config, initial)


def pcg_run(scenario: Scenario, params: RadioParams, game_config: GameConfig,
            initial: Partition | None = None) -> tuple[Partition, UtilityTrace]:
    """Access links keep their initial (random) slots; only D2D links play."""
    if initial is None:
        initial = random_allocation(scenario, game_config.rng_seed)
    d2d = [l.id for l in scenario.links if not l.is_access]
    return run_coalition_formation(scenario, params, game_config, initial, movable_links=d2d)


def pcg_allocation(scenario: Scenario, params: RadioParams, game_config: GameConfig,
                   initial: Partition | None = None) -> Partition:
    return pcg_run(scenario, params, game_config, initial)[0]


def brute_force_optimal(scenario: Scenario, params: RadioParams,
                        budget: int = DEFAULT_BUDGET) -> tuple[Partition, float]:
    assignment, value = brute_force_assignment(scenario, params, budget)
    return Partition.for_scenario(scenario, assignment), value
