"""Sub-channel allocation for access and D2D links in dense mmWave small cells.

A coalition formation game assigns every uplink access link and D2D link to
one sub-channel so that the system sum rate grows; random allocation (RA), the
partial game (PCG, access links random) and an exhaustive oracle serve as
references.
"""

from .baselines import brute_force_optimal, pcg_allocation, random_allocation
from .channel import (AntennaPattern, Beam, RadioParams, directional_gain, interference_power,
                      link_rate, pattern_from_beamwidth, received_power, sinr)
from .game import (GameConfig, Partition, SwitchMove, UtilityTrace, apply_switch,
                   coalition_value, is_feasible_move, is_nash_stable, member_rate,
                   partition_utility, prefers, run_coalition_formation, weakly_prefers)
from .harness import ExperimentConfig, RunRecord, SweepSpec, run_point, run_sweep, summarize
from .scenario import Scenario, ScenarioConfig, generate_scenario, validate_scenario

__version__ = "0.1.0"
