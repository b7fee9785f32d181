"""Coalition formation over sub-channels.

Every link is a player and every sub-channel is a coalition slot. A coalition's
value is the sum rate of its members, and links switch slots under the
utilitarian order: a switch is accepted when it strictly raises the summed
value of the two slots it touches.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .channel import RadioParams, link_gains, link_rate, sinr
from .scenario import Scenario

# Relative margin for "strictly greater" comparisons of sum rates.
REL_TOL = 1e-12
STALL_FACTOR = 50


class GameError(ValueError):
    pass


class InfeasibleMove(GameError):
    pass


class InvalidInitialPartition(GameError):
    pass


def improves(new: float, old: float) -> bool:
    return new > old + REL_TOL * abs(old)


def weakly_improves(new: float, old: float) -> bool:
    return new >= old - REL_TOL * abs(old)


@dataclass(frozen=True)
class Partition:
    """Slot of every link (``assignment[link_id]``) plus each link's serving BS.

    ``link_bs[i]`` is the base station of access link ``i`` and ``None`` for
    D2D links, so the per-slot base-station sets need no scenario lookup.
    """

    assignment: tuple[int, ...]
    num_slots: int
    link_bs: tuple[int | None, ...]
    coalitions: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.assignment) != len(self.link_bs):
            raise GameError("assignment and link_bs lengths differ")
        slots: list[set[int]] = [set() for _ in range(self.num_slots)]
        for link, c in enumerate(self.assignment):
            if not 0 <= c < self.num_slots:
                raise GameError(f"link {link} assigned to slot {c} outside [0, {self.num_slots})")
            slots[c].add(link)
        object.__setattr__(self, "coalitions", tuple(frozenset(s) for s in slots))

    @classmethod
    def for_scenario(cls, scenario: Scenario, assignment: Sequence[int]) -> "Partition":
        return cls(tuple(int(c) for c in assignment), scenario.num_subchannels,
                   tuple(l.bs_id for l in scenario.links))

    @classmethod
    def from_coalitions(cls, scenario: Scenario, coalitions: Sequence[Iterable[int]]) -> "Partition":
        assignment = [-1] * len(scenario.links)
        for c, members in enumerate(coalitions):
            for link in members:
                if assignment[link] != -1:
                    raise GameError(f"link {link} appears in two coalitions")
                assignment[link] = c
        if -1 in assignment:
            raise GameError(f"link {assignment.index(-1)} is in no coalition")
        return cls.for_scenario(scenario, assignment)

    def slot_of(self, link_id: int) -> int:
        return self.assignment[link_id]

    def base_stations(self, slot: int) -> set[int]:
        return {self.link_bs[l] for l in self.coalitions[slot] if self.link_bs[l] is not None}

    def is_feasible(self) -> bool:
        return not partition_violations(self)

    def to_dict(self) -> dict:
        return {"num_slots": self.num_slots,
                "coalitions": {str(c): sorted(s) for c, s in enumerate(self.coalitions)}}

    @classmethod
    def from_dict(cls, scenario: Scenario, d: dict) -> "Partition":
        slots = [d["coalitions"].get(str(c), []) for c in range(int(d["num_slots"]))]
        return cls.from_coalitions(scenario, slots)


def partition_violations(p: Partition, scenario: Scenario | None = None) -> list[str]:
    out = []
    if scenario is not None:
        if p.num_slots != scenario.num_subchannels:
            out.append(f"{p.num_slots} slots for {scenario.num_subchannels} sub-channels")
        if p.link_bs != tuple(l.bs_id for l in scenario.links):
            out.append("link base stations do not match the scenario")
    if sum(map(len, p.coalitions)) != len(p.assignment):
        out.append("coalitions do not cover every link exactly once")
    for c, members in enumerate(p.coalitions):
        bs = [p.link_bs[l] for l in members if p.link_bs[l] is not None]
        if len(bs) != len(set(bs)):
            out.append(f"slot {c} holds two access links of one base station")
    return out


@dataclass(frozen=True)
class SwitchMove:
    link_id: int
    from_coalition: int
    to_coalition: int


@dataclass(frozen=True)
class GameConfig:
    max_iterations: int = 1_000_000
    stall_threshold: int | None = None  # None: STALL_FACTOR * |links| * |slots|
    rng_seed: int = 0
    enable_two_step: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise GameError("max_iterations must be >= 1")
        if self.stall_threshold is not None and self.stall_threshold < 1:
            raise GameError("stall_threshold must be >= 1")
        if self.rng_seed < 0:
            raise GameError("rng_seed must be >= 0")

    def stall_limit(self, num_links: int, num_slots: int) -> int:
        if self.stall_threshold is not None:
            return self.stall_threshold
        return STALL_FACTOR * max(num_links, 1) * num_slots


# -- rates -------------------------------------------------------------------

def _members_value(members: Sequence[int], signal, cross_t, noise: float, scale: float) -> float:
    # Same operation order as member_rate, so both paths agree bit for bit.
    total = 0.0
    for v in members:
        col = cross_t[v]
        isum = 0.0
        for u in members:
            if u != v:
                isum += col[u]
        total += scale * math.log2(1.0 + signal[v] / (noise + isum))
    return total


class _Rates:
    """Scalar views of a scenario's link gains for fast coalition sums."""

    def __init__(self, scenario: Scenario, params: RadioParams):
        gains = link_gains(scenario, params)
        self.signal = gains.signal.tolist()
        self.cross_t = gains.cross.T.tolist()  # cross_t[v][u]: power of u at v
        self.noise = params.noise_power
        self.scale = params.transceiver_efficiency * params.subchannel_bandwidth_hz

    def value(self, members: Sequence[int]) -> float:
        return _members_value(members, self.signal, self.cross_t, self.noise, self.scale)


def member_rate(scenario: Scenario, params: RadioParams, partition: Partition, link_id: int) -> float:
    gains = link_gains(scenario, params)
    isum = 0.0
    for u in sorted(partition.coalitions[partition.slot_of(link_id)]):
        if u != link_id:
            isum += float(gains.cross[u, link_id])
    return link_rate(sinr(float(gains.signal[link_id]), isum, params), params)


def coalition_value(scenario: Scenario, params: RadioParams, partition: Partition, coalition_index: int) -> float:
    total = 0.0
    for link in sorted(partition.coalitions[coalition_index]):
        total += member_rate(scenario, params, partition, link)
    return total


def partition_utility(scenario: Scenario, params: RadioParams, partition: Partition) -> float:
    total = 0.0
    for c in range(partition.num_slots):
        total += coalition_value(scenario, params, partition, c)
    return total


# -- switch operations -------------------------------------------------------

def is_feasible_move(partition: Partition, move: SwitchMove, scenario: Scenario | None = None) -> bool:
    """Target differs from source and an access link's BS is new to the target slot."""
    if not (0 <= move.to_coalition < partition.num_slots):
        return False
    if move.from_coalition != partition.slot_of(move.link_id) or move.to_coalition == move.from_coalition:
        return False
    bs = partition.link_bs[move.link_id]
    return bs is None or bs not in partition.base_stations(move.to_coalition)


def _two_slot_sums(rates: _Rates, partition: Partition, move: SwitchMove) -> tuple[float, float]:
    src = sorted(partition.coalitions[move.from_coalition])
    dst = sorted(partition.coalitions[move.to_coalition])
    old = rates.value(dst) + rates.value(src)
    src.remove(move.link_id)
    bisect.insort(dst, move.link_id)
    new = rates.value(dst) + rates.value(src)
    return new, old


def prefers(scenario: Scenario, params: RadioParams, partition: Partition, move: SwitchMove) -> bool:
    new, old = _two_slot_sums(_Rates(scenario, params), partition, move)
    return improves(new, old)


def weakly_prefers(scenario: Scenario, params: RadioParams, partition: Partition, move: SwitchMove) -> bool:
    new, old = _two_slot_sums(_Rates(scenario, params), partition, move)
    return weakly_improves(new, old)


def apply_switch(partition: Partition, move: SwitchMove) -> Partition:
    if not is_feasible_move(partition, move):
        raise InfeasibleMove(f"cannot move link {move.link_id} from slot "
                             f"{move.from_coalition} to {move.to_coalition}")
    assignment = list(partition.assignment)
    assignment[move.link_id] = move.to_coalition
    return Partition(tuple(assignment), partition.num_slots, partition.link_bs)


def feasible_moves(partition: Partition, links: Iterable[int] | None = None):
    for l in range(len(partition.assignment)) if links is None else links:
        m = partition.slot_of(l)
        for k in range(partition.num_slots):
            move = SwitchMove(l, m, k)
            if is_feasible_move(partition, move):
                yield move


def is_nash_stable(scenario: Scenario, params: RadioParams, partition: Partition,
                   movable_links: Iterable[int] | None = None) -> bool:
    """No feasible single switch (by ``movable_links``, default all) is strictly preferred."""
    rates = _Rates(scenario, params)
    return not any(improves(*_two_slot_sums(rates, partition, mv))
                   for mv in feasible_moves(partition, movable_links))


def _can_switch(partition: Partition, link: int) -> bool:
    bs = partition.link_bs[link]
    if bs is None:
        return partition.num_slots > 1
    return sum(1 for b in partition.link_bs if b == bs) < partition.num_slots


# -- Algorithm ---------------------------------------------------------------

@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    kind: str  # "single", "two_step" or "scan"
    utility: float


@dataclass
class UtilityTrace:
    initial_utility: float
    entries: list[TraceEntry] = field(default_factory=list)
    iterations: int = 0
    nash_certified: bool = False
    hit_max_iterations: bool = False

    @property
    def utilities(self) -> list[float]:
        return [self.initial_utility] + [e.utility for e in self.entries]

    @property
    def final_utility(self) -> float:
        return self.entries[-1].utility if self.entries else self.initial_utility

    def __len__(self) -> int:
        return len(self.entries)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "move_kind", "utility_bps"])
        w.writerow([0, "initial", repr(self.initial_utility)])
        for e in self.entries:
            w.writerow([e.iteration, e.kind, repr(e.utility)])
        return buf.getvalue()


class _State:
    """Mutable slot memberships with cached coalition values."""

    def __init__(self, rates: _Rates, partition: Partition):
        self.rates = rates
        self.link_bs = partition.link_bs
        self.assign = list(partition.assignment)
        self.members = [sorted(s) for s in partition.coalitions]
        self.bs = [partition.base_stations(c) for c in range(partition.num_slots)]
        self.values = [rates.value(m) for m in self.members]

    def total(self) -> float:
        total = 0.0
        for v in self.values:
            total += v
        return total

    def targets(self, link: int) -> list[int]:
        m = self.assign[link]
        bs = self.link_bs[link]
        if bs is None:
            return [k for k in range(len(self.members)) if k != m]
        return [k for k in range(len(self.members)) if k != m and bs not in self.bs[k]]

    def trial(self, link: int, k: int) -> tuple[float, float]:
        """Values of (source without link, target with link)."""
        src = self.members[self.assign[link]].copy()
        src.remove(link)
        dst = self.members[k].copy()
        bisect.insort(dst, link)
        return self.rates.value(src), self.rates.value(dst)

    def move(self, link: int, k: int, new_src: float, new_dst: float) -> None:
        m = self.assign[link]
        self.members[m].remove(link)
        bisect.insort(self.members[k], link)
        self.assign[link] = k
        bs = self.link_bs[link]
        if bs is not None:
            self.bs[m].discard(bs)
            self.bs[k].add(bs)
        self.values[m] = new_src
        self.values[k] = new_dst

    def best_move(self, links: Sequence[int]):
        """Largest strictly improving single switch, or None (Nash certificate)."""
        best = None
        best_gain = 0.0
        for l in links:
            m = self.assign[l]
            for k in self.targets(l):
                new_src, new_dst = self.trial(l, k)
                old = self.values[k] + self.values[m]
                new = new_dst + new_src
                if improves(new, old) and new - old > best_gain:
                    best, best_gain = (l, k, new_src, new_dst), new - old
        return best

    def partition(self, template: Partition) -> Partition:
        return Partition(tuple(self.assign), template.num_slots, template.link_bs)


def run_coalition_formation(scenario: Scenario, params: RadioParams, game_config: GameConfig,
                            initial: Partition, movable_links: Sequence[int] | None = None
                            ) -> tuple[Partition, UtilityTrace]:
    """Randomised switch dynamics with the two-step fallback.

    Each iteration draws a link and a feasible target slot uniformly. A
    strictly preferred switch is applied; otherwise (two-step enabled) the
    switch is applied tentatively, a second random switch is drawn on top,
    and both are kept iff total utility rises. After ``stall_limit``
    consecutive rejected iterations an exhaustive scan either applies the
    best improving switch or certifies Nash stability and returns.
    ``movable_links`` restricts which links may switch (default: all).
    """
    problems = partition_violations(initial, scenario)
    if problems:
        raise InvalidInitialPartition("; ".join(problems))
    movable = list(range(len(scenario.links))) if movable_links is None else sorted(movable_links)
    # A link can switch iff some other slot lacks its BS; that depends only on
    # per-BS access counts, which switches never change.
    movable = [l for l in movable if _can_switch(initial, l)]
    rng = random.Random(game_config.rng_seed)
    state = _State(_Rates(scenario, params), initial)
    trace = UtilityTrace(initial_utility=state.total())
    stall_limit = game_config.stall_limit(len(scenario.links), initial.num_slots)

    def record(kind: str) -> None:
        trace.entries.append(TraceEntry(trace.iterations, kind, state.total()))

    if not movable:
        trace.nash_certified = True
        return initial, trace

    n_slots = initial.num_slots
    link_bs = state.link_bs
    members, slot_bs, values, assign = state.members, state.bs, state.values, state.assign
    value = state.rates.value
    draw = rng.random
    n_movable = len(movable)
    stall = 0
    while True:
        if stall >= stall_limit or trace.iterations >= game_config.max_iterations:
            best = state.best_move(movable)
            if best is None:
                trace.nash_certified = True
                break
            if trace.iterations >= game_config.max_iterations:
                trace.hit_max_iterations = True
                break
            state.move(*best)
            record("scan")
            stall = 0
            continue

        trace.iterations += 1
        stall += 1
        l = movable[int(draw() * n_movable)]
        targets = state.targets(l)
        if not targets:
            continue
        k = targets[int(draw() * len(targets))]
        m = assign[l]
        src = members[m].copy()
        src.remove(l)
        dst = members[k].copy()
        bisect.insort(dst, l)
        new_src, new_dst = value(src), value(dst)
        if improves(new_dst + new_src, values[k] + values[m]):
            state.move(l, k, new_src, new_dst)
            record("single")
            stall = 0
            continue
        if not game_config.enable_two_step:
            continue

        # Second switch drawn on the tentative partition (l moved to k),
        # evaluated on copies so the state is untouched unless accepted.
        l2 = movable[int(draw() * n_movable)]
        m2 = k if l2 == l else assign[l2]
        bs2 = link_bs[l2]
        tmp_bs = None
        if bs2 is not None:
            tmp_bs = [slot_bs[c] for c in range(n_slots)]
            if link_bs[l] is not None:
                tmp_bs[m] = slot_bs[m] - {link_bs[l]}
                tmp_bs[k] = slot_bs[k] | {link_bs[l]}
            targets2 = [c for c in range(n_slots) if c != m2 and bs2 not in tmp_bs[c]]
        else:
            targets2 = [c for c in range(n_slots) if c != m2]
        if not targets2:
            continue
        k2 = targets2[int(draw() * len(targets2))]
        tmp_members = {m: src, k: dst}
        src2 = tmp_members.get(m2, members[m2]).copy()
        src2.remove(l2)
        dst2 = tmp_members.get(k2, members[k2]).copy()
        bisect.insort(dst2, l2)
        tmp_values = values.copy()
        tmp_values[m], tmp_values[k] = new_src, new_dst
        v_src2, v_dst2 = value(src2), value(dst2)
        tmp_values[m2], tmp_values[k2] = v_src2, v_dst2
        total = 0.0
        for v in tmp_values:
            total += v
        if improves(total, state.total()):
            state.move(l, k, new_src, new_dst)
            state.move(l2, k2, v_src2, v_dst2)
            record("two_step")
            stall = 0

    return state.partition(initial), trace
