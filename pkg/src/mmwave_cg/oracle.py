"""Exhaustive optimum for tiny instances.

Deliberately shares no code with ``channel`` or ``game``: the antenna model,
powers and rates are re-derived here in plain scalar form so the oracle can
catch bugs in the main path.
"""

from __future__ import annotations

import itertools
import math

from .scenario import InfeasibleScenario, NodeKind, Scenario

DEFAULT_BUDGET = 10_000_000


class InstanceTooLarge(ValueError):
    pass


def _gain(hpbw: float, offset: float) -> float:
    g0 = (1.6162 / math.sin(hpbw / 2)) ** 2
    floor = min(10 ** ((-0.4111 * math.log(hpbw * 180 / math.pi) - 10.579) / 10), g0)
    off = abs(math.atan2(math.sin(offset), math.cos(offset)))
    if off > 1.3 * hpbw:
        return floor
    return max(floor, g0 * 2 ** (-((2 * off / hpbw) ** 2)))


def _xy(scenario: Scenario, ref):
    pool = scenario.base_stations if ref.kind is NodeKind.BS else scenario.users
    return pool[ref.id].position


def _powers(scenario: Scenario, params):
    """(signal[v], interference[u][v]) in watts."""
    k0 = (params.carrier_wavelength / (4 * math.pi)) ** 2
    pt, n, rho = params.tx_power_watts, params.path_loss_exponent, params.mui_factor
    ends = []
    for link in scenario.links:
        tx, rx = _xy(scenario, link.tx_node), _xy(scenario, link.rx_node)
        rx_bw = params.bs_beamwidth if link.rx_node.kind is NodeKind.BS else params.ue_beamwidth
        ends.append((tx, rx, rx_bw))
    signal = []
    interference = [[0.0] * len(ends) for _ in ends]
    for v, (tx, rx, rx_bw) in enumerate(ends):
        d = math.hypot(rx[0] - tx[0], rx[1] - tx[1])
        signal.append(k0 * _gain(params.ue_beamwidth, 0) * _gain(rx_bw, 0) * d ** -n * pt)
        rx_aim = math.atan2(tx[1] - rx[1], tx[0] - rx[0])
        for u, (utx, urx, _) in enumerate(ends):
            if u == v:
                continue
            u_aim = math.atan2(urx[1] - utx[1], urx[0] - utx[0])
            to_victim = math.atan2(rx[1] - utx[1], rx[0] - utx[0])
            to_interferer = math.atan2(utx[1] - rx[1], utx[0] - rx[0])
            gt = _gain(params.ue_beamwidth, to_victim - u_aim)
            gr = _gain(rx_bw, to_interferer - rx_aim)
            d_uv = math.hypot(rx[0] - utx[0], rx[1] - utx[1])
            interference[u][v] = rho * k0 * gt * gr * d_uv ** -n * pt
    return signal, interference


def assignment_utility(scenario: Scenario, params, assignment) -> float:
    signal, interference = _powers(scenario, params)
    return _utility(assignment, signal, interference, params)


def _utility(assignment, signal, interference, params) -> float:
    noise = params.noise_psd * params.subchannel_bandwidth_hz
    total = 0.0
    for v, c in enumerate(assignment):
        i_sum = sum(interference[u][v] for u, cu in enumerate(assignment) if cu == c and u != v)
        total += params.transceiver_efficiency * params.subchannel_bandwidth_hz * math.log2(
            1 + signal[v] / (noise + i_sum))
    return total


def brute_force_assignment(scenario: Scenario, params, budget: int = DEFAULT_BUDGET):
    """Best feasible slot vector and its sum rate; ties go to the lexicographically smallest."""
    n_links, n_slots = len(scenario.links), scenario.num_subchannels
    if n_slots ** n_links > budget:
        raise InstanceTooLarge(f"{n_slots}^{n_links} assignments exceed the budget of {budget}")
    signal, interference = _powers(scenario, params)
    bs = [link.bs_id for link in scenario.links]
    best, best_value = None, -math.inf
    for assignment in itertools.product(range(n_slots), repeat=n_links):
        used = set()
        ok = True
        for link, c in enumerate(assignment):
            if bs[link] is not None:
                if (bs[link], c) in used:
                    ok = False
                    break
                used.add((bs[link], c))
        if not ok:
            continue
        value = _utility(assignment, signal, interference, params)
        if value > best_value:
            best, best_value = assignment, value
    if best is None:
        raise InfeasibleScenario("no feasible assignment exists")
    return best, best_value
