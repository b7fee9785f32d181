"""Directional mmWave link budget: antenna patterns, powers, SINR and rate.

All quantities are linear SI units (W, Hz, m, rad). dB/dBm helpers exist for
config parsing only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .scenario import Point2D, Scenario

TWO_PI = 2.0 * math.pi
SPEED_OF_LIGHT = 299_792_458.0
# Exact half-power level so the pattern hits G0/2 at offset HPBW/2.
HALF_POWER_DB = 10.0 * math.log10(2.0)
MAIN_LOBE_FACTOR = 2.6


class DomainError(ValueError):
    """Input outside the domain of a physical-layer formula."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w) + 30.0


def dbm_per_mhz_to_watts_per_hz(dbm_per_mhz: float) -> float:
    return dbm_to_watts(dbm_per_mhz) / 1e6


def wavelength_from_ghz(freq_ghz: float) -> float:
    return SPEED_OF_LIGHT / (freq_ghz * 1e9)


@dataclass(frozen=True)
class AntennaPattern:
    """Gaussian main lobe (linear scale) with a flat side-lobe floor."""

    half_power_beamwidth: float
    main_lobe_width: float
    max_gain: float
    side_lobe_gain: float

    def __post_init__(self):
        if not 0.0 < self.main_lobe_width < TWO_PI:
            raise DomainError(f"main lobe width {self.main_lobe_width} outside (0, 2pi)")
        if not self.max_gain >= self.side_lobe_gain > 0.0:
            raise DomainError("need max_gain >= side_lobe_gain > 0")

    def gain(self, offset: float) -> float:
        """Linear gain at an angular offset (radians) from boresight."""
        off = abs(wrap_angle(abs(offset)))  # fold first: exact symmetry
        if off <= 0.5 * self.main_lobe_width:
            g = self.max_gain * 10.0 ** (
                -HALF_POWER_DB / 10.0 * (2.0 * off / self.half_power_beamwidth) ** 2)
            # Wide beams can dip below the floor at the lobe edge.
            return max(g, self.side_lobe_gain)
        return self.side_lobe_gain


def pattern_from_beamwidth(hpbw: float) -> AntennaPattern:
    """802.15.3c-style pattern for a half-power beamwidth in radians.

    Side-lobe level uses the beamwidth in degrees, as in the standard's
    reference model.
    """
    if not 0.0 < hpbw < math.pi:
        raise DomainError(f"half-power beamwidth {hpbw} rad outside (0, pi)")
    main_lobe = MAIN_LOBE_FACTOR * hpbw
    if main_lobe >= TWO_PI:
        raise DomainError(f"half-power beamwidth {hpbw} rad gives a main lobe >= 2pi")
    g0 = (1.6162 / math.sin(hpbw / 2.0)) ** 2
    sl_db = -0.4111 * math.log(math.degrees(hpbw)) - 10.579
    return AntennaPattern(
        half_power_beamwidth=hpbw,
        main_lobe_width=main_lobe,
        max_gain=g0,
        side_lobe_gain=min(db_to_linear(sl_db), g0),
    )


def wrap_angle(a: float) -> float:
    """Map an angle to [-pi, pi)."""
    return (a + math.pi) % TWO_PI - math.pi


def bearing(src: Point2D, dst: Point2D) -> float:
    """Angle of the vector src -> dst in [0, 2pi)."""
    if src.x == dst.x and src.y == dst.y:
        raise DomainError("bearing between coincident points")
    return math.atan2(dst.y - src.y, dst.x - src.x) % TWO_PI


@dataclass(frozen=True)
class Beam:
    owner_position: Point2D
    boresight_angle: float

    def __post_init__(self):
        object.__setattr__(self, "boresight_angle", self.boresight_angle % TWO_PI)

    @classmethod
    def toward(cls, owner: Point2D, target: Point2D) -> "Beam":
        return cls(owner, bearing(owner, target))


def directional_gain(pattern: AntennaPattern, beam: Beam, target: Point2D) -> float:
    return pattern.gain(bearing(beam.owner_position, target) - beam.boresight_angle)


@dataclass(frozen=True)
class RadioParams:
    """Physical-layer constants. Beamwidths are per node class, in radians."""

    tx_power_watts: float = 1.0
    path_loss_exponent: float = 2.0
    carrier_wavelength: float = wavelength_from_ghz(60.0)
    mui_factor: float = 1.0
    noise_psd: float = dbm_per_mhz_to_watts_per_hz(-134.0)
    subchannel_bandwidth_hz: float = 540e6
    transceiver_efficiency: float = 0.5
    bs_beamwidth: float = math.radians(30.0)
    ue_beamwidth: float = math.radians(30.0)
    bs_pattern: AntennaPattern = field(init=False, repr=False, compare=False)
    ue_pattern: AntennaPattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        positive = ("tx_power_watts", "path_loss_exponent", "carrier_wavelength",
                    "noise_psd", "subchannel_bandwidth_hz", "transceiver_efficiency")
        for name in positive:
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError(f"{name} must be finite and > 0, got {v}")
        if not 0.0 <= self.mui_factor <= 1.0:
            raise DomainError(f"mui_factor must lie in [0, 1], got {self.mui_factor}")
        if self.transceiver_efficiency > 1.0:
            raise DomainError("transceiver_efficiency must be <= 1")
        object.__setattr__(self, "bs_pattern", pattern_from_beamwidth(self.bs_beamwidth))
        object.__setattr__(self, "ue_pattern", pattern_from_beamwidth(self.ue_beamwidth))

    @property
    def k0(self) -> float:
        return (self.carrier_wavelength / (4.0 * math.pi)) ** 2

    @property
    def noise_power(self) -> float:
        return self.noise_psd * self.subchannel_bandwidth_hz


def received_power(params: RadioParams, gt: float, gr: float, distance: float) -> float:
    if not distance > 0.0:
        raise DomainError(f"distance must be > 0, got {distance}")
    return params.k0 * gt * gr * distance ** (-params.path_loss_exponent) * params.tx_power_watts


def interference_power(params: RadioParams, interferer_beam: Beam, victim_rx: Point2D,
                       victim_rx_beam: Beam, tx_pattern: AntennaPattern,
                       rx_pattern: AntennaPattern) -> float:
    """Power leaking from an interferer into a victim receiver.

    The interferer keeps its beam on its own receiver and the victim keeps
    its beam on its own transmitter; both gains are read off-boresight.
    """
    src = interferer_beam.owner_position
    gt = directional_gain(tx_pattern, interferer_beam, victim_rx)
    gr = directional_gain(rx_pattern, victim_rx_beam, src)
    return params.mui_factor * received_power(params, gt, gr, math.dist(src, victim_rx))


def sinr(signal_watts: float, interference_sum_watts: float, params: RadioParams) -> float:
    return signal_watts / (params.noise_power + interference_sum_watts)


def link_rate(sinr_value: float, params: RadioParams) -> float:
    """Shannon rate in bit/s on one sub-channel."""
    return params.transceiver_efficiency * params.subchannel_bandwidth_hz * math.log2(1.0 + sinr_value)


@dataclass(frozen=True, eq=False)
class LinkGains:
    """Per-scenario powers: ``signal[v]`` and ``cross[u, v]`` (u's tx into v's rx)."""

    signal: np.ndarray
    cross: np.ndarray

    @property
    def num_links(self) -> int:
        return len(self.signal)


def link_beams(scenario: Scenario, params: RadioParams, link_id: int):
    """(tx beam, rx beam, tx pattern, rx pattern) of a link, endpoints facing each other."""
    link = scenario.links[link_id]
    tx = scenario.position(link.tx_node)
    rx = scenario.position(link.rx_node)
    rx_pattern = params.bs_pattern if link.bs_id is not None else params.ue_pattern
    return Beam.toward(tx, rx), Beam.toward(rx, tx), params.ue_pattern, rx_pattern


@lru_cache(maxsize=64)
def link_gains(scenario: Scenario, params: RadioParams) -> LinkGains:
    n = len(scenario.links)
    beams = [link_beams(scenario, params, i) for i in range(n)]
    signal = np.empty(n)
    cross = np.zeros((n, n))
    for v, (txb, rxb, txp, rxp) in enumerate(beams):
        d = math.dist(txb.owner_position, rxb.owner_position)
        signal[v] = received_power(params, txp.max_gain, rxp.max_gain, d)
        for u, (itxb, _, itxp, _) in enumerate(beams):
            if u != v:
                cross[u, v] = interference_power(params, itxb, rxb.owner_position, rxb, itxp, rxp)
    signal.flags.writeable = False
    cross.flags.writeable = False
    return LinkGains(signal, cross)
