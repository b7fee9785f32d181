import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from mmwave_cg.channel import (Beam, DomainError, RadioParams, dbm_per_mhz_to_watts_per_hz,
                               directional_gain, interference_power, link_gains, link_rate,
                               pattern_from_beamwidth, received_power, sinr, watts_to_dbm)
from mmwave_cg.scenario import Point2D

from helpers import build_scenario

HPBW = math.radians(30)
PATTERN = pattern_from_beamwidth(HPBW)
ORIGIN = Point2D(0.0, 0.0)


def test_g0_30deg():
    # mpmath: (1.6162 / sin 15deg)^2
    assert_allclose(PATTERN.max_gain, 38.99399608261854, rtol=1e-12)
    assert_allclose(10 * math.log10(PATTERN.max_gain), 15.90997743720997, rtol=1e-12)
    assert_allclose(PATTERN.side_lobe_gain, 0.06342738048338171, rtol=1e-12)


def test_boresight_and_half_power():
    assert PATTERN.gain(0.0) == PATTERN.max_gain
    assert_allclose(PATTERN.gain(HPBW / 2), PATTERN.max_gain / 2, rtol=1e-12)
    assert_allclose(PATTERN.gain(-HPBW / 2), PATTERN.max_gain / 2, rtol=1e-12)


@pytest.mark.parametrize("bad", [0.0, -0.1, math.pi, 4.0, 2.5])
def test_beamwidth_domain(bad):
    with pytest.raises(DomainError):
        pattern_from_beamwidth(bad)


def test_directional_gain_cases():
    beam = Beam.toward(ORIGIN, Point2D(10, 0))
    assert directional_gain(PATTERN, beam, Point2D(5, 0)) == PATTERN.max_gain
    assert directional_gain(PATTERN, beam, Point2D(-5, 0)) == PATTERN.side_lobe_gain
    edge = PATTERN.main_lobe_width / 2
    at_edge = PATTERN.gain(edge)
    assert at_edge == pytest.approx(PATTERN.max_gain * 2 ** -((2 * edge / HPBW) ** 2), rel=1e-12)
    assert at_edge > PATTERN.side_lobe_gain
    assert PATTERN.gain(edge * (1 + 1e-9)) == PATTERN.side_lobe_gain
    with pytest.raises(DomainError):
        directional_gain(PATTERN, beam, ORIGIN)


@given(st.floats(-10, 10))
def test_gain_bounded_and_symmetric(offset):
    g = PATTERN.gain(offset)
    assert PATTERN.side_lobe_gain <= g <= PATTERN.max_gain
    assert g == PATTERN.gain(-offset)


def test_gain_decreasing_in_main_lobe():
    offsets = np.linspace(0, PATTERN.main_lobe_width / 2, 200)
    gains = [PATTERN.gain(o) for o in offsets]
    assert all(b < a for a, b in zip(gains, gains[1:]))


def test_received_power():
    p = RadioParams(carrier_wavelength=0.005)
    assert received_power(p, 1, 1, 1) == pytest.approx(p.k0 * p.tx_power_watts, rel=1e-15)
    assert_allclose(received_power(p, 1, 1, 1), 1.5831434944115277e-07, rtol=1e-12)
    assert_allclose(received_power(p, 3, 2, 8) / received_power(p, 3, 2, 16), 4.0, rtol=1e-12)
    with pytest.raises(DomainError):
        received_power(p, 1, 1, 0.0)


@given(st.floats(0.1, 500), st.floats(1.0001, 10))
def test_received_power_decreasing(d, factor):
    p = RadioParams()
    assert received_power(p, 2, 2, d * factor) < received_power(p, 2, 2, d)


def test_table1_power_within_tx_power():
    p = RadioParams()
    g = p.ue_pattern.max_gain * p.bs_pattern.max_gain
    for d in (5.0, 50.0, 200.0):
        assert 0 < received_power(p, g, g, d) <= p.tx_power_watts


def test_interference_zero_mui():
    p = RadioParams(mui_factor=0.0)
    i = interference_power(p, Beam.toward(ORIGIN, Point2D(1, 0)), Point2D(1, 1),
                           Beam.toward(Point2D(1, 1), Point2D(5, 5)), PATTERN, PATTERN)
    assert i == 0.0


def test_interference_worst_case_alignment():
    p = RadioParams()
    victim = Point2D(7, 0)
    i = interference_power(p, Beam.toward(ORIGIN, victim), victim, Beam.toward(victim, ORIGIN),
                           PATTERN, PATTERN)
    assert i == pytest.approx(received_power(p, PATTERN.max_gain, PATTERN.max_gain, 7.0), rel=1e-12)


def test_interference_generic_geometry():
    # Interferer (0,0)->(10,0), victim (0,3)->(10,2); values from an mpmath script.
    p = RadioParams(mui_factor=0.7)
    u, v, i_tx, j = Point2D(0, 0), Point2D(10, 0), Point2D(0, 3), Point2D(10, 2)
    got = interference_power(p, Beam.toward(u, v), j, Beam.toward(j, i_tx), PATTERN, PATTERN)
    assert_allclose(got, 4.469412934184703e-07, rtol=1e-10)


def test_noise_power_table1():
    p = RadioParams(noise_psd=dbm_per_mhz_to_watts_per_hz(-134), subchannel_bandwidth_hz=540e6)
    assert_allclose(p.noise_power, 2.149778720988885e-14, rtol=1e-12)
    assert_allclose(watts_to_dbm(p.noise_power), -106.67606240177031, rtol=1e-12)


def test_sinr_and_rate():
    p = RadioParams(transceiver_efficiency=0.5, subchannel_bandwidth_hz=540e6)
    assert sinr(p.noise_power, 0.0, p) == pytest.approx(1.0, rel=1e-15)
    assert link_rate(1.0, p) == pytest.approx(270e6, rel=1e-15)
    assert link_rate(3.0, p) == pytest.approx(2 * 0.5 * 540e6, rel=1e-15)
    assert link_rate(0.0, p) == 0.0


@given(st.floats(0, 1e-6), st.floats(0, 1e-6), st.floats(1e-12, 1e-3))
def test_sinr_monotone(i1, i2, s):
    p = RadioParams()
    lo, hi = sorted((i1, i2))
    assert sinr(s, hi, p) <= sinr(s, lo, p)
    assert link_rate(sinr(s, hi, p), p) <= link_rate(sinr(s, lo, p), p)


def test_sinr_vanishes():
    p = RadioParams()
    values = [sinr(1e-6, x, p) for x in (1e-9, 1e-3, 1e3, 1e12)]
    assert all(b < a for a, b in zip(values, values[1:])) and values[-1] < 1e-17


@pytest.mark.parametrize("field,value", [("tx_power_watts", 0.0), ("mui_factor", -0.1),
                                         ("transceiver_efficiency", 1.5), ("noise_psd", -1.0)])
def test_radio_params_invariants(field, value):
    with pytest.raises(DomainError):
        RadioParams(**{field: value})


def test_link_gains_matrix():
    s = build_scenario(2, base_stations=[(0, 0)], access=[((30, 0), 0)], d2d=[((5, 3), (8, 3))])
    p = RadioParams()
    g = link_gains(s, p)
    assert g.cross[0, 0] == g.cross[1, 1] == 0.0
    g0 = PATTERN.max_gain
    assert g.signal[1] == pytest.approx(received_power(p, g0, g0, 3.0), rel=1e-14)
    assert np.all(g.cross >= 0)
