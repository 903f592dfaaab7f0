from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from cosmic_mu.const import SECONDS_PER_YEAR, SPEED_OF_LIGHT
from cosmic_mu.spacetime import (
    Boost,
    DilationScenario,
    FourEvent,
    Role,
    Separation,
    boost,
    classify,
    clock_separation,
    dilation_offset,
    gamma,
    in_future_lightcone,
    interval_squared,
    light_travel_time,
    pairwise_intervals,
    rapidity,
    timelike_crossover,
    velocity_from_doppler,
)

ORIGIN = FourEvent.at("o", 0.0, 0.0)


@pytest.mark.parametrize(
    "coords, expected",
    [((1, 0, 0, 0), -1.0), ((0, 1, 0, 0), 1.0), ((1, 1, 0, 0), 0.0)],
)
def test_interval_squared(coords, expected):
    assert interval_squared(ORIGIN, FourEvent("b", coords)) == expected


def test_interval_is_symmetric():
    a, b = FourEvent("a", (0.3, -1.2, 0.5, 2.0)), FourEvent("b", (1.7, 0.4, -0.1, 0.0))
    assert interval_squared(a, b) == interval_squared(b, a)


@pytest.mark.parametrize(
    "coords, expected",
    [
        ((1, 0, 0, 0), Separation.TIMELIKE),
        ((0, 1, 0, 0), Separation.SPACELIKE),
        ((1, 1, 0, 0), Separation.LIGHTLIKE),
    ],
)
def test_classify(coords, expected):
    assert classify(ORIGIN, FourEvent("b", coords), 1e-12) is expected


def test_classify_tolerance_band():
    # s² = 1e-15 is inside the band
    b = FourEvent.at("b", 1.0, math.sqrt(1.0 + 1e-15))
    assert classify(ORIGIN, b, 1e-12) is Separation.LIGHTLIKE


def test_classify_rejects_negative_tolerance():
    with pytest.raises(ValueError):
        classify(ORIGIN, ORIGIN, -1e-3)


def test_event_validation():
    with pytest.raises(ValueError):
        FourEvent("bad", (0.0, float("nan"), 0.0, 0.0))
    with pytest.raises(ValueError):
        FourEvent("short", (0.0, 1.0))
    e = FourEvent.at("A1", 1.0, -1.0, role="input")
    assert e.role is Role.INPUT
    assert e.is_measurement


def test_boost_identity():
    e = FourEvent.at("e", 0.7, -2.5, 1.0, 3.0)
    assert boost(e, 0.0).coords == e.coords


def test_boost_values():
    e = boost(FourEvent.at("e", 0.0, 1.0), Boost(0.5))
    assert e.t == pytest.approx(-0.5774, abs=1e-4)
    assert e.x == pytest.approx(1.1547, abs=1e-4)
    assert Boost(0.5).gamma == pytest.approx(1.1547, abs=1e-4)


def test_spacelike_order_is_frame_dependent():
    e1, e2 = FourEvent.at("e1", 0.0, 0.0), FourEvent.at("e2", 0.0, 1.0)
    assert boost(e2, 0.5).t < boost(e1, 0.5).t


def test_boost_rejects_superluminal():
    for v in (1.0, -1.0, 1.5, float("nan")):
        with pytest.raises(ValueError):
            Boost(v)


def test_boost_inverse_round_trip():
    e = FourEvent.at("e", 1.3, -0.4, 2.0, -1.0)
    back = boost(boost(e, 0.8), Boost(0.8).inverse)
    np.testing.assert_allclose(back.coords, e.coords, atol=1e-12)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_interval_invariance(seed):
    rng = np.random.default_rng(seed)
    for _ in range(200):
        a = FourEvent("a", tuple(rng.uniform(-5, 5, 4)))
        b = FourEvent("b", tuple(rng.uniform(-5, 5, 4)))
        v = rng.uniform(-0.99, 0.99)
        before = interval_squared(a, b)
        after = interval_squared(boost(a, v), boost(b, v))
        assert after == pytest.approx(before, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("seed", [4, 5])
def test_causal_order_invariance(seed):
    rng = np.random.default_rng(seed)
    for _ in range(200):
        a = FourEvent("a", tuple(rng.uniform(-5, 5, 4)))
        b = FourEvent("b", tuple(rng.uniform(-5, 5, 4)))
        if classify(a, b) is not Separation.TIMELIKE:
            continue
        v = rng.uniform(-0.99, 0.99)
        assert (b.t > a.t) == (boost(b, v).t > boost(a, v).t)


def test_in_future_lightcone():
    assert in_future_lightcone(ORIGIN, FourEvent.at("d", 2.0, 1.0))
    assert not in_future_lightcone(ORIGIN, FourEvent.at("d", 1.0, 2.0))
    assert not in_future_lightcone(ORIGIN, FourEvent.at("d", -1.0, 0.0))
    assert in_future_lightcone(ORIGIN, FourEvent.at("d", 1.0, 1.0))


def test_pairwise_intervals_matches_scalar():
    events = [FourEvent("e%d" % i, c) for i, c in enumerate([(0, 0, 0, 0), (1, 2, 0, 0), (3, -1, 1, 0)])]
    matrix = pairwise_intervals(np.array([e.coords for e in events]))
    for (i, a), (j, b) in itertools.product(enumerate(events), repeat=2):
        assert matrix[i, j] == pytest.approx(interval_squared(a, b))


def test_rapidity_and_doppler():
    assert gamma(0.6) == pytest.approx(1.25)
    assert math.exp(rapidity(0.6)) == pytest.approx(2.0)
    assert velocity_from_doppler(2.0) == pytest.approx(0.6)
    assert velocity_from_doppler(1.0) == 0.0
    with pytest.raises(ValueError):
        velocity_from_doppler(0.0)


@pytest.mark.parametrize(
    "g, h, t, expected",
    [(9.8, 10.0, 3.156e7, 3.44e-8), (9.8, 100.0, 1.0, 1.09e-14)],
)
def test_dilation_offset_examples(g, h, t, expected):
    assert dilation_offset(DilationScenario(g, h, t)) == pytest.approx(expected, rel=5e-3)


def test_dilation_offset_zero_height():
    assert dilation_offset(DilationScenario(9.8, 0.0, 3.156e7)) == 0.0


def test_dilation_linearity_grid():
    for g, h, t in itertools.product((1.0, 9.8, 24.8), (0.0, 10.0, 1000.0), (1.0, 3.6e3, 3.156e7)):
        c = SPEED_OF_LIGHT
        assert dilation_offset(DilationScenario(g, h, t)) == g * h * t / (c * c)


def test_dilation_scenario_validation():
    with pytest.raises(ValueError):
        DilationScenario(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        DilationScenario(9.8, -1.0, 1.0)
    with pytest.raises(ValueError):
        DilationScenario(9.8, 1.0, -1.0)


def test_timelike_crossover_is_about_a_year():
    t = timelike_crossover(9.8)
    assert t == pytest.approx(SPEED_OF_LIGHT / 9.8, rel=1e-6)
    assert t == pytest.approx(3.06e7, rel=2e-3)
    assert t / SECONDS_PER_YEAR == pytest.approx(0.97, abs=0.01)


def test_timelike_crossover_is_independent_of_height():
    assert timelike_crossover(9.8, 1.0) == timelike_crossover(9.8, 1000.0)


def test_timelike_crossover_halves_with_doubled_gravity():
    assert timelike_crossover(19.6) == pytest.approx(1.53e7, rel=2e-3)
    with pytest.raises(ValueError):
        timelike_crossover(0.0)


def test_light_travel_time():
    assert light_travel_time(SPEED_OF_LIGHT) == 1.0


def test_clock_separation_changes_at_crossover():
    crossover = timelike_crossover(9.8)
    assert clock_separation(DilationScenario(9.8, 10.0, 0.5 * crossover)) is Separation.SPACELIKE
    assert clock_separation(DilationScenario(9.8, 10.0, 2.0 * crossover)) is Separation.TIMELIKE
    assert clock_separation(DilationScenario(9.8, 0.0, crossover)) is Separation.LIGHTLIKE
