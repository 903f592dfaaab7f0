from __future__ import annotations

import math

import numpy as np
import pytest

from cosmic_mu.causal_harness import build_bell, build_double_bell, default_velocity
from cosmic_mu.measurement_field import InitialData, Perturbation, cover, window_for


@pytest.fixture
def bell_layout():
    return build_bell(1.0, 0.5)


@pytest.fixture
def double_bell():
    return build_double_bell(1.0, 0.5)


@pytest.fixture
def double_bell_mirrored():
    return build_double_bell(1.0, 0.5, velocity=-default_velocity(1.0, 0.5))


@pytest.fixture(scope="session")
def uniform_double_bell_history():
    layout, _ = build_double_bell(1.0, 0.5)
    return cover(window_for(layout.events, 1.0), InitialData(1.0), 64)


@pytest.fixture(scope="session")
def perturbed_double_bell_history():
    layout, _ = build_double_bell(1.0, 0.5)
    window = window_for(layout.events, 1.0)
    box = window.upper[0] - window.lower[0]
    data = InitialData(1.0, 0.0, Perturbation(0.05, (2 * math.pi / box,), "mu_dot"))
    return cover(window, data, 64)


def random_double_bell_geometry(rng: np.random.Generator) -> dict:
    """Arm length, delay and a velocity beyond the minimum Doppler factor, either sign."""
    L = rng.uniform(0.5, 2.0)
    d = rng.uniform(0.1, 1.5) * L
    k_min = (2 * L + d) / (2 * L - d)
    k = k_min * rng.uniform(1.2, 3.0)
    v = (k * k - 1) / (k * k + 1)
    return {"L": L, "d": d, "velocity": v if rng.random() < 0.5 else -v}
