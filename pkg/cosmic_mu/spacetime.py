"""
Flat-spacetime kernel: intervals, light cones, boosts along the layout axis.

Natural units (c = 1) throughout, metric signature (-+++). SI values only enter
through :class:`DilationScenario`, which carries its own speed of light.

:copyright: (c) 2025-2026 by the cosmic-mu developers.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import StrEnum

import numpy as np

from cosmic_mu.const import INTERVAL_TOLERANCE, SPEED_OF_LIGHT

_LOG = logging.getLogger(__name__)


class Role(StrEnum):
    """What an event does in an experiment."""

    INPUT = "input"
    OUTPUT = "output"
    SOURCE = "source"
    NONE = "none"


class Separation(StrEnum):
    TIMELIKE = "timelike"
    SPACELIKE = "spacelike"
    LIGHTLIKE = "lightlike"


@dataclass(frozen=True)
class FourEvent:
    """A labelled spacetime point (t, x, y, z)."""

    id: str
    coords: tuple[float, float, float, float]
    role: Role = Role.NONE

    def __post_init__(self) -> None:
        coords = tuple(float(c) for c in self.coords)
        if len(coords) != 4:
            raise ValueError(f"Event {self.id}: expected 4 coordinates, got {len(coords)}")
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"Event {self.id}: coordinates must be finite, got {coords}")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "role", Role(self.role))

    @classmethod
    def at(
        cls, event_id: str, t: float, x: float, y: float = 0.0, z: float = 0.0,
        role: Role | str = Role.NONE,
    ) -> FourEvent:
        return cls(event_id, (t, x, y, z), Role(role))

    @property
    def t(self) -> float:
        return self.coords[0]

    @property
    def x(self) -> float:
        return self.coords[1]

    @property
    def y(self) -> float:
        return self.coords[2]

    @property
    def z(self) -> float:
        return self.coords[3]

    @property
    def is_measurement(self) -> bool:
        return self.role in (Role.INPUT, Role.OUTPUT)

    def moved(self, coords: tuple[float, float, float, float]) -> FourEvent:
        return replace(self, coords=coords)

    def boosted(self, velocity: float) -> FourEvent:
        return boost(self, Boost(velocity))


@dataclass(frozen=True)
class Boost:
    """Lorentz boost along the shared x axis of a layout."""

    velocity: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.velocity) or abs(self.velocity) >= 1.0:
            raise ValueError(f"Boost velocity must satisfy |v| < 1, got {self.velocity}")

    @property
    def gamma(self) -> float:
        return gamma(self.velocity)

    @property
    def inverse(self) -> Boost:
        return Boost(-self.velocity)


@dataclass(frozen=True)
class DilationScenario:
    """Two clocks at rest near the Earth's surface, one a height ``h`` above the other."""

    g: float
    h: float
    t: float
    c: float = field(default=SPEED_OF_LIGHT)

    def __post_init__(self) -> None:
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.h < 0:
            raise ValueError(f"h must be non-negative, got {self.h}")
        if self.t < 0:
            raise ValueError(f"t must be non-negative, got {self.t}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")


def gamma(velocity: float) -> float:
    if abs(velocity) >= 1.0:
        raise ValueError(f"|v| must be < 1, got {velocity}")
    return 1.0 / math.sqrt(1.0 - velocity * velocity)


def rapidity(velocity: float) -> float:
    if abs(velocity) >= 1.0:
        raise ValueError(f"|v| must be < 1, got {velocity}")
    return math.atanh(velocity)


def velocity_from_doppler(factor: float) -> float:
    """Velocity whose light-cone scale factor exp(rapidity) equals ``factor``."""
    if not factor > 0:
        raise ValueError(f"Doppler factor must be positive, got {factor}")
    return math.tanh(math.log(factor))


def interval_squared(a: FourEvent, b: FourEvent) -> float:
    dt, dx, dy, dz = (bc - ac for ac, bc in zip(a.coords, b.coords))
    return -dt * dt + dx * dx + dy * dy + dz * dz


def classify(a: FourEvent, b: FourEvent, tol: float = INTERVAL_TOLERANCE) -> Separation:
    if tol < 0:
        raise ValueError(f"Tolerance must be non-negative, got {tol}")
    return _classify_interval(interval_squared(a, b), tol)


def _classify_interval(s2: float, tol: float) -> Separation:
    if abs(s2) <= tol:
        return Separation.LIGHTLIKE
    if s2 < -tol:
        return Separation.TIMELIKE
    return Separation.SPACELIKE


def boost(e: FourEvent, b: Boost | float) -> FourEvent:
    if not isinstance(b, Boost):
        b = Boost(b)
    v, g = b.velocity, b.gamma
    t, x, y, z = e.coords
    return e.moved((g * (t - v * x), g * (x - v * t), y, z))


def in_future_lightcone(src: FourEvent, dst: FourEvent, tol: float = INTERVAL_TOLERANCE) -> bool:
    return interval_squared(src, dst) <= tol and dst.t > src.t


def pairwise_intervals(coords: np.ndarray, other: np.ndarray | None = None) -> np.ndarray:
    """Matrix of s² between rows of an (N, 4) array and rows of ``other`` (default: itself)."""
    coords = np.asarray(coords, dtype=float)
    other = coords if other is None else np.asarray(other, dtype=float)
    diff = coords[:, None, :] - other[None, :, :]
    return -diff[..., 0] ** 2 + np.sum(diff[..., 1:] ** 2, axis=-1)


# -- Weak-field clocks -----------------------------------------------------------


def dilation_offset(s: DilationScenario) -> float:
    """Reading difference Δt = g·h·t / c² accumulated by the two clocks."""
    return s.g * s.h * s.t / (s.c * s.c)


def light_travel_time(h: float, c: float = SPEED_OF_LIGHT) -> float:
    return h / c


def timelike_crossover(g: float, h: float | None = None, c: float = SPEED_OF_LIGHT) -> float:
    """Elapsed time t = c/g after which the clocks' "simultaneous" events are timelike.

    ``h`` is accepted for symmetry with :func:`dilation_offset`; the result does not use it.
    """
    if not g > 0:
        raise ValueError(f"g must be positive, got {g}")
    if h is not None and h < 0:
        raise ValueError(f"h must be non-negative, got {h}")
    return c / g


def clock_separation(s: DilationScenario, tol: float = INTERVAL_TOLERANCE) -> Separation:
    """Classify the pair of events the two clocks both label with the same reading at ``s.t``.

    The events sit ``h`` apart in space and ``dilation_offset`` apart in coordinate time. Both
    are expressed in metres relative to the lower one, which keeps the interval well conditioned.
    """
    lower = FourEvent.at("lower", 0.0, 0.0)
    upper = FourEvent.at("upper", s.c * dilation_offset(s), s.h)
    scale = max(s.h * s.h, 1.0)
    result = classify(lower, upper, tol * scale)
    _LOG.debug("Clock pair at t=%g s (h=%g m): %s", s.t, s.h, result)
    return result
