"""
Measurement field μ: massless Klein-Gordon evolution on a periodic grid.

The field starts from the homogeneous solution μ = a·t + t0 plus an optional
small plane-wave perturbation, is advanced by velocity-Verlet leapfrog, and is
then read back three ways: sampled at events, checked for a timelike gradient,
and cut into constant-μ surfaces.

An expansion-damped variant (μ̈ + 3Hμ̇ − ∇²μ/a² = 0) would slot in as another
``step`` implementation; only the flat-space equation is built here.

:copyright: (c) 2025-2026 by the cosmic-mu developers.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from typing import overload

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from cosmic_mu.const import (
    CFL_SLACK,
    DEFAULT_CFL_FRACTION,
    DEFAULT_PERTURBATION_BOUND,
    DEFAULT_TIMELIKE_MARGIN,
    INTERVAL_TOLERANCE,
    MIN_GRID_POINTS,
)
from cosmic_mu.spacetime import FourEvent, Role, pairwise_intervals

_LOG = logging.getLogger(__name__)


class CFLError(ValueError):
    """Time step too large for the explicit scheme."""


class FieldWindowError(ValueError):
    """An event outside the simulated box or time span."""


class FoliationError(ValueError):
    """A level value the simulated field never reaches everywhere."""


class NotTimelikeError(FoliationError):
    """The field gradient is not timelike across the window."""


class Target(StrEnum):
    MU = "mu"
    MU_DOT = "mu_dot"


# -- Value types -----------------------------------------------------------------


@dataclass(frozen=True)
class Perturbation:
    """Plane wave ε·cos(k·x + φ) added to μ or to ∂μ/∂t at the start."""

    amplitude: float
    wavevector: tuple[float, ...]
    target: Target = Target.MU
    phase: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "wavevector", tuple(float(k) for k in self.wavevector))
        object.__setattr__(self, "target", Target(self.target))

    def profile(self, mesh: Sequence[np.ndarray]) -> np.ndarray:
        if len(mesh) != len(self.wavevector):
            raise ValueError(
                f"Wavevector has {len(self.wavevector)} components for a {len(mesh)}-d grid"
            )
        arg = sum(k * x for k, x in zip(self.wavevector, mesh)) + self.phase
        return self.amplitude * np.cos(arg)


@dataclass(frozen=True)
class InitialData:
    a: float
    t0: float = 0.0
    perturbation: Perturbation | None = None
    max_relative_perturbation: float = DEFAULT_PERTURBATION_BOUND

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ValueError(f"Growth rate a must be positive (μ increases with cosmic time), got {self.a}")
        if self.perturbation is not None:
            bound = self.max_relative_perturbation * self.a
            if abs(self.perturbation.amplitude) > bound:
                raise ValueError(
                    f"Perturbation amplitude {self.perturbation.amplitude} exceeds the bound {bound}"
                )


@dataclass(frozen=True)
class GridSpec:
    points: tuple[int, ...]
    dx: float
    origin: tuple[float, ...] | None = None
    t_start: float = 0.0

    def __post_init__(self) -> None:
        points = tuple(int(n) for n in self.points)
        if len(points) not in (1, 2):
            raise ValueError(f"Only 1 or 2 spatial dimensions are supported, got {len(points)}")
        if any(n < MIN_GRID_POINTS for n in points):
            raise ValueError(f"Need at least {MIN_GRID_POINTS} points per dimension, got {points}")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        origin = self.origin if self.origin is not None else (0.0,) * len(points)
        if len(origin) != len(points):
            raise ValueError("origin and points must have the same dimension")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "origin", tuple(float(o) for o in origin))

    @property
    def dimensions(self) -> int:
        return len(self.points)

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(n * self.dx for n in self.points)

    def max_dt(self) -> float:
        return self.dx / math.sqrt(self.dimensions)


@dataclass(frozen=True, eq=False)
class FieldState:
    """Snapshot of μ and ∂μ/∂t on the grid at one time."""

    mu: np.ndarray
    mu_dot: np.ndarray
    time: float
    dx: float
    origin: tuple[float, ...] | None = None
    boundary: str = "periodic"

    def __post_init__(self) -> None:
        mu = np.array(self.mu, dtype=float)
        mu_dot = np.array(self.mu_dot, dtype=float)
        if mu.shape != mu_dot.shape:
            raise ValueError(f"mu {mu.shape} and mu_dot {mu_dot.shape} differ in shape")
        if mu.ndim not in (1, 2):
            raise ValueError(f"Field must be 1- or 2-dimensional, got {mu.ndim}")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(mu_dot))):
            raise ValueError("Field contains non-finite values")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        if self.boundary != "periodic":
            raise ValueError(f"Unsupported boundary {self.boundary!r}")
        origin = self.origin if self.origin is not None else (0.0,) * mu.ndim
        mu.setflags(write=False)
        mu_dot.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "mu_dot", mu_dot)
        object.__setattr__(self, "origin", tuple(float(o) for o in origin))

    @property
    def dimensions(self) -> int:
        return self.mu.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.mu.shape

    def axes(self) -> list[np.ndarray]:
        return [o + self.dx * np.arange(n) for o, n in zip(self.origin, self.shape)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")


# -- Evolution -------------------------------------------------------------------


def init(data: InitialData, grid: GridSpec) -> FieldState:
    mesh = np.meshgrid(
        *[o + grid.dx * np.arange(n) for o, n in zip(grid.origin, grid.points)], indexing="ij"
    )
    mu = np.full(grid.points, data.a * grid.t_start + data.t0)
    mu_dot = np.full(grid.points, data.a)
    if data.perturbation is not None:
        bump = data.perturbation.profile(mesh)
        if data.perturbation.target is Target.MU:
            mu = mu + bump
        else:
            mu_dot = mu_dot + bump
    return FieldState(mu, mu_dot, grid.t_start, grid.dx, grid.origin)


def laplacian(mu: np.ndarray, dx: float) -> np.ndarray:
    result = np.zeros_like(mu)
    for axis in range(mu.ndim):
        result += np.roll(mu, 1, axis) + np.roll(mu, -1, axis) - 2.0 * mu
    return result / (dx * dx)


def step(s: FieldState, dt: float) -> FieldState:
    """One velocity-Verlet step of (∂²/∂t² − ∇²)μ = 0."""
    limit = s.dx / math.sqrt(s.dimensions)
    if not 0 < dt <= limit * (1.0 + CFL_SLACK):
        raise CFLError(f"dt={dt} violates the CFL limit dx/sqrt(d)={limit}")
    half = s.mu_dot + 0.5 * dt * laplacian(s.mu, s.dx)
    mu = s.mu + dt * half
    mu_dot = half + 0.5 * dt * laplacian(mu, s.dx)
    return FieldState(mu, mu_dot, s.time + dt, s.dx, s.origin)


def evolve(s: FieldState, dt: float, steps: int, save_every: int = 1) -> FieldHistory:
    if steps < 1 or save_every < 1:
        raise ValueError(f"steps and save_every must be >= 1, got {steps}, {save_every}")
    snapshots = [s]
    current = s
    for n in range(1, steps + 1):
        current = step(current, dt)
        if n % save_every == 0 or n == steps:
            snapshots.append(current)
    _LOG.debug("Evolved %d steps of dt=%g to t=%g (%d snapshots)", steps, dt, current.time, len(snapshots))
    return FieldHistory(snapshots)


def energy(s: FieldState, dt: float | None = None) -> float:
    """Discrete energy of the zero-mean part of the field.

    With ``dt`` the leapfrog shadow term −(dt²/8)Σ(∇²μ)² is included; that quantity is
    invariant under :func:`step` up to round-off.
    """
    velocity = s.mu_dot - np.mean(s.mu_dot)
    gradient = sum(
        ((np.roll(s.mu, -1, axis) - s.mu) / s.dx) ** 2 for axis in range(s.dimensions)
    )
    total = 0.5 * np.sum(velocity**2) + 0.5 * np.sum(gradient)
    if dt is not None:
        total -= dt * dt / 8.0 * np.sum(laplacian(s.mu, s.dx) ** 2)
    return float(total * s.dx**s.dimensions)


# -- History ---------------------------------------------------------------------


@dataclass(frozen=True)
class TimelikeReport:
    all_timelike: bool
    worst_margin: float
    location: tuple[float, ...]
    margin: float = DEFAULT_TIMELIKE_MARGIN


class FieldHistory(Sequence[FieldState]):
    """Time-ordered snapshots sharing one grid."""

    def __init__(self, snapshots: Iterable[FieldState]) -> None:
        self._snapshots: tuple[FieldState, ...] = tuple(snapshots)
        if not self._snapshots:
            raise ValueError("History needs at least one snapshot")
        first = self._snapshots[0]
        for snap in self._snapshots[1:]:
            if snap.shape != first.shape or snap.dx != first.dx or snap.origin != first.origin:
                raise ValueError("All snapshots must share the grid")
        times = np.array([snap.time for snap in self._snapshots])
        if np.any(np.diff(times) <= 0):
            raise ValueError("Snapshot times must be strictly increasing")
        times.setflags(write=False)
        self._times = times
        self._reports: dict[float, TimelikeReport] = {}

    @overload
    def __getitem__(self, index: int) -> FieldState: ...

    @overload
    def __getitem__(self, index: slice) -> Sequence[FieldState]: ...

    def __getitem__(self, index):
        return self._snapshots[index]

    def __len__(self) -> int:
        return len(self._snapshots)

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def grid(self) -> FieldState:
        return self._snapshots[0]

    @cached_property
    def mu_stack(self) -> np.ndarray:
        stack = np.stack([snap.mu for snap in self._snapshots])
        stack.setflags(write=False)
        return stack

    @cached_property
    def _interpolator(self) -> RegularGridInterpolator:
        grid = self.grid
        values = self.mu_stack
        axes = [self._times]
        for axis, coords in enumerate(grid.axes()):
            first = np.take(values, [0], axis=axis + 1)
            values = np.concatenate([values, first], axis=axis + 1)
            axes.append(np.append(coords, coords[-1] + grid.dx))
        return RegularGridInterpolator(axes, values, method="linear", bounds_error=True)

    def contains(self, e: FourEvent) -> bool:
        point = self._point(e)
        if not self._times[0] <= point[0] <= self._times[-1]:
            return False
        return all(
            o <= p <= o + n * self.grid.dx
            for o, n, p in zip(self.grid.origin, self.grid.shape, point[1:])
        )

    def _point(self, e: FourEvent) -> tuple[float, ...]:
        return (e.t,) + e.coords[1 : 1 + self.grid.dimensions]

    def sample(self, e: FourEvent) -> float:
        if not self.contains(e):
            raise FieldWindowError(
                f"Event {e.id} at {e.coords} lies outside the field window "
                f"t∈[{self._times[0]}, {self._times[-1]}], origin={self.grid.origin}, "
                f"extent={tuple(n * self.grid.dx for n in self.grid.shape)}"
            )
        return float(self._interpolator([self._point(e)])[0])

    def timelike_report(self, margin: float = DEFAULT_TIMELIKE_MARGIN) -> TimelikeReport:
        if margin not in self._reports:
            self._reports[margin] = _timelike_report(self, margin)
        return self._reports[margin]


def as_history(history: FieldHistory | Iterable[FieldState]) -> FieldHistory:
    return history if isinstance(history, FieldHistory) else FieldHistory(history)


def sample(history: FieldHistory | Sequence[FieldState], e: FourEvent) -> float:
    return as_history(history).sample(e)


def check_timelike(
    history: FieldHistory | Sequence[FieldState], margin: float = DEFAULT_TIMELIKE_MARGIN
) -> TimelikeReport:
    return as_history(history).timelike_report(margin)


def _timelike_report(history: FieldHistory, margin: float) -> TimelikeReport:
    if len(history) < 2:
        raise ValueError("Timelike check needs at least 2 snapshots")
    if margin < 0:
        raise ValueError(f"margin must be non-negative, got {margin}")
    stack = history.mu_stack
    dx = history.grid.dx
    mu_t = np.gradient(stack, history.times, axis=0)
    norm = mu_t**2
    for axis in range(1, stack.ndim):
        grad = (np.roll(stack, -1, axis) - np.roll(stack, 1, axis)) / (2.0 * dx)
        norm = norm - grad**2
    index = np.unravel_index(int(np.argmin(norm)), norm.shape)
    worst = float(norm[index])
    location = (float(history.times[index[0]]),) + tuple(
        float(axis[i]) for axis, i in zip(history.grid.axes(), index[1:])
    )
    report = TimelikeReport(worst > margin, worst, location, margin)
    if not report.all_timelike:
        _LOG.warning("Field gradient not timelike: worst margin %.3e at %s", worst, location)
    return report


# -- Foliation -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FoliationSurface:
    """Grid positions and the interpolated time at which μ first reaches ``mu0``."""

    mu0: float
    positions: np.ndarray
    times: np.ndarray
    tolerance: float = field(default=INTERVAL_TOLERANCE)

    def coords4(self) -> np.ndarray:
        coords = np.zeros((len(self.times), 4))
        coords[:, 0] = self.times
        coords[:, 1 : 1 + self.positions.shape[1]] = self.positions
        return coords

    def events(self) -> list[FourEvent]:
        return [
            FourEvent(f"mu{self.mu0:g}[{i}]", tuple(row), Role.NONE)
            for i, row in enumerate(self.coords4())
        ]

    def min_interval(self, block: int = 128) -> float:
        """Smallest s² over distinct pairs of surface points, computed in row blocks."""
        coords = self.coords4()
        best = np.inf
        for start in range(0, len(coords), block):
            s2 = pairwise_intervals(coords[start : start + block], coords)
            rows = np.arange(s2.shape[0])
            s2[rows, rows + start] = np.inf
            best = min(best, float(np.min(s2)))
        return best

    def is_spacelike(self, tol: float | None = None) -> bool:
        """True when no two surface points are timelike separated."""
        tol = self.tolerance if tol is None else tol
        return self.min_interval() >= -tol


def extract_foliation(
    history: FieldHistory | Sequence[FieldState], mu0: float, require_timelike: bool = True
) -> FoliationSurface:
    history = as_history(history)
    if require_timelike and len(history) >= 2:
        report = history.timelike_report()
        if not report.all_timelike:
            raise NotTimelikeError(
                f"μ is not timelike (worst margin {report.worst_margin:.3e} at {report.location})"
            )
    grid = history.grid
    stack = history.mu_stack.reshape(len(history), -1)
    times = history.times

    reached = stack >= mu0
    if not np.all(reached.any(axis=0)):
        raise FoliationError(f"Level μ0={mu0} is above the simulated range")
    first = np.argmax(reached, axis=0)
    at_start = first == 0
    if np.any(at_start & (stack[0] != mu0)):
        raise FoliationError(f"Level μ0={mu0} is below the simulated range")

    cols = np.arange(stack.shape[1])
    upper = np.maximum(first, 1)
    lower = upper - 1
    mu_lo, mu_hi = stack[lower, cols], stack[upper, cols]
    fraction = np.where(at_start, 0.0, (mu0 - mu_lo) / np.where(at_start, 1.0, mu_hi - mu_lo))
    crossing = np.where(at_start, times[0], times[lower] + fraction * (times[upper] - times[lower]))

    mesh = grid.mesh()
    positions = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return FoliationSurface(float(mu0), positions, crossing)


@dataclass(frozen=True)
class FieldWindow:
    """Box and time span that cover a set of events."""

    t_start: float
    t_end: float
    lower: tuple[float, ...]
    upper: tuple[float, ...]


def window_for(events: Iterable[FourEvent], margin: float, dimensions: int = 1) -> FieldWindow:
    events = list(events)
    if not events:
        raise ValueError("No events to cover")
    coords = np.array([e.coords for e in events])
    lower = tuple(float(v) - margin for v in coords[:, 1 : 1 + dimensions].min(axis=0))
    upper = tuple(float(v) + margin for v in coords[:, 1 : 1 + dimensions].max(axis=0))
    return FieldWindow(
        float(coords[:, 0].min()) - margin, float(coords[:, 0].max()) + margin, lower, upper
    )


def cover(
    window: FieldWindow,
    data: InitialData,
    points: int,
    cfl: float = DEFAULT_CFL_FRACTION,
    dt: float | None = None,
) -> FieldHistory:
    """Evolve ``data`` on a grid of ``points`` per axis spanning ``window`` for its whole time span."""
    lengths = [hi - lo for lo, hi in zip(window.lower, window.upper)]
    dx = max(lengths) / points
    grid = GridSpec((points,) * len(lengths), dx, window.lower, window.t_start)
    dt = cfl * grid.max_dt() if dt is None else dt
    steps = max(1, math.ceil((window.t_end - window.t_start) / dt) + 1)
    _LOG.debug("Covering t=[%g, %g] with %d points/axis, dx=%g, dt=%g", window.t_start, window.t_end, points, dx, dt)
    return evolve(init(data, grid), dt, steps)
