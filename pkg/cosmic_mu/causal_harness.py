"""
Bell and double-Bell layouts, classical links and nonlocal interactions, loop
detection, frame scans and μ-ordered Lüders runs.

Event ids follow the spacetime diagrams: S, A1, A2, B1, B2 for one experiment and
the same ids with a prime (′) for the second one. Inputs are spin-axis settings,
outputs are recorded spin outcomes.

:copyright: (c) 2025-2026 by the cosmic-mu developers.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from itertools import combinations
from typing import Any

import networkx as nx
import numpy as np

from cosmic_mu.const import CHSH_ANGLES, INTERVAL_TOLERANCE, ORDER_DECIMALS
from cosmic_mu.measurement_field import FieldHistory, NotTimelikeError, as_history
from cosmic_mu.quantum import Subsystem, measure_lueders_batch, singlet_batch
from cosmic_mu.spacetime import (
    Boost,
    FourEvent,
    Role,
    Separation,
    boost,
    classify,
    in_future_lightcone,
    rapidity,
    velocity_from_doppler,
)
from cosmic_mu.streams import trial_uniforms

_LOG = logging.getLogger(__name__)

PRIME = "′"


class LayoutError(ValueError):
    """A layout or graph that violates its causal invariants."""


class EdgeKind(StrEnum):
    CL = "CL"
    NI = "NI"


@dataclass(frozen=True)
class BellIds:
    """Event ids of one Bell experiment."""

    suffix: str = ""

    @property
    def source(self) -> str:
        return "S" + self.suffix

    @property
    def a_in(self) -> str:
        return "A1" + self.suffix

    @property
    def a_out(self) -> str:
        return "A2" + self.suffix

    @property
    def b_in(self) -> str:
        return "B1" + self.suffix

    @property
    def b_out(self) -> str:
        return "B2" + self.suffix

    @property
    def name(self) -> str:
        return "primed" if self.suffix else "unprimed"

    def arm(self, side: Subsystem) -> tuple[str, str]:
        return (self.a_in, self.a_out) if side is Subsystem.A else (self.b_in, self.b_out)

    def side_of(self, event_id: str) -> Subsystem:
        if event_id in (self.a_in, self.a_out):
            return Subsystem.A
        if event_id in (self.b_in, self.b_out):
            return Subsystem.B
        raise KeyError(event_id)

    def measurement_ids(self) -> tuple[str, ...]:
        return (self.a_in, self.a_out, self.b_in, self.b_out)


@dataclass(frozen=True)
class ExperimentLayout:
    kind: str
    events: tuple[FourEvent, ...]
    arm_length: float
    delay: float = 0.0
    experiments: tuple[BellIds, ...] = ()
    velocity: float = 0.0
    offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        ids = [e.id for e in self.events]
        if len(set(ids)) != len(ids):
            raise LayoutError(f"Duplicate event ids in layout: {ids}")

    def event(self, event_id: str) -> FourEvent:
        for e in self.events:
            if e.id == event_id:
                return e
        raise KeyError(event_id)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.events)

    def measurement_events(self) -> tuple[FourEvent, ...]:
        return tuple(e for e in self.events if e.is_measurement)

    def boosted(self, velocity: float) -> ExperimentLayout:
        """The same physical events expressed in a frame moving with ``velocity``."""
        b = Boost(velocity)
        return ExperimentLayout(
            self.kind,
            tuple(boost(e, b) for e in self.events),
            self.arm_length,
            self.delay,
            self.experiments,
            self.velocity,
            self.offset,
        )


@dataclass(frozen=True)
class CausalEdge:
    kind: EdgeKind
    source: str
    target: str

    def __str__(self) -> str:
        return f"{self.source}-{self.kind}->{self.target}"


class CausalGraph:
    """Events plus asserted CL / NI edges; NI candidates are kept aside until asserted."""

    def __init__(
        self,
        events: Iterable[FourEvent],
        edges: Iterable[CausalEdge] = (),
        candidates: Iterable[CausalEdge] = (),
        experiments: Sequence[BellIds] = (),
        tol: float = INTERVAL_TOLERANCE,
    ) -> None:
        self._events = {e.id: e for e in events}
        self._experiments = tuple(experiments)
        self._tol = tol
        self._candidates = tuple(candidates)
        self._graph = nx.DiGraph()
        self._graph.add_nodes_from(self._events)
        for edge in self._candidates:
            self._check_edge(edge)
        for edge in edges:
            self._check_edge(edge)
            if self._graph.has_edge(edge.source, edge.target):
                continue
            self._graph.add_edge(edge.source, edge.target, kind=edge.kind)

    def _check_edge(self, edge: CausalEdge) -> None:
        for end in (edge.source, edge.target):
            if end not in self._events:
                raise LayoutError(f"Edge {edge} references unknown event {end}")
        if edge.source == edge.target:
            raise LayoutError(f"Self-edge {edge} is not allowed")
        src, dst = self._events[edge.source], self._events[edge.target]
        if edge.kind is EdgeKind.CL and not in_future_lightcone(src, dst, self._tol):
            raise LayoutError(f"Classical link {edge} is not future-directed causal")
        if edge.kind is EdgeKind.NI and classify(src, dst, self._tol) is not Separation.SPACELIKE:
            raise LayoutError(f"Nonlocal interaction {edge} does not join spacelike events")

    @property
    def events(self) -> Mapping[str, FourEvent]:
        return dict(self._events)

    @property
    def experiments(self) -> tuple[BellIds, ...]:
        return self._experiments

    @property
    def candidates(self) -> tuple[CausalEdge, ...]:
        return self._candidates

    @property
    def edges(self) -> tuple[CausalEdge, ...]:
        return tuple(
            CausalEdge(data["kind"], u, v) for u, v, data in self._graph.edges(data=True)
        )

    def edges_of(self, kind: EdgeKind) -> tuple[CausalEdge, ...]:
        return tuple(e for e in self.edges if e.kind is kind)

    def digraph(self) -> nx.DiGraph:
        return self._graph.copy()

    def with_edges(self, edges: Iterable[CausalEdge], keep: Iterable[EdgeKind] = tuple(EdgeKind)) -> CausalGraph:
        keep = set(keep)
        kept = [e for e in self.edges if e.kind in keep]
        return CausalGraph(
            self._events.values(), kept + list(edges), self._candidates, self._experiments, self._tol
        )

    def controller_of(self, event_id: str) -> str | None:
        for edge in self.edges_of(EdgeKind.CL):
            if edge.target == event_id:
                return edge.source
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "events": [
                {"id": e.id, "role": str(e.role), "t": e.t, "x": e.x, "y": e.y, "z": e.z}
                for e in self._events.values()
            ],
            "edges": [{"kind": str(e.kind), "from": e.source, "to": e.target} for e in self.edges],
            "candidates": [
                {"kind": str(e.kind), "from": e.source, "to": e.target} for e in self._candidates
            ],
        }


# -- Layout builders -------------------------------------------------------------


def _bell_events(ids: BellIds, L: float, d: float) -> list[FourEvent]:
    return [
        FourEvent.at(ids.source, 0.0, 0.0, role=Role.SOURCE),
        FourEvent.at(ids.a_in, L, -L, role=Role.INPUT),
        FourEvent.at(ids.a_out, L + d, -L, role=Role.OUTPUT),
        FourEvent.at(ids.b_in, L, L, role=Role.INPUT),
        FourEvent.at(ids.b_out, L + d, L, role=Role.OUTPUT),
    ]


def _check_bell_parameters(L: float, d: float) -> None:
    if not L > 0:
        raise LayoutError(f"Arm length L must be positive, got {L}")
    if not d > 0:
        raise LayoutError(f"Delay d must be positive, got {d}")
    if not d < 2 * L:
        raise LayoutError(
            f"d={d} >= 2L={2 * L}: an output would lie in the light cone of the other arm's input"
        )


def validate_bell(events: Mapping[str, FourEvent], ids: BellIds, tol: float) -> None:
    """Raise LayoutError unless the experiment has the Bell causal structure."""
    ev = events
    for arm_in, arm_out in (ids.arm(Subsystem.A), ids.arm(Subsystem.B)):
        if classify(ev[arm_in], ev[arm_out], tol) is not Separation.TIMELIKE or not (
            ev[arm_out].t > ev[arm_in].t
        ):
            raise LayoutError(f"{arm_in} must precede {arm_out} with timelike separation")
        if classify(ev[ids.source], ev[arm_in], tol) is not Separation.LIGHTLIKE:
            raise LayoutError(f"Photon from {ids.source} to {arm_in} is not null")
    for a_id in (ids.a_in, ids.a_out):
        for b_id in (ids.b_in, ids.b_out):
            if classify(ev[a_id], ev[b_id], tol) is not Separation.SPACELIKE:
                raise LayoutError(f"{a_id} and {b_id} must be spacelike separated")


def build_bell(L: float, d: float, suffix: str = "") -> ExperimentLayout:
    _check_bell_parameters(L, d)
    ids = BellIds(suffix)
    events = _bell_events(ids, L, d)
    validate_bell({e.id: e for e in events}, ids, _scaled_tol(L, d))
    return ExperimentLayout("bell", tuple(events), L, d, (ids,))


def _scaled_tol(*lengths: float) -> float:
    return INTERVAL_TOLERANCE * max(1.0, max(abs(v) for v in lengths) ** 2)


def doppler_window(L: float, d: float) -> float:
    """Smallest light-cone scale factor that lets both classical links be causal."""
    return (2 * L + d) / (2 * L - d)


def default_velocity(L: float, d: float) -> float:
    return velocity_from_doppler(2.0 * doppler_window(L, d))


def default_offset(L: float, d: float, velocity: float) -> tuple[float, float]:
    """Centre of the admissible (t, x) translations of the moving experiment's source."""
    k = math.exp(rapidity(velocity))
    p = (2 * L + d) * (1 - k) / 2
    q = (2 * L + d) * (1 - 1 / k) / 2
    return (p + q) / 2, (p - q) / 2


def _place(events: Iterable[FourEvent], velocity: float, offset: tuple[float, float]) -> list[FourEvent]:
    """Events given in a frame moving with ``velocity``, expressed in the lab and translated."""
    to_lab = Boost(-velocity)
    placed = []
    for e in events:
        t, x, y, z = boost(e, to_lab).coords
        placed.append(e.moved((t + offset[0], x + offset[1], y, z)))
    return placed


def _classical_link(events: Mapping[str, FourEvent], pairs: Sequence[tuple[str, str]], tol: float) -> CausalEdge:
    links = [
        CausalEdge(EdgeKind.CL, src, dst)
        for src, dst in pairs
        if in_future_lightcone(events[src], events[dst], tol)
    ]
    if not links:
        raise LayoutError(f"No future-directed classical link among {list(pairs)}")
    return links[0]


def candidate_ni(ids: BellIds) -> tuple[CausalEdge, CausalEdge]:
    return (
        CausalEdge(EdgeKind.NI, ids.a_in, ids.b_out),
        CausalEdge(EdgeKind.NI, ids.b_in, ids.a_out),
    )


def bell_graph(layout: ExperimentLayout) -> CausalGraph:
    candidates = [edge for ids in layout.experiments for edge in candidate_ni(ids)]
    return CausalGraph(
        layout.events, (), candidates, layout.experiments, _scaled_tol(layout.arm_length, layout.delay)
    )


def build_double_bell(
    L: float,
    d: float,
    velocity: float | None = None,
    offset: tuple[float, float] | None = None,
) -> tuple[ExperimentLayout, CausalGraph]:
    """Two Bell experiments, the primed one at rest in a frame moving along the arm axis.

    Each output on one arm controls the other experiment's input on the same arm (CL).
    The direction of each link follows from the geometry; positive velocities give
    A2′→A1 and B2→B1′, negative ones A2→A1′ and B2′→B1.
    """
    _check_bell_parameters(L, d)
    if velocity is None:
        velocity = default_velocity(L, d)
    if not abs(velocity) < 1:
        raise LayoutError(f"Velocity must satisfy |v| < 1, got {velocity}")
    if offset is None:
        offset = default_offset(L, d, velocity)
    offset = (float(offset[0]), float(offset[1]))

    first, second = BellIds(""), BellIds(PRIME)
    events = _bell_events(first, L, d) + _place(_bell_events(second, L, d), velocity, offset)
    by_id = {e.id: e for e in events}
    tol = _scaled_tol(L, d, *offset)
    for ids in (first, second):
        validate_bell(by_id, ids, tol)

    a_link = _classical_link(by_id, [(first.a_out, second.a_in), (second.a_out, first.a_in)], tol)
    b_link = _classical_link(by_id, [(first.b_out, second.b_in), (second.b_out, first.b_in)], tol)
    if a_link.source.endswith(PRIME) == b_link.source.endswith(PRIME):
        raise LayoutError(
            f"Classical links {a_link} and {b_link} both leave the same experiment; "
            "each output must control the other experiment"
        )
    layout = ExperimentLayout("double-bell", tuple(events), L, d, (first, second), velocity, offset)
    candidates = candidate_ni(first) + candidate_ni(second)
    graph = CausalGraph(events, (a_link, b_link), candidates, (first, second), tol)
    _LOG.debug("Double Bell v=%.4f offset=%s links %s, %s", velocity, offset, a_link, b_link)
    return layout, graph


def build_einstein(L: float, velocity: float) -> ExperimentLayout:
    """Two source/receiver trios, one moving with ``velocity``, sources flashing together."""
    if not L > 0:
        raise LayoutError(f"L must be positive, got {L}")
    Boost(velocity)
    rest = [
        FourEvent.at("S", 0.0, 0.0, role=Role.SOURCE),
        FourEvent.at("A", L, -L, role=Role.OUTPUT),
        FourEvent.at("B", L, L, role=Role.OUTPUT),
    ]
    moving = _place(
        [
            FourEvent.at("S" + PRIME, 0.0, 0.0, role=Role.SOURCE),
            FourEvent.at("A" + PRIME, L, -L, role=Role.OUTPUT),
            FourEvent.at("B" + PRIME, L, L, role=Role.OUTPUT),
        ],
        velocity,
        (0.0, 0.0),
    )
    return ExperimentLayout("einstein", tuple(rest + moving), L, 0.0, (), velocity)


# -- Loops -----------------------------------------------------------------------


def detect_loop(g: CausalGraph) -> list[CausalEdge] | None:
    """A directed cycle if one exists, rotated to start at the smallest classical-link source."""
    try:
        cycle = nx.find_cycle(g.digraph())
    except nx.NetworkXNoCycle:
        return None
    kinds = {(e.source, e.target): e.kind for e in g.edges}
    edges = [CausalEdge(kinds[(u, v)], u, v) for u, v in cycle]
    starts = [i for i, e in enumerate(edges) if e.kind is EdgeKind.CL] or range(len(edges))
    first = min(starts, key=lambda i: edges[i].source)
    return edges[first:] + edges[:first]


def cycle_ids(cycle: Sequence[CausalEdge]) -> list[str]:
    return [e.source for e in cycle] + [cycle[0].source] if cycle else []


def assert_ni_direction(graph: CausalGraph, ordering: Sequence[str]) -> CausalGraph:
    """Keep, per experiment, the NI edge leaving the arm whose output comes first."""
    position = {event_id: i for i, event_id in enumerate(ordering)}
    if len(position) != len(ordering):
        raise ValueError("Ordering repeats an event")
    chosen = []
    for ids in graph.experiments:
        missing = [i for i in ids.measurement_ids() if i not in position]
        if missing:
            raise ValueError(f"Ordering is missing measurement events {missing}")
        a_first = position[ids.a_out] < position[ids.b_out]
        forward, reverse = candidate_ni(ids)
        chosen.append(forward if a_first else reverse)
    return graph.with_edges(chosen, keep=(EdgeKind.CL,))


def assert_dual_ni(graph: CausalGraph) -> CausalGraph:
    """Assert, in every experiment, the NI edge from a controlled input to a controlling output."""
    controlled = {e.target for e in graph.edges_of(EdgeKind.CL)}
    controlling = {e.source for e in graph.edges_of(EdgeKind.CL)}
    chosen = [
        edge
        for ids in graph.experiments
        for edge in candidate_ni(ids)
        if edge.source in controlled and edge.target in controlling
    ]
    return graph.with_edges(chosen, keep=(EdgeKind.CL,))


# -- Orderings -------------------------------------------------------------------


@dataclass(frozen=True)
class FrameScanRow:
    velocity: float
    ordering: tuple[str, ...]
    times: Mapping[str, float]
    flips: tuple[tuple[str, str], ...]
    timelike_flips: tuple[tuple[str, str], ...]
    desynchronized: tuple[tuple[str, str], ...]


def _sign(value: float, tol: float) -> int:
    return 0 if abs(value) <= tol else (1 if value > 0 else -1)


def frame_scan(
    layout: ExperimentLayout, velocities: Iterable[float], tol: float = INTERVAL_TOLERANCE
) -> list[FrameScanRow]:
    """Coordinate-time ordering of the measurement events in each boosted frame."""
    events = layout.measurement_events()
    rest = {e.id: e.t for e in events}
    pairs = list(combinations(sorted(rest), 2))
    separations = {
        (a, b): classify(layout.event(a), layout.event(b), _scaled_tol(layout.arm_length)) for a, b in pairs
    }
    rows = []
    for v in velocities:
        b = Boost(v)
        times = {e.id: boost(e, b).t for e in events}
        ordering = tuple(sorted(times, key=lambda i: (times[i], i)))
        flips, timelike, desync = [], [], []
        for a, c in pairs:
            before = _sign(rest[c] - rest[a], tol)
            after = _sign(times[c] - times[a], tol)
            if before * after < 0:
                flips.append((a, c))
                if separations[(a, c)] is not Separation.SPACELIKE:
                    timelike.append((a, c))
            elif before == 0 and after != 0:
                desync.append((a, c))
        rows.append(
            FrameScanRow(float(v), ordering, times, tuple(flips), tuple(timelike), tuple(desync))
        )
    return rows


def field_values(
    layout: ExperimentLayout, history: FieldHistory | Sequence, frame: Boost | float | None = None
) -> dict[str, float]:
    """μ at every measurement event; ``frame`` names the frame the layout coordinates are in."""
    history = as_history(history)
    to_field = None if frame is None else (frame if isinstance(frame, Boost) else Boost(frame)).inverse
    values = {}
    for e in layout.measurement_events():
        rest = e if to_field is None else boost(e, to_field)
        values[e.id] = history.sample(rest)
    return values


def order_by_field(
    layout: ExperimentLayout,
    history: FieldHistory | Sequence,
    frame: Boost | float | None = None,
    require_timelike: bool = True,
) -> tuple[str, ...]:
    history = as_history(history)
    if require_timelike:
        report = history.timelike_report()
        if not report.all_timelike:
            raise NotTimelikeError(
                f"Cannot order by μ: gradient not timelike (worst {report.worst_margin:.3e})"
            )
    values = field_values(layout, history, frame)
    return tuple(sorted(values, key=lambda i: (round(values[i], ORDER_DECIMALS), i)))


# -- Runs ------------------------------------------------------------------------


@dataclass(frozen=True)
class SettingsPolicy:
    """Angle pairs per arm; a controlled input takes theta_base + delta·(outcome + 1)/2."""

    a_angles: tuple[float, float] = (CHSH_ANGLES["a"], CHSH_ANGLES["a_prime"])
    b_angles: tuple[float, float] = (CHSH_ANGLES["b"], CHSH_ANGLES["b_prime"])
    a_control: tuple[float, float] | None = None
    b_control: tuple[float, float] | None = None

    def angles(self, side: Subsystem, controlled: bool) -> tuple[float, float]:
        pair = self.a_angles if side is Subsystem.A else self.b_angles
        control = self.a_control if side is Subsystem.A else self.b_control
        if controlled and control is not None:
            base, delta = control
            return base, base + delta
        return pair


@dataclass(frozen=True)
class RunRecord:
    trial: int
    seed: int
    settings: Mapping[str, float]
    outcomes: Mapping[str, int]
    order: tuple[str, ...]
    mu: Mapping[str, float]


@dataclass(frozen=True, eq=False)
class TrialBatch:
    """Raw per-trial settings bits, angles and outcomes for trials [start, start + n)."""

    start: int
    seed: int
    order: tuple[str, ...]
    mu: Mapping[str, float]
    bits: Mapping[str, np.ndarray]
    angles: Mapping[str, np.ndarray]
    outcomes: Mapping[str, np.ndarray]

    @property
    def n_trials(self) -> int:
        return len(next(iter(self.outcomes.values())))

    def record(self, row: int) -> RunRecord:
        return RunRecord(
            self.start + row,
            self.seed,
            {i: float(a[row]) for i, a in self.angles.items()},
            {i: int(o[row]) for i, o in self.outcomes.items()},
            self.order,
            dict(self.mu),
        )

    @staticmethod
    def concat(batches: Sequence[TrialBatch]) -> TrialBatch:
        batches = sorted(batches, key=lambda b: b.start)
        first = batches[0]
        expected = first.start
        for b in batches:
            if b.start != expected or b.order != first.order or b.seed != first.seed:
                raise ValueError("Batches are not contiguous pieces of one run")
            expected += b.n_trials

        def join(name: str) -> dict[str, np.ndarray]:
            keys = getattr(first, name).keys()
            return {k: np.concatenate([getattr(b, name)[k] for b in batches]) for k in keys}

        return TrialBatch(
            first.start, first.seed, first.order, first.mu, join("bits"), join("angles"), join("outcomes")
        )


@dataclass(frozen=True)
class PairStatistic:
    experiment: str
    a_setting: int
    b_setting: int
    a_angle: float
    b_angle: float
    n: int
    correlation: float
    stderr: float
    oracle: float


@dataclass(frozen=True)
class MarginalStatistic:
    experiment: str
    side: str
    other_setting: int
    n: int
    p_plus: float
    stderr: float


@dataclass(frozen=True)
class RunStatistics:
    seed: int
    n_trials: int
    order: tuple[str, ...]
    pairs: tuple[PairStatistic, ...]
    chsh: Mapping[str, float]
    marginals: tuple[MarginalStatistic, ...]
    records: tuple[RunRecord, ...] = field(default=())


def draw_columns(graph: CausalGraph) -> dict[str, int]:
    """Uniform column for each measurement event, fixed by sorted id."""
    ids = sorted(i for ex in graph.experiments for i in ex.measurement_ids())
    return {event_id: col for col, event_id in enumerate(ids)}


def check_ordering(graph: CausalGraph, ordering: Sequence[str]) -> None:
    """Raise LayoutError if ``ordering`` cannot drive a run of ``graph``."""
    position = {event_id: i for i, event_id in enumerate(ordering)}
    for edge in graph.edges_of(EdgeKind.CL):
        if position[edge.source] > position[edge.target]:
            raise LayoutError(f"Ordering processes {edge.target} before its controller {edge.source}")
    for ids in graph.experiments:
        for side in Subsystem:
            arm_in, arm_out = ids.arm(side)
            if position[arm_in] > position[arm_out]:
                raise LayoutError(f"Ordering processes {arm_out} before its setting {arm_in}")
    oriented = assert_ni_direction(graph, ordering)
    loop = detect_loop(oriented)
    if loop is not None:
        raise LayoutError("Ordering yields a causal loop: " + " -> ".join(cycle_ids(loop)))


def simulate_trials(
    graph: CausalGraph,
    ordering: Sequence[str],
    policy: SettingsPolicy,
    seed: int,
    n_trials: int,
    start: int = 0,
    mu: Mapping[str, float] | None = None,
) -> TrialBatch:
    """Process the measurement events of every trial in ``ordering``, vectorised over trials."""
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    check_ordering(graph, ordering)
    columns = draw_columns(graph)
    u = trial_uniforms(seed, n_trials, len(columns), start=start)
    owner = {i: ex for ex in graph.experiments for i in ex.measurement_ids()}
    states = {ex.suffix: singlet_batch(n_trials) for ex in graph.experiments}
    bits: dict[str, np.ndarray] = {}
    angles: dict[str, np.ndarray] = {}
    outcomes: dict[str, np.ndarray] = {}

    for event_id in ordering:
        if event_id not in owner:
            continue
        ids = owner[event_id]
        side = ids.side_of(event_id)
        arm_in, arm_out = ids.arm(side)
        if event_id == arm_in:
            controller = graph.controller_of(event_id)
            choices = np.array(policy.angles(side, controlled=controller is not None))
            if controller is None:
                bit = (u[:, columns[event_id]] >= 0.5).astype(np.int8)
            else:
                bit = ((outcomes[controller] + 1) // 2).astype(np.int8)
            bits[event_id] = bit
            angles[event_id] = choices[bit]
        else:
            outcomes[event_id], states[ids.suffix] = measure_lueders_batch(
                states[ids.suffix], side, angles[arm_in], u[:, columns[event_id]]
            )
    return TrialBatch(start, seed, tuple(ordering), dict(mu or {}), bits, angles, outcomes)


def summarize(graph: CausalGraph, batch: TrialBatch, policy: SettingsPolicy, keep_records: int = 0) -> RunStatistics:
    pairs: list[PairStatistic] = []
    marginals: list[MarginalStatistic] = []
    chsh: dict[str, float] = {}
    for ids in graph.experiments:
        a_bits, b_bits = batch.bits[ids.a_in], batch.bits[ids.b_in]
        a_out = batch.outcomes[ids.a_out].astype(float)
        b_out = batch.outcomes[ids.b_out].astype(float)
        a_choices = policy.angles(Subsystem.A, graph.controller_of(ids.a_in) is not None)
        b_choices = policy.angles(Subsystem.B, graph.controller_of(ids.b_in) is not None)
        table = {}
        for i in (0, 1):
            for j in (0, 1):
                mask = (a_bits == i) & (b_bits == j)
                n = int(mask.sum())
                e = float(np.mean(a_out[mask] * b_out[mask])) if n else float("nan")
                stderr = math.sqrt(max(1.0 - e * e, 0.0) / n) if n else float("nan")
                oracle = -math.cos(a_choices[i] - b_choices[j])
                table[(i, j)] = e
                pairs.append(PairStatistic(ids.name, i, j, a_choices[i], b_choices[j], n, e, stderr, oracle))
        chsh[ids.name] = abs(table[(0, 0)] - table[(0, 1)] + table[(1, 0)] + table[(1, 1)])
        for side, out, other_bits in (("A", a_out, b_bits), ("B", b_out, a_bits)):
            for j in (0, 1):
                mask = other_bits == j
                n = int(mask.sum())
                p = float(np.mean(out[mask] > 0)) if n else float("nan")
                stderr = math.sqrt(p * (1 - p) / n) if n else float("nan")
                marginals.append(MarginalStatistic(ids.name, side, j, n, p, stderr))
    records = tuple(batch.record(r) for r in range(min(keep_records, batch.n_trials)))
    return RunStatistics(batch.seed, batch.n_trials, batch.order, tuple(pairs), chsh, tuple(marginals), records)


def run_double_bell(
    layout: ExperimentLayout,
    graph: CausalGraph,
    history: FieldHistory | Sequence,
    policy: SettingsPolicy,
    seed: int,
    n_trials: int,
    keep_records: int = 0,
) -> RunStatistics:
    history = as_history(history)
    ordering = order_by_field(layout, history)
    mu = field_values(layout, history)
    batch = simulate_trials(graph, ordering, policy, seed, n_trials, mu=mu)
    stats = summarize(graph, batch, policy, keep_records)
    _LOG.info("Ran %d trials in μ-order %s; CHSH %s", n_trials, " ".join(ordering), stats.chsh)
    return stats


def replay_trial(
    layout: ExperimentLayout,
    graph: CausalGraph,
    history: FieldHistory | Sequence,
    policy: SettingsPolicy,
    seed: int,
    trial: int,
) -> RunRecord:
    history = as_history(history)
    ordering = order_by_field(layout, history)
    mu = field_values(layout, history)
    return simulate_trials(graph, ordering, policy, seed, 1, start=trial, mu=mu).record(0)


def export_layout(layout: ExperimentLayout, graph: CausalGraph | None = None) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "kind": layout.kind,
        "arm_length": layout.arm_length,
        "delay": layout.delay,
        "velocity": layout.velocity,
        "offset": list(layout.offset),
    }
    doc.update((graph or CausalGraph(layout.events)).to_dict())
    return doc
