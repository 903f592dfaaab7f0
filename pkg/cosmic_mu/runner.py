"""
Scenario runner: turns a validated config into a :class:`RunOutput`.

Monte Carlo work is split into chunks of trials that run on the default executor;
chunks are stitched back in trial order, so results do not depend on chunking.

:copyright: (c) 2025-2026 by the cosmic-mu developers.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import asyncio
import logging
import math
from collections.abc import Callable
from dataclasses import asdict
from typing import Any

import numpy as np

from cosmic_mu.causal_harness import (
    CausalGraph,
    EdgeKind,
    ExperimentLayout,
    SettingsPolicy,
    TrialBatch,
    assert_dual_ni,
    assert_ni_direction,
    bell_graph,
    build_bell,
    build_double_bell,
    build_einstein,
    cycle_ids,
    detect_loop,
    export_layout,
    field_values,
    frame_scan,
    order_by_field,
    simulate_trials,
    summarize,
)
from cosmic_mu.config import Scenario, ScenarioConfig
from cosmic_mu.const import EINSTEIN_VELOCITY, SECONDS_PER_YEAR, TRIAL_CHUNK
from cosmic_mu.export import RunOutput
from cosmic_mu.measurement_field import (
    FieldHistory,
    FoliationError,
    GridSpec,
    InitialData,
    Perturbation,
    cover,
    evolve,
    extract_foliation,
    init,
    window_for,
)
from cosmic_mu.quantum import sample_pairs
from cosmic_mu.spacetime import (
    DilationScenario,
    clock_separation,
    dilation_offset,
    light_travel_time,
    timelike_crossover,
)

_LOG = logging.getLogger(__name__)

FIELD_SNAPSHOTS = 20


def chunks(n_trials: int, size: int = TRIAL_CHUNK) -> list[tuple[int, int]]:
    """(start, count) pieces covering trials 0 .. n_trials - 1."""
    return [(start, min(size, n_trials - start)) for start in range(0, n_trials, size)]


class ScenarioRunner:
    """Runs one configured scenario."""

    def __init__(self, config: ScenarioConfig, tool_version: str = "0.0.0", chunk_size: int = TRIAL_CHUNK):
        self.config = config
        self.tool_version = tool_version
        self.chunk_size = chunk_size
        self.findings: list[dict[str, Any]] = []
        self._handlers: dict[Scenario, Callable[[], Any]] = {
            Scenario.BELL: self._bell,
            Scenario.DOUBLE_BELL: self._double_bell,
            Scenario.FOLIATION: self._foliation,
            Scenario.DILATION: self._dilation,
            Scenario.FRAME_SCAN: self._frame_scan,
        }

    async def run(self) -> RunOutput:
        cfg = self.config
        _LOG.info("Running scenario %s (seed=%d, trials=%d)", cfg.scenario, cfg.seed, cfg.trials)
        self.findings = []
        statistics, tables, documents = await self._handlers[cfg.scenario]()
        summary = {
            "scenario": str(cfg.scenario),
            "tool_version": self.tool_version,
            "schema_version": cfg.schema_version,
            "seed": cfg.seed,
            "trials": cfg.trials,
            "parameters": cfg.model_dump(mode="json"),
            "findings": self.findings,
            "statistics": statistics,
        }
        _LOG.info("Scenario %s finished with %d finding(s)", cfg.scenario, len(self.findings))
        return RunOutput(summary, tables, documents)

    def _finding(self, kind: str, detail: str, **extra: Any) -> None:
        _LOG.warning("Finding %s: %s", kind, detail)
        self.findings.append({"kind": kind, "detail": detail, **extra})

    async def _gather(self, jobs: list[Callable[[], Any]]) -> list[Any]:
        loop = asyncio.get_running_loop()
        return await asyncio.gather(*(loop.run_in_executor(None, job) for job in jobs))

    def _policy(self) -> SettingsPolicy:
        cfg = self.config
        control = None
        if cfg.policy.theta_base is not None:
            control = (cfg.policy.theta_base, cfg.policy.delta)
        return SettingsPolicy(
            (cfg.angles.a, cfg.angles.a_prime),
            (cfg.angles.b, cfg.angles.b_prime),
            control,
            control,
        )

    def _initial_data(self, box: float) -> InitialData:
        f = self.config.field
        perturbation = None
        if f.epsilon > 0:
            k = f.k if f.k is not None else 2 * math.pi / box
            perturbation = Perturbation(f.epsilon, (k,) + (0.0,) * (f.dimensions - 1), f.target)
        return InitialData(f.a, f.t0, perturbation)

    def _field_for(self, layout: ExperimentLayout) -> FieldHistory:
        f = self.config.field
        window = window_for(layout.events, f.margin, f.dimensions)
        box = max(hi - lo for lo, hi in zip(window.lower, window.upper))
        return cover(window, self._initial_data(box), f.points, f.cfl, f.dt)

    # -- dilation ------------------------------------------------------------

    async def _dilation(self):
        d = self.config.dilation
        scenario = DilationScenario(d.g, d.h, d.t, d.c)
        crossover = timelike_crossover(d.g, d.h, d.c)
        separation = clock_separation(scenario)
        if d.t > crossover:
            self._finding(
                "timelike_simultaneity",
                f"After {d.t:g} s the clocks' simultaneous readings are timelike separated",
            )
        statistics = {
            "crossover_seconds": crossover,
            "crossover_years": crossover / SECONDS_PER_YEAR,
            "offset_seconds": dilation_offset(scenario),
            "light_travel_seconds": light_travel_time(d.h, d.c),
            "separation": str(separation),
        }
        return statistics, {}, {}

    # -- bell ----------------------------------------------------------------

    async def _bell(self):
        cfg = self.config
        layout = build_bell(cfg.geometry.L, cfg.geometry.d)
        ordering = tuple(e.id for e in sorted(layout.measurement_events(), key=lambda e: (e.t, e.id)))
        graph = assert_ni_direction(bell_graph(layout), ordering)
        a = cfg.angles
        pairs = ((a.a, a.b), (a.a, a.b_prime), (a.a_prime, a.b), (a.a_prime, a.b_prime))
        n = cfg.trials

        jobs = [
            (lambda x=x, y=y, k=k, s=s, c=c: sample_pairs(x, y, c, cfg.seed, start=k * n + s))
            for k, (x, y) in enumerate(pairs)
            for s, c in chunks(n, self.chunk_size)
        ]
        results = await self._gather(jobs)
        per_pair = len(chunks(n, self.chunk_size))
        rows, e = [], []
        for k, (x, y) in enumerate(pairs):
            pieces = results[k * per_pair : (k + 1) * per_pair]
            out_a = np.concatenate([p[0] for p in pieces]).astype(float)
            out_b = np.concatenate([p[1] for p in pieces]).astype(float)
            corr = float(np.mean(out_a * out_b))
            e.append(corr)
            rows.append(
                {
                    "experiment": "unprimed",
                    "a_angle": x,
                    "b_angle": y,
                    "n": n,
                    "correlation": corr,
                    "stderr": math.sqrt(max(1 - corr * corr, 0.0) / n),
                    "oracle": -math.cos(x - y),
                    "equal_outcomes": int(np.sum(out_a == out_b)),
                }
            )
        chsh = abs(e[0] - e[1] + e[2] + e[3])
        statistics = {"chsh": chsh, "ordering": list(ordering), "correlations": rows}
        return statistics, {"correlations": rows}, {"layout": export_layout(layout, graph)}

    # -- double bell ---------------------------------------------------------

    def _double_bell_layout(self) -> tuple[ExperimentLayout, CausalGraph]:
        g = self.config.geometry
        return build_double_bell(g.L, g.d, g.velocity, g.offset)

    async def _double_bell(self):
        cfg = self.config
        layout, graph = self._double_bell_layout()
        statistics: dict[str, Any] = {
            "velocity": layout.velocity,
            "offset": list(layout.offset),
            "classical_links": [str(e) for e in graph.edges],
        }
        documents = {"layout": export_layout(layout, graph)}

        if cfg.geometry.force_dual_ni:
            loop = detect_loop(assert_dual_ni(graph))
            if loop is not None:
                ids = cycle_ids(loop)
                statistics["forced_cycle"] = ids
                self._finding("causal_loop", "Dual NI assertion closes a causal loop: " + "→".join(ids), cycle=ids)

        history = self._field_for(layout)
        report = history.timelike_report()
        statistics["timelike"] = {"all_timelike": report.all_timelike, "worst_margin": report.worst_margin}
        if not report.all_timelike:
            self._finding("not_timelike", f"μ gradient not timelike (worst margin {report.worst_margin:.3e})")
            return statistics, {}, documents

        ordering = order_by_field(layout, history)
        mu = field_values(layout, history)
        oriented = assert_ni_direction(graph, ordering)
        documents["layout"] = export_layout(layout, oriented)
        statistics["ordering"] = list(ordering)
        statistics["ni_edges"] = [str(e) for e in oriented.edges if e.kind is EdgeKind.NI]
        loop = detect_loop(oriented)
        statistics["mu_ordered_loop"] = None if loop is None else cycle_ids(loop)

        policy = self._policy()
        jobs = [
            (lambda s=s, c=c: simulate_trials(graph, ordering, policy, cfg.seed, c, start=s, mu=mu))
            for s, c in chunks(cfg.trials, self.chunk_size)
        ]
        batch = TrialBatch.concat(await self._gather(jobs))
        stats = summarize(graph, batch, policy)
        statistics["chsh"] = dict(stats.chsh)
        statistics["correlations"] = [asdict(p) for p in stats.pairs]
        statistics["marginals"] = [asdict(m) for m in stats.marginals]

        order_rows = [
            {
                "rank": rank,
                "event": event_id,
                "t": layout.event(event_id).t,
                "x": layout.event(event_id).x,
                "mu": mu[event_id],
            }
            for rank, event_id in enumerate(ordering)
        ]
        tables = {"correlations": [asdict(p) for p in stats.pairs], "orderings": order_rows}
        return statistics, tables, documents

    # -- foliation -----------------------------------------------------------

    async def _foliation(self):
        f = self.config.field
        dx = f.box / f.points
        grid = GridSpec((f.points,) * f.dimensions, dx)
        dt = f.dt if f.dt is not None else f.cfl * grid.max_dt()
        steps = max(1, math.ceil(f.duration / dt))
        history = evolve(init(self._initial_data(f.box), grid), dt, steps)
        report = history.timelike_report()
        statistics: dict[str, Any] = {
            "timelike": {
                "all_timelike": report.all_timelike,
                "worst_margin": report.worst_margin,
                "location": list(report.location),
            },
            "steps": steps,
            "dt": dt,
            "dx": dx,
        }
        field_rows = self._field_rows(history)
        if not report.all_timelike:
            self._finding("not_timelike", f"μ gradient not timelike (worst margin {report.worst_margin:.3e})")
            return statistics, {"field": field_rows}, {}

        levels = f.levels
        if levels is None:
            span = history.times[-1] - history.times[0]
            levels = tuple(f.t0 + f.a * (history.times[0] + span * (i + 1) / 6) for i in range(5))
        surfaces, foliation_rows, level_stats = [], [], []
        for mu0 in levels:
            try:
                surface = extract_foliation(history, mu0)
            except FoliationError as err:
                self._finding("level_out_of_range", str(err), mu0=mu0)
                continue
            surfaces.append(surface)
            level_stats.append(
                {"mu0": mu0, "spacelike": surface.is_spacelike(), "min_interval": surface.min_interval()}
            )
            for i, (pos, t) in enumerate(zip(surface.positions, surface.times)):
                row = {"mu0": mu0, "index": i}
                row.update({axis: float(v) for axis, v in zip(("x", "y"), pos)})
                row["crossing_time"] = float(t)
                foliation_rows.append(row)
        ordered = sorted(surfaces, key=lambda s: s.mu0)
        disjoint = all(bool(np.all(lo.times < hi.times)) for lo, hi in zip(ordered, ordered[1:]))
        if not disjoint:
            self._finding("surfaces_intersect", "Constant-μ surfaces are not pairwise disjoint")
        statistics["levels"] = level_stats
        statistics["disjoint"] = disjoint
        return statistics, {"field": field_rows, "foliation": foliation_rows}, {}

    def _field_rows(self, history: FieldHistory) -> list[dict[str, Any]]:
        stride = max(1, len(history) // FIELD_SNAPSHOTS)
        rows = []
        for snapshot in list(history)[::stride]:
            mesh = snapshot.mesh()
            mu, mu_dot = snapshot.mu.reshape(-1), snapshot.mu_dot.reshape(-1)
            coords = [m.reshape(-1) for m in mesh]
            for i in range(mu.size):
                row = {"time": float(snapshot.time), "index": i}
                row.update({axis: float(c[i]) for axis, c in zip(("x", "y"), coords)})
                row["mu"] = float(mu[i])
                row["mu_dot"] = float(mu_dot[i])
                rows.append(row)
        return rows

    # -- frame scan ----------------------------------------------------------

    async def _frame_scan(self):
        cfg = self.config
        g = cfg.geometry
        kind = cfg.frame_scan.layout
        if kind == "bell":
            layout = build_bell(g.L, g.d)
        elif kind == "double-bell":
            layout, _ = self._double_bell_layout()
        else:
            layout = build_einstein(g.L, g.velocity if g.velocity is not None else EINSTEIN_VELOCITY)

        velocities = cfg.frame_scan.velocities
        rows = frame_scan(layout, velocities)
        history = self._field_for(layout)
        rest_order = order_by_field(layout, history, require_timelike=False)
        covariant = all(
            order_by_field(layout.boosted(v), history, frame=v, require_timelike=False) == rest_order
            for v in velocities
        )
        flips = sum(len(r.flips) for r in rows)
        timelike_flips = [list(pair) for r in rows for pair in r.timelike_flips]
        if timelike_flips:
            self._finding("timelike_flip", f"Timelike pairs changed order: {timelike_flips}")

        order_rows = [
            {"velocity": r.velocity, "rank": rank, "event": event_id, "t": r.times[event_id]}
            for r in rows
            for rank, event_id in enumerate(r.ordering)
        ]
        statistics = {
            "layout": kind,
            "field_ordering": list(rest_order),
            "field_ordering_invariant": covariant,
            "spacelike_flips": flips,
            "timelike_flips": timelike_flips,
            "frames": [
                {
                    "velocity": r.velocity,
                    "ordering": list(r.ordering),
                    "flips": [list(p) for p in r.flips],
                    "desynchronized": [list(p) for p in r.desynchronized],
                }
                for r in rows
            ],
        }
        return statistics, {"orderings": order_rows}, {"layout": export_layout(layout)}


async def run_scenario(config: ScenarioConfig, tool_version: str = "0.0.0") -> RunOutput:
    return await ScenarioRunner(config, tool_version).run()


__all__ = ["ScenarioRunner", "chunks", "run_scenario"]
