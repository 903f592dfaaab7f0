"""
Two-qubit pure states, in-plane spin measurements and the Lüders jump rule.

Basis order is |↑↑>, |↑↓>, |↓↑>, |↓↓> (qubit A first). A spin measurement along
angle θ uses σ_θ = cos θ σ_z + sin θ σ_x on one subsystem and the identity on the other.

:copyright: (c) 2025-2026 by the cosmic-mu developers.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass
from enum import IntEnum, StrEnum

import numpy as np

from cosmic_mu.const import NORM_TOLERANCE
from cosmic_mu.streams import trial_uniforms

_LOG = logging.getLogger(__name__)


class QuantumStateError(ValueError):
    """A state vector that is not a normalized two-qubit ket."""


class Subsystem(StrEnum):
    A = "A"
    B = "B"


class Outcome(IntEnum):
    PLUS = 1
    MINUS = -1


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector over |↑↑>, |↑↓>, |↓↑>, |↓↓>."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (4,):
            raise QuantumStateError(f"Expected 4 amplitudes, got shape {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise QuantumStateError(f"State is not normalized (norm² = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes: np.ndarray) -> PureState:
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise QuantumStateError("Cannot normalize the zero vector")
        return cls(amps / norm)

    def allclose(self, other: PureState, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.amplitudes, other.amplitudes, atol=atol))

    def swapped(self) -> PureState:
        """The same state with qubits A and B exchanged."""
        return PureState(self.amplitudes.reshape(2, 2).T.reshape(4))


@dataclass(frozen=True)
class Observable:
    subsystem: Subsystem
    angle: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "subsystem", Subsystem(self.subsystem))
        if not math.isfinite(self.angle):
            raise ValueError(f"Observable angle must be finite, got {self.angle}")


def singlet() -> PureState:
    return PureState(np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0))


def product_state(a_up: bool, b_up: bool) -> PureState:
    amps = np.zeros(4, dtype=complex)
    amps[2 * (not a_up) + (not b_up)] = 1.0
    return PureState(amps)


# -- Projections -----------------------------------------------------------------


def _sigma(angles: np.ndarray) -> np.ndarray:
    c, s = np.cos(angles), np.sin(angles)
    return np.stack([np.stack([c, s], axis=-1), np.stack([s, -c], axis=-1)], axis=-2)


def _split(
    states: np.ndarray, subsystem: Subsystem, angles: np.ndarray | float
) -> tuple[np.ndarray, np.ndarray]:
    """(P+ψ, P−ψ) for every row of an (n, 4) batch."""
    psi = states.reshape(-1, 2, 2)
    sigma = _sigma(np.broadcast_to(np.asarray(angles, dtype=float), psi.shape[:1]))
    if Subsystem(subsystem) is Subsystem.A:
        rotated = np.einsum("nij,njb->nib", sigma, psi)
    else:
        rotated = np.einsum("nij,naj->nai", sigma, psi)
    plus = 0.5 * (psi + rotated)
    minus = psi - plus
    return plus.reshape(-1, 4), minus.reshape(-1, 4)


def _weights(vectors: np.ndarray) -> np.ndarray:
    return np.einsum("ni,ni->n", vectors.conj(), vectors).real


def outcome_probabilities(s: PureState, o: Observable) -> dict[Outcome, float]:
    plus, minus = _split(s.amplitudes[None, :], o.subsystem, o.angle)
    return {Outcome.PLUS: float(_weights(plus)[0]), Outcome.MINUS: float(_weights(minus)[0])}


def project(s: PureState, o: Observable, outcome: Outcome) -> tuple[float, PureState | None]:
    """Probability of ``outcome`` and the Lüders post-state (None on a zero-probability branch)."""
    plus, minus = _split(s.amplitudes[None, :], o.subsystem, o.angle)
    branch = plus[0] if Outcome(outcome) is Outcome.PLUS else minus[0]
    weight = float(np.vdot(branch, branch).real)
    if weight <= 0.0:
        return 0.0, None
    return weight, PureState(branch / math.sqrt(weight))


def measure_lueders_batch(
    states: np.ndarray,
    subsystem: Subsystem,
    angles: np.ndarray | float,
    u: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Lüders rule applied row by row: outcome +1 iff u < P(+), post-state renormalized.

    Returns ``(outcomes, post_states)`` with shapes (n,) and (n, 4).
    """
    states = np.asarray(states, dtype=complex).reshape(-1, 4)
    u = np.asarray(u, dtype=float).reshape(-1)
    plus, minus = _split(states, subsystem, angles)
    p_plus = _weights(plus)
    chose_plus = u < p_plus
    selected = np.where(chose_plus[:, None], plus, minus)
    weight = np.where(chose_plus, p_plus, _weights(minus))
    if np.any(weight <= 0.0):
        raise QuantumStateError("Lüders projection selected a zero-probability branch")
    outcomes = np.where(chose_plus, Outcome.PLUS, Outcome.MINUS).astype(np.int8)
    return outcomes, selected / np.sqrt(weight)[:, None]


def measure_lueders(s: PureState, o: Observable, u: float) -> tuple[Outcome, PureState]:
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must lie in [0, 1), got {u}")
    outcomes, post = measure_lueders_batch(s.amplitudes[None, :], o.subsystem, o.angle, np.array([u]))
    return Outcome(int(outcomes[0])), PureState(post[0])


# -- Monte Carlo statistics ------------------------------------------------------


def singlet_batch(n: int) -> np.ndarray:
    return np.tile(singlet().amplitudes, (n, 1))


def sample_pairs(
    a_angle: float,
    b_angle: float,
    n_trials: int,
    seed: int,
    start: int = 0,
    first: Subsystem = Subsystem.A,
) -> tuple[np.ndarray, np.ndarray]:
    """Outcomes of A and B on fresh singlets, measuring ``first`` before the other side."""
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    u = trial_uniforms(seed, n_trials, 2, start=start)
    angles = {Subsystem.A: a_angle, Subsystem.B: b_angle}
    order = (Subsystem.A, Subsystem.B) if Subsystem(first) is Subsystem.A else (Subsystem.B, Subsystem.A)
    states = singlet_batch(n_trials)
    outcomes: dict[Subsystem, np.ndarray] = {}
    for column, side in enumerate(order):
        outcomes[side], states = measure_lueders_batch(states, side, angles[side], u[:, column])
    return outcomes[Subsystem.A], outcomes[Subsystem.B]


def correlation(a_angle: float, b_angle: float, n_trials: int, seed: int, start: int = 0) -> float:
    out_a, out_b = sample_pairs(a_angle, b_angle, n_trials, seed, start=start)
    return float(np.mean(out_a.astype(float) * out_b))


def chsh(
    a: float, a_prime: float, b: float, b_prime: float, n_trials: int, seed: int
) -> float:
    """S = |E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)|, each pair on its own block of trials."""
    pairs = ((a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime))
    e = [
        correlation(x, y, n_trials, seed, start=k * n_trials)
        for k, (x, y) in enumerate(pairs)
    ]
    value = abs(e[0] - e[1] + e[2] + e[3])
    _LOG.debug("CHSH correlations %s -> S=%.6f", e, value)
    return value


# -- Exact branch enumeration ----------------------------------------------------


def joint_distribution(s: PureState, a_angle: float, b_angle: float) -> np.ndarray:
    """P(o_A, o_B) as a 2×2 array indexed [plus/minus of A, plus/minus of B]."""
    a_plus, a_minus = _split(s.amplitudes[None, :], Subsystem.A, a_angle)
    result = np.empty((2, 2))
    for i, branch in enumerate((a_plus, a_minus)):
        b_plus, b_minus = _split(branch, Subsystem.B, b_angle)
        result[i, 0] = _weights(b_plus)[0]
        result[i, 1] = _weights(b_minus)[0]
    return result


def sequential_distribution(
    s: PureState, a_angle: float, b_angle: float, first: Subsystem = Subsystem.A
) -> np.ndarray:
    """Joint distribution obtained by Lüders-updating after the ``first`` measurement."""
    angles = {Subsystem.A: a_angle, Subsystem.B: b_angle}
    second = Subsystem.B if Subsystem(first) is Subsystem.A else Subsystem.A
    result = np.zeros((2, 2))
    for i, o1 in enumerate((Outcome.PLUS, Outcome.MINUS)):
        p1, post = project(s, Observable(first, angles[first]), o1)
        if post is None:
            continue
        for j, o2 in enumerate((Outcome.PLUS, Outcome.MINUS)):
            p2, _ = project(post, Observable(second, angles[second]), o2)
            idx = (i, j) if first is Subsystem.A else (j, i)
            result[idx] = p1 * p2
    return result


_SIGNS = np.array([[1.0, -1.0], [-1.0, 1.0]])


def correlation_exact(a_angle: float, b_angle: float, s: PureState | None = None) -> float:
    dist = joint_distribution(s or singlet(), a_angle, b_angle)
    return float(np.sum(_SIGNS * dist))


def chsh_exact(a: float, a_prime: float, b: float, b_prime: float, s: PureState | None = None) -> float:
    e = [correlation_exact(x, y, s) for x, y in ((a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime))]
    return abs(e[0] - e[1] + e[2] + e[3])


def deterministic_chsh(assignment: Mapping[str, int]) -> int:
    """CHSH value of fixed local outcomes for the settings a, a_prime, b, b_prime."""
    for key in ("a", "a_prime", "b", "b_prime"):
        if assignment[key] not in (1, -1):
            raise ValueError(f"Outcome for {key} must be +1 or -1, got {assignment[key]}")
    a, ap, b, bp = (assignment[k] for k in ("a", "a_prime", "b", "b_prime"))
    return abs(a * b - a * bp + ap * b + ap * bp)
