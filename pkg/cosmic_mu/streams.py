"""
Master seed to per-trial random streams.

Trial ``i`` owns the Philox blocks starting at counter ``i * blocks`` under key
``seed``; one block yields four doubles. Generating trials ``[start, start + n)`` in
one batch consumes those blocks in order, so a batch row is bit-identical to the
stream of that trial generated on its own.

:copyright: (c) 2025-2026 by the cosmic-mu developers.
:license: MPL-2.0, see LICENSE for more details.
"""

from __future__ import annotations

import math

import numpy as np

from cosmic_mu.const import UNIFORMS_PER_BLOCK

_MAX_SEED = 2**64


def blocks_per_trial(draws: int) -> int:
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    return math.ceil(draws / UNIFORMS_PER_BLOCK)


def _generator(seed: int, counter: int) -> np.random.Generator:
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(counter=counter, key=seed))


def trial_uniforms(seed: int, n_trials: int, draws: int, start: int = 0) -> np.ndarray:
    """Uniforms in [0, 1) for trials ``start .. start + n_trials - 1``, shape (n_trials, draws)."""
    if n_trials < 0:
        raise ValueError(f"n_trials must be >= 0, got {n_trials}")
    blocks = blocks_per_trial(draws)
    width = blocks * UNIFORMS_PER_BLOCK
    rng = _generator(seed, start * blocks)
    return rng.random((n_trials, width))[:, :draws]


def replay_uniforms(seed: int, trial: int, draws: int) -> np.ndarray:
    return trial_uniforms(seed, 1, draws, start=trial)[0]
