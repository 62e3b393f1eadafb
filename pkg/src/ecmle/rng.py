"""Deterministic random-number utilities.

Everything stochastic in this package is derived from the raw uniform
stream of a seeded PCG64 generator: normals come from Box-Muller applied
to uniforms, permutations from argsorting uniforms, and categorical picks
from searchsorted on cumulative weights.  Sticking to one primitive makes
every output bit-reproducible for a given seed across platforms and numpy
versions, which the byte-identical CSV contract relies on.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "standard_normal", "random_permutation", "choice_index"]


def make_rng(seed: int) -> np.random.Generator:
    """A PCG64-backed generator for the given non-negative integer seed."""
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normals via Box-Muller on the uniform stream.

    Consumes uniforms in pairs; ``u1`` is flipped to ``1 - u`` so the log
    never sees an exact zero.
    """
    shape = tuple(np.atleast_1d(np.asarray(shape, dtype=np.intp)))
    n = int(np.prod(shape)) if shape else 1
    n_pairs = (n + 1) // 2
    u1 = 1.0 - rng.random(n_pairs)
    u2 = rng.random(n_pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
    return z.reshape(shape)


def random_permutation(rng: np.random.Generator, n: int) -> np.ndarray:
    """A uniformly random permutation of range(n) from the uniform stream."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n!r}")
    return np.argsort(rng.random(n), kind="stable")


def choice_index(rng: np.random.Generator, weights: np.ndarray, size: int) -> np.ndarray:
    """``size`` categorical indices with the given non-negative weights."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-D array")
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0.0:
        raise ValueError("weights must not all be zero")
    edges = np.cumsum(w) / total
    edges[-1] = 1.0  # guard against rounding drift at the top edge
    u = rng.random(size)
    return np.searchsorted(edges, u, side="right")
