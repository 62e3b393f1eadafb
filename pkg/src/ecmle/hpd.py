"""Posterior draw sets, build/evaluate splitting, and empirical HPD thresholds.

The estimators in this package all work from a set of posterior draws paired
with their unnormalized log-posterior values.  The set is split into two
contiguous halves: the first ("build") half shapes the instrumental support,
the second ("evaluate") half feeds the harmonic-mean sum.  The high-density
subset of the build half is everything at or above the empirical
(1 - alpha)-quantile of the build log-densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, OddSampleError, SizeError

__all__ = [
    "DrawSet",
    "HpdPartition",
    "split",
    "hpd_threshold",
    "partition",
    "partition_from_halves",
    "save_drawset",
    "load_drawset",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DrawSet:
    """Posterior draws (size, d) with matching unnormalized log-posteriors.

    Log-densities must be real (no NaN, no infinities).  Empty sets are
    permitted so that degenerate partitions (for example, all draws tied at
    one density) stay representable.
    """

    draws: np.ndarray
    log_densities: np.ndarray

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=float)
        if draws.ndim == 1:
            draws = draws[:, None]
        draws = _readonly(draws)
        ld = _readonly(np.atleast_1d(self.log_densities))
        if draws.ndim != 2:
            raise ValueError(f"draws must be 2-D, got shape {draws.shape}")
        if ld.ndim != 1 or ld.shape[0] != draws.shape[0]:
            raise ValueError("log_densities must be 1-D and match draws row count")
        if draws.shape[0] > 0 and draws.shape[1] < 1:
            raise ValueError("draws must have at least one column")
        if not np.all(np.isfinite(draws)):
            raise ValueError("draws must be finite")
        if not np.all(np.isfinite(ld)):
            raise ValueError("log_densities must be finite")
        object.__setattr__(self, "draws", draws)
        object.__setattr__(self, "log_densities", ld)

    @property
    def size(self) -> int:
        return self.draws.shape[0]

    @property
    def d(self) -> int:
        return self.draws.shape[1]

    def subset(self, index) -> "DrawSet":
        """Order-preserving subset by integer or boolean index."""
        return DrawSet(self.draws[index], self.log_densities[index])


def split(sample: DrawSet) -> tuple[DrawSet, DrawSet]:
    """Contiguous halves (first T rows, last T rows), no shuffling.

    For iid draws the order is exchangeable; for Markov chains contiguous
    halves keep each half internally coherent.
    """
    n = sample.size
    if n % 2 != 0:
        raise OddSampleError(f"cannot split an odd-sized sample ({n})")
    if n < 4:
        raise SizeError(f"need at least 4 draws to split, got {n}")
    half = n // 2
    return sample.subset(slice(0, half)), sample.subset(slice(half, n))


def hpd_threshold(log_densities, alpha: float) -> float:
    """Empirical (1 - alpha)-quantile of the log-densities.

    Sort ascending, h = (1 - alpha) * (N - 1), then interpolate linearly
    between the bracketing order statistics.  Working on log-densities is
    equivalent to thresholding densities: the quantile map commutes with
    monotone transforms.
    """
    ld = np.asarray(log_densities, dtype=float).ravel()
    if ld.size == 0:
        raise EmptyInputError("cannot take a quantile of an empty list")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha!r}")
    v = np.sort(ld, kind="stable")
    h = (1.0 - alpha) * (v.size - 1)
    i0 = int(math.floor(h))
    if i0 >= v.size - 1:
        return float(v[-1])
    frac = h - i0
    return float(v[i0] + frac * (v[i0 + 1] - v[i0]))


@dataclass(frozen=True)
class HpdPartition:
    """Build/evaluate halves plus the build half classified by density.

    ``hpd_points`` holds the build draws with log-density >= log_threshold
    (ties count as high density), ``lpd_points`` the strict complement, both
    in original order.  The empirical fraction |hpd| / T sits within about
    2/T of alpha for continuous densities; ties can push it higher, so that
    band is a statistical property, not a construction invariant.
    """

    build_half: DrawSet
    eval_half: DrawSet
    log_threshold: float
    hpd_points: DrawSet
    lpd_points: DrawSet
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie strictly in (0, 1), got {self.alpha!r}")
        if self.build_half.size != self.eval_half.size:
            raise ValueError("build and evaluate halves must have equal size")
        if self.hpd_points.size + self.lpd_points.size != self.build_half.size:
            raise ValueError("hpd and lpd points must partition the build half")
        if self.hpd_points.size and np.min(self.hpd_points.log_densities) < self.log_threshold:
            raise ValueError("hpd point below threshold")
        if self.lpd_points.size and np.max(self.lpd_points.log_densities) >= self.log_threshold:
            raise ValueError("lpd point at or above threshold")


def partition_from_halves(build: DrawSet, evaluate: DrawSet, alpha: float) -> HpdPartition:
    """Classify an explicit build half against its own density quantile."""
    thr = hpd_threshold(build.log_densities, alpha)
    mask = build.log_densities >= thr
    return HpdPartition(
        build_half=build,
        eval_half=evaluate,
        log_threshold=thr,
        hpd_points=build.subset(mask),
        lpd_points=build.subset(~mask),
        alpha=alpha,
    )


def partition(sample: DrawSet, alpha: float) -> HpdPartition:
    """split + hpd_threshold + classification in one step."""
    build, evaluate = split(sample)
    return partition_from_halves(build, evaluate, alpha)


def save_drawset(path, ds: DrawSet) -> None:
    """CSV with columns theta_1..theta_d, log_unnorm_posterior."""
    header = ",".join([f"theta_{j + 1}" for j in range(ds.d)] + ["log_unnorm_posterior"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row, ld in zip(ds.draws, ds.log_densities):
            cells = [f"{x:.17g}" for x in row] + [f"{ld:.17g}"]
            fh.write(",".join(cells) + "\n")


def load_drawset(path) -> DrawSet:
    """Inverse of :func:`save_drawset`; the density column is found by name."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise EmptyInputError(f"{path}: empty draw file")
    header = [c.strip() for c in lines[0].split(",")]
    if "log_unnorm_posterior" not in header:
        raise ValueError(f"{path}: missing log_unnorm_posterior column")
    ld_col = header.index("log_unnorm_posterior")
    coord_cols = [i for i in range(len(header)) if i != ld_col]
    draws = []
    lds = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(header):
            raise ValueError(f"{path}: row has {len(cells)} cells, expected {len(header)}")
        draws.append([float(cells[i]) for i in coord_cols])
        lds.append(float(cells[ld_col]))
    coords = np.asarray(draws, dtype=float).reshape(len(lds), len(coord_cols))
    return DrawSet(coords, np.asarray(lds, dtype=float))
