"""Greedy covering of a high-density point set by disjoint ellipsoids.

The covering is built from a subsample of the high-density build points,
visited in order of decreasing log-density.  Each candidate grows a locally
adapted ellipsoid: the primary axis points at the nearest low-density draw
and its length is the first radius at which the log-density falls to the
threshold along that ray; the remaining orthonormal axes are probed in both
signs and take the smaller crossing.  Crossings are located by an outward
geometric scan followed by bisection inside the first sub-threshold octave,
so that on curved or folded supports (where a ray can leave the
high-density region and re-enter it further out) the ellipsoid stops at the
near boundary instead of bridging a low-density valley.  An ellipsoid is
kept only when its bounding sphere stays clear of every previously accepted
bounding sphere, which certifies pairwise disjointness and makes the
union's volume an exact sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCoveringError,
    DimensionError,
    EmptyHpdError,
    NumericalError,
)
from .geometry import Ellipsoid, gram_schmidt
from .hpd import HpdPartition
from .rng import choice_index, make_rng, random_permutation

__all__ = [
    "CoveringConfig",
    "EllipsoidUnion",
    "build_covering",
    "save_union",
    "load_union",
]

_VOLUME_REL_TOL = 1.0e-12
_FORMAT_TAG = "# ellipsoid-union v1"
_SCAN_OCTAVES = 64
_MAX_BISECT_ITER = 100


def _first_crossing_radii(logdens, origin, directions, log_c, brackets, rtol):
    """First threshold crossing along each direction; NaN where there is none.

    Each ray is probed at radii bracket * 2**(j - 63), j = 0..63, in a
    single batched density call; the crossing is then bisected inside the
    first octave whose probe falls below the threshold.  Scanning outward
    before bisecting keeps the result at the near boundary when the ray
    re-enters the high-density region further out; plain bisection over the
    full bracket may converge to any of the crossings.  A ray whose probes
    all stay at or above the threshold reports no crossing.  ``rtol`` is
    measured against the shrinking upper endpoint, i.e. the root itself.
    Non-finite density values raise :class:`NumericalError` carrying the
    offending point.
    """
    dirs = np.asarray(directions, dtype=float)
    n_dir, d = dirs.shape

    def g_at(points):
        vals = np.asarray(logdens(points), dtype=float)
        bad = ~np.isfinite(vals)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise NumericalError(
                f"log-density returned non-finite value {vals[k]!r}",
                point=points[k],
            )
        return vals - log_c

    octaves = np.ldexp(1.0, np.arange(_SCAN_OCTAVES) - (_SCAN_OCTAVES - 1))
    radii = np.asarray(brackets, dtype=float)[:, None] * octaves[None, :]
    probes = origin[None, None, :] + radii[:, :, None] * dirs[:, None, :]
    g = g_at(probes.reshape(n_dir * _SCAN_OCTAVES, d)).reshape(n_dir, _SCAN_OCTAVES)

    out = np.full(n_dir, np.nan)
    below = g < 0.0
    active = below.any(axis=1)
    if not np.any(active):
        return out
    hit = np.flatnonzero(active)
    first = np.argmax(below[hit], axis=1)
    lo = np.zeros(n_dir)
    hi = np.full(n_dir, np.nan)
    hi[hit] = radii[hit, first]
    prev = first > 0
    lo[hit[prev]] = radii[hit[prev], first[prev] - 1]
    for _ in range(_MAX_BISECT_ITER):
        run = active & (hi - lo > rtol * hi)
        if not np.any(run):
            break
        idx = np.flatnonzero(run)
        mid = 0.5 * (lo[idx] + hi[idx])
        gm = g_at(origin + mid[:, None] * dirs[idx])
        inside = gm >= 0.0
        lo[idx[inside]] = mid[inside]
        hi[idx[~inside]] = mid[~inside]
    out[hit] = 0.5 * (lo[hit] + hi[hit])
    return out


@dataclass(frozen=True)
class CoveringConfig:
    """Knobs for the covering construction.

    ``subsample_rate`` is the fraction of high-density points promoted to
    candidate centers (floored at one candidate).  ``bisection_tol`` is
    relative to the located boundary radius, not to the search bracket:
    on strongly curved targets the bracket (the candidate-cloud diameter)
    can exceed the local boundary distance by many orders of magnitude,
    and a bracket-relative tolerance would inflate every semi-axis.
    """

    alpha: float
    rng_seed: int
    subsample_rate: float = 0.075
    bisection_tol: float = 1.0e-8

    def __post_init__(self):
        if not (0.0 < self.subsample_rate <= 1.0):
            raise ValueError(
                f"subsample_rate must lie in (0, 1], got {self.subsample_rate!r}"
            )
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie strictly in (0, 1), got {self.alpha!r}")
        if self.bisection_tol <= 0.0:
            raise ValueError(f"bisection_tol must be positive, got {self.bisection_tol!r}")


@dataclass(frozen=True)
class EllipsoidUnion:
    """A disjoint union of ellipsoids with exact total volume.

    Disjointness is certified, not assumed: for every pair, the distance
    between centers is at least the sum of the two largest semi-axes
    (bounding spheres do not touch), so volumes add exactly.
    """

    ellipsoids: tuple[Ellipsoid, ...]
    total_volume: float
    log_threshold: float
    d: int

    def __post_init__(self):
        es = tuple(self.ellipsoids)
        if len(es) == 0:
            raise ValueError("an ellipsoid union must hold at least one ellipsoid")
        if any(e.d != self.d for e in es):
            raise ValueError("all ellipsoids must share the union dimension")
        vol_sum = float(sum(e.volume() for e in es))
        if not math.isclose(self.total_volume, vol_sum, rel_tol=_VOLUME_REL_TOL):
            raise ValueError(
                f"total_volume {self.total_volume!r} does not match "
                f"the ellipsoid volume sum {vol_sum!r}"
            )
        centers = np.stack([e.center for e in es])
        radii = np.array([e.max_semi_axis for e in es])
        for i in range(len(es)):
            dist = np.linalg.norm(centers[i + 1 :] - centers[i], axis=1)
            if np.any(dist < radii[i + 1 :] + radii[i]):
                j = i + 1 + int(np.flatnonzero(dist < radii[i + 1 :] + radii[i])[0])
                raise ValueError(
                    f"bounding spheres of ellipsoids {i} and {j} overlap"
                )
        object.__setattr__(self, "ellipsoids", es)

    @property
    def n_ellipsoids(self) -> int:
        return len(self.ellipsoids)

    def contains(self, points: np.ndarray) -> np.ndarray | bool:
        """Membership in any ellipsoid, with a bounding-sphere pre-test."""
        p = np.asarray(points, dtype=float)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        if p.shape[1] != self.d:
            raise DimensionError(
                f"points have dimension {p.shape[1]}, union has {self.d}"
            )
        inside = np.zeros(p.shape[0], dtype=bool)
        for e in self.ellipsoids:
            todo = ~inside
            if not np.any(todo):
                break
            diff = p[todo] - e.center
            near = np.einsum("ij,ij->i", diff, diff) <= e.max_semi_axis**2
            if not np.any(near):
                continue
            idx = np.flatnonzero(todo)[near]
            inside[idx] = e.contains(p[idx])
        return bool(inside[0]) if single else inside

    def uniform_sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Uniform on the union: pick by volume share, then within.

        Valid precisely because the members are disjoint.
        """
        if n < 1:
            raise ValueError(f"n must be at least 1, got {n!r}")
        volumes = np.array([e.volume() for e in self.ellipsoids])
        which = choice_index(rng, volumes, n)
        out = np.empty((n, self.d))
        for j, e in enumerate(self.ellipsoids):
            slots = np.flatnonzero(which == j)
            if slots.size:
                out[slots] = e.uniform_sample(rng, slots.size)
        return out

    def coverage_fraction(self, part: HpdPartition) -> float:
        """Share of the partition's high-density points inside the union."""
        if part.hpd_points.size == 0:
            return 0.0
        return float(np.mean(self.contains(part.hpd_points.draws)))


def _max_pairwise_distance(points: np.ndarray) -> float:
    """Largest Euclidean distance between any two rows, O(n^2) time, O(n) memory."""
    best = 0.0
    for i in range(points.shape[0] - 1):
        diff = points[i + 1 :] - points[i]
        dist_sq = float(np.max(np.einsum("ij,ij->i", diff, diff)))
        if dist_sq > best:
            best = dist_sq
    return math.sqrt(best)


def build_covering(part: HpdPartition, cfg: CoveringConfig, logdens) -> EllipsoidUnion:
    """Greedy disjoint-ellipsoid covering of ``part.hpd_points``.

    ``logdens`` must evaluate the same unnormalized log-posterior that
    produced the partition, on an (n, d) batch of points.
    """
    hpd = part.hpd_points
    lpd = part.lpd_points
    if hpd.size == 0:
        raise EmptyHpdError("no high-density points to cover")
    if lpd.size == 0:
        raise DegenerateCoveringError(
            "no low-density points: every axis search would be unbounded"
        )
    d = hpd.d
    rng = make_rng(cfg.rng_seed)
    n_cand = max(1, math.floor(cfg.subsample_rate * hpd.size))
    picked = random_permutation(rng, hpd.size)[:n_cand]
    # highest log-density first; ties broken by original index ascending
    order = np.lexsort((picked, -hpd.log_densities[picked]))
    cand = hpd.draws[picked][order]
    cand_ld = hpd.log_densities[picked][order]

    if n_cand >= 2:
        r_max = _max_pairwise_distance(cand)
    else:
        r_max = float(np.min(np.linalg.norm(lpd.draws - cand[0], axis=1)))
    log_c = part.log_threshold

    available = np.ones(n_cand, dtype=bool)
    accepted: list[Ellipsoid] = []
    for idx in range(n_cand):
        if not available[idx]:
            continue
        available[idx] = False
        theta = cand[idx]
        diff = lpd.draws - theta
        dist_sq = np.einsum("ij,ij->i", diff, diff)
        nearest = int(np.argmin(dist_sq))
        gap = math.sqrt(float(dist_sq[nearest]))
        u1 = (lpd.draws[nearest] - theta) / gap
        basis = gram_schmidt(u1)

        # every axis is probed in both signs and takes the smaller crossing,
        # so each axis endpoint stays inside the level set on both sides;
        # the widened forward bracket keeps the known sub-threshold point
        # (the nearest low-density draw) inside the searched range
        directions = [u1, -u1]
        brackets = [max(r_max, gap), r_max]
        for i in range(1, d):
            directions.append(basis[:, i])
            directions.append(-basis[:, i])
            brackets.extend([r_max, r_max])
        brackets_arr = np.asarray(brackets)
        radii = _first_crossing_radii(
            logdens,
            theta,
            np.asarray(directions),
            log_c,
            brackets_arr,
            rtol=cfg.bisection_tol,
        )
        # no crossing inside the bracket means the density stays above the
        # threshold there; fall back to the conservative in-range extent
        semi = np.empty(d)
        for i in range(d):
            pair = radii[2 * i : 2 * i + 2]
            finite = pair[np.isfinite(pair)]
            semi[i] = float(np.min(finite)) if finite.size else r_max

        s_max = float(np.max(semi))
        overlap = any(
            float(np.linalg.norm(theta - e.center)) < s_max + e.max_semi_axis
            for e in accepted
        )
        if overlap:
            continue
        ellipsoid = Ellipsoid(center=theta, axes=basis, semi_axes=semi)
        accepted.append(ellipsoid)
        still = np.flatnonzero(available)
        if still.size:
            inside = ellipsoid.mahalanobis_sq(cand[still]) <= 1.0
            available[still[inside]] = False

    if not accepted:  # pragma: no cover - first candidate is always accepted
        raise DegenerateCoveringError("every candidate was rejected")
    total = float(sum(e.volume() for e in accepted))
    return EllipsoidUnion(
        ellipsoids=tuple(accepted),
        total_volume=total,
        log_threshold=log_c,
        d=d,
    )


def save_union(path, union: EllipsoidUnion) -> None:
    """Text serialization; floats at 17 significant digits round-trip exactly.

    One `e` record per ellipsoid: d center coordinates, d*d axis-matrix
    entries (row-major, axis vectors in columns), d semi-axes, volume.
    """
    lines = [
        _FORMAT_TAG,
        f"d = {union.d}",
        f"log_threshold = {union.log_threshold:.17g}",
        f"total_volume = {union.total_volume:.17g}",
        f"count = {union.n_ellipsoids}",
    ]
    for e in union.ellipsoids:
        cells = (
            [f"{x:.17g}" for x in e.center]
            + [f"{x:.17g}" for x in e.axes.ravel()]
            + [f"{x:.17g}" for x in e.semi_axes]
            + [f"{e.volume():.17g}"]
        )
        lines.append("e " + " ".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_union(path) -> EllipsoidUnion:
    """Inverse of :func:`save_union`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != _FORMAT_TAG:
        raise ValueError(f"{path}: not an ellipsoid-union file")

    def keyed(line: str, key: str) -> str:
        prefix = key + " = "
        if not line.startswith(prefix):
            raise ValueError(f"{path}: expected '{key} = ...', got {line!r}")
        return line[len(prefix) :]

    d = int(keyed(lines[1], "d"))
    log_threshold = float(keyed(lines[2], "log_threshold"))
    total_volume = float(keyed(lines[3], "total_volume"))
    count = int(keyed(lines[4], "count"))
    records = lines[5:]
    if len(records) != count:
        raise ValueError(f"{path}: expected {count} records, found {len(records)}")
    ellipsoids = []
    want = d + d * d + d + 1
    for rec in records:
        if not rec.startswith("e "):
            raise ValueError(f"{path}: malformed record {rec!r}")
        nums = [float(tok) for tok in rec[2:].split()]
        if len(nums) != want:
            raise ValueError(f"{path}: record has {len(nums)} numbers, expected {want}")
        center = np.asarray(nums[:d])
        axes = np.asarray(nums[d : d + d * d]).reshape(d, d)
        semi = np.asarray(nums[d + d * d : d + d * d + d])
        ellipsoids.append(Ellipsoid(center=center, axes=axes, semi_axes=semi))
    return EllipsoidUnion(
        ellipsoids=tuple(ellipsoids),
        total_volume=total_volume,
        log_threshold=log_threshold,
        d=d,
    )
