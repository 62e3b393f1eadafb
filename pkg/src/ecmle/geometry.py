"""Ellipsoid primitives: exact volumes, membership, sampling, boundary search.

An ellipsoid is stored in factored form (center c, orthonormal axis matrix
U with axis vectors as columns, semi-axis lengths s) so that volume and
Mahalanobis distance come straight from the factors with no matrix
inversion anywhere:

    volume = unit_ball_volume(d) * prod(s)
    maha2(p) = || diag(1/s) U^T (p - c) ||^2

Membership is closed: points with maha2 == 1 are inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateDirectionError, NumericalError
from .rng import standard_normal
from .special import log_unit_ball_volume, unit_ball_volume

__all__ = ["Ellipsoid", "gram_schmidt", "bisect_boundary", "bisect_boundary_many"]

_ORTHO_TOL = 1.0e-10
_MAX_BISECT_ITER = 100


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Ellipsoid:
    """An axis-factored ellipsoid { c + U diag(s) z : ||z|| <= 1 }.

    ``axes`` holds one unit axis vector per column; columns must be
    orthonormal to within Frobenius norm 1e-10.  ``max_semi_axis`` is
    derived and equals ``semi_axes.max()`` exactly; it is the radius of
    the bounding sphere used by the disjointness certificate.
    """

    center: np.ndarray
    axes: np.ndarray
    semi_axes: np.ndarray
    max_semi_axis: float = field(init=False)

    def __post_init__(self):
        center = _readonly(np.atleast_1d(self.center))
        axes = _readonly(self.axes)
        semi = _readonly(np.atleast_1d(self.semi_axes))
        d = center.shape[0]
        if center.ndim != 1 or d < 1:
            raise ValueError("center must be a 1-D vector")
        if axes.shape != (d, d):
            raise ValueError(f"axes must be ({d}, {d}), got {axes.shape}")
        if semi.shape != (d,):
            raise ValueError(f"semi_axes must be ({d},), got {semi.shape}")
        if not (np.all(np.isfinite(center)) and np.all(np.isfinite(axes))):
            raise ValueError("center and axes must be finite")
        if not np.all(np.isfinite(semi)) or np.any(semi <= 0.0):
            raise ValueError("semi_axes must be finite and strictly positive")
        gram_residual = axes.T @ axes - np.eye(d)
        if np.linalg.norm(gram_residual, "fro") > _ORTHO_TOL:
            raise ValueError("axes columns are not orthonormal to 1e-10")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "semi_axes", semi)
        object.__setattr__(self, "max_semi_axis", float(semi.max()))

    @property
    def d(self) -> int:
        return self.center.shape[0]

    def volume(self) -> float:
        """Exact volume: unit-ball volume times the semi-axis product."""
        return unit_ball_volume(self.d) * float(np.prod(self.semi_axes))

    def log_volume(self) -> float:
        return log_unit_ball_volume(self.d) + float(np.sum(np.log(self.semi_axes)))

    def mahalanobis_sq(self, points: np.ndarray) -> np.ndarray | float:
        """||diag(1/s) U^T (p - c)||^2 per point, with no inversion.

        Accepts a single point (d,) or a batch (n, d); returns a float or
        an (n,) array correspondingly.
        """
        p = np.asarray(points, dtype=float)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        if p.shape[1] != self.d:
            raise ValueError(f"points must have {self.d} columns, got {p.shape[1]}")
        scaled = ((p - self.center) @ self.axes) / self.semi_axes
        m = np.einsum("ij,ij->i", scaled, scaled)
        return float(m[0]) if single else m

    def contains(self, points: np.ndarray) -> np.ndarray | bool:
        """Closed membership test: mahalanobis_sq(p) <= 1."""
        m = self.mahalanobis_sq(points)
        if isinstance(m, float):
            return bool(m <= 1.0)
        return m <= 1.0

    def uniform_sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n points uniform on the ellipsoid volume.

        Direction from a normalized Gaussian vector, radius from
        U(0,1)^(1/d), then the affine map c + U diag(s).
        """
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n!r}")
        z = standard_normal(rng, (n, self.d))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        # probability-zero event, but never divide by zero
        norms[norms == 0.0] = 1.0
        radii = rng.random(n) ** (1.0 / self.d)
        ball = z / norms * radii[:, None]
        return self.center + (ball * self.semi_axes) @ self.axes.T


def gram_schmidt(direction: np.ndarray) -> np.ndarray:
    """An orthonormal basis whose first column is ``direction`` normalized.

    The remaining columns are built by modified Gram-Schmidt from the
    standard basis seeds e_2, ..., e_d, e_1 in that order, skipping any
    seed whose residual norm falls below 1e-10.  One re-orthogonalization
    pass keeps the Gram residual at machine-epsilon level.
    """
    v = np.asarray(direction, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("direction must be a 1-D vector")
    if not np.all(np.isfinite(v)):
        raise DegenerateDirectionError("direction has non-finite entries")
    norm = float(np.linalg.norm(v))
    if norm < 1.0e-12:
        raise DegenerateDirectionError(f"direction norm {norm:.3e} is too small")
    d = v.size
    cols = [v / norm]
    seed_order = list(range(1, d)) + [0]
    for j in seed_order:
        if len(cols) == d:
            break
        w = np.zeros(d)
        w[j] = 1.0
        for _ in range(2):  # second pass re-orthogonalizes
            for c in cols:
                w = w - np.dot(c, w) * c
        wnorm = float(np.linalg.norm(w))
        if wnorm < _ORTHO_TOL:
            continue
        cols.append(w / wnorm)
    if len(cols) != d:  # pragma: no cover - seeds always span R^d
        raise ArithmeticError("basis construction exhausted its seed pool")
    return np.column_stack(cols)


def bisect_boundary(
    logdens: Callable[[np.ndarray], float],
    origin: np.ndarray,
    direction: np.ndarray,
    log_c: float,
    bracket_hi: float,
    tol: Optional[float] = None,
    rtol: float = 0.0,
) -> Optional[float]:
    """Radius along ``direction`` where ``logdens`` crosses ``log_c``.

    ``origin`` must satisfy logdens(origin) >= log_c.  If the density at
    the bracket end still clears the threshold there is no crossing inside
    the bracket and the result is None.  Otherwise classic bisection runs
    until the bracket is narrower than ``tol + rtol * hi`` (defaults:
    tol = 1e-8 * bracket_hi, rtol = 0) or 100 iterations, and the midpoint
    of the final bracket is returned.  ``rtol`` measures precision against
    the shrinking upper endpoint, i.e. against the root itself; callers
    whose bracket is orders of magnitude wider than the root need it to
    avoid meaningless absolute tolerances.  Equality with the threshold
    counts as inside, matching the closed membership convention.  Any
    non-finite density evaluation raises :class:`NumericalError` carrying
    the offending point.
    """
    origin = np.asarray(origin, dtype=float)
    u = np.asarray(direction, dtype=float)
    unorm = float(np.linalg.norm(u))
    if unorm < 1.0e-12:
        raise DegenerateDirectionError("direction norm is too small to bisect along")
    u = u / unorm
    if not (bracket_hi > 0.0 and math.isfinite(bracket_hi)):
        raise ValueError(f"bracket_hi must be positive and finite, got {bracket_hi!r}")
    if tol is None:
        tol = 1.0e-8 * bracket_hi
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    if rtol < 0.0 or not math.isfinite(rtol):
        raise ValueError(f"rtol must be finite and non-negative, got {rtol!r}")

    def g(r: float) -> float:
        point = origin + r * u
        value = float(logdens(point))
        if not math.isfinite(value):
            raise NumericalError(
                f"log-density returned non-finite value {value!r}", point=point
            )
        return value - log_c

    if g(0.0) < 0.0:
        raise ValueError("origin log-density is below the threshold")
    g_hi = g(bracket_hi)
    if g_hi > 0.0:
        return None
    if g_hi == 0.0:
        return float(bracket_hi)
    lo, hi = 0.0, float(bracket_hi)
    for _ in range(_MAX_BISECT_ITER):
        if hi - lo <= tol + rtol * hi:
            break
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bisect_boundary_many(
    logdens_batch: Callable[[np.ndarray], np.ndarray],
    origin: np.ndarray,
    directions: np.ndarray,
    log_c: float,
    bracket_hi: np.ndarray,
    tol: Optional[np.ndarray] = None,
    rtol: float = 0.0,
) -> np.ndarray:
    """Vectorized :func:`bisect_boundary` over several unit directions.

    Produces exactly the radii the scalar routine would, direction by
    direction (same midpoints, same termination rule), but batches all
    density evaluations of one iteration into a single call.  Directions
    with no crossing get NaN.  ``logdens_batch`` maps (n, d) to (n,).
    """
    origin = np.asarray(origin, dtype=float)
    dirs = np.asarray(directions, dtype=float)
    m = dirs.shape[0]
    hi0 = np.broadcast_to(np.asarray(bracket_hi, dtype=float), (m,)).copy()
    if np.any(~np.isfinite(hi0)) or np.any(hi0 <= 0.0):
        raise ValueError("bracket_hi entries must be positive and finite")
    if tol is None:
        tols = 1.0e-8 * hi0
    else:
        tols = np.broadcast_to(np.asarray(tol, dtype=float), (m,)).copy()
    if np.any(tols <= 0.0):
        raise ValueError("tol entries must be positive")
    if rtol < 0.0 or not math.isfinite(rtol):
        raise ValueError(f"rtol must be finite and non-negative, got {rtol!r}")

    def g_at(radii: np.ndarray, which: np.ndarray) -> np.ndarray:
        pts = origin + radii[:, None] * dirs[which]
        vals = np.asarray(logdens_batch(pts), dtype=float)
        bad = ~np.isfinite(vals)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise NumericalError(
                f"log-density returned non-finite value {vals[k]!r}",
                point=pts[k],
            )
        return vals - log_c

    all_idx = np.arange(m)
    g0 = g_at(np.zeros(m), all_idx)
    if np.any(g0 < 0.0):
        raise ValueError("origin log-density is below the threshold")
    g_hi = g_at(hi0, all_idx)

    out = np.full(m, np.nan)
    out[g_hi == 0.0] = hi0[g_hi == 0.0]
    active = g_hi < 0.0
    lo = np.zeros(m)
    hi = hi0.copy()
    for _ in range(_MAX_BISECT_ITER):
        run = active & (hi - lo > tols + rtol * hi)
        if not np.any(run):
            break
        idx = np.flatnonzero(run)
        mid = 0.5 * (lo[idx] + hi[idx])
        gm = g_at(mid, idx)
        inside = gm >= 0.0
        lo[idx[inside]] = mid[inside]
        hi[idx[~inside]] = mid[~inside]
    done = np.flatnonzero(active)
    out[done] = 0.5 * (lo[done] + hi[done])
    return out
