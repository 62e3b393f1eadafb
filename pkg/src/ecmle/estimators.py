"""Evidence estimators built on the reciprocal-evidence identity.

For any proper density phi supported inside the posterior's support, the
posterior expectation of phi(theta) / (prior x likelihood) equals 1/Z, so
Z is estimated from the evaluation half of a draw set as

    log Zinv_hat = logsumexp_t( log phi(theta_t) - log pi~(theta_t) ) - log T

with log_z = -log Zinv_hat.  The estimators differ only in phi: the
classic harmonic mean (phi = prior), a moment-matched Gaussian, the same
Gaussian truncated to a Mahalanobis ball, the uniform density on that
ball, the uniform density on the ball intersected with a density level
set (volume estimated by Monte Carlo), and the uniform density on a
disjoint ellipsoid covering of the high-density region.  Every support is
shaped by the build half alone so the evaluation sum stays unbiased on
the reciprocal scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .covering import CoveringConfig, EllipsoidUnion, build_covering
from .errors import (
    EmptyInputError,
    EmptySupportError,
    NumericalError,
    SingularCovarianceError,
)
from .hpd import DrawSet, HpdPartition, hpd_threshold, partition_from_halves, split
from .rng import standard_normal
from .special import chi2_cdf, log_unit_ball_volume

__all__ = [
    "Method",
    "EvidenceEstimate",
    "ThamesRegion",
    "VarianceProxyResult",
    "ecmle",
    "ecmle_symmetrized",
    "hme_newton_raftery",
    "gd_gaussian",
    "gd_truncated_gaussian",
    "thames",
    "mix_thames",
    "ks_truncation_level",
    "variance_proxy",
]


class Method(str, Enum):
    ECMLE = "ecmle"
    ECMLE_SYMMETRIZED = "ecmle_symmetrized"
    HME = "hme"
    GD_GAUSSIAN = "gd_gaussian"
    GD_TRUNCGAUSS = "gd_truncgauss"
    THAMES = "thames"
    MIX_THAMES = "mix_thames"


@dataclass(frozen=True)
class EvidenceEstimate:
    """A log-evidence estimate with method metadata and diagnostics."""

    log_z: float
    method: Method
    n_eval: int
    n_inside: int
    support_volume: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.log_z):
            raise ValueError(f"log_z must be finite, got {self.log_z!r}")
        if self.n_inside > self.n_eval:
            raise ValueError("n_inside cannot exceed n_eval")


def _logsumexp(values: np.ndarray) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return -math.inf
    m = float(np.max(v))
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(v - m))))


def _build_moments(build: DrawSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean, covariance (ddof 1), and Cholesky factor of the build half."""
    x = build.draws
    n, d = x.shape
    if n < 2:
        raise SingularCovarianceError("need at least two build draws for a covariance")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError(
            "build-half sample covariance is not positive definite"
        ) from exc
    if not np.all(np.isfinite(chol)) or np.any(np.diag(chol) <= 0.0):
        raise SingularCovarianceError("degenerate build-half covariance factor")
    return mean, cov, chol


@dataclass(frozen=True)
class ThamesRegion:
    """Mahalanobis ball { (theta - center)^T Cov^-1 (theta - center) <= r^2 }.

    The exact volume is the unit-ball volume times r^d sqrt(det Cov)
    (positive determinant exponent: the set inflates with Cov).
    """

    center: np.ndarray
    covariance: np.ndarray
    radius: float
    volume: float = field(init=False)
    log_volume: float = field(init=False)
    log_truncation: Optional[float] = None
    chol: np.ndarray = field(init=False)

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        cov = np.asarray(self.covariance, dtype=float)
        d = center.shape[0]
        if cov.shape != (d, d):
            raise ValueError(f"covariance must be ({d}, {d}), got {cov.shape}")
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive and finite, got {self.radius!r}")
        try:
            chol = np.linalg.cholesky(0.5 * (cov + cov.T))
        except np.linalg.LinAlgError as exc:
            raise SingularCovarianceError("covariance is not positive definite") from exc
        log_volume = (
            log_unit_ball_volume(d)
            + d * math.log(self.radius)
            + float(np.sum(np.log(np.diag(chol))))
        )
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "chol", chol)
        object.__setattr__(self, "log_volume", log_volume)
        object.__setattr__(self, "volume", math.exp(log_volume))

    @classmethod
    def from_build(
        cls, build: DrawSet, r: Optional[float] = None, log_truncation: Optional[float] = None
    ) -> "ThamesRegion":
        mean, cov, _ = _build_moments(build)
        radius = math.sqrt(build.d + 1.0) if r is None else float(r)
        return cls(center=mean, covariance=cov, radius=radius, log_truncation=log_truncation)

    @property
    def d(self) -> int:
        return self.center.shape[0]

    def mahalanobis_sq(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        y = np.linalg.solve(self.chol, (p - self.center).T)
        return np.einsum("ij,ij->j", y, y)

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.mahalanobis_sq(points) <= self.radius**2

    def uniform_sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = standard_normal(rng, (n, self.d))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        radii = rng.random(n) ** (1.0 / self.d)
        ball = z / norms * radii[:, None] * self.radius
        return self.center + ball @ self.chol.T


def _gaussian_logpdf(points: np.ndarray, mean: np.ndarray, chol: np.ndarray) -> np.ndarray:
    diff = np.atleast_2d(points) - mean
    y = np.linalg.solve(chol, diff.T)
    quad = np.einsum("ij,ij->j", y, y)
    d = mean.shape[0]
    logdet_half = float(np.sum(np.log(np.diag(chol))))
    return -0.5 * d * math.log(2.0 * math.pi) - logdet_half - 0.5 * quad


def _require_eval(eval_half: DrawSet) -> int:
    if eval_half.size == 0:
        raise EmptyInputError("evaluation half is empty")
    return eval_half.size


def ecmle(part: HpdPartition, union: EllipsoidUnion) -> EvidenceEstimate:
    """Uniform instrumental on a disjoint ellipsoid covering.

    log Zinv_hat = logsumexp over evaluation draws inside the union of
    (-log V_total - log pi~) - log T.  The union must have been built from
    the partition's build half only.
    """
    t_eval = _require_eval(part.eval_half)
    inside = union.contains(part.eval_half.draws)
    n_inside = int(np.sum(inside))
    if n_inside == 0:
        raise EmptySupportError(
            "no evaluation draw fell inside the covering; alpha or the "
            "subsample rate is probably too aggressive"
        )
    log_volume = math.log(union.total_volume)
    terms = -log_volume - part.eval_half.log_densities[inside]
    log_zinv = _logsumexp(terms) - math.log(t_eval)
    return EvidenceEstimate(
        log_z=-log_zinv,
        method=Method.ECMLE,
        n_eval=t_eval,
        n_inside=n_inside,
        support_volume=union.total_volume,
        diagnostics={
            "n_ellipsoids": float(union.n_ellipsoids),
            "coverage_fraction": union.coverage_fraction(part),
        },
    )


def ecmle_symmetrized(
    sample: DrawSet, alpha: float, cfg: CoveringConfig, logdens
) -> EvidenceEstimate:
    """Run the covering pipeline in both half orders and pool the estimates.

    Each direction yields an unbiased estimate of 1/Z, so the pool is the
    arithmetic mean on the reciprocal scale.  The absolute log-gap between
    the two single-direction estimates is reported as a diagnostic.
    """
    first, second = split(sample)
    results = []
    for build, evaluate in ((first, second), (second, first)):
        part = partition_from_halves(build, evaluate, alpha)
        union = build_covering(part, cfg, logdens)
        results.append(ecmle(part, union))
    log_zinv = float(np.logaddexp(-results[0].log_z, -results[1].log_z)) - math.log(2.0)
    return EvidenceEstimate(
        log_z=-log_zinv,
        method=Method.ECMLE_SYMMETRIZED,
        n_eval=sample.size,
        n_inside=results[0].n_inside + results[1].n_inside,
        support_volume=None,
        diagnostics={
            "log_z_forward": results[0].log_z,
            "log_z_reverse": results[1].log_z,
            "direction_abs_gap": abs(results[0].log_z - results[1].log_z),
        },
    )


def hme_newton_raftery(eval_half: DrawSet, model) -> EvidenceEstimate:
    """Classic harmonic mean of the likelihood (phi = prior).

    Kept as a baseline; its variance can be infinite, which the
    diagnostics flag unconditionally.
    """
    t_eval = _require_eval(eval_half)
    log_lik = np.atleast_1d(model.log_likelihood(eval_half.draws))
    log_zinv = _logsumexp(-log_lik) - math.log(t_eval)
    return EvidenceEstimate(
        log_z=-log_zinv,
        method=Method.HME,
        n_eval=t_eval,
        n_inside=t_eval,
        support_volume=None,
        diagnostics={"infinite_variance_risk": 1.0},
    )


def gd_gaussian(eval_half: DrawSet, build: DrawSet, model) -> EvidenceEstimate:
    """Moment-matched Gaussian instrumental (mean/covariance of build half)."""
    t_eval = _require_eval(eval_half)
    mean, _, chol = _build_moments(build)
    log_phi = _gaussian_logpdf(eval_half.draws, mean, chol)
    log_zinv = _logsumexp(log_phi - eval_half.log_densities) - math.log(t_eval)
    return EvidenceEstimate(
        log_z=-log_zinv,
        method=Method.GD_GAUSSIAN,
        n_eval=t_eval,
        n_inside=t_eval,
        support_volume=None,
        diagnostics={},
    )


def gd_truncated_gaussian(
    eval_half: DrawSet, build: DrawSet, model, r: float
) -> EvidenceEstimate:
    """Gaussian instrumental truncated to a Mahalanobis ball of radius r.

    The truncated density renormalizes by P(chi2_d <= r^2); the sum runs
    over evaluation draws inside the ball only.
    """
    if r <= 0.0:
        raise ValueError(f"r must be positive, got {r!r}")
    t_eval = _require_eval(eval_half)
    region = ThamesRegion.from_build(build, r)
    inside = region.contains(eval_half.draws)
    n_inside = int(np.sum(inside))
    if n_inside == 0:
        raise EmptySupportError("no evaluation draw fell inside the truncation ball")
    log_norm = math.log(chi2_cdf(r * r, region.d))
    log_phi = _gaussian_logpdf(eval_half.draws[inside], region.center, region.chol)
    terms = log_phi - log_norm - eval_half.log_densities[inside]
    log_zinv = _logsumexp(terms) - math.log(t_eval)
    return EvidenceEstimate(
        log_z=-log_zinv,
        method=Method.GD_TRUNCGAUSS,
        n_eval=t_eval,
        n_inside=n_inside,
        support_volume=region.volume,
        diagnostics={"radius": r},
    )


def thames(
    eval_half: DrawSet, build: DrawSet, model, r: Optional[float] = None
) -> EvidenceEstimate:
    """Uniform instrumental on the moment-matched Mahalanobis ball.

    Default radius sqrt(d + 1), which holds slightly more than the
    posterior bulk for Gaussian-like targets.
    """
    t_eval = _require_eval(eval_half)
    region = ThamesRegion.from_build(build, r)
    inside = region.contains(eval_half.draws)
    n_inside = int(np.sum(inside))
    if n_inside == 0:
        raise EmptySupportError("no evaluation draw fell inside the support ball")
    terms = -region.log_volume - eval_half.log_densities[inside]
    log_zinv = _logsumexp(terms) - math.log(t_eval)
    return EvidenceEstimate(
        log_z=-log_zinv,
        method=Method.THAMES,
        n_eval=t_eval,
        n_inside=n_inside,
        support_volume=region.volume,
        diagnostics={"radius": region.radius},
    )


def mix_thames(
    eval_half: DrawSet,
    build: DrawSet,
    model,
    rng: np.random.Generator,
    r: Optional[float] = None,
    alpha_trunc: float = 0.5,
    n_vol: int = 10_000,
) -> EvidenceEstimate:
    """Uniform instrumental on the ball intersected with a density level set.

    The level is the empirical (1 - alpha_trunc)-quantile of the build
    log-densities; the intersection volume is the ball volume times the
    Monte Carlo fraction of uniform-on-ball points above the level.
    Suitable for multimodal targets where the plain ball dilutes mass over
    low-density gaps.
    """
    if n_vol < 1000:
        raise ValueError(f"n_vol must be at least 1000, got {n_vol!r}")
    if not (0.0 < alpha_trunc < 1.0):
        raise ValueError(f"alpha_trunc must lie strictly in (0, 1), got {alpha_trunc!r}")
    t_eval = _require_eval(eval_half)
    log_q = hpd_threshold(build.log_densities, alpha_trunc)
    region = ThamesRegion.from_build(build, r, log_truncation=log_q)

    probes = region.uniform_sample(rng, n_vol)
    probe_ld = np.atleast_1d(model.log_unnorm_posterior(probes))
    bad = np.isnan(probe_ld) | (probe_ld == math.inf)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise NumericalError(
            f"log-density returned non-real value {probe_ld[k]!r}", point=probes[k]
        )
    hits = int(np.sum(probe_ld > log_q))
    if hits == 0:
        raise EmptySupportError("volume Monte Carlo found no point above the level")
    frac = hits / n_vol
    log_volume = region.log_volume + math.log(frac)

    inside = region.contains(eval_half.draws) & (eval_half.log_densities > log_q)
    n_inside = int(np.sum(inside))
    if n_inside == 0:
        raise EmptySupportError("no evaluation draw fell inside the truncated support")
    terms = -log_volume - eval_half.log_densities[inside]
    log_zinv = _logsumexp(terms) - math.log(t_eval)
    return EvidenceEstimate(
        log_z=-log_zinv,
        method=Method.MIX_THAMES,
        n_eval=t_eval,
        n_inside=n_inside,
        support_volume=math.exp(log_volume),
        diagnostics={
            "radius": region.radius,
            "log_truncation": log_q,
            "volume_fraction": frac,
            "volume_mc_se": region.volume * math.sqrt(frac * (1.0 - frac) / n_vol),
        },
    )


def ks_truncation_level(build: DrawSet, d: int) -> float:
    """Data-driven level for the density truncation.

    Gaussian-like posteriors make 2 (lmax - l(theta)) approximately
    chi-square with d degrees of freedom; for each candidate level the
    retained upper tail is compared against the chi-square law conditioned
    on that same tail, and the level with the smallest Kolmogorov distance
    wins (ties to the smaller level).
    """
    if build.size == 0:
        raise EmptyInputError("cannot pick a truncation level from an empty draw set")
    ld = build.log_densities
    l_max = float(np.max(ld))
    grid = [round(0.05 * j, 2) for j in range(1, 20)]
    best_alpha = grid[0]
    best_d = math.inf
    for alpha in grid:
        q = hpd_threshold(ld, alpha)
        kept = np.sort(2.0 * (l_max - ld[ld >= q]))
        x_cut = 2.0 * (l_max - q)
        denom = chi2_cdf(x_cut, d)
        if denom <= 0.0:
            stat = 1.0
        else:
            cdf = np.array([chi2_cdf(float(x), d) for x in kept]) / denom
            n = kept.size
            upper = np.arange(1, n + 1) / n - cdf
            lower = cdf - np.arange(0, n) / n
            stat = float(max(np.max(upper), np.max(lower)))
        if stat < best_d:
            best_d = stat
            best_alpha = alpha
    return best_alpha


@dataclass(frozen=True)
class VarianceProxyResult:
    """Leading-order second-moment proxy with its Monte Carlo error.

    ``log_value`` is always finite when the inputs are; ``value`` is its
    exponential and may overflow for extreme scales, so comparisons should
    prefer the log form.
    """

    value: float
    log_value: float
    mc_se: float


def variance_proxy(
    support: Union[EllipsoidUnion, ThamesRegion],
    model,
    t_draws: int,
    n_mc: int,
    rng: np.random.Generator,
) -> VarianceProxyResult:
    """Second moment of the reciprocal-evidence estimator, to leading order.

    Equals (1 / (T V)) x the uniform-on-support average of 1 / pi~, which
    is estimated from n_mc uniform support points.
    """
    if n_mc < 1000:
        raise ValueError(f"n_mc must be at least 1000, got {n_mc!r}")
    if t_draws < 1:
        raise ValueError(f"t_draws must be at least 1, got {t_draws!r}")
    if isinstance(support, EllipsoidUnion):
        log_volume = math.log(support.total_volume)
    else:
        log_volume = support.log_volume
    points = support.uniform_sample(rng, n_mc)
    ld = np.atleast_1d(model.log_unnorm_posterior(points))
    if not np.all(np.isfinite(ld)):
        k = int(np.flatnonzero(~np.isfinite(ld))[0])
        raise NumericalError(
            f"log-density on the support is not finite: {ld[k]!r}", point=points[k]
        )
    neg = -ld
    shift = float(np.max(neg))
    scaled = np.exp(neg - shift)
    mean_scaled = float(np.mean(scaled))
    log_value = shift + math.log(mean_scaled) - math.log(t_draws) - log_volume
    var_scaled = float(np.mean((scaled - mean_scaled) ** 2))
    if var_scaled <= 0.0:
        mc_se = 0.0
    else:
        log_se = (
            shift
            + 0.5 * math.log(var_scaled / n_mc)
            - math.log(t_draws)
            - log_volume
        )
        mc_se = math.exp(log_se)
    return VarianceProxyResult(
        value=math.exp(log_value),
        log_value=log_value,
        mc_se=mc_se,
    )
