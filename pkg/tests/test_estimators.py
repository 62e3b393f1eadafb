import math

import numpy as np
import pytest
import scipy.stats

from ecmle.covering import CoveringConfig, EllipsoidUnion, build_covering
from ecmle.errors import EmptyInputError, EmptySupportError, NumericalError
from ecmle.estimators import (
    EvidenceEstimate,
    Method,
    ThamesRegion,
    ecmle,
    ecmle_symmetrized,
    gd_gaussian,
    gd_truncated_gaussian,
    hme_newton_raftery,
    ks_truncation_level,
    mix_thames,
    thames,
    variance_proxy,
)
from ecmle.geometry import Ellipsoid
from ecmle.hpd import DrawSet, partition, partition_from_halves, split
from ecmle.rng import make_rng
from ecmle.targets import make_model


class ShiftedLikelihood:
    """Wraps a model, adding a constant to its log-likelihood."""

    def __init__(self, base, shift: float):
        self._base = base
        self._shift = float(shift)

    @property
    def d(self):
        return self._base.d

    @property
    def n_data(self):
        return self._base.n_data

    def log_prior(self, theta):
        return self._base.log_prior(theta)

    def log_likelihood(self, theta):
        return self._base.log_likelihood(theta) + self._shift

    def log_unnorm_posterior(self, theta):
        return self._base.log_unnorm_posterior(theta) + self._shift

    def sample_posterior(self, n, rng):
        ds = self._base.sample_posterior(n, rng)
        return DrawSet(ds.draws, ds.log_densities + self._shift)

    def exact_log_evidence(self):
        return self._base.exact_log_evidence() + self._shift


class ConstantLikelihood:
    """Flat likelihood exp(c0) with a standard Gaussian prior."""

    def __init__(self, c0: float, d: int = 2):
        self._c0 = float(c0)
        self._d = d

    @property
    def d(self):
        return self._d

    def log_likelihood(self, theta):
        t = np.atleast_2d(np.asarray(theta, dtype=float))
        out = np.full(t.shape[0], self._c0)
        return float(out[0]) if np.asarray(theta).ndim == 1 else out

    def log_prior(self, theta):
        t = np.atleast_2d(np.asarray(theta, dtype=float))
        out = -0.5 * self._d * math.log(2 * math.pi) - 0.5 * np.einsum("ij,ij->i", t, t)
        return float(out[0]) if np.asarray(theta).ndim == 1 else out

    def log_unnorm_posterior(self, theta):
        return self.log_prior(theta) + self.log_likelihood(theta)


def gaussian_drawset(d: int, n: int, seed: int) -> DrawSet:
    z = make_rng(seed).standard_normal((n, d))
    ld = -0.5 * d * math.log(2 * math.pi) - 0.5 * np.einsum("ij,ij->i", z, z)
    return DrawSet(z, ld)


def run_ecmle(model, t_half: int, alpha: float, seed: int, k: float = 0.075):
    sample = model.sample_posterior(2 * t_half, make_rng(seed))
    part = partition(sample, alpha)
    cfg = CoveringConfig(alpha=alpha, rng_seed=seed + 250_000, subsample_rate=k)
    union = build_covering(part, cfg, model.log_unnorm_posterior)
    return ecmle(part, union), part, union


def test_evidence_estimate_validation():
    with pytest.raises(ValueError):
        EvidenceEstimate(log_z=float("nan"), method=Method.HME, n_eval=10, n_inside=5)
    with pytest.raises(ValueError):
        EvidenceEstimate(log_z=0.0, method=Method.HME, n_eval=10, n_inside=11)


def test_hme_constant_likelihood_is_exact():
    model = ConstantLikelihood(2.5)
    ds = gaussian_drawset(2, 64, seed=1)
    ds = DrawSet(ds.draws, model.log_unnorm_posterior(ds.draws))
    est = hme_newton_raftery(ds, model)
    assert est.log_z == pytest.approx(2.5, abs=1e-12)
    assert est.method is Method.HME
    assert est.n_inside == est.n_eval == 64
    assert est.diagnostics["infinite_variance_risk"] == 1.0


def test_hme_single_draw_returns_that_likelihood():
    model = make_model("gaussian", data_seed=42, n=20, d=2)
    one = model.sample_posterior(1, make_rng(2))
    est = hme_newton_raftery(one, model)
    expected = float(np.atleast_1d(model.log_likelihood(one.draws))[0])
    assert est.log_z == pytest.approx(expected, abs=1e-12)


def test_hme_empty_eval_raises():
    model = make_model("gaussian", data_seed=42)
    with pytest.raises(EmptyInputError):
        hme_newton_raftery(DrawSet(np.empty((0, 2)), np.empty(0)), model)


def test_gd_gaussian_perfect_instrumental_near_zero():
    # target density already normalized, so the true log-evidence is 0
    build = gaussian_drawset(2, 2000, seed=3)
    evaluate = gaussian_drawset(2, 2000, seed=4)
    est = gd_gaussian(evaluate, build, model=None)
    assert est.log_z == pytest.approx(0.0, abs=0.05)
    assert est.n_inside == est.n_eval == 2000


def test_gd_gaussian_matches_dense_recomputation_d1():
    build = DrawSet(np.array([0.1, -0.4, 0.7, 0.2]), np.array([-0.2, -0.5, -0.9, -0.1]))
    evaluate = DrawSet(np.array([0.0, 0.5, -0.3, 0.9]), np.array([-0.3, -0.6, -0.4, -1.2]))
    est = gd_gaussian(evaluate, build, model=None)
    mean = float(build.draws.mean())
    var = float(build.draws.var(ddof=1))
    phi = scipy.stats.norm.logpdf(evaluate.draws[:, 0], loc=mean, scale=math.sqrt(var))
    expected = -(scipy.special.logsumexp(phi - evaluate.log_densities) - math.log(4))
    assert est.log_z == pytest.approx(float(expected), abs=1e-12)


def test_gd_truncated_matches_gaussian_at_huge_radius():
    build = gaussian_drawset(3, 800, seed=5)
    evaluate = gaussian_drawset(3, 800, seed=6)
    full = gd_gaussian(evaluate, build, model=None)
    trunc = gd_truncated_gaussian(evaluate, build, model=None, r=50.0)
    assert trunc.log_z == pytest.approx(full.log_z, abs=1e-10)
    assert trunc.n_inside == trunc.n_eval


def test_gd_truncated_d1_erf_normalizer():
    build = gaussian_drawset(1, 500, seed=7)
    evaluate = gaussian_drawset(1, 500, seed=8)
    r = 1.0
    est = gd_truncated_gaussian(evaluate, build, model=None, r=r)
    mean = float(build.draws.mean())
    sd = math.sqrt(float(build.draws.var(ddof=1)))
    maha = np.abs(evaluate.draws[:, 0] - mean) / sd
    inside = maha <= r
    phi = scipy.stats.norm.logpdf(evaluate.draws[inside, 0], loc=mean, scale=sd)
    log_norm = math.log(math.erf(r / math.sqrt(2.0)))
    terms = phi - log_norm - evaluate.log_densities[inside]
    expected = -(scipy.special.logsumexp(terms) - math.log(evaluate.size))
    assert est.log_z == pytest.approx(float(expected), abs=1e-10)
    assert est.n_inside == int(inside.sum())


def test_gd_truncated_rejects_bad_radius():
    build = gaussian_drawset(2, 100, seed=9)
    with pytest.raises(ValueError):
        gd_truncated_gaussian(build, build, model=None, r=0.0)
    with pytest.raises(ValueError):
        gd_truncated_gaussian(build, build, model=None, r=-1.0)


def test_thames_region_volume_formula():
    build = gaussian_drawset(3, 600, seed=10)
    region = ThamesRegion.from_build(build)
    assert region.radius == pytest.approx(math.sqrt(4.0), rel=1e-14)
    cov = np.cov(build.draws.T, ddof=1)
    expected = (
        math.pi ** 1.5
        * region.radius**3
        * math.sqrt(float(np.linalg.det(cov)))
        / scipy.special.gamma(2.5)
    )
    assert region.volume == pytest.approx(expected, rel=1e-10)
    assert region.log_volume == pytest.approx(math.log(expected), abs=1e-10)


def test_thames_region_membership_and_sampling():
    build = gaussian_drawset(2, 400, seed=11)
    region = ThamesRegion.from_build(build, r=1.5)
    pts = region.uniform_sample(make_rng(12), 4000)
    assert np.all(region.contains(pts))
    assert np.all(region.mahalanobis_sq(pts) <= 1.5**2 + 1e-9)
    with pytest.raises(ValueError):
        ThamesRegion(np.zeros(2), np.eye(2), radius=0.0)


def test_thames_on_cube_close_to_truth():
    model = make_model("cube", data_seed=0, d=2)
    sample = model.sample_posterior(20_000, make_rng(13))
    build, evaluate = split(sample)
    est = thames(evaluate, build, model)
    p = est.n_inside / est.n_eval
    se_log = math.sqrt((1.0 - p) / (p * est.n_eval))
    assert abs(est.log_z) < 4 * se_log + 0.01
    assert est.diagnostics["radius"] == pytest.approx(math.sqrt(3.0))


def test_thames_empty_support_raises():
    build = gaussian_drawset(2, 200, seed=14)
    far = DrawSet(build.draws + 100.0, build.log_densities)
    with pytest.raises(EmptySupportError):
        thames(far, build, model=None)


def test_mix_thames_approaches_thames_as_truncation_vanishes():
    model = make_model("gaussian", data_seed=42, n=20, d=2)
    sample = model.sample_posterior(8000, make_rng(15))
    build, evaluate = split(sample)
    plain = thames(evaluate, build, model)
    mixed = mix_thames(
        evaluate, build, model, make_rng(16), alpha_trunc=0.999, n_vol=40_000
    )
    assert mixed.log_z == pytest.approx(plain.log_z, abs=0.02)
    assert mixed.diagnostics["volume_fraction"] >= 0.99
    assert mixed.support_volume <= plain.support_volume * 1.001


def test_mix_thames_volume_is_ball_times_fraction():
    model = make_model("mixture", data_seed=6, n=2, d=2)
    sample = model.sample_posterior(4000, make_rng(17))
    build, evaluate = split(sample)
    est = mix_thames(evaluate, build, model, make_rng(18), alpha_trunc=0.5)
    region = ThamesRegion.from_build(build)
    frac = est.diagnostics["volume_fraction"]
    assert 0.0 < frac < 1.0
    assert est.support_volume == pytest.approx(region.volume * frac, rel=1e-9)
    assert est.diagnostics["volume_mc_se"] > 0.0
    assert est.diagnostics["log_truncation"] <= float(np.max(build.log_densities))


def test_mix_thames_validation():
    model = make_model("gaussian", data_seed=42)
    sample = model.sample_posterior(2000, make_rng(19))
    build, evaluate = split(sample)
    with pytest.raises(ValueError):
        mix_thames(evaluate, build, model, make_rng(20), n_vol=999)
    with pytest.raises(ValueError):
        mix_thames(evaluate, build, model, make_rng(20), alpha_trunc=0.0)
    with pytest.raises(ValueError):
        mix_thames(evaluate, build, model, make_rng(20), alpha_trunc=1.0)


def test_mix_thames_flags_non_real_probe_density():
    base = make_model("gaussian", data_seed=42, n=20, d=2)

    class NanPockets:
        d = 2
        n_data = base.n_data

        def log_unnorm_posterior(self, theta):
            t = np.atleast_2d(np.asarray(theta, dtype=float))
            out = np.asarray(base.log_unnorm_posterior(t), dtype=float)
            return np.where(t[:, 0] > base.posterior_mean[0], np.nan, out)

    sample = base.sample_posterior(2000, make_rng(21))
    build, evaluate = split(sample)
    with pytest.raises(NumericalError) as err:
        mix_thames(evaluate, build, NanPockets(), make_rng(22))
    assert err.value.point is not None


def test_ecmle_on_cube_with_manual_union():
    model = make_model("cube", data_seed=0, d=2)
    sample = model.sample_posterior(20_000, make_rng(23))
    build, evaluate = split(sample)
    part = partition_from_halves(build, evaluate, 0.5)
    disks = (
        Ellipsoid(np.array([0.3, 0.3]), np.eye(2), np.array([0.2, 0.2])),
        Ellipsoid(np.array([0.7, 0.7]), np.eye(2), np.array([0.2, 0.2])),
    )
    union = EllipsoidUnion(disks, sum(e.volume() for e in disks), part.log_threshold, 2)
    est = ecmle(part, union)
    p = union.total_volume  # uniform target: inclusion probability is the volume
    se_log = math.sqrt((1.0 - p) / (p * est.n_eval))
    assert abs(est.log_z) < 4 * se_log
    assert est.support_volume == pytest.approx(union.total_volume)
    assert est.diagnostics["n_ellipsoids"] == 2.0


def test_ecmle_full_pipeline_on_conjugate_gaussian():
    model = make_model("gaussian", data_seed=42, n=20, d=2)
    est, part, union = run_ecmle(model, 10_000, 0.75, seed=24)
    assert abs(est.log_z - model.exact_log_evidence()) < 0.2
    assert est.support_volume == pytest.approx(union.total_volume)
    assert est.diagnostics["coverage_fraction"] >= 0.5
    assert 0 < est.n_inside <= est.n_eval == 10_000


def test_ecmle_empty_support_raises():
    model = make_model("gaussian", data_seed=42, n=20, d=2)
    sample = model.sample_posterior(2000, make_rng(25))
    build, evaluate = split(sample)
    part = partition_from_halves(build, evaluate, 0.5)
    far = Ellipsoid(np.full(2, 100.0), np.eye(2), np.array([0.1, 0.1]))
    union = EllipsoidUnion((far,), far.volume(), part.log_threshold, 2)
    with pytest.raises(EmptySupportError):
        ecmle(part, union)


def test_ecmle_symmetrized_pools_on_reciprocal_scale():
    model = make_model("gaussian", data_seed=42, n=20, d=2)
    sample = model.sample_posterior(4000, make_rng(26))
    cfg = CoveringConfig(alpha=0.75, rng_seed=27)
    est = ecmle_symmetrized(sample, 0.75, cfg, model.log_unnorm_posterior)
    fwd = est.diagnostics["log_z_forward"]
    rev = est.diagnostics["log_z_reverse"]
    assert est.diagnostics["direction_abs_gap"] == pytest.approx(abs(fwd - rev))
    assert min(fwd, rev) <= est.log_z <= max(fwd, rev)
    assert est.n_eval == 4000
    expected = -(np.logaddexp(-fwd, -rev) - math.log(2.0))
    assert est.log_z == pytest.approx(float(expected), abs=1e-12)


def test_ecmle_symmetrized_never_worse_than_worst_direction():
    model = make_model("gaussian", data_seed=42, n=20, d=2)
    truth = model.exact_log_evidence()
    wins = 0
    reps = 50
    for i in range(reps):
        sample = model.sample_posterior(2000, make_rng(3000 + i))
        cfg = CoveringConfig(alpha=0.75, rng_seed=4000 + i)
        est = ecmle_symmetrized(sample, 0.75, cfg, model.log_unnorm_posterior)
        err = abs(est.log_z - truth)
        worst = max(
            abs(est.diagnostics["log_z_forward"] - truth),
            abs(est.diagnostics["log_z_reverse"] - truth),
        )
        if err <= worst + 1e-12:
            wins += 1
    assert wins >= 0.6 * reps


def test_ecmle_symmetrized_reproducible():
    model = make_model("gaussian", data_seed=42, n=20, d=2)
    sample = model.sample_posterior(2000, make_rng(28))
    cfg = CoveringConfig(alpha=0.75, rng_seed=29)
    a = ecmle_symmetrized(sample, 0.75, cfg, model.log_unnorm_posterior)
    b = ecmle_symmetrized(sample, 0.75, cfg, model.log_unnorm_posterior)
    assert a.log_z == b.log_z


def test_scale_equivariance_of_all_reciprocal_methods():
    base = make_model("gaussian", data_seed=42, n=20, d=2)
    shifted = ShiftedLikelihood(base, 100.0)
    t_half = 1000

    def all_estimates(model, seed):
        sample = model.sample_posterior(2 * t_half, make_rng(seed))
        build, evaluate = split(sample)
        part = partition_from_halves(build, evaluate, 0.75)
        cfg = CoveringConfig(alpha=0.75, rng_seed=seed + 250_000)
        union = build_covering(part, cfg, model.log_unnorm_posterior)
        return {
            "hme": hme_newton_raftery(evaluate, model).log_z,
            "gd_gaussian": gd_gaussian(evaluate, build, model).log_z,
            "thames": thames(evaluate, build, model).log_z,
            "ecmle": ecmle(part, union).log_z,
        }

    plain = all_estimates(base, seed=30)
    moved = all_estimates(shifted, seed=30)
    for name in plain:
        assert moved[name] - plain[name] == pytest.approx(100.0, abs=1e-9), name


def test_log_space_safety_deep_underflow_d10():
    # raw densities near exp(-2000) underflow float64; every method must
    # still return a finite estimate that tracks the scale shift exactly
    base = make_model("rosenbrock", data_seed=11, d=10, n=200, b=0.1)
    shifted = ShiftedLikelihood(base, -2000.0)
    t_half = 2000

    def all_estimates(model, seed):
        sample = model.sample_posterior(2 * t_half, make_rng(seed))
        build, evaluate = split(sample)
        # wide covering (98% of build mass) keeps the union from shattering
        # into tiny shards in ten dimensions
        part = partition_from_halves(build, evaluate, 0.98)
        cfg = CoveringConfig(alpha=0.98, rng_seed=seed + 250_000)
        union = build_covering(part, cfg, model.log_unnorm_posterior)
        return {
            "hme": hme_newton_raftery(evaluate, model).log_z,
            "gd_gaussian": gd_gaussian(evaluate, build, model).log_z,
            "thames": thames(evaluate, build, model).log_z,
            "ecmle": ecmle(part, union).log_z,
        }

    low = all_estimates(shifted, seed=31)
    for name, value in low.items():
        assert math.isfinite(value), name
    # the well-behaved instrumentals should sit near the shifted truth
    for name in ("gd_gaussian", "thames", "ecmle"):
        assert abs(low[name] - (-2000.0)) < 5.0, (name, low[name])
    high = all_estimates(base, seed=31)
    for name in high:
        assert low[name] - high[name] == pytest.approx(-2000.0, abs=1e-6), name


def ks_oracle(ld: np.ndarray, d: int) -> tuple[float, float]:
    l_max = float(np.max(ld))
    best_alpha, best_stat = None, math.inf
    for j in range(1, 20):
        alpha = round(0.05 * j, 2)
        q = float(np.quantile(ld, 1.0 - alpha))
        kept = np.sort(2.0 * (l_max - ld[ld >= q]))
        x_cut = 2.0 * (l_max - q)
        denom = float(scipy.stats.chi2.cdf(x_cut, d))
        if denom <= 0.0:
            stat = 1.0
        else:
            cdf = scipy.stats.chi2.cdf(kept, d) / denom
            n = kept.size
            stat = float(
                max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(0, n) / n))
            )
        if stat < best_stat:
            best_stat = stat
            best_alpha = alpha
    return best_alpha, best_stat


def test_ks_truncation_level_gaussian_fit():
    ds = gaussian_drawset(2, 4000, seed=32)
    level = ks_truncation_level(ds, d=2)
    oracle_alpha, oracle_stat = ks_oracle(ds.log_densities, 2)
    assert level == oracle_alpha
    assert oracle_stat < 0.05


def test_ks_truncation_level_two_point_tie_takes_smallest():
    ds = DrawSet(np.array([[0.0], [1.0]]), np.array([0.0, -1.0]))
    assert ks_truncation_level(ds, d=1) == 0.05


def test_ks_truncation_level_shift_invariant():
    ds = gaussian_drawset(3, 1500, seed=33)
    moved = DrawSet(ds.draws, ds.log_densities + 57.0)
    assert ks_truncation_level(ds, d=3) == ks_truncation_level(moved, d=3)


def test_ks_truncation_level_empty_raises():
    with pytest.raises(EmptyInputError):
        ks_truncation_level(DrawSet(np.empty((0, 1)), np.empty(0)), d=1)


def test_variance_proxy_constant_density_closed_form():
    model = make_model("cube", data_seed=0, d=2)
    disks = (
        Ellipsoid(np.array([0.3, 0.3]), np.eye(2), np.array([0.15, 0.15])),
        Ellipsoid(np.array([0.7, 0.7]), np.eye(2), np.array([0.15, 0.15])),
    )
    union = EllipsoidUnion(disks, sum(e.volume() for e in disks), 0.0, 2)
    res = variance_proxy(union, model, t_draws=5000, n_mc=2000, rng=make_rng(34))
    assert res.value == pytest.approx(1.0 / (5000 * union.total_volume), rel=1e-12)
    assert res.mc_se == 0.0
    assert res.log_value == pytest.approx(-math.log(5000 * union.total_volume), abs=1e-12)


def test_variance_proxy_halving_t_doubles_exactly():
    model = make_model("gaussian", data_seed=42, n=20, d=2)
    build = model.sample_posterior(1000, make_rng(35))
    region = ThamesRegion.from_build(build)
    a = variance_proxy(region, model, t_draws=2000, n_mc=2000, rng=make_rng(36))
    b = variance_proxy(region, model, t_draws=1000, n_mc=2000, rng=make_rng(36))
    assert b.value == pytest.approx(2.0 * a.value, rel=1e-12)
    assert b.mc_se == pytest.approx(2.0 * a.mc_se, rel=1e-12)


def test_variance_proxy_validation_and_support_types():
    model = make_model("gaussian", data_seed=42, n=20, d=2)
    build = model.sample_posterior(1000, make_rng(37))
    region = ThamesRegion.from_build(build)
    with pytest.raises(ValueError):
        variance_proxy(region, model, t_draws=0, n_mc=2000, rng=make_rng(38))
    with pytest.raises(ValueError):
        variance_proxy(region, model, t_draws=100, n_mc=999, rng=make_rng(38))
    res = variance_proxy(region, model, t_draws=100, n_mc=2000, rng=make_rng(38))
    assert math.isfinite(res.log_value) and res.value > 0.0


def test_variance_proxy_flags_support_outside_target():
    model = make_model("cube", data_seed=0, d=2)
    poking = Ellipsoid(np.array([0.5, 1.0]), np.eye(2), np.array([0.2, 0.2]))
    union = EllipsoidUnion((poking,), poking.volume(), 0.0, 2)
    with pytest.raises(NumericalError):
        variance_proxy(union, model, t_draws=100, n_mc=2000, rng=make_rng(39))


def test_variance_proxy_prefers_ecmle_support_on_bimodal_target():
    model = make_model("mixture", data_seed=6, n=2, d=2)
    sample = model.sample_posterior(4000, make_rng(40))
    build, evaluate = split(sample)
    part = partition_from_halves(build, evaluate, 0.8)
    cfg = CoveringConfig(alpha=0.8, rng_seed=41)
    union = build_covering(part, cfg, model.log_unnorm_posterior)
    region = ThamesRegion.from_build(build)
    ours = variance_proxy(union, model, t_draws=2000, n_mc=20_000, rng=make_rng(42))
    ball = variance_proxy(region, model, t_draws=2000, n_mc=20_000, rng=make_rng(43))
    assert ours.log_value <= ball.log_value


def test_estimator_variance_ordering_on_bimodal_target():
    model = make_model("mixture", data_seed=6, n=2, d=2)
    truth = model.exact_log_evidence()
    ecmle_vals, thames_vals = [], []
    for i in range(50):
        sample = model.sample_posterior(4000, make_rng(5000 + i))
        build, evaluate = split(sample)
        part = partition_from_halves(build, evaluate, 0.8)
        cfg = CoveringConfig(alpha=0.8, rng_seed=6000 + i)
        union = build_covering(part, cfg, model.log_unnorm_posterior)
        ecmle_vals.append(ecmle(part, union).log_z)
        thames_vals.append(thames(evaluate, build, model).log_z)
    assert np.var(ecmle_vals) <= np.var(thames_vals)
    # and the covering estimator is also the less biased of the two here
    assert abs(np.mean(ecmle_vals) - truth) <= abs(np.mean(thames_vals) - truth)
