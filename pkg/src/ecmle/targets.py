"""Benchmark posterior models with exact evidence and exact iid samplers.

Each model exposes the same black-box surface: log-prior, log-likelihood,
their sum (the unnormalized log-posterior), an exact posterior sampler
filling a DrawSet, and, where available, the exact log-evidence.  All
evaluation methods accept a single point (d,) or a batch (m, d).

A generic random-walk Metropolis sampler is included as a fallback for
targets without a closed-form posterior.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from .errors import NumericalError
from .hpd import DrawSet
from .rng import choice_index, make_rng, standard_normal

__all__ = [
    "TargetModel",
    "GaussianConjugateModel",
    "GaussianMixturePriorModel",
    "RosenbrockModel",
    "UniformCubeModel",
    "rwm_sampler",
    "make_model",
    "save_model_data",
    "MODEL_NAMES",
]

_LOG_2PI = math.log(2.0 * math.pi)


def _as_batch(theta) -> tuple[np.ndarray, bool]:
    t = np.asarray(theta, dtype=float)
    if t.ndim == 1:
        return t[None, :], True
    return t, False


def _maybe_scalar(values: np.ndarray, single: bool):
    return float(values[0]) if single else values


class TargetModel(ABC):
    """Black-box posterior interface shared by every benchmark model."""

    @property
    @abstractmethod
    def d(self) -> int: ...

    @property
    @abstractmethod
    def n_data(self) -> int: ...

    @abstractmethod
    def log_prior(self, theta): ...

    @abstractmethod
    def log_likelihood(self, theta): ...

    def log_unnorm_posterior(self, theta):
        """Exactly log_prior + log_likelihood, by construction."""
        return self.log_prior(theta) + self.log_likelihood(theta)

    @abstractmethod
    def sample_posterior(self, n: int, rng: np.random.Generator) -> DrawSet: ...

    def exact_log_evidence(self) -> Optional[float]:
        return None

    def _finish_drawset(self, draws: np.ndarray) -> DrawSet:
        return DrawSet(draws, self.log_unnorm_posterior(draws))


class GaussianConjugateModel(TargetModel):
    """Gaussian mean with identity noise and a zero-mean isotropic prior.

    Data x_1..x_n ~ N(theta, I_d); prior theta ~ N(0, s I_d).  The posterior
    is N(m_hat, s_hat I_d) with m_hat = n xbar / (n + 1/s) and
    s_hat = 1 / (n + 1/s), and the evidence has a closed form that
    factorizes across coordinates.
    """

    def __init__(self, data: np.ndarray, prior_scale: float = 1.0):
        data = np.atleast_2d(np.asarray(data, dtype=float))
        if data.size == 0 or not np.all(np.isfinite(data)):
            raise ValueError("data must be a non-empty finite n x d array")
        if prior_scale <= 0.0:
            raise ValueError(f"prior_scale must be positive, got {prior_scale!r}")
        self._data = data
        self._s = float(prior_scale)
        self._n, self._d = data.shape
        self._sum_x = data.sum(axis=0)
        self._sum_sq = float(np.sum(data * data))
        precision = self._n + 1.0 / self._s
        self._post_mean = self._sum_x / precision
        self._post_var = 1.0 / precision

    @classmethod
    def generate(
        cls,
        n: int = 20,
        d: int = 2,
        prior_scale: float = 1.0,
        true_mean=None,
        data_seed: int = 42,
    ) -> "GaussianConjugateModel":
        rng = make_rng(data_seed)
        mu = np.full(d, 1.0) if true_mean is None else np.asarray(true_mean, dtype=float)
        data = mu + standard_normal(rng, (n, d))
        return cls(data, prior_scale)

    @property
    def d(self) -> int:
        return self._d

    @property
    def n_data(self) -> int:
        return self._n

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def posterior_mean(self) -> np.ndarray:
        return self._post_mean

    @property
    def posterior_var(self) -> float:
        return self._post_var

    def log_prior(self, theta):
        t, single = _as_batch(theta)
        norm_sq = np.einsum("ij,ij->i", t, t)
        out = -0.5 * self._d * (_LOG_2PI + math.log(self._s)) - 0.5 * norm_sq / self._s
        return _maybe_scalar(out, single)

    def log_likelihood(self, theta):
        t, single = _as_batch(theta)
        norm_sq = np.einsum("ij,ij->i", t, t)
        quad = self._sum_sq - 2.0 * t @ self._sum_x + self._n * norm_sq
        out = -0.5 * self._n * self._d * _LOG_2PI - 0.5 * quad
        return _maybe_scalar(out, single)

    def sample_posterior(self, n: int, rng: np.random.Generator) -> DrawSet:
        z = standard_normal(rng, (n, self._d))
        draws = self._post_mean + math.sqrt(self._post_var) * z
        return self._finish_drawset(draws)

    def exact_log_evidence(self) -> float:
        s, n = self._s, self._n
        tall = 1.0 + s * n
        col_sums = self._sum_x
        col_sq = np.sum(self._data * self._data, axis=0)
        per_coord = (
            -0.5 * n * _LOG_2PI
            - 0.5 * math.log(tall)
            - 0.5 * (col_sq - s * col_sums**2 / tall)
        )
        return float(np.sum(per_coord))


def _chol_logdet(a: np.ndarray) -> tuple[np.ndarray, float]:
    chol = np.linalg.cholesky(a)
    return chol, 2.0 * float(np.sum(np.log(np.diag(chol))))


def _gauss_logpdf(points: np.ndarray, mean: np.ndarray, chol: np.ndarray, logdet: float):
    diff = points - mean
    y = np.linalg.solve(chol, diff.T)
    quad = np.einsum("ij,ij->j", y, y)
    d = mean.shape[0]
    return -0.5 * (d * _LOG_2PI + logdet + quad)


class GaussianMixturePriorModel(TargetModel):
    """Gaussian likelihood with a two-component Gaussian-mixture prior.

    Data x_1..x_n ~ N(theta, Sigma_x); prior is
    w N(xi_1, S_1) + (1 - w) N(xi_2, S_2).  The posterior is again a
    two-component Gaussian mixture whose component moments and weight have
    closed forms, so exact iid sampling is available, as is the exact
    evidence (the prior-weighted sum of the two conjugate component
    evidences).
    """

    def __init__(
        self,
        data: np.ndarray,
        sigma_x: np.ndarray,
        omega: float = 0.5,
        xi_1=None,
        xi_2=None,
        s_1=None,
        s_2=None,
    ):
        data = np.atleast_2d(np.asarray(data, dtype=float))
        self._n, self._d = data.shape
        d = self._d
        self._data = data
        self._sigma_x = np.asarray(sigma_x, dtype=float)
        if self._sigma_x.shape != (d, d):
            raise ValueError(f"sigma_x must be ({d}, {d})")
        if not (0.0 < omega < 1.0):
            raise ValueError(f"omega must lie strictly in (0, 1), got {omega!r}")
        self._omega = float(omega)
        self._xi = [
            np.full(d, -3.0) if xi_1 is None else np.asarray(xi_1, dtype=float),
            np.full(d, 3.0) if xi_2 is None else np.asarray(xi_2, dtype=float),
        ]
        self._s_cov = [
            np.eye(d) if s_1 is None else np.asarray(s_1, dtype=float),
            np.eye(d) if s_2 is None else np.asarray(s_2, dtype=float),
        ]

        self._chol_x, self._logdet_x = _chol_logdet(self._sigma_x)
        self._prior_chol = []
        self._prior_logdet = []
        for k in range(2):
            chol, logdet = _chol_logdet(self._s_cov[k])
            self._prior_chol.append(chol)
            self._prior_logdet.append(logdet)

        xbar = data.mean(axis=0)
        self._xbar = xbar
        centered = data - xbar
        y = np.linalg.solve(self._chol_x, centered.T)
        self._scatter_quad = float(np.einsum("ij,ij->", y, y))

        prec_x = np.linalg.inv(self._sigma_x)
        self._post_mean = []
        self._post_chol = []
        self._log_z_comp = []
        n = self._n
        for k in range(2):
            prec_k = np.linalg.inv(self._s_cov[k])
            post_cov = np.linalg.inv(n * prec_x + prec_k)
            post_cov = 0.5 * (post_cov + post_cov.T)
            mean = post_cov @ (n * prec_x @ xbar + prec_k @ self._xi[k])
            self._post_mean.append(mean)
            self._post_chol.append(np.linalg.cholesky(post_cov))
            # conjugate evidence of component k
            mix_cov = self._sigma_x / n + self._s_cov[k]
            chol_m, logdet_m = _chol_logdet(mix_cov)
            diff = xbar - self._xi[k]
            ym = np.linalg.solve(chol_m, diff)
            quad_m = float(ym @ ym)
            log_z_k = (
                -0.5 * n * self._d * _LOG_2PI
                - 0.5 * (n - 1) * self._logdet_x
                - 0.5 * self._scatter_quad
                - 0.5 * self._d * math.log(n)
                - 0.5 * (logdet_m + quad_m)
            )
            self._log_z_comp.append(log_z_k)

        a1 = math.log(self._omega) + self._log_z_comp[0]
        a2 = math.log1p(-self._omega) + self._log_z_comp[1]
        self._log_evidence = float(np.logaddexp(a1, a2))
        self._post_weight_1 = float(math.exp(a1 - self._log_evidence))

    @classmethod
    def generate(
        cls,
        n: int = 2,
        d: int = 2,
        omega: float = 0.5,
        mode_offset: float = 3.0,
        true_mean=None,
        data_seed: int = 6,
    ) -> "GaussianMixturePriorModel":
        rng = make_rng(data_seed)
        mu = np.zeros(d) if true_mean is None else np.asarray(true_mean, dtype=float)
        data = mu + standard_normal(rng, (n, d))
        return cls(
            data,
            sigma_x=np.eye(d),
            omega=omega,
            xi_1=np.full(d, -mode_offset),
            xi_2=np.full(d, mode_offset),
        )

    @property
    def d(self) -> int:
        return self._d

    @property
    def n_data(self) -> int:
        return self._n

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def posterior_weight_1(self) -> float:
        """Posterior probability of the first mixture component."""
        return self._post_weight_1

    @property
    def posterior_means(self) -> tuple[np.ndarray, np.ndarray]:
        return self._post_mean[0], self._post_mean[1]

    def log_prior(self, theta):
        t, single = _as_batch(theta)
        parts = []
        for k, w in ((0, self._omega), (1, 1.0 - self._omega)):
            lp = _gauss_logpdf(t, self._xi[k], self._prior_chol[k], self._prior_logdet[k])
            parts.append(math.log(w) + lp)
        return _maybe_scalar(np.logaddexp(parts[0], parts[1]), single)

    def log_likelihood(self, theta):
        t, single = _as_batch(theta)
        diff = t - self._xbar
        y = np.linalg.solve(self._chol_x, diff.T)
        quad_mean = np.einsum("ij,ij->j", y, y)
        out = -0.5 * self._n * (self._d * _LOG_2PI + self._logdet_x) - 0.5 * (
            self._scatter_quad + self._n * quad_mean
        )
        return _maybe_scalar(out, single)

    def sample_posterior(self, n: int, rng: np.random.Generator) -> DrawSet:
        weights = np.array([self._post_weight_1, 1.0 - self._post_weight_1])
        comp = choice_index(rng, weights, n)
        z = standard_normal(rng, (n, self._d))
        draws = np.empty((n, self._d))
        for k in range(2):
            rows = comp == k
            if np.any(rows):
                draws[rows] = self._post_mean[k] + z[rows] @ self._post_chol[k].T
        return self._finish_drawset(draws)

    def exact_log_evidence(self) -> float:
        return self._log_evidence


class RosenbrockModel(TargetModel):
    """Banana-shaped posterior from a curved-mean Gaussian likelihood.

    The mean map is mu_1 = theta_1, mu_j = theta_j + b_{j-1} (theta_{j-1}^2
    - a_{j-1}); the data are coordinate means ybar with noise variance
    sigma^2 / n per coordinate, and the prior is flat (log-prior 0).  The
    triangular structure integrates out coordinate by coordinate, so the
    evidence is exactly 1 and iid posterior draws follow from discarding
    each conditional in sequence.
    """

    def __init__(self, y_bar: np.ndarray, a=None, b=None, sigma: float = 1.0, n: int = 20):
        y_bar = np.atleast_1d(np.asarray(y_bar, dtype=float))
        d = y_bar.shape[0]
        if d < 1:
            raise ValueError("y_bar must have at least one coordinate")
        if sigma <= 0.0 or n < 1:
            raise ValueError("sigma must be positive and n at least 1")
        self._y = y_bar
        self._d = d
        self._a = np.full(d - 1, 1.0) if a is None else np.broadcast_to(
            np.asarray(a, dtype=float), (d - 1,)
        ).copy()
        self._b = np.full(d - 1, 10.0) if b is None else np.broadcast_to(
            np.asarray(b, dtype=float), (d - 1,)
        ).copy()
        self._sigma = float(sigma)
        self._n = int(n)
        self._noise_var = self._sigma**2 / self._n

    @classmethod
    def generate(
        cls,
        d: int = 2,
        n: int = 20,
        a: float = 1.0,
        b: float = 10.0,
        sigma: float = 1.0,
        true_theta=None,
        data_seed: int = 11,
    ) -> "RosenbrockModel":
        rng = make_rng(data_seed)
        theta = np.ones(d) if true_theta is None else np.asarray(true_theta, dtype=float)
        stub = cls(np.zeros(d), a=a, b=b, sigma=sigma, n=n)
        mean = stub._mean_map(theta[None, :])[0]
        y_bar = mean + math.sqrt(stub._noise_var) * standard_normal(rng, d)
        return cls(y_bar, a=a, b=b, sigma=sigma, n=n)

    @property
    def d(self) -> int:
        return self._d

    @property
    def n_data(self) -> int:
        return self._n

    @property
    def y_bar(self) -> np.ndarray:
        return self._y

    def _mean_map(self, t: np.ndarray) -> np.ndarray:
        mu = np.empty_like(t)
        mu[:, 0] = t[:, 0]
        if self._d > 1:
            mu[:, 1:] = t[:, 1:] + self._b * (t[:, :-1] ** 2 - self._a)
        return mu

    def log_prior(self, theta):
        t, single = _as_batch(theta)
        return _maybe_scalar(np.zeros(t.shape[0]), single)

    def log_likelihood(self, theta):
        t, single = _as_batch(theta)
        resid = self._y - self._mean_map(t)
        quad = np.einsum("ij,ij->i", resid, resid) / self._noise_var
        out = -0.5 * self._d * math.log(2.0 * math.pi * self._noise_var) - 0.5 * quad
        return _maybe_scalar(out, single)

    def sample_posterior(self, n: int, rng: np.random.Generator) -> DrawSet:
        z = standard_normal(rng, (n, self._d))
        draws = np.empty((n, self._d))
        scale = math.sqrt(self._noise_var)
        draws[:, 0] = self._y[0] + scale * z[:, 0]
        for j in range(1, self._d):
            shift = self._b[j - 1] * (draws[:, j - 1] ** 2 - self._a[j - 1])
            draws[:, j] = self._y[j] - shift + scale * z[:, j]
        return self._finish_drawset(draws)

    def exact_log_evidence(self) -> float:
        return 0.0


class UniformCubeModel(TargetModel):
    """Constant density 1 on the unit cube [0, 1]^d; evidence exactly 1.

    The log-density is 0 inside the cube and -inf outside, so it must only
    be evaluated through draws (always interior) or membership counting.
    """

    def __init__(self, d: int = 2):
        if d < 1:
            raise ValueError(f"d must be at least 1, got {d!r}")
        self._d = int(d)

    @classmethod
    def generate(cls, d: int = 2, data_seed: int = 0) -> "UniformCubeModel":
        return cls(d=d)

    @property
    def d(self) -> int:
        return self._d

    @property
    def n_data(self) -> int:
        return 0

    def log_prior(self, theta):
        t, single = _as_batch(theta)
        inside = np.all((t >= 0.0) & (t <= 1.0), axis=1)
        out = np.where(inside, 0.0, -np.inf)
        return _maybe_scalar(out, single)

    def log_likelihood(self, theta):
        t, single = _as_batch(theta)
        return _maybe_scalar(np.zeros(t.shape[0]), single)

    def sample_posterior(self, n: int, rng: np.random.Generator) -> DrawSet:
        draws = rng.random((n, self._d))
        return self._finish_drawset(draws)

    def exact_log_evidence(self) -> float:
        return 0.0


def rwm_sampler(
    logdens,
    init: np.ndarray,
    step_scale: float,
    n_draws: int,
    rng: np.random.Generator,
    burn_in: Optional[int] = None,
    thin: int = 1,
) -> tuple[DrawSet, float]:
    """Random-walk Metropolis with isotropic Gaussian proposals.

    Returns ``n_draws`` kept states (after discarding ``burn_in`` initial
    states, default 10% of n_draws, keeping every ``thin``-th) and the
    overall acceptance rate.  ``logdens`` takes a single point (d,).
    """
    init = np.atleast_1d(np.asarray(init, dtype=float))
    if n_draws < 1:
        raise ValueError(f"n_draws must be at least 1, got {n_draws!r}")
    if step_scale <= 0.0:
        raise ValueError(f"step_scale must be positive, got {step_scale!r}")
    if thin < 1:
        raise ValueError(f"thin must be at least 1, got {thin!r}")
    if burn_in is None:
        burn_in = int(round(0.1 * n_draws))
    if burn_in < 0:
        raise ValueError(f"burn_in must be non-negative, got {burn_in!r}")
    current_ld = float(logdens(init))
    if not math.isfinite(current_ld):
        raise NumericalError(
            f"initial log-density is not finite: {current_ld!r}", point=init
        )
    d = init.shape[0]
    total = burn_in + n_draws * thin
    steps = standard_normal(rng, (total, d)) * step_scale
    log_u = np.log(1.0 - rng.random(total))
    current = init.copy()
    accepted = 0
    kept = np.empty((n_draws, d))
    kept_ld = np.empty(n_draws)
    k = 0
    for t in range(total):
        proposal = current + steps[t]
        prop_ld = float(logdens(proposal))
        if math.isnan(prop_ld) or prop_ld == math.inf:
            raise NumericalError(
                f"proposal log-density is not real: {prop_ld!r}", point=proposal
            )
        if log_u[t] < prop_ld - current_ld:
            current = proposal
            current_ld = prop_ld
            accepted += 1
        if t >= burn_in and (t - burn_in) % thin == 0:
            kept[k] = current
            kept_ld[k] = current_ld
            k += 1
    return DrawSet(kept, kept_ld), accepted / total


def save_model_data(model: TargetModel, path) -> None:
    """Audit dump of the model's generated dataset as CSV.

    Writes one row per observation with columns x_1..x_d.  Models whose
    data enter only through sufficient statistics (coordinate means) dump
    those statistics as a single row; models with no dataset dump just
    the header.
    """
    if hasattr(model, "data"):
        rows = np.atleast_2d(np.asarray(model.data, dtype=float))
    elif hasattr(model, "y_bar"):
        rows = np.atleast_2d(np.asarray(model.y_bar, dtype=float))
    else:
        rows = np.empty((0, model.d))
    header = ",".join(f"x_{j + 1}" for j in range(rows.shape[1] if rows.size else model.d))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


MODEL_NAMES = ("gaussian", "mixture", "rosenbrock", "cube")


def make_model(name: str, data_seed: int, **overrides) -> TargetModel:
    """Instantiate a benchmark model by registry name with overrides."""
    generators = {
        "gaussian": GaussianConjugateModel.generate,
        "mixture": GaussianMixturePriorModel.generate,
        "rosenbrock": RosenbrockModel.generate,
        "cube": UniformCubeModel.generate,
    }
    if name not in generators:
        raise ValueError(f"unknown model {name!r}; choose from {MODEL_NAMES}")
    return generators[name](data_seed=data_seed, **overrides)
