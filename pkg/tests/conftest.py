import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from ecmle.hpd import DrawSet
from ecmle.rng import make_rng
from ecmle.targets import make_model


@pytest.fixture
def gaussian_small():
    return make_model("gaussian", data_seed=42, n=20, d=2, prior_scale=1.0)


@pytest.fixture
def mixture_small():
    return make_model("mixture", data_seed=6, n=2, d=2)


@pytest.fixture
def cube_2d():
    return make_model("cube", data_seed=0, d=2)


def draws_from(model, t_total: int, seed: int) -> DrawSet:
    rng = make_rng(seed)
    return model.sample_posterior(t_total, rng)


@pytest.fixture
def gaussian_draws(gaussian_small):
    return draws_from(gaussian_small, 2000, seed=1042)


def standard_normal_drawset(d: int, n: int, seed: int) -> DrawSet:
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal((n, d))
    ld = -0.5 * np.einsum("ij,ij->i", theta, theta)
    return DrawSet(theta, ld)
