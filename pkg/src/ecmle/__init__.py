"""Bayesian evidence estimation with bounded-support harmonic means.

The centerpiece is an estimator whose instrumental density is uniform on
a disjoint union of locally adapted ellipsoids covering the
high-posterior-density region; baselines (classic harmonic mean,
moment-matched Gaussian, truncated Gaussian, uniform Mahalanobis ball,
and the level-set-truncated ball) plus exact-evidence benchmark models
support quantitative comparisons.
"""

from .covering import CoveringConfig, EllipsoidUnion, build_covering, load_union, save_union
from .errors import (
    DegenerateCoveringError,
    DegenerateDirectionError,
    DimensionError,
    EmptyHpdError,
    EmptyInputError,
    EmptySupportError,
    EvidenceError,
    NumericalError,
    OddSampleError,
    SingularCovarianceError,
    SizeError,
)
from .estimators import (
    EvidenceEstimate,
    Method,
    ThamesRegion,
    VarianceProxyResult,
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
from .geometry import Ellipsoid, bisect_boundary, gram_schmidt
from .harness import (
    RunConfig,
    ResultRow,
    export_regions,
    run_replications,
    summarize,
    sweep_alpha,
)
from .hpd import DrawSet, HpdPartition, hpd_threshold, load_drawset, partition, save_drawset, split
from .rng import make_rng
from .targets import (
    GaussianConjugateModel,
    GaussianMixturePriorModel,
    RosenbrockModel,
    TargetModel,
    UniformCubeModel,
    make_model,
    rwm_sampler,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "CoveringConfig",
    "DegenerateCoveringError",
    "DegenerateDirectionError",
    "DimensionError",
    "DrawSet",
    "Ellipsoid",
    "EllipsoidUnion",
    "EmptyHpdError",
    "EmptyInputError",
    "EmptySupportError",
    "EvidenceError",
    "EvidenceEstimate",
    "GaussianConjugateModel",
    "GaussianMixturePriorModel",
    "HpdPartition",
    "Method",
    "NumericalError",
    "OddSampleError",
    "ResultRow",
    "RosenbrockModel",
    "RunConfig",
    "SingularCovarianceError",
    "SizeError",
    "TargetModel",
    "ThamesRegion",
    "UniformCubeModel",
    "VarianceProxyResult",
    "bisect_boundary",
    "build_covering",
    "ecmle",
    "ecmle_symmetrized",
    "export_regions",
    "gd_gaussian",
    "gd_truncated_gaussian",
    "gram_schmidt",
    "hme_newton_raftery",
    "hpd_threshold",
    "ks_truncation_level",
    "load_drawset",
    "load_union",
    "make_model",
    "make_rng",
    "mix_thames",
    "partition",
    "run_replications",
    "rwm_sampler",
    "save_drawset",
    "save_union",
    "split",
    "summarize",
    "sweep_alpha",
    "thames",
    "variance_proxy",
]
