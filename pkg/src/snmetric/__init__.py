"""Self-normalized two-sample and change-point inference for time series of
objects in metric spaces (distributions, functions, matrices, graph Laplacians).
"""

__version__ = "0.1.0"

from .errors import (
    CacheError,
    DegenerateNormalizer,
    EmptyWindowError,
    InvalidObjectError,
    NullMismatchError,
    SpaceMismatchError,
)
from .spaces import (
    MetricObject,
    SpaceDescriptor,
    SpaceKind,
    distance,
    embed,
    frechet_mean,
    frechet_variance,
    gaussian_quantiles,
    unembed,
)
from .frechet import (
    ObjectSeries,
    PrefixStats,
    build_prefix,
    contaminated_window_mean,
    subsample_mean,
    subsample_variance,
)
from .two_sample import (
    TestReport,
    TwoSampleProfiles,
    d1_statistic,
    d2_statistic,
    n_sample_statistics,
    pairwise_pvalue_matrix,
    profiles,
    run_k_sample_test,
    run_two_sample_test,
)
from .changepoint import (
    ChangePointReport,
    ContrastCurve,
    Segmentation,
    WbsConfig,
    contrast_curve,
    run_cp_test,
    wbs_detect,
    wbs_threshold,
    window_contrast,
)
from .null import (
    NullSampleSet,
    cache_load,
    cache_store,
    draw_deta,
    draw_seta,
    load_or_simulate,
    pvalue,
    quantile,
    simulate_brownian_path,
)
from .dgp import (
    CpSpec,
    DgpSpec,
    LatentVarProcess,
    MultiCpSpec,
    gen_cp_series,
    gen_multicp_series,
    gen_two_samples,
    gen_var1,
)
from .experiments import (
    ExperimentResult,
    adjusted_rand_index,
    size_power_experiment,
    wbs_experiment,
)
from .io import parse_series, write_series
from .kernels import BACKEND
