"""Functional regression of contextual CDFs and an epoch-batched
inverse-gap-weighting decision engine, with synthetic environments and an
experiment harness."""

from .numerics import (
    GridFunction,
    QuadratureGrid,
    SpectralDecomposition,
    build_cdf_grid,
    build_uniform_grid,
    degenerate_kernel_eig,
    gauss_legendre,
    inner_product,
    sym_eig,
)
from .operators import (
    CdfBasis,
    DesignOperator,
    EigendecayFit,
    apply_operator,
    design_operator,
    estimate_eigendecay,
    functional_determinant,
    point_kernel,
    spectral_decompose,
    weighted_norm,
)
from .regression import (
    CoefficientEstimate,
    ErrorBudget,
    TruncationPlan,
    empirical_target,
    error_budget,
    loss,
    predict_cdf,
    project_to_C,
    pseudo_inverse_apply,
    regress,
    select_truncation,
    solve_least_squares,
)
from .functionals import (
    UtilityFunctional,
    eval_expected_penalty,
    eval_mean,
    eval_smoothed_quantile,
    eval_variance,
    make_functional,
)
from .environments import (
    Environment,
    SampleRecord,
    make_catalog_env,
    optimal_action,
    sample_context,
    sample_outcome,
    sample_outcomes,
    true_cdf,
)
from .engine import (
    EpochSchedule,
    PolicyState,
    RegretTrace,
    exploration_param,
    igw_distribution,
    run_episode,
)
from .harness import (
    ExperimentConfig,
    fit_loglog_slope,
    generate_dataset,
    heldout_cdf_error,
    regret_slope,
    run_config,
    sweep_regression_error,
)

__version__ = "0.1.0"
