"""Statistical inference for Gibbs measures of locally constant potentials on
subshifts of finite type."""
__version__ = "0.1.0"

from .errors import (
    AdmissibilityError,
    ConvergenceError,
    DegenerateModelError,
    DimensionError,
    GibbsError,
    InfeasibleError,
    ModelError,
)
from .shift_core import (
    LocallyConstantFn,
    ModelConfig,
    PotentialFamily,
    SubshiftSpec,
    Word,
    bernoulli_family,
    birkhoff_sum,
    load_model,
    markov_family,
    markov_to_theta,
    model_from_dict,
    theta_to_markov,
)
from .thermo import (
    GibbsSystem,
    asymptotic_covariance,
    cohomology_independence_check,
    cylinder_log_prob,
    oracle_cylinder_prob,
    pressure,
    pressure_gradient,
    solve_gibbs,
)
from .sampling import empirical_moments, read_sample, sample_path, write_sample
from .inference import MleConfig, mle, moment_covariance, mpe, pressure_root
from .asymptotics import confidence_region, limit_law_sample, xi_upper_quantile
from .hypothesis_testing import lr_test_influence, lr_test_simple, np_test

__all__ = [
    "__version__",
    "AdmissibilityError",
    "ConvergenceError",
    "DegenerateModelError",
    "DimensionError",
    "GibbsError",
    "InfeasibleError",
    "ModelError",
    "LocallyConstantFn",
    "ModelConfig",
    "PotentialFamily",
    "SubshiftSpec",
    "Word",
    "bernoulli_family",
    "birkhoff_sum",
    "load_model",
    "markov_family",
    "markov_to_theta",
    "model_from_dict",
    "theta_to_markov",
    "GibbsSystem",
    "asymptotic_covariance",
    "cohomology_independence_check",
    "cylinder_log_prob",
    "oracle_cylinder_prob",
    "pressure",
    "pressure_gradient",
    "solve_gibbs",
    "empirical_moments",
    "read_sample",
    "sample_path",
    "write_sample",
    "MleConfig",
    "mle",
    "moment_covariance",
    "mpe",
    "pressure_root",
    "confidence_region",
    "limit_law_sample",
    "xi_upper_quantile",
    "lr_test_influence",
    "lr_test_simple",
    "np_test",
]
