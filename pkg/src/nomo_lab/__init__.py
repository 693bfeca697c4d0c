"""Translation-free nonadiabatic Gaussian variational calculations on harmonic few-body models."""

from .gaussian import (
    AlphaBeta,
    GaussianDensity,
    GaussianState,
    alpha_beta,
    energy_expectation,
    internal_marginal,
    marginalize,
    observable_expectation,
    reexpress,
)
from .model import (
    FormKind,
    HarmonicModel,
    QuadraticForm,
    kinetic_form,
    load_model_config,
    make_lambda_model,
    model_from_config,
    potential_form,
)
from .oracle import NormalModeSolution, exact_exponent, grid_ground_energy, solve_normal_modes
from .transforms import (
    CoordinateTransform,
    heavy_center_transform,
    push_kinetic,
    push_potential,
    tcm_absolute,
    validate_transform,
)
from .variational import (
    AnsatzFamily,
    FamilyKind,
    MinimizeOptions,
    NomoResult,
    Variant,
    minimize,
    objective,
    objective_gradient,
    run_all,
    run_ctc,
)

__version__ = "0.1.0"
