"""Two-fidelity pick-freeze estimation of closed Sobol indices."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegeneratePilotWarning,
    DegenerateSample,
    DomainError,
    InvalidParams,
    LengthMismatch,
    MFSobolError,
    MissingCoarse,
    OutOfSupport,
    Unsupported,
)
from .estimators import (  # noqa: E402
    PairedSample,
    VarianceEstimates,
    ab_realizations,
    estimate_all,
    estimate_sigma_e,
    estimate_sigma_single,
    pick_freeze_statistic,
)
from .planner import (  # noqa: E402
    CostModel,
    Plan,
    SplitMode,
    alpha_split,
    classical_cost,
    confidence_interval,
    efficiency_curve,
    gaussian_quantile,
    optimize_plan,
    plan_cost,
    required_sample_size,
)
from .models import Heston, HestonParams, Ishigami, LinearGaussian, heston_terminal_prices, make_model  # noqa: E402
from .driver import generate_design, run_estimation, run_pilot  # noqa: E402
