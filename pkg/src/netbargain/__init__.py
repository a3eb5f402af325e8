"""Edge-balanced bargaining dynamics on exchange networks and their elementary graphs."""

from .dynamics import DynamicsConfig, EdgeBalancedUpdate, Trajectory, estimate_rate, simulate, step
from .elementary import BicycleSpec, BlossomSpec, CycleSpec, PathSpec, build, parse_spec
from .linear_model import (
    LinearModel,
    build_bicycle,
    build_blossom,
    build_cycle,
    build_path,
    detect_linearization,
    fixed_point,
    linear_simulate,
    loop_sum_closed_form,
)
from .network import ExchangeNetwork, Matching, check_outcome, validate
from .spectral import (
    SpectrumReport,
    alpha_shift,
    asymptotic_time,
    bicycle_spectrum,
    blossom_spectrum,
    convergence_time,
    cycle_spectrum,
    path_spectrum,
    symmetric_eigen_oracle,
    verify_eigen_det,
)

__version__ = "0.1.0"
