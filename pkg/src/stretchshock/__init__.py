"""Shock-front motion in semi-infinite stretch-limited elastic strings.

Front tracking on exact wave fields, state reconstruction and energy
accounting, closed-form reference motions, and a finite-volume cross-check.
"""

from .errors import (
    ConfigError,
    ConstitutiveBreakdown,
    DomainError,
    InsufficientDataError,
    StretchShockError,
    UsageError,
    ValidationError,
)
from .material import (
    MaterialParams,
    NondimensionalParams,
    RelationMode,
    nondimensionalize,
    stretch_from_tension,
    time_of_threshold,
)
from .profiles import (
    CompactBump,
    InitialData,
    PerturbationSpec,
    Profile,
    RationalBump,
    TabulatedPerturbation,
    make_constant_stretch_data,
    sigma1_infinity,
    validate,
    weighted_norm_B,
)
from .dalembert import WaveField
from .tracker import ShockState, Termination, TrackerOptions, Trajectory, continuation_check, integrate
from .state import energy_audit, heat_power, rh_residual, sample_state, sample_states
from .oracle import OracleMotion, asymptotic_deviation, oracle_front, oracle_state
from .fitting import fit_decay
from .fv import fv_run

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConstitutiveBreakdown", "DomainError", "InsufficientDataError",
    "StretchShockError", "UsageError", "ValidationError",
    "MaterialParams", "NondimensionalParams", "RelationMode", "nondimensionalize",
    "stretch_from_tension", "time_of_threshold",
    "CompactBump", "InitialData", "PerturbationSpec", "Profile", "RationalBump",
    "TabulatedPerturbation", "make_constant_stretch_data", "sigma1_infinity", "validate",
    "weighted_norm_B",
    "WaveField",
    "ShockState", "Termination", "TrackerOptions", "Trajectory", "continuation_check", "integrate",
    "energy_audit", "heat_power", "rh_residual", "sample_state", "sample_states",
    "OracleMotion", "asymptotic_deviation", "oracle_front", "oracle_state",
    "fit_decay", "fv_run",
]
