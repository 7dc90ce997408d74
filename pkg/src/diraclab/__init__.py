"""Numerical laboratory for quasifree states of a free lattice Dirac field.

Builds finite-dimensional one-particle models with exact charge-conjugation
symmetry, their quasifree states and explicit Fock representations, and the
trace-norm, determinant-bound, quasiequivalence and factoriality diagnostics
of the localized thermal operators they generate.
"""

from .errors import (
    CheckFailure,
    ConfigError,
    ConsistencyError,
    DiracLabError,
    FitError,
    GeometryError,
    ModeSpanError,
    PerturbationError,
    RescalingError,
    StateError,
    StateMismatchError,
    SupportError,
    TooManyModesError,
    ZeroModeError,
)
from .fock import (
    AlgebraElement,
    FockRep,
    annihilation_operator,
    build_fock,
    creation_operator,
    field_operator,
    graded_commutator,
    hamiltonian,
    parity_parts,
    theta_map,
    vacuum_expectation,
    vacuum_n_point,
)
from .model import (
    ChargeConjugation,
    OneParticleModel,
    Region,
    SpinorLattice,
    build_model,
    central_difference,
    lapse_profile,
    positive_projector,
    thermal_operator,
)
from .nuclearity import (
    Beta0ScalingReport,
    CoefficientReport,
    DetBound,
    LocalizedThermalOperator,
    NuclearityReport,
    RangeDensityReport,
    RescalingReport,
    ResolventReport,
    beta0_rescaling,
    build_s,
    coefficient_inequality_check,
    det_bound,
    nuclearity_scan,
    range_density_check,
    rescaled_model,
    rescaling_check,
    resolvent_trace_scan,
    schatten_norm,
)
from .quasiequiv import (
    FactorialityReport,
    QuasiequivalenceReport,
    RealSubspace,
    factoriality_check,
    majorana_basis,
    powers_stormer,
    ps_inequality_test,
    refinement_series,
)
from .states import (
    QuasifreeState,
    RestrictedState,
    TestVectorSet,
    n_point,
    pfaffian,
    restrict,
    smooth_perturbation,
    thermal_state,
    two_point,
)

__version__ = "0.1.0"
