"""Exception types shared across the package.

The CLI maps these onto its exit-code contract:
config problems -> 2, numeric check failures -> 3, fit failures -> 4.
"""


class DiracLabError(Exception):
    """Base class for all package-specific errors."""


class GeometryError(DiracLabError):
    """Lattice geometry is invalid (too few sites, non-positive lapse, ...)."""


class ZeroModeError(DiracLabError):
    """The one-particle Hamiltonian has (near-)zero modes and no policy was given."""


class StateError(DiracLabError):
    """An operator does not define a valid quasifree state."""


class StateMismatchError(DiracLabError):
    """A state was passed where a different one (typically the ground state) is required."""


class PerturbationError(DiracLabError):
    """A finite-rank perturbation was too large to clip back into a valid state."""


class TooManyModesError(DiracLabError):
    """The requested Fock representation exceeds the dense-matrix mode cap."""


class ModeSpanError(DiracLabError):
    """A vector has components outside the span of the Fock modes."""


class ConsistencyError(DiracLabError):
    """Mismatched objects (e.g. a Fock representation built from a different model)."""


class SupportError(DiracLabError):
    """An algebra element or test vector is not supported in the required region."""


class RescalingError(DiracLabError):
    """The lattice rescaling identity failed; indicates a construction bug."""


class FitError(DiracLabError):
    """A scaling fit had an empty or degenerate fit window."""


class CheckFailure(DiracLabError):
    """A numeric invariant or verification suite failed."""


class ConfigError(DiracLabError):
    """A run configuration could not be parsed or validated."""
