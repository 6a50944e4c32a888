"""Exception types shared across the package.

Every domain error derives from ``MfgnetError`` so callers (and the CLI)
can catch one base class.
"""


class MfgnetError(Exception):
    """Base class for all domain errors raised by this package."""


class NotASimplex(MfgnetError):
    """A probability triple does not lie on (or near enough to) the simplex."""


class StepTooLarge(MfgnetError):
    """An integration step left the admissible set by more than the guard."""


class NoConvergence(MfgnetError):
    """An iterative solve exhausted its iteration budget."""


class Degenerate(MfgnetError):
    """A linear system needed by an equilibrium solve is (near) singular."""


class NoRealEquilibrium(MfgnetError):
    """The two stationarity ellipses do not intersect in the third quadrant."""


class NotAnEquilibrium(MfgnetError):
    """A point handed to the classifier does not zero the reduced dynamics."""


class NoRoot(MfgnetError):
    """The bisection sweep found no sign change in the search interval."""


class DegenerateMapping(MfgnetError):
    """A model-reduction map would produce a non-positive cost weight."""


class HypothesisViolated(MfgnetError):
    """Rates fail the proportionality hypothesis of the symmetric equilibrium."""


class OutOfRange(MfgnetError):
    """A probability input lies outside [0, 1] beyond tolerance."""


class RegimeViolation(UserWarning):
    """Warning: the value vector left the v1, v2 < v3 regime.

    Warning-level by design; evaluation falls back to the general
    closed-form Hamiltonian.
    """
