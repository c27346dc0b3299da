"""Exception types shared across the library."""


class DualMpcError(Exception):
    """Base class for all library errors."""


class NonFinite(DualMpcError):
    """An input contained NaN or infinite entries."""


class DegenerateOrientation(DualMpcError):
    """Pitch too close to +/- pi/2 for the Euler-rate map to be valid."""


class NonPositiveHeight(DualMpcError):
    """Body height must be positive for capture-point terms."""


class AsymmetricInput(DualMpcError):
    """A matrix expected to be symmetric was not."""


class Infeasible(DualMpcError):
    """The constraint system admits no solution."""


class MaxIterations(DualMpcError):
    """The solver hit its iteration cap without converging."""


class RankDeficientEqualities(DualMpcError):
    """Equality constraints are rank deficient after redundancy elimination."""


class ConfigParse(DualMpcError):
    """A scenario or parameter file could not be parsed."""


class MismatchedScenarios(DualMpcError):
    """Two scenarios that must only differ in controller mode differ elsewhere."""


class FallEvent(DualMpcError):
    """The simulated body fell (ground penetration or excessive tilt)."""
