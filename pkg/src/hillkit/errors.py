"""Exception hierarchy shared by all hillkit modules."""


class HillkitError(Exception):
    """Base class for every error raised by hillkit."""


class DomainError(HillkitError):
    """A chart or model rejected an evaluation point."""


class SingularTwist(HillkitError):
    """The mixed second-derivative block is singular; the step map is undefined."""


class SingularB(HillkitError):
    """A kinetic matrix supplied to a model is singular."""


class CoincidentPoints(HillkitError):
    """Chord endpoints coincide; the length generating function is not smooth there."""


class NoConvergence(HillkitError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class SingularJacobian(HillkitError):
    """Newton Jacobian is rank deficient beyond the least-squares fallback."""

    def __init__(self, message, smallest_singular_value=None):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


class ConjugatePoints(HillkitError):
    """Two grid points are conjugate: the connecting boundary-value problem is singular."""


class SymmetryViolation(HillkitError):
    """A claimed symmetry field does not annihilate the generating function."""


class DegenerateG(HillkitError):
    """The symmetry pairing matrix of a nonlinear reduction is singular."""


class NoCriticalPoint(HillkitError):
    """Inner stationarity over the group parameter could not be solved."""


class ConditionAFailed(HillkitError):
    """A per-step pairing matrix between kernel solutions is singular."""

    def __init__(self, step, message=None):
        super().__init__(message or f"pairing matrix singular at step {step}")
        self.step = step


class ConditionBFailed(HillkitError):
    """The summed inverse pairing matrix is singular."""


class ExcessDegeneracy(HillkitError):
    """The generalized unit eigenspace is larger than the symmetry accounts for."""


class NonIsotropicV(HillkitError):
    """The span of the supplied kernel solutions is not omega-isotropic."""


class NotReversible(HillkitError):
    """No cyclic relabelling aligns the orbit with its involution image."""


class TheoremViolation(HillkitError):
    """An exact identity failed numerically; indicates an implementation bug."""


class IntegratorFailure(HillkitError):
    """The ODE integrator reported failure."""


class NotStabilized(HillkitError):
    """A truncation ladder ran out before two consecutive orders agreed."""

    def __init__(self, message, max_order=None):
        super().__init__(message)
        self.max_order = max_order


class InvalidDegree(HillkitError):
    """Homogeneity degree 0 or 2 is excluded from the scaling criteria."""


class ConfigError(HillkitError):
    """A run configuration failed schema validation."""
