"""Exception hierarchy shared by all twistlab modules."""


class TwistlabError(Exception):
    """Base class for every error raised by the package."""


# linear algebra
class AsymmetricInput(TwistlabError, ValueError):
    pass


class IndexOutOfRange(TwistlabError, IndexError):
    pass


class DimensionMismatch(TwistlabError, ValueError):
    pass


class NotConverged(TwistlabError, RuntimeError):
    """An iterative method stopped before meeting its tolerance.

    ``residual`` carries the last residual measure reached.
    """

    def __init__(self, message, residual=None, result=None):
        super().__init__(message)
        self.residual = residual
        self.result = result


class IndefiniteDetected(TwistlabError, ArithmeticError):
    """A direction of non-positive curvature was met in CG."""


class SingularMass(TwistlabError, ArithmeticError):
    pass


# cross-section
class EmptyGrid(TwistlabError, ValueError):
    pass


class DisconnectedGrid(TwistlabError, ValueError):
    pass


class NonPositiveGroundState(TwistlabError, ArithmeticError):
    pass


class ZeroDistance(TwistlabError, ValueError):
    pass


# tube
class BranchCutInsideDomain(TwistlabError, ValueError):
    pass


# effective model
class BadInterval(TwistlabError, ValueError):
    pass


class PlanInvalid(TwistlabError, ValueError):
    pass


# certificates
class ZeroBeta(TwistlabError, ValueError):
    pass


class EmptyInterval(TwistlabError, ValueError):
    pass


class NonPositiveNu(TwistlabError, ValueError):
    pass


class NonPositiveChi(TwistlabError, ValueError):
    pass


# cli
class ConfigError(TwistlabError, ValueError):
    pass
