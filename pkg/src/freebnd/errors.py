"""Exception hierarchy shared by all freebnd modules."""


class FreebndError(Exception):
    """Base class for every error raised by freebnd."""


# kernels / quadrature
class NodeOutsideDomainWithoutExteriorPolicy(FreebndError):
    pass


class NonFiniteQuadrature(FreebndError):
    pass


class CapExceeded(FreebndError):
    pass


# geometry
class UnresolvedBoundary(FreebndError):
    pass


class NoConvergence(FreebndError):
    """Iteration cap reached.  ``best`` holds the last iterate, ``residual`` its residual."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


# obstacle
class EmptyFreeBoundary(FreebndError):
    pass


class InsufficientRadii(FreebndError):
    pass


class DegenerateGradient(FreebndError):
    pass


# regularity
class SampleOutsideDomain(FreebndError):
    pass


class InsufficientLevels(FreebndError):
    pass


class SingularGram(FreebndError):
    pass


class NondegeneracyViolated(FreebndError):
    def __init__(self, message, worst_node=None, worst_ratio=None):
        super().__init__(message)
        self.worst_node = worst_node
        self.worst_ratio = worst_ratio


class QuadratureNoiseFloor(FreebndError):
    pass


# extension
class NonIntegrableTail(FreebndError):
    pass


class ExtrapolationUnstable(FreebndError):
    pass


class SingularFit(FreebndError):
    pass


# io / cli
class ConfigInvalid(FreebndError):
    pass


class FormatVersionMismatch(FreebndError):
    pass


class ChecksumMismatch(FreebndError):
    pass
