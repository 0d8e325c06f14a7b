class NambuError(Exception):
    """Base class for every error raised by nambukepler."""


class PhaseSpaceError(NambuError, ValueError):
    """A classical quantity was requested outside its domain."""


class SingularPoint(PhaseSpaceError):
    pass


class UnboundState(PhaseSpaceError):
    pass


class ZeroAngularMomentum(PhaseSpaceError):
    pass


class DegenerateInvariants(PhaseSpaceError):
    pass


class StencilFailure(PhaseSpaceError):
    pass


class IntegrationError(NambuError, RuntimeError):
    """The time integrator could not produce a valid trajectory."""


class StepFailure(IntegrationError):
    pass


class DomainExit(IntegrationError):
    pass


class OperatorError(NambuError, ValueError):
    """Invalid input to the operator algebra."""


class InvalidSpin(OperatorError):
    pass


class DimMismatch(OperatorError):
    pass


class NotHermitean(OperatorError):
    pass


class Incompatible(OperatorError):
    pass
