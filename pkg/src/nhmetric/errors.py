"""Exception hierarchy for the simulator.

Every numerical failure derives from :class:`NumericalError` so that callers
(the CLI in particular) can map them onto a single exit code.
"""


class NHMetricError(Exception):
    """Base class for all package errors."""


class ConfigError(NHMetricError, ValueError):
    """Invalid user supplied configuration."""


class NumericalError(NHMetricError, ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class NotHermitian(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class SingularMatrix(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class SingularEta(SingularMatrix):
    pass


class SingularPropagator(SingularMatrix):
    pass


class ZeroState(NumericalError):
    pass


class MetricBreakdown(NumericalError):
    """The integrated metric lost positive definiteness."""


class StepSizeUnderflow(NumericalError):
    pass


class ConservationViolation(NumericalError):
    """<psi|rho|psi> drifted away from one beyond tolerance."""


class WindowTooSmall(ConfigError):
    """The time window does not reach the asymptotic (diabatic) regime."""


class SingularFormula(NumericalError):
    pass


class QuadratureNonConvergence(NumericalError):
    pass
