"""Exception hierarchy.

Exit-code / HTTP mapping used by the service and the CLI:

* 2 -- input and schema problems (:class:`SchemaError`, :class:`RosterError`)
* 3 -- mathematical precondition failures (:class:`MathPreconditionError` tree:
  resonant divisors, budget inequality violations, spectral placement)
* 4 -- numerical failures (:class:`NumericalError` tree: quadrature tolerance
  not met, trajectory blow-up)
"""


class SaddleNFError(Exception):
    """Base class for everything raised on purpose by this package."""

    exit_code = 1


class SchemaError(SaddleNFError):
    """Malformed or inconsistent input data (files, requests, rosters)."""

    exit_code = 2


class RosterError(SchemaError):
    """A variable roster violates its structural constraints."""


class MathPreconditionError(SaddleNFError):
    """A mathematical precondition of an operation does not hold."""

    exit_code = 3


class SpectralGapError(MathPreconditionError):
    """Eigenvalue placement incompatible with a saddle(-center) spectral gap."""


class ResonantMonomialError(MathPreconditionError):
    """A homological equation was asked to remove a resonant monomial."""

    def __init__(self, component, exponent, divisor, message=None):
        self.component = component
        self.exponent = tuple(exponent)
        self.divisor = divisor
        super().__init__(
            message
            or "resonant monomial in component %r: exponent %s has divisor %s"
            % (component, self.exponent, divisor)
        )


class BudgetInequalityError(MathPreconditionError):
    """A smoothness-budget inequality failed; carries the inequality name."""

    def __init__(self, name, detail=""):
        self.name = name
        msg = "budget inequality %r violated" % name
        if detail:
            msg += ": " + detail
        super().__init__(msg)


class NumericalError(SaddleNFError):
    """Numerical work did not reach the requested quality."""

    exit_code = 4


class QuadratureToleranceError(NumericalError):
    """Adaptive integration/quadrature could not meet its tolerance."""


class NumericalBlowupError(NumericalError):
    """A trajectory left the admissible region or exceeded the growth bound."""


def exit_code_for(exc) -> int:
    """Map an exception to the process exit code used by the CLI."""
    if isinstance(exc, SaddleNFError):
        return exc.exit_code
    return 1
