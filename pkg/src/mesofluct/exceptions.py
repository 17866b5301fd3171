"""Exception hierarchy shared by every mesofluct module.

The command line front end maps these classes onto exit codes, so the split
between "bad input" and "numerics went wrong" matters:

* :class:`ParameterError` and its subclasses are configuration problems
  (exit code 2).
* :class:`NumericContractError` and its subclasses mean that a computed
  quantity broke a documented tolerance (exit code 3).
"""


class MesofluctError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(MesofluctError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class PositivityViolationError(ParameterError):
    """A Kossakowski matrix built from the parameters is not positive semidefinite."""


class DegenerateRegimeError(ParameterError):
    """The requested temperature makes a needed matrix inverse undefined."""


class BracketError(ParameterError):
    """A bisection bracket does not straddle the sign change it should."""


class InputError(MesofluctError, ValueError):
    """Malformed input data such as a non-increasing time grid."""


class DimensionError(InputError):
    """Matrix or vector shape does not match what the operation expects."""


class ContractViolationError(MesofluctError):
    """Input violates a structural contract (Hermiticity, ordering tag, ...)."""


class NumericContractError(MesofluctError, ArithmeticError):
    """A computed quantity broke a documented numerical tolerance."""


class NonFiniteError(NumericContractError):
    """NaN or infinite entries were found where finite numbers are required."""


class SpanStabilityError(NumericContractError):
    """The generator maps an operator outside the span of the fluctuation basis."""


class CompletePositivityError(NumericContractError):
    """A mesoscopic Kossakowski matrix has a significantly negative eigenvalue."""


class NumericalInstabilityError(NumericContractError):
    """An evolved covariance matrix lost physicality beyond roundoff."""


class PipelineDefectError(NumericContractError):
    """The numeric pipeline and an independent closed form disagree."""


class ConfigError(ParameterError):
    """Invalid command line or configuration-file setting.

    Attributes:
        field: Name of the offending setting, if known.
    """

    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
