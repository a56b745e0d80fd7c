"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so new failure kinds should subclass
one of the three roots below rather than raising bare ValueError.
"""

from __future__ import annotations


class CidError(Exception):
    """Root of all library errors."""


class SchemaError(CidError, ValueError):
    """Malformed or inadmissible input parameters."""


class NumericError(CidError, ArithmeticError):
    """A numerical routine could not reach its accuracy target."""


class DomainError(SchemaError):
    """Argument outside the mathematical domain of a function."""


class DimensionMismatchError(SchemaError):
    pass


class DegenerateDistributionError(SchemaError):
    """Zero scale where a density is requested."""


class UnsupportedDimensionError(SchemaError):
    pass


class ConditioningError(NumericError):
    """Parameters so close to a singular branch that results would be meaningless."""


class NonConvergenceError(NumericError):
    pass


class QuadratureError(NumericError):
    pass


class NotConjugateError(CidError):
    """No closed-form kernel mean (or inner product) exists for the requested pairing."""


class UnboundedKernelError(SchemaError):
    """The symmetric GH density is unbounded, so it cannot serve as a kernel."""


class NoConvolutionRuleError(NotConjugateError):
    pass


class UnsupportedMixingError(CidError):
    """The model has no sampler for its mixing law."""


class RkhsMismatchError(SchemaError):
    """Two kernel means live in different reproducing kernel Hilbert spaces."""
