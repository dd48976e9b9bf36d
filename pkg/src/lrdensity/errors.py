"""
Errors module collects exceptions raised across the package.
Everything derives from ValueError, so callers that only
know about invalid values keep working; the command line
tells validation problems apart from numerical ones by
the two intermediate classes.
"""


class LrdError(ValueError):
    """
    Root of the package exceptions
    """


class ValidationError(LrdError):
    """
    Invalid input data, parameters or configuration
    """


class NumericalFailure(LrdError):
    """
    Computation could not be carried out on valid inputs
    """


class InsufficientLocalData(NumericalFailure):
    """
    Fewer observations inside the kernel window than basis functions
    """


class SingularGram(NumericalFailure):
    """
    Normalised Gram matrix is not numerically invertible
    """


class SingularBlock(NumericalFailure):
    """
    A partitioned block used by the minimum distance or
    short regression estimators is not invertible
    """


class DegenerateVariance(NumericalFailure):
    """
    Variance of the target linear combination is not positive
    """


class QuadratureError(NumericalFailure):
    """
    Adaptive quadrature did not reach the requested tolerance
    """


class FactorizationError(NumericalFailure):
    """
    Correlation matrix could not be factorised even after repair
    """


class NonPositiveShare(NumericalFailure):
    """
    Estimated complier share is not positive
    """
