"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0
"""


class VisimError(Exception):
    """Base class for every error raised by vi-sim library code."""


class ValidationError(VisimError, ValueError):
    """Input rejected before any computation took place."""


class InvalidRho(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class TooFewRows(ValidationError):
    pass


class NonFinite(ValidationError):
    pass


class NotPositiveDefinite(VisimError):
    """A Cholesky pivot fell below the positivity tolerance."""


class NoConvergence(VisimError):
    pass


class RankDeficient(VisimError):
    """The OLS gram matrix is singular (perfectly collinear features)."""


class DegenerateCovariance(VisimError):
    """Covariance could not be made positive definite by diagonal shrinkage."""


class ZeroVariance(VisimError):
    pass
