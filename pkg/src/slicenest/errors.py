"""Exception hierarchy.

The CLI maps these onto exit codes, so each class carries one.
"""


class SlicenestError(Exception):
    exit_code = 1


class ModelContractError(SlicenestError):
    """A point handed to the model lies outside the unit hypercube."""

    exit_code = 3


class ModelError(SlicenestError):
    """The model produced NaN or +inf."""

    exit_code = 3


class PriorParameterError(SlicenestError, ValueError):
    """Bad shape parameter (non-positive scale, empty range, ...)."""

    exit_code = 3


class PriorDomainError(SlicenestError, ValueError):
    """Input draw outside [0, 1]."""

    exit_code = 3


class InfiniteValueError(PriorDomainError):
    """Draw at an endpoint that maps to an infinite parameter value."""


class SamplerStallError(SlicenestError):
    exit_code = 4


class DataError(SlicenestError):
    exit_code = 2


class ManifestError(SlicenestError):
    exit_code = 1
