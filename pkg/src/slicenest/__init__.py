"""Nested sampling with slice-sampling replacements, for models written on
the unit hypercube."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DataError,
    InfiniteValueError,
    ManifestError,
    ModelContractError,
    ModelError,
    PriorDomainError,
    PriorParameterError,
    SamplerStallError,
    SlicenestError,
)
from .model import DeadPoint, LivePoint, ModelSpec, evaluate, validate_model  # noqa: E402
from .engine import RunConfig, RunResult, run  # noqa: E402
from .diagnostics import insertion_test, kish_ess, ks_p_value  # noqa: E402
from . import benchmarks, priors  # noqa: E402

__all__ = [
    "__version__",
    "ModelSpec",
    "LivePoint",
    "DeadPoint",
    "evaluate",
    "validate_model",
    "RunConfig",
    "RunResult",
    "run",
    "insertion_test",
    "kish_ess",
    "ks_p_value",
    "benchmarks",
    "priors",
    "SlicenestError",
    "ModelContractError",
    "ModelError",
    "PriorParameterError",
    "PriorDomainError",
    "InfiniteValueError",
    "SamplerStallError",
    "DataError",
    "ManifestError",
]
