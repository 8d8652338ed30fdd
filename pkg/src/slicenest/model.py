"""Model-authoring contract and the point types shared by the sampler.

A model is written on the unit hypercube: ``prior_transform`` maps a point
``u`` in ``[0, 1]^dim`` to physical parameters by inverse-CDF sampling, and
``log_likelihood`` scores those parameters.  The likelihood should carry its
normalisation constants since they enter the evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ModelContractError, ModelError

__all__ = [
    "ModelSpec",
    "LivePoint",
    "DeadPoint",
    "Evaluation",
    "EvalCounter",
    "evaluate",
    "validate_model",
]


@dataclass(frozen=True)
class ModelSpec:
    """A model expressed on the unit hypercube.

    Parameters
    ----------
    dim : int
        Number of hypercube coordinates.
    prior_transform : callable
        ``u -> params``; must be deterministic.
    log_likelihood : callable
        ``params -> float``.  ``-inf`` is allowed, NaN and ``+inf`` are not.
    param_names : sequence of str
        One label per entry of ``prior_transform``'s output.
    derived : callable, optional
        ``(params, rng) -> values`` for quantities that are stored alongside
        the parameters but play no part in sampling.
    derived_names : sequence of str
    data : object
        Dataset handle; opaque to the engine.
    name : str
    """

    dim: int
    prior_transform: Callable[[np.ndarray], Any]
    log_likelihood: Callable[[Any], float]
    param_names: Sequence[str]
    derived: Optional[Callable[[np.ndarray, np.random.Generator], Any]] = None
    derived_names: Sequence[str] = ()
    data: Any = None
    name: str = "model"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "param_names", tuple(self.param_names))
        object.__setattr__(self, "derived_names", tuple(self.derived_names))

    @property
    def n_derived(self) -> int:
        return len(self.derived_names) if self.derived is not None else 0


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, ndmin=1)
    a.flags.writeable = False
    return a


_EMPTY = _frozen(np.empty(0))


@dataclass(frozen=True, eq=False)
class LivePoint:
    cube: np.ndarray
    params: np.ndarray
    log_like: float
    birth_log_like: float = -math.inf
    derived: np.ndarray = field(default=_EMPTY)

    @classmethod
    def make(cls, cube, params, log_like, birth_log_like=-math.inf, derived=None):
        return cls(
            _frozen(cube),
            _frozen(params),
            float(log_like),
            float(birth_log_like),
            _EMPTY if derived is None else _frozen(derived),
        )


@dataclass(frozen=True, eq=False)
class DeadPoint(LivePoint):
    # unnormalised log(L_i * dX_i)
    log_weight: float = -math.inf

    @classmethod
    def from_live(cls, point: LivePoint, log_weight: float) -> "DeadPoint":
        return cls(point.cube, point.params, point.log_like, point.birth_log_like,
                   point.derived, float(log_weight))


class Evaluation(NamedTuple):
    params: np.ndarray
    derived: Optional[np.ndarray]
    log_like: float


class EvalCounter:
    """Counts likelihood calls.  Not thread-safe; one per run."""

    __slots__ = ("n",)

    def __init__(self):
        self.n = 0

    def __repr__(self):
        return f"EvalCounter(n={self.n})"


def in_cube(u) -> bool:
    """True when every component lies in [0, 1] (NaN never does)."""
    u = np.asarray(u, dtype=float)
    if u.size <= 64:
        # python-level loop beats numpy reductions on tiny vectors
        return all(0.0 <= v <= 1.0 for v in u.ravel().tolist())
    return bool(np.all((u >= 0.0) & (u <= 1.0)))


def evaluate(model: ModelSpec, cube, counter: Optional[EvalCounter] = None,
             derived_rng: Optional[np.random.Generator] = None) -> Evaluation:
    """Push ``cube`` through the prior transform and score it.

    Derived values are computed only when ``derived_rng`` is given and the
    model defines them.

    Raises
    ------
    ModelContractError
        If ``cube`` has the wrong length or leaves ``[0, 1]^dim``.
    ModelError
        If the likelihood is NaN or ``+inf``.
    """
    u = np.asarray(cube, dtype=float)
    if u.shape != (model.dim,):
        raise ModelContractError(
            f"{model.name}: expected a cube point of length {model.dim}, got shape {u.shape}")
    if not in_cube(u):
        raise ModelContractError(
            f"{model.name}: hypercube parameter outside [0, 1]: {u.tolist()}")
    params = np.asarray(model.prior_transform(u), dtype=float)
    logl = float(model.log_likelihood(params))
    if counter is not None:
        counter.n += 1
    if math.isnan(logl) or logl == math.inf:
        raise ModelError(
            f"{model.name}: log-likelihood is {logl} at parameters {params.tolist()}")
    derived = None
    if derived_rng is not None and model.derived is not None:
        derived = np.asarray(model.derived(params, derived_rng), dtype=float)
    return Evaluation(params, derived, logl)


def _probe_points(dim, inset=1e-12, max_corners=64):
    yield "center", np.full(dim, 0.5)
    n = min(2 ** dim, max_corners)
    for k in range(n):
        bits = [(k >> j) & 1 for j in range(dim)]
        yield f"corner {bits}", np.where(np.array(bits, bool), 1.0 - inset, inset)


def validate_model(model: ModelSpec) -> list[tuple[str, str]]:
    """Probe a model at the centre and near-corners of the cube.

    Corners are inset by 1e-12 so that priors with unbounded support stay
    finite.  Returns ``(kind, detail)`` pairs; an empty list means no
    problems were found.  Kinds are ``"dimension-mismatch"``, ``"nan"``,
    ``"non-deterministic"``, ``"infinite"`` and ``"exception"``.
    """
    issues = []
    n_names = len(model.param_names)
    for label, u in _probe_points(model.dim):
        try:
            p1 = np.asarray(model.prior_transform(u.copy()), dtype=float)
            p2 = np.asarray(model.prior_transform(u.copy()), dtype=float)
        except Exception as exc:  # report-only
            issues.append(("exception", f"prior_transform at {label}: {exc!r}"))
            continue
        if p1.ndim != 1 or p1.shape[0] != n_names:
            issues.append(("dimension-mismatch",
                           f"prior_transform returned {p1.size} values for "
                           f"{n_names} parameter names at {label}"))
        if np.any(np.isnan(p1)):
            issues.append(("nan", f"prior_transform returned NaN at {label}"))
        if p1.shape != p2.shape or not np.array_equal(p1, p2, equal_nan=True):
            issues.append(("non-deterministic", f"prior_transform differs between calls at {label}"))
        try:
            logl = float(model.log_likelihood(p1))
        except Exception as exc:
            issues.append(("exception", f"log_likelihood at {label}: {exc!r}"))
            continue
        if math.isnan(logl):
            issues.append(("nan", f"log_likelihood is NaN at {label}"))
        elif logl == math.inf:
            issues.append(("infinite", f"log_likelihood is +inf at {label}"))
        if model.derived is not None:
            try:
                d = np.asarray(model.derived(p1, np.random.default_rng(0)), dtype=float)
            except Exception as exc:
                issues.append(("exception", f"derived at {label}: {exc!r}"))
                continue
            if d.size != len(model.derived_names):
                issues.append(("dimension-mismatch",
                               f"derived returned {d.size} values for "
                               f"{len(model.derived_names)} names at {label}"))
    return issues
