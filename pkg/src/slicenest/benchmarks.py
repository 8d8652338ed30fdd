"""Example targets: a conjugate toy, multimodal test functions and a
change-point model with a discrete parameter.

Additive constants in the test functions are pinned so that the global
maximum of the log-likelihood is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Optional

import numpy as np

from .errors import DataError
from .model import ModelSpec
from .priors import discrete_uniform_prior, exponential_prior, uniform_prior

__all__ = [
    "bernoulli",
    "eggbox",
    "himmelblau",
    "rastrigin",
    "rosenbrock",
    "gaussian_shell",
    "slab_spike",
    "disaster",
    "poisson_log_pmf",
    "BenchmarkEntry",
    "CATALOG",
    "default_data_path",
]

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _box(lo, hi):
    def transform(u):
        return uniform_prior(u, lo, hi)
    return transform


def bernoulli(data) -> ModelSpec:
    """Success probability ``theta ~ U(0, 1)`` for ``N`` Bernoulli trials ``y``."""
    y = np.asarray(data["y"], dtype=np.int64)
    n = int(data.get("N", y.size))
    if y.ndim != 1 or y.size != n:
        raise DataError(f"bernoulli: y must have length N={n}, got {y.size}")
    if np.any((y != 0) & (y != 1)):
        raise DataError("bernoulli: y entries must be 0 or 1")
    k = int(y.sum())

    def log_likelihood(params):
        theta = float(params[0])
        if (theta <= 0.0 and k) or (theta >= 1.0 and n - k):
            return -math.inf
        a = k * math.log(theta) if k else 0.0
        b = (n - k) * math.log1p(-theta) if n - k else 0.0
        return a + b

    def derived(params, rng):
        theta = float(params[0])
        logit = math.log(theta) - math.log1p(-theta) if 0.0 < theta < 1.0 else \
            (-math.inf if theta <= 0.0 else math.inf)
        return [logit, float(rng.binomial(n, theta))]

    return ModelSpec(1, _box(0.0, 1.0), log_likelihood, ("theta",),
                     derived, ("logit_theta", "y_sim"), {"N": n, "y": y}, "bernoulli")


def eggbox(dim: int = 10) -> ModelSpec:
    """``log L = -(2 + prod cos(theta_i / 2))^5`` on ``[0, 10 pi]^dim``."""
    if dim < 1:
        raise ValueError("eggbox: dim must be >= 1")

    def log_likelihood(theta):
        return -(2.0 + float(np.prod(np.cos(theta / 2.0)))) ** 5

    return ModelSpec(dim, _box(0.0, 10.0 * math.pi), log_likelihood,
                     tuple(f"theta_{i + 1}" for i in range(dim)), name="eggbox")


def himmelblau() -> ModelSpec:
    """Four equal maxima, one of them at (3, 2); box ``[-5, 5]^2``."""

    def log_likelihood(theta):
        x, y = float(theta[0]), float(theta[1])
        return -(x * x + y - 11.0) ** 2 - (x + y * y - 7.0) ** 2

    return ModelSpec(2, _box(-5.0, 5.0), log_likelihood, ("theta_1", "theta_2"),
                     name="himmelblau")


def rastrigin(dim: int = 10) -> ModelSpec:
    """``log L = -10 dim - sum(theta^2 - 10 cos(2 pi theta))`` on ``[-5.12, 5.12]^dim``."""
    if dim < 1:
        raise ValueError("rastrigin: dim must be >= 1")

    def log_likelihood(theta):
        return -10.0 * dim - float(np.sum(theta * theta - 10.0 * np.cos(2.0 * math.pi * theta)))

    return ModelSpec(dim, _box(-5.12, 5.12), log_likelihood,
                     tuple(f"theta_{i + 1}" for i in range(dim)), name="rastrigin")


def rosenbrock(dim: int = 4) -> ModelSpec:
    """Rosenbrock valley on ``[-5, 10]^dim``; maximum 0 at all-ones."""
    if dim < 2:
        raise ValueError("rosenbrock: dim must be >= 2")

    def log_likelihood(x):
        a, b = x[:-1], x[1:]
        return -float(np.sum(100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2))

    return ModelSpec(dim, _box(-5.0, 10.0), log_likelihood,
                     tuple(f"x_{i + 1}" for i in range(dim)), name="rosenbrock")


def gaussian_shell(dim: int = 5, mu: float = 0.25, sigma: float = 0.01) -> ModelSpec:
    """Thin shell ``log L = -(r^2 - mu)^2 / (2 sigma^2)`` on ``[-1, 1]^dim``."""
    if not sigma > 0:
        raise ValueError("gaussian_shell: sigma must be positive")
    inv = 1.0 / (2.0 * sigma * sigma)

    def log_likelihood(x):
        r2 = float(x @ x)
        return -(r2 - mu) ** 2 * inv

    return ModelSpec(dim, _box(-1.0, 1.0), log_likelihood,
                     tuple(f"x_{i + 1}" for i in range(dim)), name="shell")


def slab_spike(sigma1: float = 50.0, sigma2: float = 0.01, width: float = 100.0) -> ModelSpec:
    """Sum of two zero-mean normal densities, ``x ~ U(-width, width)``."""
    if not (sigma1 > 0 and sigma2 > 0):
        raise ValueError("slab_spike: sigmas must be positive")
    ls1, ls2 = math.log(sigma1), math.log(sigma2)

    def log_likelihood(x):
        v = float(x[0])
        a = -0.5 * (v / sigma1) ** 2 - ls1
        b = -0.5 * (v / sigma2) ** 2 - ls2
        m = max(a, b)
        return m + math.log(math.exp(a - m) + math.exp(b - m)) - LOG_SQRT_2PI

    return ModelSpec(1, _box(-width, width), log_likelihood, ("x",), name="slab_spike")


def poisson_log_pmf(count, rate):
    count = np.asarray(count, dtype=float)
    rate = np.asarray(rate, dtype=float)
    lg = np.vectorize(math.lgamma)(count + 1.0)
    term = np.where(count > 0, count * np.log(np.where(rate > 0, rate, 1.0)), 0.0)
    term = np.where((count > 0) & (rate <= 0), -np.inf, term)
    return term - rate - lg


def disaster(data) -> ModelSpec:
    """Poisson counts whose rate switches from ``early`` to ``late`` at year ``s``.

    Rates have exponential priors; ``s`` is uniform over the covered years
    and counts the first year at the late rate.
    """
    try:
        counts = np.asarray(data["count"], dtype=np.int64)
        first = int(data.get("first_year", 1851))
        last = int(data.get("last_year", first + counts.size - 1))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"disaster: malformed data ({exc})") from exc
    if counts.ndim != 1 or counts.size != last - first + 1:
        raise DataError(f"disaster: expected {last - first + 1} yearly counts, got {counts.size}")
    if np.any(counts < 0):
        raise DataError("disaster: counts must be non-negative")
    early_rate = float(data.get("early_rate", 1.0))
    late_rate = float(data.get("late_rate", 1.0))

    # sums over years before each candidate change year
    csum = np.concatenate(([0], np.cumsum(counts)))
    total = int(csum[-1])
    n_years = counts.size
    log_fact = float(sum(math.lgamma(c + 1.0) for c in counts))

    def prior_transform(u):
        u0, u1, u2 = u.tolist()
        return np.array([
            exponential_prior(u0, early_rate),
            exponential_prior(u1, late_rate),
            discrete_uniform_prior(u2, first, last),
        ], dtype=float)

    def log_likelihood(p):
        e, l, s = float(p[0]), float(p[1]), int(p[2])
        k = s - first
        s_b = int(csum[k])
        s_a = total - s_b
        out = -k * e - (n_years - k) * l - log_fact
        if s_b:
            out += s_b * math.log(e) if e > 0 else -math.inf
        if s_a:
            out += s_a * math.log(l) if l > 0 else -math.inf
        return out

    def derived(p, rng):
        return [p[2]]

    return ModelSpec(3, prior_transform, log_likelihood, ("e", "l", "s"),
                     derived, ("change_year",),
                     {"count": counts, "first_year": first, "last_year": last,
                      "early_rate": early_rate, "late_rate": late_rate},
                     "disaster")


def default_data_path(name: str) -> Optional[str]:
    entry = CATALOG.get(name)
    if entry is None or entry.data_file is None:
        return None
    return str(resources.files("slicenest") / "data" / entry.data_file)


@dataclass(frozen=True)
class BenchmarkEntry:
    factory: Callable
    data_file: Optional[str] = None
    schema: Optional[dict] = None
    # published estimate; a sanity reference, not an exact target unless noted
    reference_log_z: Optional[float] = None
    reference_err: Optional[float] = None

    @property
    def needs_data(self) -> bool:
        return self.schema is not None


CATALOG = {
    "bernoulli": BenchmarkEntry(bernoulli, "bernoulli.data.json",
                                {"N": "int", "y": "int[]"}, -6.20, 0.04),
    "eggbox": BenchmarkEntry(eggbox, None, None, -14.9, 0.1),
    "himmelblau": BenchmarkEntry(himmelblau, None, None, -4.66, 0.1),
    "rastrigin": BenchmarkEntry(rastrigin, None, None, -23.4, 0.2),
    "rosenbrock": BenchmarkEntry(rosenbrock, None, None, -9.5, 0.2),
    "shell": BenchmarkEntry(gaussian_shell, None, None, -5.8, 0.1),
    "slab_spike": BenchmarkEntry(slab_spike, None, None, -4.63, 0.07),
    "disaster": BenchmarkEntry(disaster, "disaster.data.json",
                               {"count": "int[]", "first_year": "int?", "last_year": "int?",
                                "early_rate": "real?", "late_rate": "real?"}),
}
