"""Run-quality statistics.

If replacements really are drawn from the constrained prior, the rank at
which each new point inserts among the surviving live points is uniform on
``0 .. n_live - 1``.  A Kolmogorov-Smirnov test on the recorded ranks flags
runs whose sampler was not doing that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "InsertionRecord",
    "TestReport",
    "ks_statistic",
    "ks_p_value",
    "insertion_test",
    "insertion_indexes_from_chain",
    "kish_ess",
    "summary_stats",
    "logsumexp",
    "format_stats",
]


def logsumexp(a) -> float:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return -math.inf
    m = float(np.max(a))
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.sum(np.exp(a - m))))


@dataclass(frozen=True)
class InsertionRecord:
    indexes: np.ndarray
    n_live: int
    batch_size: Optional[int] = None

    def __post_init__(self):
        idx = np.asarray(self.indexes, dtype=np.int64)
        object.__setattr__(self, "indexes", idx)
        if self.n_live < 1:
            raise ValueError("n_live must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_live):
            raise ValueError(f"insertion index outside [0, {self.n_live - 1}]")


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # not a pytest class

    p_value: float
    d_statistic: float
    per_batch_min_p: float
    batch_ratio: float
    n: int
    n_batches: int


def ks_statistic(indexes, n_live: int) -> float:
    """KS distance between the empirical CDF of ``indexes`` and the discrete
    uniform on ``{0, ..., n_live - 1}``, compared at the support points."""
    idx = np.asarray(indexes, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("ks_statistic needs at least one index")
    if idx.min() < 0 or idx.max() >= n_live:
        raise ValueError(f"insertion index outside [0, {n_live - 1}]")
    ecdf = np.cumsum(np.bincount(idx, minlength=n_live)) / idx.size
    ref = np.arange(1, n_live + 1) / n_live
    return float(np.max(np.abs(ecdf - ref)))


def ks_p_value(d: float, n: int) -> float:
    """Asymptotic Kolmogorov tail probability ``Q(sqrt(n) * d)``."""
    lam = math.sqrt(n) * d
    if lam <= 0.1:
        # 1 - Q(0.1) is below 1e-50
        return 1.0
    if lam < 1.0:
        # dual (theta-function) form of the same series; converges fast here
        s, k = 0.0, 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8.0 * lam * lam))
            s += term
            if term < 1e-17:
                break
            k += 1
        p = 1.0 - math.sqrt(2.0 * math.pi) / lam * s
    else:
        p, k = 0.0, 1
        while True:
            term = math.exp(-2.0 * k * k * lam * lam)
            p += term if k % 2 else -term
            if term < 1e-12 * max(p, 1e-300):
                break
            k += 1
        p *= 2.0
    return min(1.0, max(0.0, p))


def insertion_test(record: InsertionRecord) -> TestReport:
    """Whole-run KS p-value plus a Sidak-corrected minimum over batches.

    Batches are consecutive runs of ``batch_size`` indexes (default
    ``n_live``); a trailing partial batch is ignored unless it is the only
    one.
    """
    idx = record.indexes
    n_live = record.n_live
    bs = record.batch_size or n_live
    d = ks_statistic(idx, n_live)
    p = ks_p_value(d, idx.size)
    n_full = idx.size // bs
    if n_full == 0:
        batch_min, n_batches = p, 1
    else:
        ps = [ks_p_value(ks_statistic(idx[i * bs:(i + 1) * bs], n_live), bs)
              for i in range(n_full)]
        n_batches = n_full
        batch_min = 1.0 - (1.0 - min(ps)) ** n_batches
    return TestReport(p, d, float(batch_min), bs / n_live, int(idx.size), n_batches)


def insertion_indexes_from_chain(log_like, birth_log_like) -> np.ndarray:
    """Rebuild insertion indexes from dead-point likelihoods and birth contours.

    A point born at contour ``b`` joined the live points that were born
    below ``b`` and had not yet died (``log L > b``); its index is how many
    of those it outranks.  Results follow creation order.  Exact for runs
    without likelihood ties.
    """
    logl = np.asarray(log_like, dtype=float)
    birth = np.asarray(birth_log_like, dtype=float)
    born = np.flatnonzero(birth > -math.inf)
    born = born[np.argsort(birth[born], kind="stable")]
    out = np.empty(born.size, dtype=np.int64)
    for k, j in enumerate(born):
        b = birth[j]
        alive = (birth < b) & (logl > b)
        out[k] = np.count_nonzero(alive & (logl < logl[j]))
    return out


def kish_ess(weights) -> float:
    """Kish effective sample size ``(sum w)^2 / sum w^2``."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    s2 = float(np.sum(w * w))
    if s2 == 0.0:
        raise ValueError("all weights are zero")
    return float(np.sum(w)) ** 2 / s2


def summary_stats(log_like, weights, log_z: float) -> dict:
    """KL divergence prior -> posterior, posterior mean log-likelihood and
    Bayesian model dimensionality, from normalised posterior ``weights``."""
    logl = np.asarray(log_like, dtype=float)
    p = np.asarray(weights, dtype=float)
    keep = p > 0
    logl, p = logl[keep], p[keep]
    if logl.size and logl.min() == logl.max():
        # constant likelihood: avoid rounding in the weighted mean
        return {"d_kl": float(logl[0]) - log_z, "log_l_p": float(logl[0]), "d_g": 0.0}
    log_l_p = float(np.sum(p * logl))
    d_g = 2.0 * float(np.sum(p * (logl - log_l_p) ** 2))
    return {"d_kl": log_l_p - log_z, "log_l_p": log_l_p, "d_g": d_g}


def format_stats(log_z: float, stats: dict) -> str:
    """Four-line block in the style of anesthetic's ``NestedSamples.stats()``."""
    rows = [("logZ", log_z), ("D_KL", stats["d_kl"]),
            ("logL_P", stats["log_l_p"]), ("d_G", stats["d_g"])]
    return "\n".join(f"{k:<7s}{v:>14.6f}" for k, v in rows)
