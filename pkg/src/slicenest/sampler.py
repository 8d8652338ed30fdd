"""Draws from the likelihood-constrained prior by whitened slice sampling.

A Markov chain starts at a randomly chosen surviving live point and takes
``n_repeat`` slice-sampling steps, each along an isotropic random direction
in the whitened frame of the live points.  The last point of the chain is
the replacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ModelError, SamplerStallError
from .model import EvalCounter, LivePoint, ModelSpec, in_cube

__all__ = [
    "WhiteningTransform",
    "SliceChainStats",
    "build_whitening",
    "random_direction",
    "slice_step",
    "generate_replacement",
]


@dataclass(frozen=True)
class WhiteningTransform:
    """Affine map between cube space and a frame where the live points are
    roughly isotropic: ``u = mean + cholesky @ w``."""

    mean: np.ndarray
    cholesky: np.ndarray
    inverse: np.ndarray
    regularization: float = 0.0
    fallback: bool = False

    def to_white(self, u):
        return (np.asarray(u, dtype=float) - self.mean) @ self.inverse.T

    def from_white(self, w):
        return self.mean + np.asarray(w, dtype=float) @ self.cholesky.T

    @classmethod
    def identity(cls, dim, mean=None, scale=1.0, fallback=True):
        mean = np.full(dim, 0.5) if mean is None else np.asarray(mean, dtype=float)
        return cls(mean, scale * np.eye(dim), np.eye(dim) / scale, 0.0, fallback)


@dataclass
class SliceChainStats:
    n_eval: int = 0
    n_expand: int = 0
    n_contract: int = 0

    def __iadd__(self, other):
        self.n_eval += other.n_eval
        self.n_expand += other.n_expand
        self.n_contract += other.n_contract
        return self


def build_whitening(live_cubes) -> WhiteningTransform:
    """Mean and Cholesky factor of the empirical covariance of ``live_cubes``.

    When the factorisation fails or is numerically singular, ``1e-12 * trace / dim``
    is added to the diagonal (growing tenfold until it succeeds).  With fewer than
    ``dim + 1`` points the identity is returned with ``fallback=True``.
    """
    x = np.asarray(live_cubes, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape
    if n < d + 1:
        return WhiteningTransform.identity(d, x.mean(axis=0) if n else None)
    mean = x.mean(axis=0)
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    trace = float(np.trace(cov))
    floor = 1e-12 * trace / d if trace > 0 else 1e-12
    reg = 0.0
    while True:
        try:
            chol = np.linalg.cholesky(cov + reg * np.eye(d))
            if np.min(np.diag(chol)) ** 2 > floor:
                break
        except np.linalg.LinAlgError:
            pass
        reg = floor if reg == 0.0 else reg * 10.0
    inverse = np.linalg.inv(chol)
    return WhiteningTransform(mean, chol, inverse, reg, False)


def random_direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Isotropic unit vector."""
    n = rng.standard_normal(dim)
    return n / math.sqrt(n @ n)


def _score(model, u, counter):
    params = np.asarray(model.prior_transform(u), dtype=float)
    logl = float(model.log_likelihood(params))
    if counter is not None:
        counter.n += 1
    if logl != logl or logl == math.inf:
        raise ModelError(f"{model.name}: log-likelihood is {logl} at parameters {params.tolist()}")
    return params, logl


def slice_step(model: ModelSpec, start: LivePoint, direction, log_l_star: float,
               rng: np.random.Generator, width: float = 1.0, *, max_expand: int = 10,
               strict: bool = True, counter: Optional[EvalCounter] = None):
    """One slice-sampling update of ``start`` along ``direction``.

    ``direction`` is the cube-space image of a unit whitened vector, so one
    unit of ``width`` is one whitened standard deviation.  The bracket is
    stepped out at most ``max_expand`` times in total (split randomly between
    the two ends) and then shrunk towards ``start``.  Points outside the
    cube count as outside the slice.

    Returns ``(point, stats)`` where ``point.birth_log_like == log_l_star``.
    """
    if not width > 0:
        raise ValueError(f"slice width must be positive, got {width}")
    x0 = start.cube
    axis = np.asarray(direction, dtype=float)
    stats = SliceChainStats()

    def above(t):
        u = x0 + t * axis
        if not in_cube(u):
            return False, u, None, -math.inf
        params, logl = _score(model, u, counter)
        stats.n_eval += 1
        ok = logl > log_l_star if strict else logl >= log_l_star
        return ok, u, params, logl

    lo = -rng.random() * width
    hi = lo + width
    m = max_expand + 1
    n_left = int(math.floor(m * rng.random()))
    n_right = m - 1 - n_left
    while n_left > 0 and above(lo)[0]:
        lo -= width
        n_left -= 1
        stats.n_expand += 1
    while n_right > 0 and above(hi)[0]:
        hi += width
        n_right -= 1
        stats.n_expand += 1

    while True:
        t = lo + rng.random() * (hi - lo)
        ok, u, params, logl = above(t)
        if ok:
            return LivePoint.make(u, params, logl, log_l_star), stats
        stats.n_contract += 1
        if t < 0.0:
            lo = t
        else:
            hi = t
        if hi - lo < 1e-12 * width:
            raise SamplerStallError(
                f"{model.name}: slice shrank to zero width without finding "
                f"log L > {log_l_star!r}")


def generate_replacement(model: ModelSpec, live: Sequence[LivePoint], log_l_star: float,
                         n_repeat: int, rng: np.random.Generator, *,
                         whitening: Optional[WhiteningTransform] = None, max_expand: int = 10,
                         counter: Optional[EvalCounter] = None):
    """Draw a new point with ``log L > log_l_star``.

    ``live`` holds the surviving live points (the evicted one excluded).  If
    none of them lies strictly above the contour, the whole live set sits on
    a likelihood plateau; the chain then samples ``log L >= log_l_star``
    instead so that it can move at all.
    """
    if len(live) == 0:
        raise ValueError("generate_replacement needs at least one live point")
    if n_repeat < 1:
        raise ValueError(f"n_repeat must be >= 1, got {n_repeat}")
    strict = True
    j = int(rng.integers(len(live)))
    start = live[j]
    if not start.log_like > log_l_star:
        candidates = [p for p in live if p.log_like > log_l_star]
        if not candidates:
            strict = False
            candidates = list(live)
        start = candidates[int(rng.integers(len(candidates)))]
    if whitening is None:
        whitening = build_whitening(np.array([p.cube for p in live]))

    stats = SliceChainStats()
    point = start
    for _ in range(n_repeat):
        axis = whitening.cholesky @ random_direction(rng, model.dim)
        point, s = slice_step(model, point, axis, log_l_star, rng, 1.0,
                              max_expand=max_expand, strict=strict, counter=counter)
        stats += s
    return point, stats
