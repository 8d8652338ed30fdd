"""Inverse-CDF transforms from a U(0, 1) draw to common prior distributions.

Every function takes the uniform draw first, followed by the distribution's
shape parameters, and accepts either a scalar or an array of draws.  Scalars
come back as Python numbers, arrays as arrays.

    >>> uniform_prior(0.25, 0.0, 4.0)
    1.0
    >>> normal_prior(0.5, 3.0, 2.0)
    3.0
"""

import math

import numpy as np

from .errors import InfiniteValueError, PriorDomainError, PriorParameterError
from .model import in_cube

__all__ = [
    "ndtri",
    "uniform_prior",
    "normal_prior",
    "std_normal_prior",
    "half_normal_prior",
    "exponential_prior",
    "cauchy_prior",
    "log_uniform_prior",
    "discrete_uniform_prior",
    "TRANSFORMS",
]

# Wichura (1988), Algorithm AS 241, PPND16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
      5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
      2.8729085735721942674e4, 5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
      6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
      1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15)


def _poly(coef, x):
    # Horner, highest order last in ``coef``
    out = coef[-1]
    for c in coef[-2::-1]:
        out = out * x + c
    return out


def _ndtri_scalar(p):
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        val = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        val = _poly(_E, r) / _poly(_F, r)
    return -val if q < 0 else val


def ndtri(p):
    """Inverse of the standard normal CDF, Phi^-1(p), for 0 < p < 1."""
    if np.ndim(p) == 0:
        p = float(p)
        if not 0.0 < p < 1.0:
            if p in (0.0, 1.0):
                raise InfiniteValueError(f"ndtri({p}) is infinite")
            raise PriorDomainError(f"ndtri argument {p} outside (0, 1)")
        return _ndtri_scalar(p)
    p = np.asarray(p, dtype=float)
    _check_open(p, "ndtri")
    q = p - 0.5
    out = np.empty_like(p)
    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    if tail.any():
        qt = q[tail]
        r = np.sqrt(-np.log(np.where(qt < 0, p[tail], 1.0 - p[tail])))
        near = r <= 5.0
        val = np.empty_like(r)
        rn = r[near] - 1.6
        val[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = r[~near] - 5.0
        val[~near] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(qt < 0, -val, val)
    return out


def _check_closed(x, name):
    if isinstance(x, float):
        ok = 0.0 <= x <= 1.0
    else:
        ok = in_cube(x)
    if not ok:
        raise PriorDomainError(f"{name}: draw outside [0, 1]")


def _check_open(x, name, low=True, high=True):
    _check_closed(x, name)
    if isinstance(x, float):
        if (low and x == 0.0) or (high and x == 1.0):
            raise InfiniteValueError(f"{name}: draw at an endpoint maps to an infinite value")
        return
    x = np.asarray(x, dtype=float)
    if (low and np.any(x == 0.0)) or (high and np.any(x == 1.0)):
        raise InfiniteValueError(f"{name}: draw at an endpoint maps to an infinite value")


def _positive(value, what, name):
    if not value > 0:
        raise PriorParameterError(f"{name}: {what} must be positive, got {value}")


def _draw(x):
    # python floats take the scalar fast paths
    return float(x) if np.ndim(x) == 0 else x


def _ret(v):
    return float(v) if np.ndim(v) == 0 else v


def uniform_prior(x, lo, hi):
    """U(lo, hi)."""
    if not lo < hi:
        raise PriorParameterError(f"uniform_prior: need lo < hi, got ({lo}, {hi})")
    x = _draw(x)
    _check_closed(x, "uniform_prior")
    if isinstance(x, float):
        return lo + x * (hi - lo)
    return _ret(lo + np.asarray(x, dtype=float) * (hi - lo))


def normal_prior(x, mu, sigma):
    """N(mu, sigma^2) via ``mu + sigma * Phi^-1(x)``; x must lie strictly inside (0, 1)."""
    _positive(sigma, "sigma", "normal_prior")
    _check_open(x, "normal_prior")
    return _ret(mu + sigma * ndtri(x))


def std_normal_prior(x):
    return normal_prior(x, 0.0, 1.0)


def half_normal_prior(x, sigma):
    _positive(sigma, "sigma", "half_normal_prior")
    _check_open(x, "half_normal_prior", low=False)
    x = np.asarray(x, dtype=float)
    # Phi^-1(1/2) is exactly zero
    z = np.where(x == 0.0, 0.5 + 0.25, (1.0 + x) / 2.0)
    v = np.where(x == 0.0, 0.0, sigma * ndtri(z))
    return _ret(v)


def exponential_prior(x, rate):
    _positive(rate, "rate", "exponential_prior")
    x = _draw(x)
    _check_open(x, "exponential_prior", low=False)
    if isinstance(x, float):
        return -math.log1p(-x) / rate
    return _ret(-np.log1p(-np.asarray(x, dtype=float)) / rate)


def cauchy_prior(x, loc, scale):
    _positive(scale, "scale", "cauchy_prior")
    _check_open(x, "cauchy_prior")
    return _ret(loc + scale * np.tan(np.pi * (np.asarray(x, dtype=float) - 0.5)))


def log_uniform_prior(x, lo, hi):
    """Log-uniform (reciprocal) prior on [lo, hi], 0 < lo < hi."""
    if not 0 < lo < hi:
        raise PriorParameterError(f"log_uniform_prior: need 0 < lo < hi, got ({lo}, {hi})")
    _check_closed(x, "log_uniform_prior")
    x = np.asarray(x, dtype=float)
    v = lo * (hi / lo) ** x
    v = np.where(x == 0.0, lo, np.where(x == 1.0, hi, v))
    return _ret(v)


def discrete_uniform_prior(x, lo, hi):
    """Uniform over the integers lo, lo+1, ..., hi."""
    lo, hi = int(lo), int(hi)
    if lo > hi:
        raise PriorParameterError(f"discrete_uniform_prior: need lo <= hi, got ({lo}, {hi})")
    x = _draw(x)
    _check_closed(x, "discrete_uniform_prior")
    if isinstance(x, float):
        return min(lo + math.floor(x * (hi - lo + 1)), hi)
    k = lo + np.floor(np.asarray(x, dtype=float) * (hi - lo + 1)).astype(np.int64)
    k = np.minimum(k, hi)
    return int(k) if k.ndim == 0 else k


# name -> (function, number of shape parameters)
TRANSFORMS = {
    "uniform_prior": (uniform_prior, 2),
    "normal_prior": (normal_prior, 2),
    "std_normal_prior": (std_normal_prior, 0),
    "half_normal_prior": (half_normal_prior, 1),
    "exponential_prior": (exponential_prior, 1),
    "cauchy_prior": (cauchy_prior, 2),
    "log_uniform_prior": (log_uniform_prior, 2),
    "discrete_uniform_prior": (discrete_uniform_prior, 2),
}
