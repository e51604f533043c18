"""Seeded random variate generation for the shrinkage samplers.

Every sampler takes an :class:`RngStream` as its first argument and
broadcasts over array-valued parameters, so one call can update all ``p``
coordinates at once.  Scalar inputs return a Python float.

Truncated laws are drawn by CDF inversion: ``q = U * F(upper)`` followed by
``F^{-1}(q)``.  The uniform ``U`` always comes from :meth:`RngStream.uniform`,
which excludes 0, so tests can swap in a stream with fixed uniforms.
"""
from collections import Counter

import numpy as np
from scipy import special

__all__ = [
    "RngStream",
    "sample_normal",
    "sample_gamma",
    "sample_inverse_gamma",
    "sample_truncated_gamma",
    "sample_truncated_exponential",
    "sample_truncated_normal_positive",
    "sample_half_cauchy",
    "sample_inverse_gaussian",
]

# Below this the gamma CDF at the slice bound is treated as underflowed.
CDF_FLOOR = 1e-300
# |mean|/sd beyond which inversion of the positive normal is abandoned.
TRUNCNORM_INVERSION_LIMIT = 8.0


class RngStream:
    """A seeded PCG64 generator.

    Parameters
    ----------
    seed : int
        Non-negative 64-bit seed.
    key : tuple of int, optional
        Spawn key identifying a sub-stream of ``seed``.  Distinct keys give
        statistically independent streams.
    """

    def __init__(self, seed, key=()):
        seed = int(seed)
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.key = tuple(int(k) for k in key)
        self._seq = np.random.SeedSequence(seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    def spawn(self, *key):
        """Sub-stream derived from ``(seed, self.key + key)``."""
        return RngStream(self.seed, self.key + tuple(key))

    def uniform(self, size=None):
        """Uniform draws on the open interval (0, 1)."""
        u = self.generator.random(size)
        if size is None:
            while u == 0.0:
                u = self.generator.random()
            return u
        zero = u == 0.0
        while zero.any():
            u[zero] = self.generator.random(int(zero.sum()))
            zero = u == 0.0
        return u

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def standard_exponential(self, size=None):
        return self.generator.standard_exponential(size)

    def standard_gamma(self, shape, size=None):
        return self.generator.standard_gamma(shape, size)

    def standard_cauchy(self, size=None):
        return self.generator.standard_cauchy(size)

    def wald(self, mean, scale, size=None):
        return self.generator.wald(mean, scale, size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def _shape_of(*args):
    shape = np.broadcast(*args).shape
    return shape or None


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _require(cond, msg):
    if not np.all(cond):
        raise ValueError(msg)


def _record(events, name, mask):
    if events is not None:
        count = int(np.count_nonzero(mask))
        if count:
            events[name] += count


# -- unchecked kernels: callers guarantee valid parameters ------------------


def _normal(stream, mean, sd, size=None):
    size = size or _shape_of(mean, sd)
    return mean + sd * stream.standard_normal(size)


def _gamma(stream, shape, rate, size=None):
    size = size or _shape_of(shape, rate)
    return stream.standard_gamma(shape, size) / rate


def _truncated_gamma(stream, shape, rate, upper, events=None, size=None):
    u = stream.uniform(size or _shape_of(shape, rate, upper))
    with np.errstate(over="ignore"):
        cdf_upper = special.gammainc(shape, rate * upper)
    x = special.gammaincinv(shape, u * cdf_upper) / rate
    low = cdf_upper < CDF_FLOOR
    if np.any(low):
        _record(events, "truncated_gamma_underflow", low)
        x = np.where(low, upper * u ** (1.0 / shape), x)
    # rounding in the inversion can land exactly on a support edge
    x = np.minimum(x, np.nextafter(upper, 0.0))
    return np.maximum(x, np.finfo(float).tiny)


def _truncated_exponential(stream, rate, upper, size=None):
    u = stream.uniform(size or _shape_of(rate, upper))
    cdf_upper = -np.expm1(-rate * upper)
    x = -np.log1p(-u * cdf_upper) / rate
    x = np.minimum(x, np.nextafter(upper, 0.0))
    return np.maximum(x, np.finfo(float).tiny)


def _robert_tail(stream, lower):
    """Standard normal conditioned on ``z > lower`` for large positive ``lower``.

    Exponential-proposal rejection; acceptance rate is above 0.99 once
    ``lower`` exceeds 8.
    """
    alpha = 0.5 * (lower + np.sqrt(lower * lower + 4.0))
    out = np.empty_like(lower)
    todo = np.arange(lower.size)
    while todo.size:
        z = lower[todo] + stream.standard_exponential(todo.size) / alpha[todo]
        accept = stream.uniform(todo.size) <= np.exp(-0.5 * (z - alpha[todo]) ** 2)
        out[todo[accept]] = z[accept]
        todo = todo[~accept]
    return out


def _normal_rejection(stream, lower):
    """Standard normal conditioned on ``z > lower`` for very negative ``lower``."""
    out = np.empty_like(lower)
    todo = np.arange(lower.size)
    while todo.size:
        z = stream.standard_normal(todo.size)
        accept = z > lower[todo]
        out[todo[accept]] = z[accept]
        todo = todo[~accept]
    return out


def _truncated_normal_positive(stream, mean, sd):
    """1-d arrays ``mean`` and ``sd``; returns a 1-d array."""
    lower = -mean / sd
    z = np.empty_like(lower)
    inv = np.abs(lower) <= TRUNCNORM_INVERSION_LIMIT
    if inv.all():
        # sample -z from N(0,1) restricted to (-inf, -lower); keeps q away from 1
        z = -special.ndtri(stream.uniform(lower.size) * special.ndtr(-lower))
    else:
        if inv.any():
            u = stream.uniform(int(inv.sum()))
            z[inv] = -special.ndtri(u * special.ndtr(-lower[inv]))
        tail = lower > TRUNCNORM_INVERSION_LIMIT
        if tail.any():
            z[tail] = _robert_tail(stream, lower[tail])
        bulk = lower < -TRUNCNORM_INVERSION_LIMIT
        if bulk.any():
            z[bulk] = _normal_rejection(stream, lower[bulk])
    return np.maximum(mean + sd * z, np.finfo(float).tiny)


# -- public samplers ---------------------------------------------------------


def sample_normal(stream, mean, sd):
    """Draw from N(mean, sd**2).  ``sd == 0`` returns ``mean`` exactly."""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    _require(np.isfinite(mean) & np.isfinite(sd), "normal parameters must be finite")
    _require(sd >= 0, "normal sd must be >= 0")
    return _out(_normal(stream, mean, sd, _shape_of(mean, sd)))


def sample_gamma(stream, shape, rate):
    """Draw from Gamma(shape, rate), mean ``shape / rate``."""
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    _require(np.isfinite(shape) & (shape > 0), "gamma shape must be finite and > 0")
    _require(np.isfinite(rate) & (rate > 0), "gamma rate must be finite and > 0")
    size = _shape_of(shape, rate)
    return _out(_gamma(stream, np.broadcast_to(shape, size or ()), rate, size))


def sample_inverse_gamma(stream, shape, rate):
    """Draw from InverseGamma(shape, rate), i.e. ``1 / Gamma(shape, rate)``."""
    return _out(1.0 / np.asarray(sample_gamma(stream, shape, rate)))


def sample_truncated_gamma(stream, shape, rate, upper, events=None):
    """Draw from Gamma(shape, rate) restricted to ``(0, upper)``.

    When the CDF at ``upper`` underflows (below ``CDF_FLOOR``) the left tail
    is effectively the power law ``x**(shape - 1)``, and the draw is
    ``upper * U**(1/shape)``.  Each such fallback is counted under
    ``"truncated_gamma_underflow"`` in ``events``.
    """
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    upper = np.asarray(upper, dtype=float)
    _require(np.isfinite(shape) & (shape > 0), "gamma shape must be finite and > 0")
    _require(np.isfinite(rate) & (rate > 0), "gamma rate must be finite and > 0")
    _require(upper > 0, "truncation bound must be > 0")
    if upper.ndim == 0 and np.isinf(upper):
        return sample_gamma(stream, shape, rate)
    return _out(_truncated_gamma(stream, shape, rate, upper, events,
                                 _shape_of(shape, rate, upper)))


def sample_truncated_exponential(stream, rate, upper):
    """Draw from Exponential(rate) restricted to ``(0, upper)``."""
    rate = np.asarray(rate, dtype=float)
    upper = np.asarray(upper, dtype=float)
    _require(np.isfinite(rate) & (rate > 0), "exponential rate must be finite and > 0")
    _require(upper > 0, "truncation bound must be > 0")
    return _out(_truncated_exponential(stream, rate, upper, _shape_of(rate, upper)))


def sample_truncated_normal_positive(stream, mean, var):
    """Draw from N(mean, var) restricted to ``(0, inf)``.

    Inversion is used when ``|mean| / sd <= 8``.  Further out the draw falls
    back to rejection: an exponential proposal in the far tail
    (``mean << 0``) and plain normal proposals when the truncation is
    negligible (``mean >> 0``).
    """
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    _require(np.isfinite(mean), "mean must be finite")
    _require(np.isfinite(var) & (var > 0), "variance must be finite and > 0")
    mean, var = np.broadcast_arrays(mean, var)
    x = _truncated_normal_positive(stream, mean.ravel(), np.sqrt(var.ravel()))
    return _out(x.reshape(mean.shape))


def sample_half_cauchy(stream, scale):
    """Draw ``|scale * C|`` with ``C`` standard Cauchy."""
    scale = np.asarray(scale, dtype=float)
    _require(np.isfinite(scale) & (scale > 0), "half-Cauchy scale must be finite and > 0")
    return _out(np.abs(scale * stream.standard_cauchy(_shape_of(scale))))


def sample_inverse_gaussian(stream, mean, shape):
    """Draw from the inverse-Gaussian (Wald) law with the given mean and shape."""
    mean = np.asarray(mean, dtype=float)
    shape = np.asarray(shape, dtype=float)
    _require(np.isfinite(mean) & (mean > 0), "inverse-Gaussian mean must be finite and > 0")
    _require(np.isfinite(shape) & (shape > 0), "inverse-Gaussian shape must be finite and > 0")
    return _out(stream.wald(mean, shape, _shape_of(mean, shape)))


def new_event_counter():
    return Counter()
