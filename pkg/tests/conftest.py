import numpy as np
import pytest
from scipy import integrate

from pxshrink.distributions import RngStream


class FixedUniformStream(RngStream):
    """Stream whose open-interval uniforms are all ``value``."""

    def __init__(self, value, seed=0):
        super().__init__(seed)
        self.value = value

    def uniform(self, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)


def quadrature_cdf(log_density, grid):
    """Normalized CDF of an unnormalized 1-d density, by trapezoid rule on ``grid``."""
    logd = log_density(grid)
    dens = np.exp(logd - np.max(logd))
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    return cdf / cdf[-1]


def ks_against_grid(samples, grid, cdf):
    """Sup-distance between the empirical CDF of ``samples`` and ``cdf`` on ``grid``."""
    s = np.sort(np.asarray(samples))
    ecdf = np.searchsorted(s, grid, side="right") / s.size
    inside = (s >= grid[0]) & (s <= grid[-1])
    # mass outside the grid must be negligible for the comparison to mean anything
    assert inside.mean() > 0.999, f"{1 - inside.mean():.4f} of samples fall outside the grid"
    return float(np.max(np.abs(ecdf - cdf)))


def ks_against_cdf(samples, cdf):
    s = np.sort(np.asarray(samples))
    m = s.size
    f = cdf(s)
    return float(max(np.max(np.arange(1, m + 1) / m - f), np.max(f - np.arange(m) / m)))


@pytest.fixture
def stream():
    return RngStream(20240611)
