"""Autocorrelation, integrated autocorrelation time and effective sample size.

``kappa = 1 + 2 sum_t rho_t`` is truncated with Geyer's initial positive
sequence: lags are summed in pairs ``rho_{2k-1} + rho_{2k}`` while each
pair stays positive.  ``kappa`` is floored at 1, so ``T_e = T / kappa``
never exceeds ``T``.
"""
from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "DegenerateTraceError",
    "DiagnosticsReport",
    "autocorrelation",
    "autocorrelation_direct",
    "integrated_autocorr_time",
    "effective_sample_size",
    "relative_efficiency",
    "diagnose",
    "default_max_lag",
]

MAX_LAG_CAP = 5000


class DegenerateTraceError(ValueError):
    """The trace is too short or has zero variance."""


@dataclass
class DiagnosticsReport:
    acf: list
    kappa: float
    t_e: float
    trace_length: int
    truncation_lag: int

    def to_dict(self) -> dict:
        return asdict(self)


def default_max_lag(T: int) -> int:
    return max(1, min(T // 2, MAX_LAG_CAP))


def _centered(trace, max_lag):
    x = np.asarray(trace, dtype=float)
    if x.ndim != 1:
        raise ValueError("trace must be one-dimensional")
    if x.size < max_lag + 2:
        raise DegenerateTraceError(
            f"trace of length {x.size} too short for max_lag={max_lag}"
        )
    if not np.all(np.isfinite(x)):
        raise DegenerateTraceError("trace contains non-finite values")
    x = x - x.mean()
    c0 = float(np.dot(x, x))
    if c0 == 0.0 or np.ptp(x) == 0.0:
        raise DegenerateTraceError("trace has zero variance")
    return x, c0


def autocorrelation_direct(trace, max_lag):
    """Lag-by-lag ``rho_t`` for ``t = 1..max_lag``, denominator ``T`` at every lag."""
    x, c0 = _centered(trace, max_lag)
    T = x.size
    return np.array([np.dot(x[: T - t], x[t:]) / c0 for t in range(1, max_lag + 1)])


def autocorrelation(trace, max_lag):
    """``rho_t`` for ``t = 1..max_lag`` via a zero-padded FFT.

    Matches :func:`autocorrelation_direct` to rounding error.
    """
    x, c0 = _centered(trace, max_lag)
    T = x.size
    nfft = 1 << int(np.ceil(np.log2(2 * T)))
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1]
    return acov[1:] / c0


def _ips_sum(rho):
    """Initial-positive-sequence sum of ``rho``; returns ``(sum, lags used)``."""
    npairs = rho.size // 2
    pairs = rho[: 2 * npairs : 2] + rho[1 : 2 * npairs : 2]
    nonpos = np.flatnonzero(pairs <= 0)
    k = int(nonpos[0]) if nonpos.size else npairs
    return float(pairs[:k].sum()), 2 * k


def integrated_autocorr_time(trace, max_lag=None):
    """Return ``(kappa, truncation_lag)``."""
    T = len(trace)
    max_lag = default_max_lag(T) if max_lag is None else max_lag
    rho = autocorrelation(trace, max_lag)
    total, lag = _ips_sum(rho)
    return max(1.0, 1.0 + 2.0 * total), lag


def effective_sample_size(trace, max_lag=None):
    kappa, _ = integrated_autocorr_time(trace, max_lag)
    return len(trace) / kappa


def relative_efficiency(trace_px, trace_nonpx, max_lag=None):
    """``T_e(PX) / T_e(non-PX)``; above 1 means the PX chain is more efficient."""
    return effective_sample_size(trace_px, max_lag) / effective_sample_size(trace_nonpx, max_lag)


def diagnose(trace, max_lag=None) -> DiagnosticsReport:
    """Full report for a scalar trace."""
    T = len(trace)
    max_lag = default_max_lag(T) if max_lag is None else max_lag
    rho = autocorrelation(trace, max_lag)
    total, lag = _ips_sum(rho)
    kappa = max(1.0, 1.0 + 2.0 * total)
    return DiagnosticsReport(
        acf=[float(r) for r in rho],
        kappa=kappa,
        t_e=T / kappa,
        trace_length=T,
        truncation_lag=lag,
    )
