"""Simulation studies comparing the PX and non-PX samplers.

Each experiment is a pure function of its arguments and a master seed.
Seeds are derived with :class:`numpy.random.SeedSequence` spawn keys, so the
result does not depend on how work is split across processes.  Within one
PX/non-PX comparison both chains see the same dataset, the same initial
state and identically seeded streams.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import io
from .diagnostics import DiagnosticsReport, diagnose
from .distributions import RngStream
from .gibbs import ChainDivergedError, DegenerateStateError, run_chain, sweep
from .model import (
    Dataset,
    FixedOne,
    Horseshoe,
    Parameterization,
    SamplerConfig,
    Trace,
    TruncNormal,
    build_dataset,
    initial_state,
)

DATA_KEY = 0
CHAIN_KEY = 1

CASES = {
    1: dict(p=1000, n=5, sigma=1.0, tau=1.0),
    2: dict(p=2000, n=3, sigma=1.0, tau=0.1),
    3: dict(p=5000, n=2, sigma=1.0, tau=0.01),
}

DEFAULT_V_VALUES = (0.05**2, 0.5**2, 5.0**2)


@dataclass
class SimulatedData:
    data: Dataset
    beta: np.ndarray
    lambda_: np.ndarray
    tau: float
    sigma: float


def simulate_dataset(p, n, tau_true, sigma_true, lambda_gen="halfcauchy", seed=42):
    """Draw ``lambda``, then ``beta ~ N(0, (sigma lambda tau)^2)``, then ``y = beta + noise``.

    ``lambda_gen`` is ``"halfcauchy"`` or ``"fixedone"``.  ``seed`` may be an
    int or an :class:`RngStream`.
    """
    if int(p) < 1 or int(n) < 1:
        raise ValueError("p and n must be >= 1")
    if not (math.isfinite(tau_true) and tau_true >= 0):
        raise ValueError("tau_true must be >= 0")
    if not (math.isfinite(sigma_true) and sigma_true > 0):
        raise ValueError("sigma_true must be > 0")
    stream = seed if isinstance(seed, RngStream) else RngStream(seed)
    p, n = int(p), int(n)
    if lambda_gen == "halfcauchy":
        lam = np.abs(stream.standard_cauchy(p))
    elif lambda_gen == "fixedone":
        lam = np.ones(p)
    else:
        raise ValueError(f"unknown lambda generator {lambda_gen!r}")
    beta = sigma_true * lam * tau_true * stream.standard_normal(p)
    y = np.empty((p, n))
    for i in range(n):
        y[:, i] = beta + sigma_true * stream.standard_normal(p)
    return SimulatedData(build_dataset(y), beta, lam, float(tau_true), float(sigma_true))


@dataclass
class ChainResult:
    label: str
    trace: Trace
    report: DiagnosticsReport


def run_labelled_chain(label, data, config, seed, key=(CHAIN_KEY,), progress=False):
    stream = RngStream(seed, key)
    trace = run_chain(data, config, stream=stream, progress=progress)
    return ChainResult(label, trace, diagnose(trace.tau))


def run_pair(data, config, seed, prefix, progress=False):
    """Run the non-PX and PX versions of ``config`` on ``data`` from the same seed."""
    out = {}
    for par in (Parameterization.NONPX, Parameterization.PX):
        cfg = replace(config, parameterization=par)
        label = f"{prefix}_{par.value}"
        out[par.value] = run_labelled_chain(label, data, cfg, seed, progress=progress)
    return out


def write_chain_outputs(result: ChainResult, out_dir) -> None:
    out_dir = Path(out_dir)
    io.write_trace_csv(out_dir / f"trace_{result.label}.csv", result.trace)
    io.write_json(out_dir / f"report_{result.label}.json", result.report.to_dict())


def _write_all(results, out_dir):
    if out_dir is not None:
        for res in results.values():
            write_chain_outputs(res, out_dir)


def run_global_demo(seed=42, burn=20_000, keep=20_000, p=2000, n=3, tau=0.25, sigma=1.25,
                    out_dir=None, progress=False):
    """Global-shrinkage model (``lambda ≡ 1``), PX against non-PX.

    Returns ``{"nonpx": ChainResult, "px": ChainResult}``.
    """
    sim = simulate_dataset(p, n, tau, sigma, "fixedone", RngStream(seed, (DATA_KEY,)))
    config = SamplerConfig(lambda_prior=FixedOne(), burn=burn, keep=keep, seed=seed)
    results = run_pair(sim.data, config, seed, "global", progress)
    _write_all(results, out_dir)
    return results


def run_case_study(case, seed=42, burn=20_000, keep=20_000, out_dir=None, progress=False,
                   p=None):
    """Horseshoe prior on one of the three fixed configurations.

    ``p`` overrides the case's dimension (for quick runs).
    """
    if case not in CASES:
        raise ValueError(f"case must be one of {sorted(CASES)}, got {case!r}")
    spec = dict(CASES[case])
    if p is not None:
        spec["p"] = int(p)
    sim = simulate_dataset(spec["p"], spec["n"], spec["tau"], spec["sigma"], "halfcauchy",
                           RngStream(seed, (DATA_KEY,)))
    config = SamplerConfig(lambda_prior=Horseshoe(), burn=burn, keep=keep, seed=seed)
    results = run_pair(sim.data, config, seed, f"case{case}", progress)
    _write_all(results, out_dir)
    return results


# -- relative-efficiency grid --------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    p: int = 200
    sigma_true: float = 1.0
    tau_values: Sequence[float] = (0.01, 1.0)
    n_values: Sequence[int] = (2, 5)
    datasets_per_cell: int = 3
    T: int = 20_000
    burn: int = 5_000
    master_seed: int = 42

    def __post_init__(self):
        if not self.tau_values or not self.n_values:
            raise ValueError("tau_values and n_values must be non-empty")
        if self.datasets_per_cell < 1:
            raise ValueError("datasets_per_cell must be >= 1")
        if self.p < 1 or self.T < 1 or self.burn < 0:
            raise ValueError("invalid p, T or burn")

    @classmethod
    def desk(cls, master_seed=42):
        return cls(master_seed=master_seed)

    @classmethod
    def full(cls, master_seed=42):
        return cls(p=1000, tau_values=(0.01, 0.05, 0.1, 0.5, 1.0), n_values=(2, 3, 5, 10),
                   datasets_per_cell=10, T=100_000, burn=20_000, master_seed=master_seed)


@dataclass
class GridRow:
    n: int
    tau: float
    dataset_index: int
    te_px: float
    te_nonpx: float
    re: float
    failed: bool = False
    error: str = ""


@dataclass
class GridCell:
    n: int
    tau: float
    mean_re: float
    mean_te_px: float
    mean_te_nonpx: float
    rows: List[GridRow] = field(default_factory=list)


@dataclass
class GridResult:
    spec: GridSpec
    cells: List[GridCell]

    @property
    def rows(self) -> List[GridRow]:
        return [row for cell in self.cells for row in cell.rows]

    def cell(self, n, tau) -> GridCell:
        for c in self.cells:
            if c.n == n and c.tau == tau:
                return c
        raise KeyError((n, tau))


def _grid_task(args):
    spec, ti, ni, r = args
    tau, n = spec.tau_values[ti], spec.n_values[ni]
    base = RngStream(spec.master_seed, (ti, ni, r))
    sim = simulate_dataset(spec.p, n, tau, spec.sigma_true, "halfcauchy", base.spawn(DATA_KEY))
    config = SamplerConfig(lambda_prior=Horseshoe(), burn=spec.burn, keep=spec.T)
    te = {}
    try:
        for par in (Parameterization.PX, Parameterization.NONPX):
            cfg = replace(config, parameterization=par)
            trace = run_chain(sim.data, cfg, stream=base.spawn(CHAIN_KEY))
            te[par.value] = diagnose(trace.tau).t_e
    except (ChainDivergedError, DegenerateStateError) as exc:
        return GridRow(n, tau, r, math.nan, math.nan, math.nan, failed=True, error=str(exc))
    return GridRow(n, tau, r, te["px"], te["nonpx"], te["px"] / te["nonpx"])


def run_grid_experiment(spec: GridSpec, jobs=1) -> GridResult:
    """Relative efficiency of PX over non-PX on every ``(n, tau)`` cell.

    A diverged chain marks its row as failed; cell means skip failed rows.
    """
    tasks = [
        (spec, ti, ni, r)
        for ni in range(len(spec.n_values))
        for ti in range(len(spec.tau_values))
        for r in range(spec.datasets_per_cell)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_grid_task, tasks))
    else:
        rows = [_grid_task(t) for t in tasks]

    cells = []
    k = spec.datasets_per_cell
    for start in range(0, len(rows), k):
        block = rows[start:start + k]
        ok = [r for r in block if not r.failed]
        mean = (lambda xs: float(np.mean(xs)) if xs else math.nan)
        cells.append(GridCell(
            n=block[0].n,
            tau=block[0].tau,
            mean_re=mean([r.re for r in ok]),
            mean_te_px=mean([r.te_px for r in ok]),
            mean_te_nonpx=mean([r.te_nonpx for r in ok]),
            rows=block,
        ))
    return GridResult(spec, cells)


# -- lambda ~ N+(1, v) sweep ---------------------------------------------------


def run_v_sweep(v_values=DEFAULT_V_VALUES, seed=42, p=1000, n=2, tau=1.0, sigma=1.0,
                burn=20_000, keep=20_000, out_dir=None, progress=False) -> Dict[float, ChainResult]:
    """PX sampler under ``lambda_j ~ N+(1, v)`` for each ``v`` on one dataset."""
    v_values = [float(v) for v in v_values]
    if not v_values or any(not (v > 0) for v in v_values):
        raise ValueError("v values must be positive")
    sim = simulate_dataset(p, n, tau, sigma, "halfcauchy", RngStream(seed, (DATA_KEY,)))
    results = {}
    for i, v in enumerate(v_values):
        config = SamplerConfig(lambda_prior=TruncNormal(v), burn=burn, keep=keep, seed=seed)
        results[v] = run_labelled_chain(f"vsweep_{i}", sim.data, config, seed, progress=progress)
    if out_dir is not None:
        for res in results.values():
            write_chain_outputs(res, out_dir)
    return results


# -- Geweke successive-conditional check -------------------------------------------


def geweke_tau_draws(config: SamplerConfig, p=10, n=2, iterations=100_000, seed=0):
    """Alternate data resimulation and one sweep; return the ``tau`` sequence.

    If the sampler is correct the draws follow the prior of ``tau``.  The
    Jeffreys prior on ``sigma`` is improper, so after each resimulation the
    state and data are divided by ``sigma`` (setting ``sigma = 1``).  The
    posterior is scale-equivariant, so this leaves the ``tau`` marginal
    unchanged while keeping ``log sigma`` from drifting.
    """
    stream = RngStream(seed)
    data_stream = stream.spawn(DATA_KEY)
    chain_stream = stream.spawn(CHAIN_KEY)
    state = initial_state(p, config.px, config.tau_init)
    taus = np.empty(iterations)
    for t in range(iterations):
        sigma = state.sigma
        y = (state.beta[:, None] + sigma * data_stream.standard_normal((p, n))) / sigma
        state.beta = state.beta / sigma
        state.sigma2 = 1.0
        sweep(state, build_dataset(y), config, chain_stream, iteration=t + 1)
        taus[t] = state.tau
    return taus
