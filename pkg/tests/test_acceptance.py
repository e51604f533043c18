"""Acceptance suite.

Each test prints one ``CRITERION <k> PASS|FAIL`` line (visible in ``pytest -v``
output) before asserting.  Full-scale runs are skipped unless
``PXSHRINK_FULL_SCALE=1``.
"""
import filecmp
import math
import os
from dataclasses import replace

import numpy as np
import pytest
from scipy import special, stats

from pxshrink import experiments
from pxshrink.cli import main
from pxshrink.diagnostics import effective_sample_size, integrated_autocorr_time
from pxshrink.distributions import RngStream
from pxshrink.gibbs import (
    run_chain,
    update_lambda_horseshoe_aux,
    update_lambda_horseshoe_slice,
    update_lambda_lasso,
    update_tau_px,
    update_tau_slice,
)
from pxshrink.model import (
    ChainState,
    Horseshoe,
    Parameterization,
    SamplerConfig,
    build_dataset,
)

from conftest import ks_against_cdf

FULL_SCALE = os.environ.get("PXSHRINK_FULL_SCALE") == "1"
ITERATES = 100_000
KS_TOL = 0.02


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {criterion} {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


def grid_cdf(log_density, lo, hi, size=200_001):
    """CDF of an unnormalized density by quadrature on a log-spaced grid."""
    x = np.geomspace(lo, hi, size)
    logd = log_density(x)
    d = np.exp(logd - logd.max())
    c = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(x))])
    c /= c[-1]
    return lambda s: np.interp(s, x, c)


def batch_means_se(x, batches=20):
    """Monte Carlo standard error of the mean from non-overlapping batch means."""
    m = np.asarray(x)[: len(x) // batches * batches].reshape(batches, -1).mean(axis=1)
    return m.std(ddof=1) / math.sqrt(batches)


def frozen_state(theta, lam, tau=1.0, sigma2=1.0, px=False):
    theta = np.asarray(theta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    state = ChainState(beta=np.sqrt(sigma2) * tau * lam * theta, theta=theta, lambda_=lam,
                       tau=tau, sigma2=sigma2)
    if px:
        state.delta, state.g = tau, 1.0
    return state


# -- 1: conditional stationarity -------------------------------------------------


def test_criterion_1_stationarity(report):
    rng = RngStream(101)
    results = {}

    # tau slice: p = 10, sum(theta^2) = 5
    p, S = 10, 5.0
    state = frozen_state(np.full(p, math.sqrt(S / p)), np.ones(p))
    eta = np.empty(ITERATES)
    for t in range(ITERATES):
        update_tau_slice(state, rng)
        eta[t] = state.tau**-2
    cdf = grid_cdf(lambda e: 4.5 * np.log(e) - 2.5 * e - np.log1p(e), 1e-4, 60.0)
    results["update_tau_slice"] = ks_against_cdf(eta, cdf)

    # lambda slice: 1000 coordinates, mu^2 = 1, 100 sweeps each
    p = 1000
    data = build_dataset(np.zeros((p, 2)))
    state = frozen_state(np.ones(p), np.ones(p))
    draws = []
    for t in range(ITERATES // p):
        state.beta = np.ones(p)  # held fixed: mu = beta / (sigma tau) = 1
        update_lambda_horseshoe_slice(state, data, rng)
        draws.append(state.lambda_**-2)
    cdf = grid_cdf(lambda e: -0.5 * e - np.log1p(e), 1e-12, 80.0)
    results["update_lambda_horseshoe_slice"] = ks_against_cdf(np.concatenate(draws), cdf)

    # aux horseshoe with theta = 0: prior path, |lambda| ~ C+(0, 1)
    state = frozen_state(np.zeros(p), np.abs(rng.standard_cauchy(p)))
    draws = []
    for t in range(ITERATES // p):
        update_lambda_horseshoe_aux(state, data, rng)
        draws.append(np.abs(state.lambda_))
    results["update_lambda_horseshoe_aux"] = ks_against_cdf(
        np.concatenate(draws), lambda x: 2.0 / np.pi * np.arctan(x))

    # lasso: mu = 0.5, target exp(-mu^2/(2 lambda^2) - lambda^2/2) in lambda
    mu = 0.5
    state = frozen_state(np.full(p, mu), np.ones(p))
    draws = []
    for t in range(ITERATES // p):
        state.beta = np.full(p, mu)
        update_lambda_lasso(state, data, rng)
        draws.append(state.lambda_)
    cdf = grid_cdf(lambda x: -mu**2 / (2 * x**2) - x**2 / 2, 1e-3, 12.0)
    results["update_lambda_lasso"] = ks_against_cdf(np.concatenate(draws), cdf)

    # PX: g and delta, theta / lambda / sigma / data frozen
    p, n = 10, 2
    y = RngStream(5).standard_normal((p, n)) * 1.5
    data = build_dataset(y)
    theta = RngStream(6).standard_normal(p)
    lam = np.abs(RngStream(7).standard_cauchy(p))
    state = frozen_state(theta, lam, tau=0.8, sigma2=1.3, px=True)
    g = np.empty(ITERATES)
    delta = np.empty(ITERATES)
    for t in range(ITERATES):
        update_tau_px(state, data, rng)
        g[t], delta[t] = state.g, state.delta
    shape, rate = 0.5 * (1 + p), 0.5 * (1 + theta @ theta)
    results["update_tau_px (g)"] = ks_against_cdf(
        g, lambda x: special.gammaincc(shape, rate / x**2))
    # delta: N(0, 1) prior times prod_j N(ybar_j / sigma | delta lambda_j theta_j, 1/n)
    x = lam * theta
    sigma = math.sqrt(1.3)
    prec = 1.0 + n * np.sum(x**2)
    mean = n * np.sum(x * data.ybar / sigma) / prec
    results["update_tau_px (delta)"] = ks_against_cdf(
        delta, stats.norm(mean, 1 / math.sqrt(prec)).cdf)

    ok = all(v < KS_TOL for v in results.values())
    report(1, ok, ", ".join(f"{k} KS={v:.4f}" for k, v in results.items()) + f" (tol {KS_TOL})")
    assert ok, results


# -- 2: Geweke joint test --------------------------------------------------------


def test_criterion_2_geweke(report):
    levels = np.arange(1, 10) / 10
    details, ok = [], True
    for par in (Parameterization.NONPX, Parameterization.PX):
        config = SamplerConfig(parameterization=par, lambda_prior=Horseshoe())
        taus = experiments.geweke_tau_draws(config, p=10, n=2, iterations=ITERATES, seed=11)
        q = np.quantile(taus, levels)
        # quantile deviation on the probability scale: C+ CDF at the empirical quantiles
        dev = np.abs(2.0 / np.pi * np.arctan(q) - levels)
        ok &= bool(dev.max() < 0.05)
        details.append(f"{par.value} max |F(q_k)-k|={dev.max():.4f}")
    report(2, ok, ", ".join(details) + " (tol 0.05)")
    assert ok


# -- 3: PX / non-PX equivalence --------------------------------------------------


def test_criterion_3_equivalence(report):
    sim = experiments.simulate_dataset(20, 3, 0.5, 1.0, "halfcauchy", seed=33)
    picks = np.sort(RngStream(34).generator.choice(20, 5, replace=False))
    base = SamplerConfig(lambda_prior=Horseshoe(), burn=5000, keep=ITERATES, store_vectors=True)
    stats_ = {}
    for par in (Parameterization.NONPX, Parameterization.PX):
        trace = run_chain(sim.data, replace(base, parameterization=par), stream=RngStream(35))
        cols = {"tau": trace.tau, **{f"beta_{j}": trace.beta[:, j] for j in picks}}
        # tau mixes slowly, so beta_j carries small long-range correlations that
        # pair-truncated autocorrelation sums miss; batch means capture them
        stats_[par.value] = {k: (v.mean(), batch_means_se(v)) for k, v in cols.items()}
    worst, ok = 0.0, True
    for key in stats_["px"]:
        (m1, s1), (m2, s2) = stats_["px"][key], stats_["nonpx"][key]
        z = abs(m1 - m2) / math.hypot(s1, s2)
        worst = max(worst, z)
        ok &= z < 3.0
    report(3, ok, f"tau and beta_j for j={picks.tolist()}: max |diff|/combined batch-means MCSE = {worst:.2f} (tol 3)")
    assert ok


# -- 4: global demo --------------------------------------------------------------


def test_criterion_4_global_demo(report):
    res = experiments.run_global_demo(seed=42)
    k_px, k_nonpx = res["px"].report.kappa, res["nonpx"].report.kappa
    rho1 = res["px"].report.acf[0]
    ok_ratio = k_px < k_nonpx / 5
    ok_lag = rho1 < 0.5
    report(4, ok_ratio and ok_lag,
           f"kappa PX={k_px:.2f}, kappa non-PX={k_nonpx:.2f} (ratio {k_nonpx / k_px:.1f}, need > 5: "
           f"{'ok' if ok_ratio else 'no'}); PX lag-1 ACF={rho1:.3f} (need < 0.5: "
           f"{'ok' if ok_lag else 'no'})")
    assert ok_ratio, "PX kappa not below non-PX kappa / 5"
    assert ok_lag, f"PX lag-1 autocorrelation {rho1:.3f} >= 0.5"


# -- 5 and 6: relative-efficiency grid ------------------------------------------


def test_criterion_5_desk_grid(report):
    spec = replace(experiments.GridSpec.desk(), tau_values=(0.01,), n_values=(2,))
    cell = experiments.run_grid_experiment(spec, jobs=min(3, os.cpu_count() or 1)).cell(2, 0.01)
    ok = cell.mean_re > 1
    report(5, ok, f"desk cell (n=2, tau=0.01) mean r_e={cell.mean_re:.2f} over "
                  f"{len(cell.rows)} datasets (need > 1)")
    assert ok


@pytest.fixture(scope="module")
def full_scale_cell():
    spec = replace(experiments.GridSpec.full(), tau_values=(0.01,), n_values=(2,))
    return experiments.run_grid_experiment(spec, jobs=os.cpu_count() or 1).cell(2, 0.01)


@pytest.mark.fullscale
@pytest.mark.skipif(not FULL_SCALE, reason="set PXSHRINK_FULL_SCALE=1 for full-scale runs")
def test_criterion_5_full_scale(report, full_scale_cell):
    ok = 3 < full_scale_cell.mean_re < 40
    report("5 (full scale)", ok, f"cell (n=2, tau=0.01) mean r_e={full_scale_cell.mean_re:.2f} "
                                 "(need in (3, 40))")
    assert ok


@pytest.mark.fullscale
@pytest.mark.skipif(not FULL_SCALE, reason="set PXSHRINK_FULL_SCALE=1 for full-scale runs")
def test_criterion_6_full_scale_ess(report, full_scale_cell):
    ess = full_scale_cell.mean_te_px
    ok = 300 < ess < 4000
    report(6, ok, f"PX ESS per 1e5 draws at (n=2, tau=0.01, p=1000) = {ess:.0f} (need in (300, 4000))")
    assert ok


# -- 7: v-sweep --------------------------------------------------------------------


def test_criterion_7_v_sweep(report):
    v_small, v_large = 0.05**2, 5.0**2
    res = experiments.run_v_sweep([v_small, v_large], seed=42, p=1000)
    k_small, k_large = res[v_small].report.kappa, res[v_large].report.kappa
    ok = k_large > k_small
    report(7, ok, f"kappa(v=25)={k_large:.1f} vs kappa(v=0.0025)={k_small:.1f}")
    assert ok


# -- 8: diagnostics oracles ------------------------------------------------------


def test_criterion_8_diagnostics(report):
    T, phi = 200_000, 0.5
    rng = np.random.default_rng(8)
    e = rng.standard_normal(T)
    x = np.empty(T)
    x[0] = e[0] / math.sqrt(1 - phi**2)
    for t in range(1, T):
        x[t] = phi * x[t - 1] + e[t]
    kappa, _ = integrated_autocorr_time(x)
    ratio = effective_sample_size(rng.standard_normal(T)) / T
    ok = abs(kappa / 3 - 1) < 0.10 and abs(ratio - 1) < 0.05
    report(8, ok, f"AR(1) phi=0.5 kappa={kappa:.3f} (3 +/- 10%), iid T_e/T={ratio:.3f} (1 +/- 5%)")
    assert ok


# -- 9: determinism --------------------------------------------------------------


SUBCOMMANDS = {
    "simulate": ["simulate", "--p", "50", "--n", "3", "--out", "{out}/dataset.csv"],
    "run": ["run", "--p", "40", "--burn", "50", "--keep", "300", "--out-dir", "{out}"],
    "demo-global": ["demo-global", "--burn", "20", "--keep", "200", "--out-dir", "{out}"],
    "case": ["case", "--case", "2", "--p", "60", "--burn", "20", "--keep", "200", "--out-dir", "{out}"],
    "grid": ["grid", "--p", "20", "--T", "300", "--burn", "30", "--datasets", "2", "--out-dir", "{out}"],
    "vsweep": ["vsweep", "--p", "40", "--burn", "20", "--keep", "200", "--out-dir", "{out}"],
    "diag": ["diag", "{trace}", "--out", "{out}/diag.json"],
}


def test_criterion_9_determinism(report, tmp_path):
    trace = tmp_path / "input_trace.csv"
    trace.write_text("".join(f"{v:.17g}\n" for v in np.random.default_rng(9).standard_normal(500)))
    mismatched = []
    for name, template in SUBCOMMANDS.items():
        dirs = []
        for run in ("a", "b"):
            out = tmp_path / name / run
            out.mkdir(parents=True)
            argv = [a.format(out=out, trace=trace) for a in template]
            assert main(argv + ["--seed", "7"] if name != "diag" else argv) == 0, name
            dirs.append(out)
        files = sorted(p.name for p in dirs[0].iterdir())
        match, diff, errors = filecmp.cmpfiles(dirs[0], dirs[1], files, shallow=False)
        if not files or diff or errors:
            mismatched.append(name)
    ok = not mismatched
    report(9, ok, f"{len(SUBCOMMANDS)} subcommands byte-identical across two runs"
           if ok else f"differing outputs: {mismatched}")
    assert ok
