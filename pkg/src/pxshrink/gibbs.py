"""Conditional updates and full sweeps, with and without parameter expansion.

Two parameterizations of the same posterior are sampled:

* non-PX: ``beta_j = sigma lambda_j theta_j`` with ``theta_j ~ N(0, tau^2)``;
  ``tau`` is updated by slice sampling ``eta = 1/tau^2``.
* PX: ``beta_j = sigma delta lambda_j theta_j`` with ``theta_j ~ N(0, g^2)``,
  ``delta ~ N(m, 1)``, ``g^2 ~ IG(a/2, b/2)`` and ``tau = |delta| g``.

Every update mutates the :class:`~pxshrink.model.ChainState` in place and
returns it.  Measure-zero degeneracies (``theta_j = 0``, ``mu_j = 0``,
``lambda_j = 0``) fall back to the prior conditional and are tallied in
``state.numeric_events``.
"""
import math
import sys
import time

import numpy as np

from .distributions import (
    RngStream,
    _gamma,
    _normal,
    _truncated_exponential,
    _truncated_gamma,
    _truncated_normal_positive,
)
from .model import (
    DoubleExponential,
    FixedOne,
    HalfCauchy,
    Horseshoe,
    Sigma2Mode,
    Trace,
    TruncNormal,
    initial_state,
    tau_prior_params,
)

__all__ = [
    "DegenerateStateError",
    "ChainDivergedError",
    "update_beta_block",
    "update_sigma2",
    "update_tau_slice",
    "update_tau_px",
    "update_lambda_horseshoe_slice",
    "update_lambda_horseshoe_aux",
    "update_lambda_truncnormal",
    "update_lambda_lasso",
    "sweep",
    "run_chain",
]


class DegenerateStateError(RuntimeError):
    """A conditional is improper for the current state."""


class ChainDivergedError(RuntimeError):
    """A sweep produced a non-finite state.

    ``trace`` holds the draws recorded before the failure, when available.
    """

    def __init__(self, message, iteration, trace=None):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration
        self.trace = trace


def _theta_scale(state):
    scale = state.sigma * state.lambda_
    return scale * state.delta if state.px else scale


def _refresh_theta(state):
    """``theta = beta / scale``; a zero scale gives ``theta = 0``."""
    scale = _theta_scale(state)
    zero = scale == 0
    if zero.any():
        state.numeric_events["theta_zero_scale"] += int(zero.sum())
        state.theta = np.divide(state.beta, scale, out=np.zeros_like(state.beta), where=~zero)
    else:
        state.theta = state.beta / scale


def _refresh_beta(state):
    state.beta = _theta_scale(state) * state.theta


def _loading(state):
    """Coefficient multiplying ``sigma * lambda_j`` in the data mean."""
    return state.delta * state.theta if state.px else state.theta


def update_beta_block(state, data, stream):
    """Draw every ``beta_j`` from its Gaussian conditional and recompute ``theta``."""
    a = state.tau**2 * state.lambda_**2
    b = data.n * a
    sd = np.sqrt(state.sigma2 * a / (1.0 + b))
    mean = (b / (1.0 + b)) * data.ybar
    state.beta = _normal(stream, mean, sd, data.p)
    _refresh_theta(state)
    return state


def residual_sum_of_squares(state, data, mode=Sigma2Mode.EXACT_MARGINAL):
    """Quadratic form in the ``sigma^2`` update with ``beta`` integrated out.

    ``EXACT_MARGINAL`` uses ``y_j' (I + a_j J)^{-1} y_j`` with ``a_j =
    tau^2 lambda_j^2``; ``APPENDIX_COMPAT`` uses ``sum_i y_ij^2 / (1 + a_j)``,
    which agrees only when ``n = 1``.
    """
    a = state.tau**2 * state.lambda_**2
    if Sigma2Mode(mode) is Sigma2Mode.APPENDIX_COMPAT:
        return float(np.sum(data.row_sumsq / (1.0 + a)))
    # row_sumsq - a/(1+na) row_sum^2, rearranged so both terms are >= 0
    return float(np.sum(data.row_ssd + data.n * data.ybar**2 / (1.0 + data.n * a)))


def update_sigma2(state, data, stream, mode=Sigma2Mode.EXACT_MARGINAL):
    """``sigma^2 ~ IG(np/2, RSS/2)`` under the Jeffreys prior."""
    rss = residual_sum_of_squares(state, data, mode)
    if math.isnan(rss):
        raise ChainDivergedError("non-finite residual sum of squares", 0)
    if not rss > 0:
        raise DegenerateStateError(f"non-positive residual sum of squares {rss}")
    state.sigma2 = 1.0 / _gamma(stream, 0.5 * data.n * data.p, 0.5 * rss)
    return state


def update_tau_slice(state, stream, tau_prior=HalfCauchy()):
    """Slice update of ``eta = 1/tau^2`` given ``theta`` (non-PX chain).

    For the half-Cauchy prior the target is
    ``eta^((p-1)/2) exp(-eta S/2) / (1 + eta)`` with ``S = sum(theta^2)``:
    draw ``u ~ U(0, 1/(1+eta))``, then ``eta`` from Gamma((p+1)/2, S/2)
    truncated to ``(0, (1-u)/u)``.  A central half-t prior with ``a`` degrees
    of freedom and ``g^2 ~ IG(a/2, b/2)`` slices ``(1 + b eta)^(-(a+1)/2)``
    instead, with gamma shape ``(p+a)/2``.
    """
    m, a_t, b_t = tau_prior_params(tau_prior)
    if m != 0.0:
        raise ValueError("slice update of tau supports only central priors (m = 0)")
    p = state.theta.size
    ssq = float(np.dot(state.theta, state.theta))
    if ssq == 0.0:
        raise DegenerateStateError("sum(theta^2) = 0: conditional for tau is improper")
    eta = 1.0 / state.tau**2
    if a_t == 1.0 and b_t == 1.0:
        u = stream.uniform() / (1.0 + eta)
        bound = (1.0 - u) / u
    else:
        power = -0.5 * (a_t + 1.0)
        log_u = math.log(stream.uniform()) + power * math.log1p(b_t * eta)
        bound = math.expm1(log_u / power) / b_t
    shape = 0.5 * (p + a_t)
    eta = float(_truncated_gamma(stream, shape, 0.5 * ssq, bound, state.numeric_events))
    state.tau = 1.0 / math.sqrt(eta)
    return state


def update_tau_px(state, data, stream, tau_prior=HalfCauchy()):
    """Conjugate updates of ``g`` and ``delta``; then ``tau = |delta| g``.

    ``g^2 | theta ~ IG((a + p)/2, (b + S)/2)`` and ``delta`` is the Gaussian
    regression of ``ybar_j / sigma`` on ``lambda_j theta_j`` with ``n``
    replicates and an ``N(m, 1)`` prior.
    """
    m, a_t, b_t = tau_prior_params(tau_prior)
    p = state.theta.size
    ssq = float(np.dot(state.theta, state.theta))
    state.g = 1.0 / math.sqrt(_gamma(stream, 0.5 * (a_t + p), 0.5 * (b_t + ssq)))

    lt = state.lambda_ * state.theta
    precision = 1.0 + data.n * float(np.dot(lt, lt))
    # sum_j a_j z_j, written without dividing by lambda_j theta_j
    score = data.n * float(np.dot(lt, data.ybar)) / state.sigma
    mean = (m + score) / precision
    sd = 1.0 / math.sqrt(precision)
    delta = float(_normal(stream, mean, sd))
    if delta == 0.0:
        state.numeric_events["delta_zero_retry"] += 1
        delta = float(_normal(stream, mean, sd))
        if delta == 0.0:
            raise DegenerateStateError("delta drawn as exactly 0 twice")
    state.delta = delta
    state.tau = abs(delta) * state.g
    return state


def update_lambda_horseshoe_slice(state, data, stream):
    """Slice update of ``eta_j = 1/lambda_j^2`` holding ``beta`` fixed.

    Target ``exp(-mu_j^2 eta_j / 2) / (1 + eta_j)`` with
    ``mu_j = beta_j / (sigma tau)``.  ``mu_j = 0`` leaves a flat density on
    the slice, drawn uniformly.
    """
    eta = 1.0 / state.lambda_**2
    u = stream.uniform(data.p) / (1.0 + eta)
    bound = (1.0 - u) / u
    mu = state.beta / (state.sigma * state.tau)
    rate = 0.5 * mu * mu
    flat = rate == 0.0
    if flat.any():
        state.numeric_events["lambda_slice_flat"] += int(flat.sum())
        new_eta = np.empty(data.p)
        new_eta[flat] = bound[flat] * stream.uniform(int(flat.sum()))
        if (~flat).any():
            new_eta[~flat] = _truncated_exponential(stream, rate[~flat], bound[~flat])
    else:
        new_eta = _truncated_exponential(stream, rate, bound)
    state.lambda_ = 1.0 / np.sqrt(new_eta)
    _refresh_theta(state)
    return state


def aux_lambda_moments(c, v, ybar, sigma, n):
    """Mean and sd of ``lambda_j`` given the auxiliary variance ``V_j``.

    Prior ``N(0, V)``; the data carry ``ybar / sigma ~ N(c lambda, 1/n)``.
    Written as ``(w / (1 + w)) z`` with ``w = n V c^2``, ``z = ybar / (sigma c)``,
    expanded so that ``c = 0`` gives the prior.
    """
    w = n * v * c * c
    mean = n * v * c * ybar / (sigma * (1.0 + w))
    return mean, np.sqrt(v / (1.0 + w))


def truncnormal_lambda_moments(c, v, ybar, sigma, n):
    """Mean and sd, before truncation to ``(0, inf)``, for the ``N+(1, v)`` prior."""
    precision = 1.0 / v + n * c * c
    mean = (1.0 / v + n * c * ybar / sigma) / precision
    return mean, 1.0 / np.sqrt(precision)


def update_lambda_horseshoe_aux(state, data, stream):
    """Auxiliary-variable horseshoe update holding ``theta`` fixed.

    ``lambda_j | V_j ~ N(0, V_j)`` with ``V_j ~ IG(1/2, 1/2)`` makes
    ``lambda_j`` standard Cauchy; ``|lambda_j|`` is then C+(0, 1).
    ``V_j | lambda_j ~ IG(1, (lambda_j^2 + 1)/2)`` and ``lambda_j`` is a
    Gaussian regression of ``ybar_j / sigma`` on ``theta_j`` (times ``delta``
    under PX).
    """
    c = _loading(state)
    v = 1.0 / _gamma(stream, 1.0, 0.5 * (state.lambda_**2 + 1.0), data.p)
    mean, sd = aux_lambda_moments(c, v, data.ybar, state.sigma, data.n)
    zero = c == 0
    if zero.any():
        state.numeric_events["lambda_aux_prior_draw"] += int(zero.sum())
    state.lambda_ = _normal(stream, mean, sd, data.p)
    _refresh_beta(state)
    return state


def update_lambda_truncnormal(state, data, stream, v):
    """``lambda_j ~ N+(1, v)`` prior combined with the Gaussian likelihood in ``lambda_j``."""
    c = _loading(state)
    mean, sd = truncnormal_lambda_moments(c, v, data.ybar, state.sigma, data.n)
    zero = c == 0
    if zero.any():
        state.numeric_events["lambda_truncnormal_prior_draw"] += int(zero.sum())
    state.lambda_ = _truncated_normal_positive(stream, mean, sd)
    _refresh_beta(state)
    return state


def update_lambda_lasso(state, data, stream):
    """Double-exponential prior: ``1/lambda_j^2 | mu_j ~ InvGaussian(1/|mu_j|, 1)``.

    Holds ``beta`` fixed.  ``mu_j = 0`` falls back to the prior
    ``lambda_j^2 ~ Exp(1/2)``.
    """
    mu = np.abs(state.beta / (state.sigma * state.tau))
    zero = mu == 0.0
    lam2 = np.empty(data.p)
    if zero.any():
        state.numeric_events["lambda_lasso_prior_draw"] += int(zero.sum())
        lam2[zero] = _gamma(stream, 1.0, 0.5, int(zero.sum()))
    if (~zero).any():
        lam2[~zero] = 1.0 / stream.wald(1.0 / mu[~zero], 1.0)
    state.lambda_ = np.sqrt(lam2)
    _refresh_theta(state)
    return state


def _update_lambda(state, data, stream, prior):
    if isinstance(prior, FixedOne):
        return state
    if isinstance(prior, Horseshoe):
        if prior.update == "slice":
            return update_lambda_horseshoe_slice(state, data, stream)
        return update_lambda_horseshoe_aux(state, data, stream)
    if isinstance(prior, TruncNormal):
        return update_lambda_truncnormal(state, data, stream, prior.v)
    if isinstance(prior, DoubleExponential):
        return update_lambda_lasso(state, data, stream)
    raise TypeError(f"unsupported lambda prior {prior!r}")


def _update_tau(state, data, stream, config):
    if config.px:
        update_tau_px(state, data, stream, config.tau_prior)
        _refresh_beta(state)
    else:
        update_tau_slice(state, stream, config.tau_prior)


def sweep(state, data, config, stream, iteration=0):
    """One full Gibbs scan.

    ``EXACT_MARGINAL`` runs ``sigma^2`` (with ``beta`` integrated out) and
    then ``beta``, a joint draw of the pair, before ``tau`` and ``lambda``.
    ``APPENDIX_COMPAT`` keeps the order beta, sigma^2, tau, lambda with
    ``theta`` left as computed under the previous ``sigma``.
    """
    try:
        if config.sigma2_mode is Sigma2Mode.APPENDIX_COMPAT:
            update_beta_block(state, data, stream)
            update_sigma2(state, data, stream, config.sigma2_mode)
        else:
            update_sigma2(state, data, stream, config.sigma2_mode)
            update_beta_block(state, data, stream)
        _update_tau(state, data, stream, config)
        _update_lambda(state, data, stream, config.lambda_prior)
        _refresh_beta(state)
    except ChainDivergedError as exc:
        raise ChainDivergedError(str(exc).rsplit(" (iteration", 1)[0], iteration) from None

    if not (
        math.isfinite(state.tau)
        and state.tau > 0
        and math.isfinite(state.sigma2)
        and np.isfinite(state.beta).all()
        and np.isfinite(state.lambda_).all()
    ):
        raise ChainDivergedError("non-finite state after sweep", iteration)
    return state


def run_chain(data, config, stream=None, state=None, progress=False):
    """Run ``burn + keep * thin`` sweeps and return the kept draws.

    The chain starts from :func:`~pxshrink.model.initial_state` unless
    ``state`` is given, and draws from ``RngStream(config.seed)`` unless
    ``stream`` is given.
    """
    stream = stream if stream is not None else RngStream(config.seed)
    state = state if state is not None else initial_state(data.p, config.px, config.tau_init)
    keep, thin = config.keep, config.thin
    tau = np.empty(keep)
    sigma2 = np.empty(keep)
    delta = np.empty(keep) if config.px else None
    g = np.empty(keep) if config.px else None
    beta = np.empty((keep, data.p)) if config.store_vectors else None
    lam = np.empty((keep, data.p)) if config.store_vectors else None

    total = config.burn + keep * thin
    k = 0
    start = time.perf_counter()
    for t in range(1, total + 1):
        if progress and t % 1000 == 0:
            print(f"iteration {t}/{total}", file=sys.stderr, flush=True)
        try:
            sweep(state, data, config, stream, iteration=t)
        except ChainDivergedError as exc:
            exc.trace = _make_trace(tau[:k], sigma2[:k], config, start, state,
                                    beta, lam, delta, g, k)
            raise
        if t > config.burn and (t - config.burn) % thin == 0:
            tau[k] = state.tau
            sigma2[k] = state.sigma2
            if config.px:
                delta[k] = state.delta
                g[k] = state.g
            if config.store_vectors:
                beta[k] = state.beta
                lam[k] = state.lambda_
            k += 1
    return _make_trace(tau, sigma2, config, start, state, beta, lam, delta, g, k)


def _make_trace(tau, sigma2, config, start, state, beta, lam, delta, g, k):
    return Trace(
        tau=tau[:k].copy(),
        sigma2=sigma2[:k].copy(),
        config=config.describe(),
        wall_time=time.perf_counter() - start,
        beta=None if beta is None else beta[:k],
        lambda_=None if lam is None else lam[:k],
        delta=None if delta is None else delta[:k],
        g=None if g is None else g[:k],
        numeric_events=state.numeric_events.copy(),
    )
