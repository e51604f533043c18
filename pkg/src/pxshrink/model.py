"""Data containers, prior choices and sampler configuration.

The observation model is the normal-means setup with replicates::

    y_ij | beta_j, sigma^2      ~ N(beta_j, sigma^2)
    beta_j | lambda_j, tau, sigma ~ N(0, sigma^2 tau^2 lambda_j^2)

with Jeffreys ``p(sigma) ∝ 1/sigma``.  ``beta`` lives on the observation
scale; ``theta`` is its standardized version (see :class:`ChainState`).
"""
import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

__all__ = [
    "Dataset",
    "build_dataset",
    "load_dataset_csv",
    "save_dataset_csv",
    "Horseshoe",
    "TruncNormal",
    "DoubleExponential",
    "FixedOne",
    "HalfCauchy",
    "NoncentralT",
    "Parameterization",
    "Sigma2Mode",
    "SamplerConfig",
    "ChainState",
    "Trace",
    "initial_state",
]


class DataError(ValueError):
    """Raised for malformed or non-finite observations."""


@dataclass(frozen=True)
class Dataset:
    y: np.ndarray
    ybar: np.ndarray
    row_sum: np.ndarray
    row_sumsq: np.ndarray
    row_ssd: np.ndarray

    @property
    def p(self) -> int:
        return self.y.shape[0]

    @property
    def n(self) -> int:
        return self.y.shape[1]


def build_dataset(y) -> Dataset:
    """Wrap a ``p x n`` matrix (rows are coordinates) with its row statistics."""
    y = np.array(y, dtype=float, copy=True)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] < 1 or y.shape[1] < 1:
        raise DataError(f"y must be a non-empty p x n matrix, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise DataError("y contains NaN or infinite entries")
    y.setflags(write=False)
    row_sum = y.sum(axis=1)
    row_sumsq = (y * y).sum(axis=1)
    ybar = row_sum / y.shape[1]
    # centered sum of squares, computed directly to avoid cancellation
    row_ssd = ((y - ybar[:, None]) ** 2).sum(axis=1)
    for arr in (row_sum, row_sumsq, ybar, row_ssd):
        arr.setflags(write=False)
    return Dataset(y=y, ybar=ybar, row_sum=row_sum, row_sumsq=row_sumsq, row_ssd=row_ssd)


def save_dataset_csv(data: Dataset, path) -> None:
    """Headerless CSV, one row per coordinate, 17 significant digits."""
    from .io import atomic_write_text

    lines = [",".join(format(v, ".17g") for v in row) for row in data.y]
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_dataset_csv(path) -> Dataset:
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError:
                raise DataError(f"{path}: line {lineno}: non-numeric entry") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(
                    f"{path}: line {lineno}: expected {width} columns, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return build_dataset(np.array(rows))


# -- priors ---------------------------------------------------------------


@dataclass(frozen=True)
class Horseshoe:
    """``lambda_j ~ C+(0, 1)``.

    ``update`` picks the conditional update: ``"aux"`` is the
    inverse-gamma auxiliary-variable scheme (signed lambda), ``"slice"`` the
    two-step slice update on ``1/lambda^2``.
    """

    update: str = "aux"

    def __post_init__(self):
        if self.update not in ("aux", "slice"):
            raise ValueError(f"unknown horseshoe update {self.update!r}")


@dataclass(frozen=True)
class TruncNormal:
    """``lambda_j ~ N+(1, v)``."""

    v: float

    def __post_init__(self):
        if not (math.isfinite(self.v) and self.v > 0):
            raise ValueError(f"TruncNormal variance must be > 0, got {self.v}")


@dataclass(frozen=True)
class DoubleExponential:
    """``p(lambda_j) ∝ lambda_j exp(-lambda_j^2 / 2)``, the Bayesian lasso."""


@dataclass(frozen=True)
class FixedOne:
    """``lambda_j ≡ 1``: global shrinkage only."""


LambdaPrior = Union[Horseshoe, TruncNormal, DoubleExponential, FixedOne]


@dataclass(frozen=True)
class HalfCauchy:
    """``tau ~ C+(0, 1)``."""


@dataclass(frozen=True)
class NoncentralT:
    """``tau = |Delta| g`` with ``Delta ~ N(m, 1)`` and ``g^2 ~ IG(a/2, b/2)``.

    ``m=0, a=b=1`` is the half-Cauchy.  Without expansion only ``m == 0``
    (a scaled half-t) can be sampled.
    """

    m: float = 0.0
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.m):
            raise ValueError("NoncentralT m must be finite")
        if not (self.a > 0 and self.b > 0):
            raise ValueError("NoncentralT a and b must be > 0")

    @property
    def is_half_cauchy(self) -> bool:
        return self.m == 0.0 and self.a == 1.0 and self.b == 1.0


TauPrior = Union[HalfCauchy, NoncentralT]


def tau_prior_params(prior: TauPrior):
    """``(m, a, b)`` for either tau prior."""
    if isinstance(prior, HalfCauchy):
        return 0.0, 1.0, 1.0
    return prior.m, prior.a, prior.b


class Parameterization(str, enum.Enum):
    NONPX = "nonpx"
    PX = "px"


class Sigma2Mode(str, enum.Enum):
    EXACT_MARGINAL = "exact"
    APPENDIX_COMPAT = "appendix"


@dataclass(frozen=True)
class SamplerConfig:
    parameterization: Parameterization = Parameterization.PX
    lambda_prior: LambdaPrior = field(default_factory=Horseshoe)
    sigma2_mode: Sigma2Mode = Sigma2Mode.EXACT_MARGINAL
    tau_prior: TauPrior = field(default_factory=HalfCauchy)
    burn: int = 20_000
    keep: int = 20_000
    thin: int = 1
    seed: int = 42
    store_vectors: bool = False
    tau_init: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "parameterization", Parameterization(self.parameterization))
        object.__setattr__(self, "sigma2_mode", Sigma2Mode(self.sigma2_mode))
        if self.burn < 0:
            raise ValueError("burn must be >= 0")
        if self.keep < 1:
            raise ValueError("keep must be >= 1")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not (math.isfinite(self.tau_init) and self.tau_init > 0):
            raise ValueError("tau_init must be finite and > 0")
        m, _, _ = tau_prior_params(self.tau_prior)
        if self.parameterization is Parameterization.NONPX and m != 0.0:
            raise ValueError("a noncentral tau prior (m != 0) needs the PX sampler")

    @property
    def px(self) -> bool:
        return self.parameterization is Parameterization.PX

    def describe(self) -> dict:
        """JSON-friendly echo of the configuration."""
        lp = self.lambda_prior
        tp = self.tau_prior
        return {
            "parameterization": self.parameterization.value,
            "lambda_prior": type(lp).__name__,
            "lambda_prior_params": {k: getattr(lp, k) for k in getattr(lp, "__dataclass_fields__", {})},
            "sigma2_mode": self.sigma2_mode.value,
            "tau_prior": type(tp).__name__,
            "tau_prior_params": {k: getattr(tp, k) for k in getattr(tp, "__dataclass_fields__", {})},
            "burn": self.burn,
            "keep": self.keep,
            "thin": self.thin,
            "seed": self.seed,
            "store_vectors": self.store_vectors,
            "tau_init": self.tau_init,
        }


@dataclass
class ChainState:
    """Current values of every latent quantity of one chain.

    ``theta`` is ``beta / (sigma * lambda)`` without expansion and
    ``beta / (sigma * delta * lambda)`` with it.  ``lambda_`` may carry a sign
    (the auxiliary update draws it on the whole line); only ``lambda_**2``
    enters the model.  ``delta`` and ``g`` are ``None`` for the non-PX chain.
    """

    beta: np.ndarray
    theta: np.ndarray
    lambda_: np.ndarray
    tau: float
    sigma2: float
    delta: Optional[float] = None
    g: Optional[float] = None
    numeric_events: Counter = field(default_factory=Counter)

    @property
    def px(self) -> bool:
        return self.delta is not None

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def copy(self) -> "ChainState":
        return ChainState(
            beta=self.beta.copy(),
            theta=self.theta.copy(),
            lambda_=self.lambda_.copy(),
            tau=self.tau,
            sigma2=self.sigma2,
            delta=self.delta,
            g=self.g,
            numeric_events=Counter(self.numeric_events),
        )

    def check(self, rtol=1e-12) -> None:
        """Assert the consistency invariants; raises ``AssertionError``."""
        assert self.tau > 0 and math.isfinite(self.tau), f"bad tau {self.tau}"
        assert self.sigma2 > 0 and math.isfinite(self.sigma2), f"bad sigma2 {self.sigma2}"
        scale = self.sigma * self.lambda_
        if self.px:
            assert self.g > 0 and math.isfinite(self.g), f"bad g {self.g}"
            assert self.tau == abs(self.delta) * self.g, "tau != |delta| g"
            scale = scale * self.delta
        np.testing.assert_allclose(self.beta, scale * self.theta, rtol=rtol, atol=1e-300)


def initial_state(p: int, px: bool, tau_init: float = 1.0) -> ChainState:
    """``beta = 0, sigma^2 = 1, lambda = 1, tau = tau_init``; PX adds ``g = 1, delta = tau_init``."""
    state = ChainState(
        beta=np.zeros(p),
        theta=np.zeros(p),
        lambda_=np.ones(p),
        tau=float(tau_init),
        sigma2=1.0,
    )
    if px:
        state.g = 1.0
        state.delta = float(tau_init)
        state.tau = abs(state.delta) * state.g
    return state


@dataclass
class Trace:
    """Post-burn-in draws of one chain, one entry per kept iteration."""

    tau: np.ndarray
    sigma2: np.ndarray
    config: dict
    wall_time: float = 0.0
    beta: Optional[np.ndarray] = None
    lambda_: Optional[np.ndarray] = None
    delta: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None
    numeric_events: Counter = field(default_factory=Counter)

    def __len__(self):
        return len(self.tau)

    @property
    def lambda_scale(self) -> Optional[np.ndarray]:
        """``|lambda|`` draws, the quantity the scale summaries use."""
        return None if self.lambda_ is None else np.abs(self.lambda_)
