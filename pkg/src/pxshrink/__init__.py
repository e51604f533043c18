"""Gibbs samplers for sparse normal scale-mixture models, with and without parameter expansion."""
from .distributions import RngStream
from .model import (
    ChainState,
    Dataset,
    DoubleExponential,
    FixedOne,
    HalfCauchy,
    Horseshoe,
    NoncentralT,
    Parameterization,
    SamplerConfig,
    Sigma2Mode,
    Trace,
    TruncNormal,
    build_dataset,
)
from .gibbs import run_chain, sweep

__version__ = "0.1.0"
