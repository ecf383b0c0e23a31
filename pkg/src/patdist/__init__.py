"""Exact and high-precision distribution of pattern occurrence counts in Markov sequences."""

from .automaton import Dfa, OrderMDfa, compile_pattern, make_order_m, parse_pattern, scan
from .embedding import EmbeddedChain, embed, series_prefix
from .lifting import bivariate_lift, devel_chunk, fiduccia_chunk, high_order, series_chunk
from .markov import MarkovModel, fit_mle, load_model, save_model, stationary_mu, uniform_iid
from .oracle import exhaustive, monte_carlo
from .reconstruction import BivariateFraction, find_fraction, probe_degree, reconstruct_gf, verify
from .recursion import CountDistribution, dominant_eigenvalue, full_distribution, partial_distribution

__version__ = "0.1.0"

__all__ = [
    "BivariateFraction", "CountDistribution", "Dfa", "EmbeddedChain", "MarkovModel", "OrderMDfa",
    "bivariate_lift", "compile_pattern", "devel_chunk", "dominant_eigenvalue", "embed", "exhaustive",
    "fiduccia_chunk", "find_fraction", "fit_mle", "full_distribution", "high_order", "load_model",
    "make_order_m", "monte_carlo", "parse_pattern", "partial_distribution", "probe_degree",
    "reconstruct_gf", "save_model", "scan", "series_chunk", "series_prefix", "stationary_mu",
    "uniform_iid", "verify",
]
