"""Composable hybrid physics/data modeling blocks.

Pure computational blocks plus the combinators to assemble them (additive
correction, preprocessing chains, estimated-input fan-in, hard-constraint
projection, sequential scans), and the numeric leaves those compositions
need: ODE integrators, GP regression, spectral preprocessing, FIR pairs,
continuous-discrete Kalman filtering, and a data-driven constrained solver.
The ``hybridblocks`` CLI runs the shipped deterministic experiments.
"""

__version__ = "0.1.0"

from .backend import backend_name, using_numba
from .errors import ConfigError, NumericalError
from .graph import (
    Block,
    ModelGraph,
    RecurrentBlock,
    compose_chain,
    compose_constrained,
    compose_delta,
    compose_feature,
    eval_block,
    eval_graph,
    parse_graph,
    scan,
    serialize_graph,
    validate_graph,
)
from .rng import Generator, derive_seeds, prng_new, prng_normal
from .series import TimeSeries

__all__ = [
    "Block",
    "ConfigError",
    "Generator",
    "ModelGraph",
    "NumericalError",
    "RecurrentBlock",
    "TimeSeries",
    "backend_name",
    "compose_chain",
    "compose_constrained",
    "compose_delta",
    "compose_feature",
    "derive_seeds",
    "eval_block",
    "eval_graph",
    "parse_graph",
    "prng_new",
    "prng_normal",
    "scan",
    "serialize_graph",
    "using_numba",
    "validate_graph",
    "__version__",
]
