"""Flip-graph search for fast matrix multiplication schemes over GF(2).

The package finds low-rank matrix multiplication schemes by random walks in
the flip graph, explores and exports graph components, verifies schemes
against the Brent equations, and refines GF(2) schemes to exact rational
ones by 2-adic lifting with rational reconstruction.
"""

from __future__ import annotations

from .graph import Component, ComponentStats, distance, explore_component, export_dot
from .lift import (
    LiftState,
    lift,
    lift_init,
    lift_step,
    rational_reconstruct,
    reconstruct_coefficient,
    verify_rational,
)
from .moves import (
    FlipMove,
    ReductionCertificate,
    apply_flip,
    apply_reduction,
    enumerate_flips,
    enumerate_reductions,
    find_reduction,
    split,
)
from .rng import SplitMix64, derive_seed
from .scheme import (
    Format,
    ParseError,
    RationalScheme,
    Scheme,
    Triple,
    fixture,
    load_scheme_text,
    parse_rational_scheme,
    parse_scheme,
    standard_scheme,
    verify,
)
from .search import (
    PoolConfig,
    PoolResult,
    WalkConfig,
    WalkTrace,
    descend,
    pool_search,
    random_walk,
    walk_telemetry,
)
from .symmetry import apply_symmetry, canonical_form, equivalent, random_symmetry

__all__ = [
    "Component",
    "ComponentStats",
    "FlipMove",
    "Format",
    "LiftState",
    "ParseError",
    "PoolConfig",
    "PoolResult",
    "RationalScheme",
    "ReductionCertificate",
    "Scheme",
    "SplitMix64",
    "Triple",
    "WalkConfig",
    "WalkTrace",
    "apply_flip",
    "apply_reduction",
    "apply_symmetry",
    "canonical_form",
    "derive_seed",
    "descend",
    "distance",
    "enumerate_flips",
    "enumerate_reductions",
    "equivalent",
    "explore_component",
    "export_dot",
    "find_reduction",
    "fixture",
    "lift",
    "lift_init",
    "lift_step",
    "load_scheme_text",
    "parse_rational_scheme",
    "parse_scheme",
    "pool_search",
    "random_symmetry",
    "random_walk",
    "rational_reconstruct",
    "reconstruct_coefficient",
    "split",
    "standard_scheme",
    "verify",
    "verify_rational",
    "walk_telemetry",
]

__version__ = "0.1.0"
