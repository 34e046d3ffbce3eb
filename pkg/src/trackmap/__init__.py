"""Outer automorphisms of free groups via maps of marked graphs.

Desk-scale computation with relative train track maps: filtrations and
growth classification, Nielsen path search, attracting laminations, and
free factor systems, with replayable certificates for every verdict.
"""

from .budget import Budget, BudgetExceeded, Unknown, Unsupported
from .factors import (
    FactorSystem,
    SubgroupGraph,
    carries,
    compose_automorphisms,
    conjugator_of_inner,
    cx_compare,
    ffs_from_subgraph,
    identity_automorphism,
    invert_automorphism,
    whole_group,
)
from .graphs import MarkedGraph, rose
from .growth import GrowthReport, abelianize, classify_growth, is_unipotent, pg_basis
from .lamination import (
    AttractionVerdict,
    LamHandle,
    ZData,
    build_Z,
    classify_trichotomy,
    expansion_factor,
    free_rank2_certificate,
    in_groupoid,
    lamination_of,
    laminations_of,
    tile,
    tile_matrix_check,
    weakly_attracted,
)
from .mapping import GraphMap, TopRep, RttReport, iterate_rep
from .moves import MoveWitness, factor_into_folds, replay_log
from .nielsen import PrSet, Splitting, compute_Pr, indivisible_nielsen_paths, split_path
from .strata import (
    Stratum,
    classify_stratum,
    from_rose_automorphism,
    frequency_vector,
    make_eg_aperiodic,
    strata_of,
    top_growth,
)
from .traintrack import find_rtt, improve_rtt, verify_improved
from .words import Word, inverse, tighten, cyclic_tighten, parse_word, format_word

__all__ = [
    "Budget",
    "BudgetExceeded",
    "Unknown",
    "Unsupported",
    "FactorSystem",
    "SubgroupGraph",
    "carries",
    "compose_automorphisms",
    "conjugator_of_inner",
    "cx_compare",
    "ffs_from_subgraph",
    "identity_automorphism",
    "invert_automorphism",
    "whole_group",
    "MarkedGraph",
    "rose",
    "GrowthReport",
    "abelianize",
    "classify_growth",
    "is_unipotent",
    "pg_basis",
    "AttractionVerdict",
    "LamHandle",
    "ZData",
    "build_Z",
    "classify_trichotomy",
    "expansion_factor",
    "free_rank2_certificate",
    "in_groupoid",
    "lamination_of",
    "laminations_of",
    "tile",
    "tile_matrix_check",
    "weakly_attracted",
    "GraphMap",
    "TopRep",
    "RttReport",
    "iterate_rep",
    "MoveWitness",
    "factor_into_folds",
    "replay_log",
    "PrSet",
    "Splitting",
    "compute_Pr",
    "indivisible_nielsen_paths",
    "split_path",
    "Stratum",
    "classify_stratum",
    "from_rose_automorphism",
    "frequency_vector",
    "make_eg_aperiodic",
    "strata_of",
    "top_growth",
    "find_rtt",
    "improve_rtt",
    "verify_improved",
    "Word",
    "inverse",
    "tighten",
    "cyclic_tighten",
    "parse_word",
    "format_word",
]
