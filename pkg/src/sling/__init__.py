"""SimRank on directed graphs: the SLING index, exact oracles and a Monte Carlo baseline."""

from .correction import CorrectionVector, estimate_all_d, estimate_d_adaptive, estimate_d_basic
from .graph import Graph, GraphFormatError, load_edge_list, read_graph
from .hpindex import (HpSet, apply_space_reduction, build_all_hp_sets, build_two_hop,
                      mark_top_hps, materialize_query_hp_set)
from .index import SlingIndex, SlingParams, build_index, derive_parameters, index_stats
from .mcbaseline import McIndex, mc_build, mc_pair, mc_source
from .oracle import (exact_correction, exact_hitting_probabilities, eval_decomposition,
                     power_iterations_needed, power_method)
from .query import single_pair, single_source, single_source_naive, top_k
from .storage import DiskIndex, deserialize, serialize

__all__ = [
    "CorrectionVector", "DiskIndex", "Graph", "GraphFormatError", "HpSet", "McIndex",
    "SlingIndex", "SlingParams", "apply_space_reduction", "build_all_hp_sets", "build_index",
    "build_two_hop", "derive_parameters", "deserialize", "estimate_all_d", "estimate_d_adaptive",
    "estimate_d_basic", "eval_decomposition", "exact_correction", "exact_hitting_probabilities",
    "index_stats", "load_edge_list", "mark_top_hps", "materialize_query_hp_set", "mc_build",
    "mc_pair", "mc_source", "power_iterations_needed", "power_method", "read_graph", "serialize",
    "single_pair", "single_source", "single_source_naive", "top_k",
]
