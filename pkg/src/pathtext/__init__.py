"""Typed reasoning-path search for data-to-text generation."""

from .data import Graph, Table, Triple, parse_graph, parse_table, serialize_graph
from .dsl import DataType, parse_path, serialize_path, typecheck_path
from .modules import evaluate_path, registry_default
from .search import SearchConfig, best_first_search_table, enumerate_all_paths, greedy_fuse_graph

__version__ = "0.1.0"

__all__ = [
    "DataType",
    "Graph",
    "SearchConfig",
    "Table",
    "Triple",
    "best_first_search_table",
    "enumerate_all_paths",
    "evaluate_path",
    "greedy_fuse_graph",
    "parse_graph",
    "parse_path",
    "parse_table",
    "registry_default",
    "serialize_graph",
    "serialize_path",
    "typecheck_path",
]
