"""Exact tools for maximum-homomorphism / Max-CSP approximation over rational-valued structures."""

from .structures import (
    Signature,
    ValuedStructure,
    graph_structure,
    val,
    rescale,
    disjoint_union,
    gaifman,
    edit_distance,
    is_clean,
    img,
)
from .graphs import Graph, TreeDecomposition

__all__ = [
    "Signature",
    "ValuedStructure",
    "graph_structure",
    "val",
    "rescale",
    "disjoint_union",
    "gaifman",
    "edit_distance",
    "is_clean",
    "img",
    "Graph",
    "TreeDecomposition",
]
