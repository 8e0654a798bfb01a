"""Fuzz-driver synthesis for libraries with generic APIs.

Pipeline: load a corpus describing the API surface, build the dependency
graph, search for reachable bounds-valid monomorphic instantiations, prune
behaviorally redundant ones, generate covering call sequences, and render
each as a compilable fuzz driver.
"""

from .corpus import (
    ApiSignature,
    Con,
    Corpus,
    CorpusError,
    Deco,
    Param,
    Prim,
    TraitBound,
    TraitImplRecord,
    TraitRef,
    TypeExpr,
    load_corpus,
    load_corpus_file,
    type_depth,
    type_text,
)
from .lattice import (
    TOP,
    MonoSolution,
    SolutionSet,
    apply_transformations,
    match_type,
    merge_sets,
    substitute,
    union_sets,
)
from .graph import DependencyGraph, add_concrete_type, build_graph, consumers_of, producers_of
from .bounds import ImplIndex, build_impl_index, holds, satisfies_bounds
from .search import MonoCatalog, is_reachable, run_search
from .prune import ReservedSet, impls_set, minimal_cover, run_prune
from .sequence import ApiSequence, SequenceLimits, generate_sequences, validate_sequence
from .synth import DriverArtifact, RenderProfile, RunConfig, render_driver, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "ApiSequence",
    "ApiSignature",
    "Con",
    "Corpus",
    "CorpusError",
    "Deco",
    "DependencyGraph",
    "DriverArtifact",
    "ImplIndex",
    "MonoCatalog",
    "MonoSolution",
    "Param",
    "Prim",
    "RenderProfile",
    "ReservedSet",
    "RunConfig",
    "SequenceLimits",
    "SolutionSet",
    "TOP",
    "TraitBound",
    "TraitImplRecord",
    "TraitRef",
    "TypeExpr",
    "add_concrete_type",
    "apply_transformations",
    "build_graph",
    "build_impl_index",
    "consumers_of",
    "generate_sequences",
    "holds",
    "impls_set",
    "is_reachable",
    "load_corpus",
    "load_corpus_file",
    "match_type",
    "merge_sets",
    "minimal_cover",
    "producers_of",
    "render_driver",
    "run_pipeline",
    "run_prune",
    "run_search",
    "satisfies_bounds",
    "substitute",
    "type_depth",
    "type_text",
    "union_sets",
    "validate_sequence",
]
