"""API dependency graph over concrete and generic types.

Nodes are APIs (split into non-generic and generic) and types (split into
concrete and generic). Consumer edges run from an input type to the API
consuming it, producer edges from an API to its output type, and match
edges from a concrete type to each generic type it can instantiate —
possibly through a borrow/unwrap transformation chain.

The concrete side grows while the instantiation search runs: every newly
producible type is inserted with :func:`add_concrete_type`, which refreshes
the match edges and records the change in an append-only log.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Corpus, ApiSignature, TypeExpr, contains_param, type_text, type_to_json
from .lattice import apply_transformations


@dataclass(frozen=True)
class ConsumerEdge:
    type_node: TypeExpr
    api_id: str
    position: int  # input index, one edge per occurrence


@dataclass(frozen=True)
class ProducerEdge:
    api_id: str
    type_node: TypeExpr


@dataclass
class DependencyGraph:
    apis: dict[str, ApiSignature] = field(default_factory=dict)
    concrete_types: dict[TypeExpr, None] = field(default_factory=dict)  # ordered set
    generic_types: dict[TypeExpr, None] = field(default_factory=dict)
    consumer_edges: list[ConsumerEdge] = field(default_factory=list)
    producer_edges: list[ProducerEdge] = field(default_factory=list)
    match_edges: dict[tuple[TypeExpr, TypeExpr], None] = field(default_factory=dict)
    log: list[tuple[str, object]] = field(default_factory=list)

    @property
    def nongeneric_api_ids(self) -> list[str]:
        return [a for a, sig in self.apis.items() if not sig.is_generic]

    @property
    def generic_api_ids(self) -> list[str]:
        return [a for a, sig in self.apis.items() if sig.is_generic]

    def is_type_node(self, t: TypeExpr) -> bool:
        return t in self.concrete_types or t in self.generic_types


def _matches(concrete: TypeExpr, generic: TypeExpr) -> bool:
    return bool(apply_transformations(concrete, generic))


def build_graph(corpus: Corpus) -> DependencyGraph:
    """Construct the graph from a validated corpus.

    Type nodes come from the signatures alone; primitives only enter later,
    as the search seeds them into the reachable set.
    """
    g = DependencyGraph()
    for sig in corpus.apis:
        g.apis[sig.api_id] = sig
        for pos, t in enumerate(sig.inputs):
            _add_type_node(g, t)
            g.consumer_edges.append(ConsumerEdge(t, sig.api_id, pos))
        if sig.output is not None:
            _add_type_node(g, sig.output)
            g.producer_edges.append(ProducerEdge(sig.api_id, sig.output))
    _refresh_match_edges(g)
    return g


def _add_type_node(g: DependencyGraph, t: TypeExpr) -> None:
    side = g.generic_types if contains_param(t) else g.concrete_types
    if t not in side:
        side[t] = None
        g.log.append(("type", t))


def _refresh_match_edges(g: DependencyGraph) -> list[tuple[TypeExpr, TypeExpr]]:
    new = []
    for c in g.concrete_types:
        for t in g.generic_types:
            key = (c, t)
            if key not in g.match_edges and _matches(c, t):
                g.match_edges[key] = None
                g.log.append(("match", key))
                new.append(key)
    return new


def add_concrete_type(g: DependencyGraph, t: TypeExpr) -> list[tuple[TypeExpr, TypeExpr]]:
    """Insert a concrete type node (idempotent); returns the new match edges."""
    if contains_param(t):
        raise ValueError(f"cannot add generic type {type_text(t)} as a concrete node")
    if t in g.concrete_types:
        return []
    g.concrete_types[t] = None
    g.log.append(("type", t))
    new = []
    for gen in g.generic_types:
        if _matches(t, gen):
            key = (t, gen)
            g.match_edges[key] = None
            g.log.append(("match", key))
            new.append(key)
    return new


def producers_of(g: DependencyGraph, t: TypeExpr) -> set[str]:
    if not g.is_type_node(t):
        raise KeyError(f"unknown type node {type_text(t)}")
    return {e.api_id for e in g.producer_edges if e.type_node == t}


def consumers_of(g: DependencyGraph, t: TypeExpr) -> set[str]:
    if not g.is_type_node(t):
        raise KeyError(f"unknown type node {type_text(t)}")
    return {e.api_id for e in g.consumer_edges if e.type_node == t}


def match_sources(g: DependencyGraph, generic: TypeExpr) -> list[TypeExpr]:
    return [c for (c, t) in g.match_edges if t == generic]


def audit(g: DependencyGraph) -> None:
    """Check edge-endpoint invariants; raises AssertionError on violation."""
    for e in g.consumer_edges:
        sig = g.apis[e.api_id]
        if not sig.is_generic:
            assert e.type_node in g.concrete_types, (
                f"non-generic {e.api_id} consumes generic node {type_text(e.type_node)}"
            )
        assert g.is_type_node(e.type_node)
    for e in g.producer_edges:
        sig = g.apis[e.api_id]
        if not sig.is_generic:
            assert e.type_node in g.concrete_types, (
                f"non-generic {e.api_id} produces generic node {type_text(e.type_node)}"
            )
    for (c, t) in g.match_edges:
        assert c in g.concrete_types, f"match source {type_text(c)} not concrete"
        assert t in g.generic_types, f"match target {type_text(t)} not generic"
        assert _matches(c, t), f"stale match edge {type_text(c)} -> {type_text(t)}"


def graph_to_json(g: DependencyGraph) -> dict:
    return {
        "apis": {
            api_id: {"generic": sig.is_generic, "origin": sig.origin}
            for api_id, sig in g.apis.items()
        },
        "concrete_types": [type_to_json(t) for t in g.concrete_types],
        "generic_types": [type_to_json(t) for t in g.generic_types],
        "consumer_edges": [
            {"type": type_to_json(e.type_node), "api": e.api_id, "position": e.position}
            for e in g.consumer_edges
        ],
        "producer_edges": [
            {"api": e.api_id, "type": type_to_json(e.type_node)}
            for e in g.producer_edges
        ],
        "match_edges": [
            {"concrete": type_to_json(c), "generic": type_to_json(t)}
            for (c, t) in g.match_edges
        ],
    }


def graph_to_dot(g: DependencyGraph) -> str:
    """Dot-format export for documentation."""

    def tid(t: TypeExpr) -> str:
        return '"ty: ' + type_text(t).replace('"', "'") + '"'

    lines = ["digraph api_dependencies {", "  rankdir=LR;"]
    for api_id, sig in g.apis.items():
        shape = "doubleoctagon" if sig.is_generic else "box"
        lines.append(f'  "{api_id}" [shape={shape}];')
    for t in list(g.concrete_types) + list(g.generic_types):
        style = "dashed" if contains_param(t) else "solid"
        lines.append(f"  {tid(t)} [shape=ellipse, style={style}];")
    for e in g.consumer_edges:
        lines.append(f'  {tid(e.type_node)} -> "{e.api_id}";')
    for e in g.producer_edges:
        lines.append(f'  "{e.api_id}" -> {tid(e.type_node)};')
    for (c, t) in g.match_edges:
        lines.append(f"  {tid(c)} -> {tid(t)} [style=dotted, label=match];")
    lines.append("}")
    return "\n".join(lines)
