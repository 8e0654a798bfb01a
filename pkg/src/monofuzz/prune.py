"""Redundancy pruning: keep the fewest instantiations that still exercise
every distinct trait implementation, then re-close under producers.

Two instantiations of one generic API that resolve a bound through the same
implementation (a blanket impl, or a shared default method body) behave
alike there, so fuzzing both wastes budget. Per generic API we greedily
pick a minimal set of solutions covering the union of implementation ids;
when no bound distinguishes anything we keep exactly one solution.

The kept instantiations still need their inputs produced, so a backward
pass reserves producers: any not-yet-reserved API whose output satisfies an
open requirement is reserved, its output marked satisfied, and its own
inputs added to the requirements — first satisfier wins, which keeps the
reserved set small.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .bounds import ImplIndex, bound_impl_ids
from .corpus import ApiSignature, Corpus, Prim, TypeExpr, type_text, type_to_json
from .graph import DependencyGraph
from .lattice import MonoSolution, apply_transformations
from .search import MonoApi, MonoCatalog, is_primitive


def impls_set(
    api: ApiSignature, s: MonoSolution, idx: ImplIndex, fuel: int = 4
) -> set[str]:
    """Implementation ids a solution exercises through the API's bounds."""
    return bound_impl_ids(s, api, idx, fuel)


def minimal_cover(
    api: ApiSignature,
    solutions: list[MonoSolution],
    idx: ImplIndex,
    fuel: int = 4,
    seed: Optional[int] = None,
) -> list[MonoSolution]:
    """Greedy set cover over implementation ids.

    Ties break toward the earliest solution in catalog order. When every
    impl set is empty there is nothing to distinguish solutions, so exactly
    one is kept: the lexicographically lowest by type text, or a seeded
    random pick when a seed is given.
    """
    if not solutions:
        return []
    impl_sets = [impls_set(api, s, idx, fuel) for s in solutions]
    universe = set().union(*impl_sets)
    if not universe:
        if seed is None:
            return [min(solutions, key=MonoSolution.sort_key)]
        return [random.Random(seed).choice(sorted(solutions, key=MonoSolution.sort_key))]

    chosen: list[MonoSolution] = []
    covered: set[str] = set()
    remaining = list(range(len(solutions)))
    while covered != universe:
        best = max(remaining, key=lambda i: (len(impl_sets[i] - covered), -i))
        if not impl_sets[best] - covered:
            break
        chosen.append(solutions[best])
        covered |= impl_sets[best]
        remaining.remove(best)
    return chosen


@dataclass(frozen=True)
class ApiInstance:
    """A callable unit: a non-generic API, or a generic API at one solution."""

    instance_id: str
    api_id: str
    signature: ApiSignature  # fully concrete
    solution: Optional[MonoSolution] = None
    bounds_outcome: str = "valid"

    @property
    def is_mono(self) -> bool:
        return self.solution is not None


def instance_of_mono(m: MonoApi) -> ApiInstance:
    return ApiInstance(
        instance_id=m.instance_id,
        api_id=m.api_id,
        signature=m.signature,
        solution=m.solution,
        bounds_outcome=m.bounds_outcome,
    )


def instance_of_plain(sig: ApiSignature) -> ApiInstance:
    return ApiInstance(instance_id=sig.api_id, api_id=sig.api_id, signature=sig)


@dataclass
class ReservedSet:
    instances: list[ApiInstance] = field(default_factory=list)
    require_types: dict[TypeExpr, None] = field(default_factory=dict)  # ordered sets
    produce_types: dict[TypeExpr, None] = field(default_factory=dict)
    unsatisfiable: list[TypeExpr] = field(default_factory=list)
    kept: dict[str, list[MonoSolution]] = field(default_factory=dict)
    dropped: dict[str, list[MonoSolution]] = field(default_factory=dict)
    covered_impls: dict[str, list[str]] = field(default_factory=dict)

    def ids(self) -> set[str]:
        return {i.instance_id for i in self.instances}

    def mono_reserved(self) -> int:
        return sum(1 for i in self.instances if i.is_mono)

    def reduction_ratio(self, catalog_mono_count: int) -> float:
        if catalog_mono_count == 0:
            return 1.0
        return self.mono_reserved() / catalog_mono_count


def _output_satisfies(output: Optional[TypeExpr], needed: TypeExpr) -> bool:
    if output is None:
        return False
    return bool(apply_transformations(output, needed))


def _prim_feedable(t: TypeExpr, primitives) -> bool:
    return any(apply_transformations(Prim(p), t) for p in primitives)


def _buildable_outputs(instances: list[ApiInstance], primitives) -> dict[TypeExpr, None]:
    """Types constructively producible by the given instances: an output
    counts only once every input of its producer is itself fed by a
    primitive or an already-buildable output. A self-feeding instance (one
    whose output wraps its own input) cannot discharge anything on its own."""
    avail: dict[TypeExpr, None] = {}

    def input_ok(t: TypeExpr) -> bool:
        if is_primitive(t) or _prim_feedable(t, primitives):
            return True
        return any(apply_transformations(a, t) for a in avail)

    changed = True
    while changed:
        changed = False
        for inst in instances:
            out = inst.signature.output
            if out is None or out in avail:
                continue
            if all(input_ok(t) for t in inst.signature.inputs):
                avail[out] = None
                changed = True
    return avail


def run_prune(
    graph: DependencyGraph,
    catalog: MonoCatalog,
    corpus: Corpus,
    idx: ImplIndex,
    fuel: int = 4,
    seed: Optional[int] = None,
) -> ReservedSet:
    """Minimal covers per generic API, then backward producer closure."""
    rs = ReservedSet()
    reserved_ids: set[str] = set()

    by_api: dict[str, list[MonoApi]] = {}
    for m in catalog.mono_apis:
        by_api.setdefault(m.api_id, []).append(m)

    def add_reserved(inst: ApiInstance) -> None:
        if inst.instance_id in reserved_ids:
            return
        reserved_ids.add(inst.instance_id)
        rs.instances.append(inst)
        for t in inst.signature.inputs:
            if not is_primitive(t):
                rs.require_types.setdefault(t, None)

    for gapi_id in graph.generic_api_ids:
        monos = by_api.get(gapi_id, [])
        if not monos:
            continue
        gapi = graph.apis[gapi_id]
        solutions = [m.solution for m in monos]
        cover = minimal_cover(gapi, solutions, idx, fuel, seed)
        cover_set = set(cover)
        rs.kept[gapi_id] = cover
        rs.dropped[gapi_id] = [s for s in solutions if s not in cover_set]
        covered = set()
        for s in cover:
            covered |= impls_set(gapi, s, idx, fuel)
        rs.covered_impls[gapi_id] = sorted(covered)
        for m in monos:
            if m.solution in cover_set:
                add_reserved(instance_of_mono(m))

    # Backward propagation: reserve producers until every requirement is
    # constructively satisfiable from the reserved set. Discharge is based
    # on buildable outputs, not bare producer edges, so an instance whose
    # output merely wraps its own input cannot discharge its requirement
    # circularly. First satisfier wins; a discharged requirement never
    # pulls in a second producer.
    plain = [instance_of_plain(graph.apis[a]) for a in graph.nongeneric_api_ids]
    mono_pool = [instance_of_mono(m) for m in catalog.mono_apis]
    changed = True
    while changed:
        changed = False
        avail = _buildable_outputs(rs.instances, corpus.primitives)
        for ty in list(rs.require_types):
            if ty in rs.produce_types:
                continue
            if _prim_feedable(ty, corpus.primitives) or any(
                apply_transformations(a, ty) for a in avail
            ):
                rs.produce_types[ty] = None
                continue
            for inst in plain + mono_pool:
                if inst.instance_id in reserved_ids:
                    continue
                if _output_satisfies(inst.signature.output, ty):
                    add_reserved(inst)
                    changed = True
                    break

    # A leftover requirement is reported, not fatal.
    for ty in rs.require_types:
        if ty not in rs.produce_types:
            rs.unsatisfiable.append(ty)
    return rs


def prune_to_json(rs: ReservedSet, catalog: MonoCatalog) -> dict:
    reserved_by_api: dict[str, int] = {}
    for inst in rs.instances:
        if inst.is_mono:
            reserved_by_api[inst.api_id] = reserved_by_api.get(inst.api_id, 0) + 1
    per_api = {}
    for api_id in set(list(rs.kept) + list(rs.dropped)):
        per_api[api_id] = {
            "kept": [s.text() for s in rs.kept.get(api_id, [])],
            "dropped": [s.text() for s in rs.dropped.get(api_id, [])],
            "covered_impls": rs.covered_impls.get(api_id, []),
            "reserved": reserved_by_api.get(api_id, 0),
        }
    return {
        "reserved": [i.instance_id for i in rs.instances],
        "mono_reserved": rs.mono_reserved(),
        "mono_total": catalog.mono_count(),
        "reduction_ratio": rs.reduction_ratio(catalog.mono_count()),
        "per_api": dict(sorted(per_api.items())),
        "require_types": [type_to_json(t) for t in rs.require_types],
        "produce_types": [type_to_json(t) for t in rs.produce_types],
        "unsatisfiable": [type_text(t) for t in rs.unsatisfiable],
    }
