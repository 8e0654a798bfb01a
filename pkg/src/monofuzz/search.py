"""Iterative search for reachable, bounds-valid monomorphic instantiations.

Starting from the fuzzer-providable primitives, each round first marks the
outputs of reachable non-generic APIs as producible, then tries to extend
every generic API: each generic argument is matched against all currently
producible types (union of candidate solutions), the per-argument sets are
merged into the largest common solution set, and the survivors are filtered
by trait bounds, the nesting-depth cap, and whole-signature reachability.
Accepted instantiations contribute their output types back into the
producible set; the loop ends when that set stops growing.

Parameters that no argument determines stay TOP after the merge. When such
a parameter is constrained by a trait bound, the wildcard is expanded over
the currently producible types and filtered by the bounds; when it is
completely unconstrained there is nothing to anchor an instantiation to,
and the solution is dropped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .bounds import INVALID, ImplIndex, satisfies_bounds
from .corpus import (
    ApiSignature,
    Corpus,
    Deco,
    Prim,
    TypeExpr,
    contains_param,
    params_in,
    type_depth,
    type_key,
    type_to_json,
)
from .graph import DependencyGraph, add_concrete_type
from .lattice import (
    MonoSolution,
    SolutionSet,
    Top,
    apply_transformations,
    match_solutions,
    materialize,
    merge_sets,
    union_sets,
)

DEFAULT_MAX_DEPTH = 2


@dataclass(frozen=True)
class MonoApi:
    """One accepted instantiation: a generic API fixed at a solution."""

    api_id: str
    solution: MonoSolution
    signature: ApiSignature  # fully concrete
    bounds_outcome: str
    round_found: int

    @property
    def instance_id(self) -> str:
        args = ", ".join(
            type_key(s) for s in self.solution.slots if not isinstance(s, Top)
        )
        return f"{self.api_id}::<{args}>"


@dataclass
class MonoCatalog:
    mo: dict[str, SolutionSet] = field(default_factory=dict)
    reachable_types: dict[TypeExpr, None] = field(default_factory=dict)  # ordered set
    mono_apis: list[MonoApi] = field(default_factory=list)
    rounds: int = 0

    def solutions_for(self, api_id: str) -> SolutionSet:
        return self.mo[api_id]

    def mono_count(self) -> int:
        return len(self.mono_apis)


def is_primitive(t: TypeExpr) -> bool:
    return isinstance(t, Prim)


def _producible(needed: TypeExpr, available: Iterable[TypeExpr]) -> bool:
    if needed in available:
        return True
    return any(apply_transformations(a, needed) for a in available)


def is_reachable(api: ApiSignature, reachable: Iterable[TypeExpr], graph=None) -> bool:
    """Every input a primitive, already producible, or bridgeable by a
    transformation chain from a producible type."""
    pool = list(reachable)
    for t in api.inputs:
        if contains_param(t):
            raise ValueError(f"is_reachable needs a concrete signature: {api.api_id}")
        if is_primitive(t):
            continue
        if not _producible(t, pool):
            return False
    return True


def _slots_within_depth(s: MonoSolution, max_depth: int) -> bool:
    return all(
        isinstance(slot, Top) or type_depth(slot) <= max_depth for slot in s.slots
    )


def _expand_wildcards(
    s: MonoSolution,
    api: ApiSignature,
    candidates: list[TypeExpr],
) -> list[MonoSolution]:
    """Replace TOP slots with candidate types, one solution per combination.

    Only parameters mentioned by some trait bound are worth expanding; a
    completely unconstrained leftover parameter admits no principled choice
    and the solution is dropped (empty result).
    """
    open_idx = [i for i, slot in enumerate(s.slots) if isinstance(slot, Top)]
    if not open_idx:
        return [s]
    bounded: set[str] = set()
    for b in api.bounds:
        bounded.update(params_in(b.subject))
        for a in b.trait.args:
            bounded.update(params_in(a))
    for i in open_idx:
        if api.type_params[i] not in bounded:
            return []
    out = []
    for combo in itertools.product(candidates, repeat=len(open_idx)):
        slots = list(s.slots)
        for i, ty in zip(open_idx, combo):
            slots[i] = ty
        out.append(MonoSolution(tuple(slots)))
    return out


def run_search(
    graph: DependencyGraph,
    corpus: Corpus,
    max_depth: int = DEFAULT_MAX_DEPTH,
    idx: Optional[ImplIndex] = None,
    fuel: int = 4,
) -> MonoCatalog:
    """Fixpoint over the producible-type set; see the module docstring."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if idx is None:
        from .bounds import build_impl_index

        idx = build_impl_index(corpus)

    catalog = MonoCatalog()
    reachable = catalog.reachable_types
    for p in corpus.primitives:
        reachable[Prim(p)] = None
        add_concrete_type(graph, Prim(p))
    for gapi_id in graph.generic_api_ids:
        catalog.mo[gapi_id] = SolutionSet.empty(len(graph.apis[gapi_id].type_params))

    def register_output(t: Optional[TypeExpr]) -> None:
        if t is None or t in reachable:
            return
        if type_depth(t) > max_depth:
            return
        reachable[t] = None
        add_concrete_type(graph, t)

    seen_solutions: dict[str, set[MonoSolution]] = {a: set() for a in graph.generic_api_ids}
    rejected: dict[str, set[MonoSolution]] = {a: set() for a in graph.generic_api_ids}

    changed = True
    while changed:
        catalog.rounds += 1
        size_before = len(reachable)

        for api_id in graph.nongeneric_api_ids:
            sig = graph.apis[api_id]
            if is_reachable(sig, reachable):
                register_output(sig.output)

        for gapi_id in graph.generic_api_ids:
            gapi = graph.apis[gapi_id]
            arity = len(gapi.type_params)
            snapshot = list(reachable)
            s = SolutionSet.universal(arity)
            for _, arg in gapi.generic_inputs():
                per_arg = SolutionSet.empty(arity)
                for ty in snapshot:
                    found = match_solutions(ty, arg, gapi)
                    if found:
                        per_arg = union_sets(per_arg, SolutionSet.of(arity, found))
                s = merge_sets(s, per_arg)
                if not s:
                    break

            expansion_pool = [
                t for t in snapshot
                if not isinstance(t, Deco) and type_depth(t) <= max_depth
            ]
            for partial in s:
                for sol in _expand_wildcards(partial, gapi, expansion_pool):
                    if sol in seen_solutions[gapi_id] or sol in rejected[gapi_id]:
                        continue
                    if not _slots_within_depth(sol, max_depth):
                        rejected[gapi_id].add(sol)
                        continue
                    outcome = satisfies_bounds(sol, gapi, idx, fuel)
                    if outcome == INVALID:
                        rejected[gapi_id].add(sol)
                        continue
                    mapi = materialize(gapi, sol)
                    if not is_reachable(mapi, reachable):
                        continue  # may become reachable in a later round
                    seen_solutions[gapi_id].add(sol)
                    catalog.mo[gapi_id] = union_sets(
                        catalog.mo[gapi_id], SolutionSet.of(arity, [sol])
                    )
                    catalog.mono_apis.append(
                        MonoApi(gapi_id, sol, mapi, outcome, catalog.rounds)
                    )
                    register_output(mapi.output)

        changed = len(reachable) != size_before

    return catalog


def catalog_to_json(catalog: MonoCatalog) -> dict:
    return {
        "rounds": catalog.rounds,
        "reachable_types": [type_to_json(t) for t in catalog.reachable_types],
        "apis": {
            api_id: [
                {
                    "solution": [
                        None if isinstance(s, Top) else type_to_json(s)
                        for s in m.solution.slots
                    ],
                    "instance": m.instance_id,
                    "bounds": m.bounds_outcome,
                    "round": m.round_found,
                }
                for m in catalog.mono_apis
                if m.api_id == api_id
            ]
            for api_id in catalog.mo
        },
    }
