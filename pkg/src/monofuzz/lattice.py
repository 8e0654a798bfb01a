"""Monomorphic solutions and the algebra the instantiation search runs on.

A solution assigns each type parameter of one generic API either a concrete
type or the wildcard TOP ("any type works here"). Sets of solutions support
two operations: union (candidates from matching one argument against many
available types) and merge (narrowing across a generic API's arguments to
the largest common solution set). Both keep sets normalized: a tuple
subsumed by a strictly more general one is dropped.

Failure to match is represented as absence (no-match / the empty set), which
is absorbing under merge; this makes the set identities hold exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Union

from .corpus import (
    ApiSignature,
    Con,
    Deco,
    Param,
    Prim,
    TypeExpr,
    type_text,
)


class Top:
    """Wildcard slot: matches any concrete type."""

    _instance: Optional["Top"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "⊤"


TOP = Top()

Slot = Union[TypeExpr, Top]


@dataclass(frozen=True)
class MonoSolution:
    """One assignment of the owning API's type parameters, declaration order."""

    slots: tuple[Slot, ...]

    @property
    def arity(self) -> int:
        return len(self.slots)

    def is_concrete(self) -> bool:
        return all(not isinstance(s, Top) for s in self.slots)

    def subsumes(self, other: "MonoSolution") -> bool:
        """True if every slot is TOP or equals the other's slot."""
        return len(self.slots) == len(other.slots) and all(
            isinstance(a, Top) or a == b for a, b in zip(self.slots, other.slots)
        )

    def text(self) -> str:
        return "(" + ", ".join(
            "⊤" if isinstance(s, Top) else type_text(s) for s in self.slots
        ) + ")"

    def sort_key(self) -> tuple:
        return tuple("" if isinstance(s, Top) else type_text(s) for s in self.slots)


def solution(*slots: Slot) -> MonoSolution:
    return MonoSolution(tuple(slots))


def _normalize(solutions: Iterable[MonoSolution]) -> frozenset[MonoSolution]:
    pool = set(solutions)
    kept = {s for s in pool if not any(o != s and o.subsumes(s) for o in pool)}
    return frozenset(kept)


@dataclass(frozen=True)
class SolutionSet:
    """Normalized finite set of solutions for one API."""

    arity: int
    solutions: frozenset[MonoSolution]

    @classmethod
    def of(cls, arity: int, solutions: Iterable[MonoSolution] = ()) -> "SolutionSet":
        sols = list(solutions)
        for s in sols:
            if s.arity != arity:
                raise ValueError(f"solution arity {s.arity} != set arity {arity}")
        return cls(arity, _normalize(sols))

    @classmethod
    def empty(cls, arity: int) -> "SolutionSet":
        return cls(arity, frozenset())

    @classmethod
    def universal(cls, arity: int) -> "SolutionSet":
        """The all-TOP singleton: every assignment admissible."""
        return cls(arity, frozenset({MonoSolution((TOP,) * arity)}))

    def __bool__(self) -> bool:
        return bool(self.solutions)

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self):
        return iter(sorted(self.solutions, key=MonoSolution.sort_key))

    def __contains__(self, s: MonoSolution) -> bool:
        return s in self.solutions


def union_sets(a: SolutionSet, b: SolutionSet) -> SolutionSet:
    if a.arity != b.arity:
        raise ValueError(f"arity mismatch: {a.arity} vs {b.arity}")
    return SolutionSet(a.arity, _normalize(a.solutions | b.solutions))


def _unify_slots(x: Slot, y: Slot) -> Optional[Slot]:
    if isinstance(x, Top):
        return y
    if isinstance(y, Top):
        return x
    return x if x == y else None


def merge_solutions(a: MonoSolution, b: MonoSolution) -> Optional[MonoSolution]:
    """Coordinate-wise unification; None when any coordinate disagrees."""
    merged = []
    for x, y in zip(a.slots, b.slots):
        u = _unify_slots(x, y)
        if u is None:
            return None
        merged.append(u)
    return MonoSolution(tuple(merged))


def merge_sets(a: SolutionSet, b: SolutionSet) -> SolutionSet:
    """Largest common refinement of two solution sets (empty is absorbing)."""
    if a.arity != b.arity:
        raise ValueError(f"arity mismatch: {a.arity} vs {b.arity}")
    merged = (merge_solutions(x, y) for x, y in itertools.product(a.solutions, b.solutions))
    return SolutionSet(a.arity, _normalize(m for m in merged if m is not None))


# --------------------------------------------------------------------------
# Structural unification of a concrete type against a signature pattern


def unify(concrete: TypeExpr, pattern: TypeExpr, binding: Optional[dict] = None) -> Optional[dict]:
    """Bind the pattern's parameters so it equals ``concrete``.

    Parameters never bind to borrow- or address-decorated types: a
    decoration in the concrete type must be consumed by a matching
    decoration in the pattern. This keeps the instantiation universe finite
    under the depth cap and keeps instantiations lifetime-free.
    """
    if binding is None:
        binding = {}
    if isinstance(pattern, Param):
        if isinstance(concrete, Deco):
            return None
        bound = binding.get(pattern.name)
        if bound is None:
            binding = dict(binding)
            binding[pattern.name] = concrete
            return binding
        return binding if bound == concrete else None
    if isinstance(pattern, Prim):
        return binding if concrete == pattern else None
    if isinstance(pattern, Con):
        if not isinstance(concrete, Con) or concrete.name != pattern.name:
            return None
        if len(concrete.args) != len(pattern.args):
            return None
        for ca, pa in zip(concrete.args, pattern.args):
            out = unify(ca, pa, binding)
            if out is None:
                return None
            binding = out
        return binding
    if isinstance(pattern, Deco):
        if not isinstance(concrete, Deco) or concrete.kind != pattern.kind:
            return None
        return unify(concrete.inner, pattern.inner, binding)
    raise TypeError(f"not a type expression: {pattern!r}")


# --------------------------------------------------------------------------
# Transformation rules bridging an available value to a needed type

BORROW_RULES = ("ref", "ref_mut", "ptr_const", "ptr_mut")
UNWRAP_RULES = ("unwrap_result", "unwrap_option")
RULE_ORDER = BORROW_RULES + UNWRAP_RULES

MAX_CHAIN = 2


def apply_rule(rule: str, t: TypeExpr) -> Optional[TypeExpr]:
    if rule in BORROW_RULES:
        return Deco(rule, t)
    if rule == "unwrap_result":
        if isinstance(t, Con) and t.name == "Result" and t.args:
            return t.args[0]
        return None
    if rule == "unwrap_option":
        if isinstance(t, Con) and t.name == "Option" and len(t.args) == 1:
            return t.args[0]
        return None
    raise ValueError(f"unknown transformation rule {rule!r}")


@lru_cache(maxsize=None)
def transform_chains(t: TypeExpr) -> tuple[tuple[tuple[str, ...], TypeExpr], ...]:
    """All ≤2-step rule chains applicable to ``t``, identity first."""
    out: list[tuple[tuple[str, ...], TypeExpr]] = [((), t)]
    frontier = [((), t)]
    for _ in range(MAX_CHAIN):
        nxt = []
        for chain, ty in frontier:
            for rule in RULE_ORDER:
                r = apply_rule(rule, ty)
                if r is not None:
                    nxt.append((chain + (rule,), r))
        out.extend(nxt)
        frontier = nxt
    return tuple(out)


def apply_transformations(
    available: TypeExpr, needed: TypeExpr
) -> list[tuple[tuple[str, ...], TypeExpr]]:
    """Every way to bridge ``available`` to a form unifiable with ``needed``.

    Each result records the rule chain so the synthesizer can emit the
    corresponding borrow/unwrap glue.
    """
    out = []
    for chain, ty in transform_chains(available):
        if unify(ty, needed) is not None:
            out.append((chain, ty))
    return out


def chain_consumes(chain: tuple[str, ...]) -> bool:
    """Whether feeding a value through this chain moves it (vs borrowing)."""
    return not chain or chain[0] in UNWRAP_RULES


# --------------------------------------------------------------------------
# Match and substitution


def _binding_to_solution(binding: dict, owner: ApiSignature) -> MonoSolution:
    return MonoSolution(tuple(binding.get(p, TOP) for p in owner.type_params))


def match_type(
    concrete: TypeExpr, generic_arg: TypeExpr, owner: ApiSignature
) -> Optional[MonoSolution]:
    """Match one available concrete type against one generic argument.

    Returns a solution binding the parameters the argument determines (all
    others TOP), or None if no rule chain bridges the two. The shortest
    chain wins; ties go to rule order.
    """
    for chain, ty in transform_chains(concrete):
        binding = unify(ty, generic_arg)
        if binding is not None:
            return _binding_to_solution(binding, owner)
    return None


def match_solutions(
    concrete: TypeExpr, generic_arg: TypeExpr, owner: ApiSignature
) -> list[MonoSolution]:
    """All distinct solutions obtainable across rule chains (search needs
    every one: different chains can bind a parameter differently)."""
    seen = []
    for chain, ty in transform_chains(concrete):
        binding = unify(ty, generic_arg)
        if binding is not None:
            s = _binding_to_solution(binding, owner)
            if s not in seen:
                seen.append(s)
    return seen


class IncompleteSolutionError(Exception):
    """A substitution needed a parameter the solution leaves as TOP."""


def substitute(s: MonoSolution, t: TypeExpr, owner: ApiSignature) -> TypeExpr:
    """Replace each parameter reference in ``t`` with its assigned type."""
    index = {p: i for i, p in enumerate(owner.type_params)}
    if s.arity != len(owner.type_params):
        raise ValueError(
            f"solution arity {s.arity} != {owner.api_id} parameter count {len(owner.type_params)}"
        )

    def go(node: TypeExpr) -> TypeExpr:
        if isinstance(node, Param):
            slot = s.slots[index[node.name]]
            if isinstance(slot, Top):
                raise IncompleteSolutionError(
                    f"parameter {node.name} of {owner.api_id} is unresolved (⊤) in {s.text()}"
                )
            return slot
        if isinstance(node, Con):
            return Con(node.name, tuple(go(a) for a in node.args))
        if isinstance(node, Deco):
            return Deco(node.kind, go(node.inner))
        return node

    return go(t)


def materialize(owner: ApiSignature, s: MonoSolution) -> ApiSignature:
    """Fully concrete signature for one solution of a generic API."""
    if not s.is_concrete():
        raise IncompleteSolutionError(f"cannot materialize {owner.api_id} at {s.text()}")
    return ApiSignature(
        api_id=owner.api_id,
        name=owner.name,
        type_params=(),
        bounds=(),
        inputs=tuple(substitute(s, t, owner) for t in owner.inputs),
        output=None if owner.output is None else substitute(s, owner.output, owner),
        origin=owner.origin,
    )
