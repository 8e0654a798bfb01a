"""Permissive trait-bounds checking against corpus impl records.

The checker is deliberately one-sided: it refutes a bound only when the
corpus positively rules every candidate out. Whenever information is
missing — the trait has no impl records at all, its impls were denylisted,
or the recursion fuel runs out before the verdict — the bound is *assumed*
to hold. Assumed outcomes are counted so a run can report how many
accepted instantiations rest on guesses rather than proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .corpus import (
    ApiSignature,
    Con,
    Corpus,
    Deco,
    Param,
    TraitImplRecord,
    TraitRef,
    TypeExpr,
    contains_param,
    type_text,
)
from .lattice import MonoSolution, substitute, unify

HOLDS = "holds"
FAILS = "fails"
ASSUMED = "assumed"

VALID = "valid"
INVALID = "invalid"
ASSUMED_VALID = "assumed-valid"

DEFAULT_FUEL = 4


@dataclass(frozen=True)
class BoundCheck:
    status: str  # HOLDS | FAILS | ASSUMED
    impl_id: Optional[str] = None


@dataclass
class BoundsStats:
    checked: int = 0
    valid: int = 0
    invalid: int = 0
    assumed: int = 0

    def as_dict(self) -> dict:
        return {
            "bounds_checked": self.checked,
            "valid": self.valid,
            "invalid": self.invalid,
            "assumed": self.assumed,
        }


@dataclass
class ImplIndex:
    by_trait: dict[str, list[TraitImplRecord]]
    known_traits: frozenset[str]
    denylist: frozenset[str]
    memo: dict = field(default_factory=dict)
    stats: BoundsStats = field(default_factory=BoundsStats)
    use_memo: bool = True


def build_impl_index(corpus: Corpus) -> ImplIndex:
    by_trait: dict[str, list[TraitImplRecord]] = {}
    for r in corpus.impls:
        by_trait.setdefault(r.trait.name, []).append(r)
    return ImplIndex(
        by_trait=by_trait,
        known_traits=frozenset(d.name for d in corpus.traits),
        denylist=frozenset(corpus.trait_denylist),
    )


def _subst_binding(t: TypeExpr, binding: dict) -> TypeExpr:
    if isinstance(t, Param):
        return binding.get(t.name, t)
    if isinstance(t, Con):
        return Con(t.name, tuple(_subst_binding(a, binding) for a in t.args))
    if isinstance(t, Deco):
        return Deco(t.kind, _subst_binding(t.inner, binding))
    return t


def _unify_trait(args: tuple[TypeExpr, ...], query: tuple[TypeExpr, ...], binding: dict) -> Optional[dict]:
    if len(args) != len(query):
        return None
    for pat, q in zip(args, query):
        # Impl-side trait args are patterns; the query side is concrete.
        out = unify(q, _subst_binding(pat, binding), None)
        if out is None:
            return None
        binding = {**binding, **out}
    return binding


def holds(t: TypeExpr, tr: TraitRef, idx: ImplIndex, fuel: int = DEFAULT_FUEL) -> BoundCheck:
    """Does concrete type ``t`` implement ``tr``, as far as the corpus shows?"""
    if contains_param(t):
        raise ValueError(f"holds() needs a concrete type, got {type_text(t)}")
    key = (t, tr, fuel)
    if idx.use_memo and key in idx.memo:
        return idx.memo[key]
    result = _holds_uncached(t, tr, idx, fuel)
    if idx.use_memo:
        idx.memo[key] = result
    return result


def _holds_uncached(t: TypeExpr, tr: TraitRef, idx: ImplIndex, fuel: int) -> BoundCheck:
    if tr.name in idx.denylist or tr.name not in idx.known_traits:
        return BoundCheck(ASSUMED)
    candidates = idx.by_trait.get(tr.name, [])
    if not candidates:
        # The corpus knows the trait but records no implementation of it:
        # no information, so stay permissive.
        return BoundCheck(ASSUMED)
    if fuel <= 0:
        return BoundCheck(ASSUMED)

    any_assumed = False
    for record in candidates:
        binding = unify(t, record.subject, None)
        if binding is None:
            continue
        binding = _unify_trait(record.trait.args, tr.args, binding)
        if binding is None:
            continue
        verdict = HOLDS
        for cond in record.conditions:
            subj = _subst_binding(cond.subject, binding)
            cond_tr = TraitRef(cond.trait.name, tuple(_subst_binding(a, binding) for a in cond.trait.args))
            if contains_param(subj) or any(contains_param(a) for a in cond_tr.args):
                # Impl parameter left unconstrained by the query: cannot decide.
                verdict = ASSUMED
                continue
            sub = holds(subj, cond_tr, idx, fuel - 1)
            if sub.status == FAILS:
                verdict = FAILS
                break
            if sub.status == ASSUMED:
                verdict = ASSUMED
        if verdict == HOLDS:
            return BoundCheck(HOLDS, record.impl_id)
        if verdict == ASSUMED:
            any_assumed = True
    return BoundCheck(ASSUMED) if any_assumed else BoundCheck(FAILS)


def satisfies_bounds(
    s: MonoSolution, api: ApiSignature, idx: ImplIndex, fuel: int = DEFAULT_FUEL
) -> str:
    """Conjoin holds() over the API's bounds under solution ``s``.

    Returns VALID, INVALID, or ASSUMED_VALID (some conjunct assumed, none
    refuted). Raises if a bound mentions a parameter ``s`` leaves as TOP.
    """
    idx.stats.checked += 1
    outcome = VALID
    for bound in api.bounds:
        subj = substitute(s, bound.subject, api)
        tr = TraitRef(bound.trait.name, tuple(substitute(s, a, api) for a in bound.trait.args))
        check = holds(subj, tr, idx, fuel)
        if check.status == FAILS:
            idx.stats.invalid += 1
            return INVALID
        if check.status == ASSUMED:
            outcome = ASSUMED_VALID
    if outcome == VALID:
        idx.stats.valid += 1
    else:
        idx.stats.assumed += 1
    return outcome


def bound_impl_ids(
    s: MonoSolution, api: ApiSignature, idx: ImplIndex, fuel: int = DEFAULT_FUEL
) -> set[str]:
    """Impl ids justifying each bound of ``api`` under ``s``.

    Assumed bounds contribute a synthetic per-(trait, type) token so that
    permissively accepted solutions keep distinct identities.
    """
    ids: set[str] = set()
    for bound in api.bounds:
        subj = substitute(s, bound.subject, api)
        tr = TraitRef(bound.trait.name, tuple(substitute(s, a, api) for a in bound.trait.args))
        check = holds(subj, tr, idx, fuel)
        if check.status == HOLDS and check.impl_id is not None:
            ids.add(check.impl_id)
        elif check.status == ASSUMED:
            ids.add(f"assumed:{tr.text()}:{type_text(subj)}")
    return ids
