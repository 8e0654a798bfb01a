"""Shared fixtures, a random corpus generator, and an independent
brute-force reference engine.

The reference engine never matches or merges solution tuples: it enumerates
every concrete tuple over the depth-capped type universe, filters by its
own tiny bounds check, and iterates plain input-availability reachability
to a fixpoint. It re-implements bridging and substitution locally so the
production code path is not trusted anywhere.
"""

from __future__ import annotations

import itertools
import random

from monofuzz.corpus import Con, Corpus, Deco, Param, Prim, TypeExpr, load_corpus, type_depth

# --------------------------------------------------------------------------
# Hand-built fixture documents


def example_library_doc() -> dict:
    """Small library: two concrete producers, two generic consumers."""
    return {
        "types": [
            {"name": "Ty1", "arity": 0},
            {"name": "Ty2", "arity": 0},
            {"name": "Vec", "arity": 1},
        ],
        "traits": [],
        "impls": [],
        "apis": [
            {"id": "f1", "name": "f1", "inputs": [], "output": {"con": "Ty1"}},
            {"id": "f2", "name": "f2", "inputs": [], "output": {"con": "Ty2"}},
            {"id": "f3", "name": "f3", "generics": ["T"], "inputs": [{"param": "T"}], "output": None},
            {
                "id": "f4",
                "name": "f4",
                "generics": ["T"],
                "inputs": [{"param": "T"}],
                "output": {"con": "Vec", "args": [{"param": "T"}]},
            },
        ],
        "primitives": [],
        "trait_denylist": [],
    }


def example_library() -> Corpus:
    return load_corpus(example_library_doc(), prelude=False)


def conversion_library() -> Corpus:
    """map_vec over the prelude's From impls."""
    return load_corpus(
        {
            "apis": [
                {
                    "id": "map_vec",
                    "name": "map_vec",
                    "generics": ["T", "U"],
                    "bounds": [
                        {"subject": {"param": "U"}, "trait": {"name": "From", "args": [{"param": "T"}]}}
                    ],
                    "inputs": [{"con": "Vec", "args": [{"param": "T"}]}],
                    "output": {"con": "Vec", "args": [{"param": "U"}]},
                }
            ]
        },
        prelude=True,
    )


def cascade_library() -> Corpus:
    """Three generic arguments whose union/merge cascade pins one solution."""
    return load_corpus(
        {
            "types": [{"name": "Vec", "arity": 1}, {"name": "Box", "arity": 1}],
            "traits": [],
            "impls": [],
            "apis": [
                {"id": "g1", "name": "g1", "inputs": [], "output": {"con": "Vec", "args": [{"prim": "u8"}]}},
                {"id": "g2", "name": "g2", "inputs": [], "output": {"con": "Box", "args": [{"prim": "i32"}]}},
                {
                    "id": "conv3",
                    "name": "conv3",
                    "generics": ["T", "U"],
                    "inputs": [
                        {"con": "Vec", "args": [{"param": "T"}]},
                        {"param": "T"},
                        {"con": "Box", "args": [{"param": "U"}]},
                    ],
                    "output": None,
                },
            ],
            "primitives": ["u8", "i32"],
            "trait_denylist": [],
        },
        prelude=False,
    )


# --------------------------------------------------------------------------
# Random corpora for the oracle-equivalence suite

_ATOM_NAMES = ["Alpha", "Beta", "Gamma"]
_CON_NAMES = ["Wrap", "Holder"]
_TRAIT_NAMES = ["TrA", "TrB"]
_PRIMS = ["u8", "i32"]


def random_corpus(seed: int) -> tuple[Corpus, int]:
    """A small random library plus a depth cap; decoration-free, every type
    parameter used in at least one input, impls concrete and condition-free."""
    rng = random.Random(seed)
    max_depth = rng.choice([1, 2, 2])

    atoms = _ATOM_NAMES[: rng.randint(1, 3)]
    cons = _CON_NAMES[: rng.randint(0, 2)]
    types = [{"name": n, "arity": 0} for n in atoms] + [{"name": n, "arity": 1} for n in cons]
    traits = _TRAIT_NAMES[: rng.randint(0, 2)]

    def concrete_type(depth: int) -> dict:
        if depth <= 1 or not cons or rng.random() < 0.5:
            pick = rng.random()
            if pick < 0.4:
                return {"prim": rng.choice(_PRIMS)}
            return {"con": rng.choice(atoms)}
        return {"con": rng.choice(cons), "args": [concrete_type(depth - 1)]}

    impls = []
    impl_n = 0
    for trait in traits:
        for subj in atoms + _PRIMS:
            if rng.random() < 0.5:
                node = {"prim": subj} if subj in _PRIMS else {"con": subj}
                impls.append(
                    {
                        "impl_id": f"impl_{impl_n}",
                        "subject": node,
                        "trait": {"name": trait},
                    }
                )
                impl_n += 1

    apis = []
    n_apis = rng.randint(2, 6)
    n_generic = rng.randint(1, max(1, n_apis - 1))
    for i in range(n_apis):
        if i < n_generic:
            params = ["T", "U"][: rng.randint(1, 2)]
            inputs = []
            for p in params:
                if cons and rng.random() < 0.45:
                    inputs.append({"con": rng.choice(cons), "args": [{"param": p}]})
                else:
                    inputs.append({"param": p})
            if rng.random() < 0.4:
                inputs.append(concrete_type(max_depth))
            rng.shuffle(inputs)
            bounds = []
            if traits:
                for p in params:
                    if rng.random() < 0.5:
                        bounds.append(
                            {"subject": {"param": p}, "trait": {"name": rng.choice(traits)}}
                        )
            output = None
            roll = rng.random()
            if roll < 0.45 and cons:
                output = {"con": rng.choice(cons), "args": [{"param": rng.choice(params)}]}
            elif roll < 0.75:
                output = concrete_type(max_depth)
            apis.append(
                {
                    "id": f"api_{i}",
                    "name": f"api_{i}",
                    "generics": params,
                    "bounds": bounds,
                    "inputs": inputs,
                    "output": output,
                }
            )
        else:
            inputs = [concrete_type(max_depth) for _ in range(rng.randint(0, 2))]
            output = concrete_type(max_depth) if rng.random() < 0.85 else None
            apis.append({"id": f"api_{i}", "name": f"api_{i}", "inputs": inputs, "output": output})

    doc = {
        "types": types,
        "traits": [{"name": t} for t in traits],
        "impls": impls,
        "apis": apis,
        "primitives": _PRIMS,
        "trait_denylist": [],
    }
    return load_corpus(doc, prelude=False), max_depth


# --------------------------------------------------------------------------
# Independent reference engine


def type_universe(corpus: Corpus, max_depth: int) -> list[TypeExpr]:
    """Every decoration-free concrete type over the declared constructors
    and primitives, nesting capped at max_depth."""
    base: list[TypeExpr] = [Prim(p) for p in corpus.primitives]
    base += [Con(d.name) for d in corpus.types if d.arity == 0]
    layers = [list(base)]
    for _ in range(max_depth - 1):
        prev = [t for layer in layers for t in layer]
        nxt = []
        for d in corpus.types:
            if d.arity == 0:
                continue
            for combo in itertools.product(prev, repeat=d.arity):
                t = Con(d.name, combo)
                if type_depth(t) <= max_depth and all(t != u for layer in layers for u in layer):
                    nxt.append(t)
        if not nxt:
            break
        layers.append(nxt)
    seen = []
    for layer in layers:
        for t in layer:
            if t not in seen:
                seen.append(t)
    return seen


def _subst(t: TypeExpr, env: dict) -> TypeExpr:
    if isinstance(t, Param):
        return env[t.name]
    if isinstance(t, Con):
        return Con(t.name, tuple(_subst(a, env) for a in t.args))
    if isinstance(t, Deco):
        return Deco(t.kind, _subst(t.inner, env))
    return t


def _bridge_steps(t: TypeExpr) -> list[TypeExpr]:
    out = [Deco(k, t) for k in ("ref", "ref_mut", "ptr_const", "ptr_mut")]
    if isinstance(t, Con) and t.name == "Result" and t.args:
        out.append(t.args[0])
    if isinstance(t, Con) and t.name == "Option" and len(t.args) == 1:
        out.append(t.args[0])
    return out


def bridges(available: TypeExpr, needed: TypeExpr) -> bool:
    """Re-derivation of the two-step borrow/unwrap reachability relation."""
    if available == needed:
        return True
    for one in _bridge_steps(available):
        if one == needed:
            return True
        for two in _bridge_steps(one):
            if two == needed:
                return True
    return False


def oracle_bounds_ok(corpus: Corpus, api, env: dict) -> bool:
    """Condition-free closed-world bound check: a bound passes if its trait
    has a matching concrete impl, or has no impls at all (permissive)."""
    for bound in api.bounds:
        subj = _subst(bound.subject, env)
        candidates = [r for r in corpus.impls if r.trait.name == bound.trait.name]
        if not candidates:
            continue
        want_args = tuple(_subst(a, env) for a in bound.trait.args)
        if not any(r.subject == subj and r.trait.args == want_args for r in candidates):
            return False
    return True


def brute_force_reference(corpus: Corpus, max_depth: int):
    """Reachability fixpoint by exhaustive tuple enumeration.

    Returns (solutions per generic api id as a set of slot tuples,
    producible type set).
    """
    universe = type_universe(corpus, max_depth)
    avail: list[TypeExpr] = [Prim(p) for p in corpus.primitives]
    solutions: dict[str, set[tuple]] = {a.api_id: set() for a in corpus.apis if a.is_generic}

    def available(needed: TypeExpr) -> bool:
        return any(bridges(a, needed) for a in avail)

    def register(t) -> bool:
        if t is None or t in avail:
            return False
        if type_depth(t) > max_depth:
            return False
        avail.append(t)
        return True

    changed = True
    while changed:
        changed = False
        for api in corpus.apis:
            if api.is_generic:
                for combo in itertools.product(universe, repeat=len(api.type_params)):
                    if combo in solutions[api.api_id]:
                        continue
                    env = dict(zip(api.type_params, combo))
                    if not oracle_bounds_ok(corpus, api, env):
                        continue
                    if all(available(_subst(t, env)) for t in api.inputs):
                        solutions[api.api_id].add(combo)
                        if api.output is not None:
                            changed |= register(_subst(api.output, env))
                        changed = True
            else:
                if all(available(t) for t in api.inputs):
                    changed |= register(api.output)
    return solutions, avail
