"""Canonical data model for a library's API surface.

A corpus file describes everything the pipeline needs to know about a
library: its type constructors, traits, trait implementations, and API
signatures (generic or not), plus the set of primitives a fuzzer can feed
directly and a denylist of traits whose implementations are noise.

The bundled prelude corpus contributes container constructors
(``Vec``/``Box``/``Option``/``Result``) and the lossless numeric ``From``
conversions, standing in for the standard-library surface a documentation
extractor would not see.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Union


class CorpusError(Exception):
    """Raised when a corpus document is malformed.

    ``path`` points into the offending document node, e.g. ``apis[3].inputs[0]``.
    """

    def __init__(self, message: str, path: str = "$"):
        self.path = path
        super().__init__(f"{path}: {message}")


# --------------------------------------------------------------------------
# Type expressions


@dataclass(frozen=True)
class TypeExpr:
    """Base class for type terms. Concrete variants below."""

    def walk(self) -> Iterator["TypeExpr"]:
        yield self


@dataclass(frozen=True)
class Prim(TypeExpr):
    name: str


@dataclass(frozen=True)
class Con(TypeExpr):
    """Named type constructor application, e.g. ``Vec<Ty1>`` or bare ``Ty1``."""

    name: str
    args: tuple[TypeExpr, ...] = ()

    def walk(self) -> Iterator[TypeExpr]:
        yield self
        for a in self.args:
            yield from a.walk()


@dataclass(frozen=True)
class Param(TypeExpr):
    """Reference to a type parameter; only legal inside generic signatures
    and impl patterns."""

    name: str


# Decoration kinds: shared borrow, exclusive borrow, const/mut raw address.
DECO_KINDS = ("ref", "ref_mut", "ptr_const", "ptr_mut")


@dataclass(frozen=True)
class Deco(TypeExpr):
    kind: str
    inner: TypeExpr

    def __post_init__(self):
        if self.kind not in DECO_KINDS:
            raise ValueError(f"unknown decoration kind {self.kind!r}")

    def walk(self) -> Iterator[TypeExpr]:
        yield self
        yield from self.inner.walk()


def contains_param(t: TypeExpr) -> bool:
    return any(isinstance(n, Param) for n in t.walk())


def params_in(t: TypeExpr) -> list[str]:
    """Parameter names in ``t``, in first-occurrence order."""
    seen: list[str] = []
    for n in t.walk():
        if isinstance(n, Param) and n.name not in seen:
            seen.append(n.name)
    return seen


def type_depth(t: TypeExpr) -> int:
    """Maximum constructor nesting of a concrete type.

    Primitives and bare named types have depth 1; decorations are free.
    """
    if isinstance(t, Prim):
        return 1
    if isinstance(t, Con):
        return 1 + max((type_depth(a) for a in t.args), default=0)
    if isinstance(t, Deco):
        return type_depth(t.inner)
    raise ValueError(f"type parameter {t!r} has no depth; caller passed a non-concrete type")


_DECO_TEXT = {"ref": "&{0}", "ref_mut": "&mut {0}", "ptr_const": "*const {0}", "ptr_mut": "*mut {0}"}


def type_text(t: TypeExpr) -> str:
    """Render a type term as source-style text, e.g. ``Vec<Ty1>`` or ``&mut i32``."""
    if isinstance(t, Prim):
        return {"bytes": "&[u8]", "str": "&str"}.get(t.name, t.name)
    if isinstance(t, Con):
        if not t.args:
            return t.name
        return f"{t.name}<{', '.join(type_text(a) for a in t.args)}>"
    if isinstance(t, Param):
        return t.name
    if isinstance(t, Deco):
        return _DECO_TEXT[t.kind].format(type_text(t.inner))
    raise TypeError(f"not a type expression: {t!r}")


def type_key(t: TypeExpr) -> str:
    """Stable sort key for deterministic orderings."""
    return type_text(t)


# --------------------------------------------------------------------------
# Traits, bounds, signatures, impls


@dataclass(frozen=True)
class TraitRef:
    name: str
    args: tuple[TypeExpr, ...] = ()

    def text(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}<{', '.join(type_text(a) for a in self.args)}>"


@dataclass(frozen=True)
class TraitBound:
    subject: TypeExpr
    trait: TraitRef

    def text(self) -> str:
        return f"{type_text(self.subject)}: {self.trait.text()}"


@dataclass(frozen=True)
class ApiSignature:
    api_id: str
    name: str
    type_params: tuple[str, ...] = ()
    bounds: tuple[TraitBound, ...] = ()
    inputs: tuple[TypeExpr, ...] = ()
    output: Optional[TypeExpr] = None
    origin: str = "library"

    @property
    def is_generic(self) -> bool:
        return bool(self.type_params)

    def generic_inputs(self) -> list[tuple[int, TypeExpr]]:
        return [(i, t) for i, t in enumerate(self.inputs) if contains_param(t)]


@dataclass(frozen=True)
class TraitImplRecord:
    """One trait implementation: ``subject`` implements ``trait`` when all
    ``conditions`` hold. Records sharing an ``impl_id`` denote the identical
    implementation body (blanket or shared default method)."""

    impl_id: str
    subject: TypeExpr
    trait: TraitRef
    conditions: tuple[TraitBound, ...] = ()
    provenance: str = "explicit"


@dataclass(frozen=True)
class TypeDecl:
    name: str
    arity: int = 0


@dataclass(frozen=True)
class TraitDecl:
    name: str
    arity: int = 0


# Values a fuzzer can feed directly from its byte buffer.
DEFAULT_PRIMITIVES = (
    "i8", "i16", "i32", "i64",
    "u8", "u16", "u32", "u64",
    "f32", "f64", "bool", "char",
    "bytes", "str",
)

DEFAULT_TRAIT_DENYLIST = ("Debug", "Display")


@dataclass(frozen=True)
class Corpus:
    types: tuple[TypeDecl, ...]
    traits: tuple[TraitDecl, ...]
    impls: tuple[TraitImplRecord, ...]
    apis: tuple[ApiSignature, ...]
    primitives: tuple[str, ...] = DEFAULT_PRIMITIVES
    trait_denylist: tuple[str, ...] = DEFAULT_TRAIT_DENYLIST

    def api(self, api_id: str) -> ApiSignature:
        for a in self.apis:
            if a.api_id == api_id:
                return a
        raise KeyError(api_id)

    def type_arity(self, name: str) -> int:
        for d in self.types:
            if d.name == name:
                return d.arity
        raise KeyError(name)

    def trait_arity(self, name: str) -> int:
        for d in self.traits:
            if d.name == name:
                return d.arity
        raise KeyError(name)


# --------------------------------------------------------------------------
# JSON (de)serialization

Document = Mapping[str, object]


def type_from_json(node: object, path: str) -> TypeExpr:
    if not isinstance(node, dict):
        raise CorpusError(f"expected a type object, got {node!r}", path)
    if "prim" in node:
        name = node["prim"]
        if not isinstance(name, str):
            raise CorpusError("prim name must be a string", path)
        return Prim(name)
    if "con" in node:
        name = node["con"]
        if not isinstance(name, str):
            raise CorpusError("constructor name must be a string", path)
        args = node.get("args", [])
        if not isinstance(args, list):
            raise CorpusError("args must be a list", path)
        return Con(name, tuple(type_from_json(a, f"{path}.args[{i}]") for i, a in enumerate(args)))
    if "param" in node:
        name = node["param"]
        if not isinstance(name, str):
            raise CorpusError("param name must be a string", path)
        return Param(name)
    if "deco" in node:
        kind = node["deco"]
        if kind not in DECO_KINDS:
            raise CorpusError(f"unknown decoration {kind!r}", path)
        if "inner" not in node:
            raise CorpusError("decoration missing inner type", path)
        return Deco(kind, type_from_json(node["inner"], f"{path}.inner"))
    raise CorpusError(f"unrecognized type encoding {node!r}", path)


def type_to_json(t: TypeExpr) -> dict:
    if isinstance(t, Prim):
        return {"prim": t.name}
    if isinstance(t, Con):
        return {"con": t.name, "args": [type_to_json(a) for a in t.args]}
    if isinstance(t, Param):
        return {"param": t.name}
    if isinstance(t, Deco):
        return {"deco": t.kind, "inner": type_to_json(t.inner)}
    raise TypeError(f"not a type expression: {t!r}")


def _trait_ref_from_json(node: object, path: str) -> TraitRef:
    if not isinstance(node, dict) or "name" not in node:
        raise CorpusError(f"expected a trait reference, got {node!r}", path)
    args = node.get("args", [])
    if not isinstance(args, list):
        raise CorpusError("trait args must be a list", path)
    return TraitRef(
        str(node["name"]),
        tuple(type_from_json(a, f"{path}.args[{i}]") for i, a in enumerate(args)),
    )


def _bound_from_json(node: object, path: str) -> TraitBound:
    if not isinstance(node, dict) or "subject" not in node or "trait" not in node:
        raise CorpusError(f"expected a trait bound, got {node!r}", path)
    return TraitBound(
        type_from_json(node["subject"], f"{path}.subject"),
        _trait_ref_from_json(node["trait"], f"{path}.trait"),
    )


def trait_ref_to_json(tr: TraitRef) -> dict:
    return {"name": tr.name, "args": [type_to_json(a) for a in tr.args]}


def bound_to_json(b: TraitBound) -> dict:
    return {"subject": type_to_json(b.subject), "trait": trait_ref_to_json(b.trait)}


_TOP_KEYS = {"types", "traits", "impls", "apis", "primitives", "trait_denylist"}


def _parse_document(doc: Document) -> Corpus:
    if not isinstance(doc, dict):
        raise CorpusError("corpus document must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise CorpusError(f"unknown top-level keys {sorted(unknown)}")
    for key in _TOP_KEYS:
        if key in doc and not isinstance(doc[key], list):
            raise CorpusError("expected a list", key)

    types = []
    for i, node in enumerate(doc.get("types", [])):
        if not isinstance(node, dict) or "name" not in node:
            raise CorpusError("type declaration needs a name", f"types[{i}]")
        types.append(TypeDecl(str(node["name"]), int(node.get("arity", 0))))

    traits = []
    for i, node in enumerate(doc.get("traits", [])):
        if not isinstance(node, dict) or "name" not in node:
            raise CorpusError("trait declaration needs a name", f"traits[{i}]")
        traits.append(TraitDecl(str(node["name"]), int(node.get("arity", 0))))

    impls = []
    for i, node in enumerate(doc.get("impls", [])):
        path = f"impls[{i}]"
        if not isinstance(node, dict) or "impl_id" not in node:
            raise CorpusError("impl record needs an impl_id", path)
        impls.append(
            TraitImplRecord(
                impl_id=str(node["impl_id"]),
                subject=type_from_json(node.get("subject"), f"{path}.subject"),
                trait=_trait_ref_from_json(node.get("trait"), f"{path}.trait"),
                conditions=tuple(
                    _bound_from_json(c, f"{path}.conditions[{j}]")
                    for j, c in enumerate(node.get("conditions", []))
                ),
                provenance=str(node.get("provenance", "explicit")),
            )
        )

    apis = []
    for i, node in enumerate(doc.get("apis", [])):
        path = f"apis[{i}]"
        if not isinstance(node, dict) or "id" not in node:
            raise CorpusError("api signature needs an id", path)
        output = node.get("output")
        apis.append(
            ApiSignature(
                api_id=str(node["id"]),
                name=str(node.get("name", node["id"])),
                type_params=tuple(str(g) for g in node.get("generics", [])),
                bounds=tuple(
                    _bound_from_json(b, f"{path}.bounds[{j}]")
                    for j, b in enumerate(node.get("bounds", []))
                ),
                inputs=tuple(
                    type_from_json(x, f"{path}.inputs[{j}]")
                    for j, x in enumerate(node.get("inputs", []))
                ),
                output=None if output is None else type_from_json(output, f"{path}.output"),
                origin=str(node.get("origin", "library")),
            )
        )

    primitives = tuple(str(p) for p in doc.get("primitives", DEFAULT_PRIMITIVES))
    denylist = tuple(str(t) for t in doc.get("trait_denylist", DEFAULT_TRAIT_DENYLIST))
    return Corpus(tuple(types), tuple(traits), tuple(impls), tuple(apis), primitives, denylist)


def corpus_to_document(c: Corpus) -> dict:
    """Serialize back to the corpus file schema (round-trip safe)."""
    return {
        "types": [{"name": d.name, "arity": d.arity} for d in c.types],
        "traits": [{"name": d.name, "arity": d.arity} for d in c.traits],
        "impls": [
            {
                "impl_id": r.impl_id,
                "subject": type_to_json(r.subject),
                "trait": trait_ref_to_json(r.trait),
                "conditions": [bound_to_json(b) for b in r.conditions],
                "provenance": r.provenance,
            }
            for r in c.impls
        ],
        "apis": [
            {
                "id": a.api_id,
                "name": a.name,
                "generics": list(a.type_params),
                "bounds": [bound_to_json(b) for b in a.bounds],
                "inputs": [type_to_json(t) for t in a.inputs],
                "output": None if a.output is None else type_to_json(a.output),
                "origin": a.origin,
            }
            for a in c.apis
        ],
        "primitives": list(c.primitives),
        "trait_denylist": list(c.trait_denylist),
    }


# --------------------------------------------------------------------------
# Validation


def _check_type(
    t: TypeExpr,
    corpus: Corpus,
    path: str,
    allowed_params: Optional[Iterable[str]],
    used_params: Optional[set] = None,
) -> None:
    """Validate name references and parameter scoping of one type term."""
    if isinstance(t, Prim):
        if t.name not in corpus.primitives:
            raise CorpusError(f"primitive {t.name!r} not in the primitive set", path)
    elif isinstance(t, Con):
        try:
            arity = corpus.type_arity(t.name)
        except KeyError:
            raise CorpusError(f"dangling type name {t.name!r}", path) from None
        if arity != len(t.args):
            raise CorpusError(
                f"{t.name} expects {arity} argument(s), got {len(t.args)}", path
            )
        for i, a in enumerate(t.args):
            _check_type(a, corpus, f"{path}<{i}>", allowed_params, used_params)
    elif isinstance(t, Param):
        if allowed_params is None:
            raise CorpusError(f"type parameter {t.name!r} not allowed here", path)
        if t.name not in allowed_params:
            raise CorpusError(f"undeclared type parameter {t.name!r}", path)
        if used_params is not None:
            used_params.add(t.name)
    elif isinstance(t, Deco):
        _check_type(t.inner, corpus, f"{path}.inner", allowed_params, used_params)
    else:
        raise CorpusError(f"not a type expression: {t!r}", path)


def _check_trait_ref(tr: TraitRef, corpus: Corpus, path: str, allowed_params) -> None:
    try:
        arity = corpus.trait_arity(tr.name)
    except KeyError:
        raise CorpusError(f"dangling trait name {tr.name!r}", path) from None
    if arity != len(tr.args):
        raise CorpusError(f"{tr.name} expects {arity} argument(s), got {len(tr.args)}", path)
    for i, a in enumerate(tr.args):
        _check_type(a, corpus, f"{path}.args[{i}]", allowed_params)


def validate_corpus(c: Corpus) -> None:
    seen_types: set[str] = set()
    for i, d in enumerate(c.types):
        if d.name in seen_types:
            raise CorpusError(f"duplicate type declaration {d.name!r}", f"types[{i}]")
        seen_types.add(d.name)
    seen_traits: set[str] = set()
    for i, d in enumerate(c.traits):
        if d.name in seen_traits:
            raise CorpusError(f"duplicate trait declaration {d.name!r}", f"traits[{i}]")
        seen_traits.add(d.name)

    # Records may share an impl_id only when they denote one shared default
    # method body; everywhere else the id must be unique.
    seen_impls: set[str] = set()
    for i, r in enumerate(c.impls):
        path = f"impls[{i}]"
        if r.impl_id in seen_impls and r.provenance != "default-method":
            raise CorpusError(f"duplicate impl_id {r.impl_id!r}", path)
        seen_impls.add(r.impl_id)
        impl_params = params_in(r.subject)
        for b in r.conditions:
            impl_params.extend(p for p in params_in(b.subject) if p not in impl_params)
        _check_type(r.subject, c, f"{path}.subject", impl_params)
        _check_trait_ref(r.trait, c, f"{path}.trait", impl_params)
        for j, b in enumerate(r.conditions):
            _check_type(b.subject, c, f"{path}.conditions[{j}].subject", impl_params)
            _check_trait_ref(b.trait, c, f"{path}.conditions[{j}].trait", impl_params)

    seen_apis: set[str] = set()
    for i, a in enumerate(c.apis):
        path = f"apis[{i}]"
        if a.api_id in seen_apis:
            raise CorpusError(f"duplicate api id {a.api_id!r}", path)
        seen_apis.add(a.api_id)
        if len(set(a.type_params)) != len(a.type_params):
            raise CorpusError("duplicate type parameter names", path)
        allowed = a.type_params if a.is_generic else None
        used: set[str] = set()
        for j, t in enumerate(a.inputs):
            _check_type(t, c, f"{path}.inputs[{j}]", allowed, used)
        if a.output is not None:
            _check_type(a.output, c, f"{path}.output", allowed, used)
        for j, b in enumerate(a.bounds):
            bound_params: set[str] = set()
            _check_type(b.subject, c, f"{path}.bounds[{j}].subject", allowed, bound_params)
            _check_trait_ref(b.trait, c, f"{path}.bounds[{j}].trait", allowed)
            if not bound_params:
                raise CorpusError(
                    "bound subject mentions no type parameter of the api",
                    f"{path}.bounds[{j}].subject",
                )
            used |= bound_params


# --------------------------------------------------------------------------
# Prelude: container constructors + lossless numeric conversions


def _prim(n: str) -> dict:
    return {"prim": n}


def _from_impl(dst: str, src: str) -> dict:
    return {
        "impl_id": f"prelude::{dst}_from_{src}",
        "subject": _prim(dst),
        "trait": {"name": "From", "args": [_prim(src)]},
        "provenance": "explicit",
    }


# Lossless conversions mirroring the standard numeric From graph.
_FROM_PAIRS = [
    ("u8", ["u16", "u32", "u64", "i16", "i32", "i64", "f32", "f64", "char"]),
    ("u16", ["u32", "u64", "i32", "i64", "f32", "f64"]),
    ("u32", ["u64", "i64", "f64"]),
    ("i8", ["i16", "i32", "i64", "f32", "f64"]),
    ("i16", ["i32", "i64", "f32", "f64"]),
    ("i32", ["i64", "f64"]),
    ("f32", ["f64"]),
]


def prelude_document() -> dict:
    """The prelude corpus fragment, in corpus-file schema."""
    apis = [
        {
            "id": "prelude::vec_of",
            "name": "vec_of",
            "generics": ["T"],
            "inputs": [{"param": "T"}],
            "output": {"con": "Vec", "args": [{"param": "T"}]},
            "origin": "prelude",
        },
        {
            "id": "prelude::box_of",
            "name": "box_of",
            "generics": ["T"],
            "inputs": [{"param": "T"}],
            "output": {"con": "Box", "args": [{"param": "T"}]},
            "origin": "prelude",
        },
        {
            "id": "prelude::some_of",
            "name": "some_of",
            "generics": ["T"],
            "inputs": [{"param": "T"}],
            "output": {"con": "Option", "args": [{"param": "T"}]},
            "origin": "prelude",
        },
        {
            "id": "prelude::ok_of",
            "name": "ok_of",
            "generics": ["T", "E"],
            "inputs": [{"param": "T"}],
            "output": {"con": "Result", "args": [{"param": "T"}, {"param": "E"}]},
            "origin": "prelude",
        },
    ]
    impls = [_from_impl(dst, src) for src, dsts in _FROM_PAIRS for dst in dsts]
    return {
        "types": [
            {"name": "Vec", "arity": 1},
            {"name": "Box", "arity": 1},
            {"name": "Option", "arity": 1},
            {"name": "Result", "arity": 2},
        ],
        "traits": [{"name": "From", "arity": 1}],
        "impls": impls,
        "apis": apis,
    }


def _merge_prelude(doc: Document) -> dict:
    """Overlay the prelude under the library document; library entries win."""
    merged = {k: list(doc.get(k, [])) for k in ("types", "traits", "impls", "apis")}
    pre = prelude_document()
    have_types = {t.get("name") for t in merged["types"]}
    have_traits = {t.get("name") for t in merged["traits"]}
    have_impls = {r.get("impl_id") for r in merged["impls"]}
    have_apis = {a.get("id") for a in merged["apis"]}
    merged["types"] += [t for t in pre["types"] if t["name"] not in have_types]
    merged["traits"] += [t for t in pre["traits"] if t["name"] not in have_traits]
    merged["impls"] += [r for r in pre["impls"] if r["impl_id"] not in have_impls]
    merged["apis"] += [a for a in pre["apis"] if a["id"] not in have_apis]
    for key in ("primitives", "trait_denylist"):
        if key in doc:
            merged[key] = list(doc[key])  # type: ignore[index]
    return merged


# --------------------------------------------------------------------------
# Loading


def load_corpus(document: Document, *, prelude: bool = True) -> Corpus:
    """Parse, merge the prelude (unless disabled), validate, and filter.

    Impl records of denylisted traits are dropped: they describe shared
    machinery (formatting and the like) that says nothing about the
    library's behavior.
    """
    if prelude:
        document = _merge_prelude(document)
    corpus = _parse_document(document)
    validate_corpus(corpus)
    if corpus.trait_denylist:
        deny = set(corpus.trait_denylist)
        kept = tuple(r for r in corpus.impls if r.trait.name not in deny)
        if len(kept) != len(corpus.impls):
            corpus = Corpus(
                corpus.types, corpus.traits, kept, corpus.apis,
                corpus.primitives, corpus.trait_denylist,
            )
    return corpus


def load_corpus_file(path: Union[str, Path], *, prelude: bool = True) -> Corpus:
    raw = Path(path).read_text(encoding="utf-8")
    try:
        document = json.loads(raw)
    except json.JSONDecodeError as e:
        raise CorpusError(f"not valid JSON: {e}") from None
    return load_corpus(document, prelude=prelude)
