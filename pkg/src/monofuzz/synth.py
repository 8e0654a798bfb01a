"""Driver rendering and pipeline orchestration.

Each sequence becomes one standalone driver source file whose entry point
receives a byte buffer. The buffer is cut into slots — fixed-width
little-endian numerics first, at most one trailing variable-length slice —
and a length guard rejects anything shorter than the budget. Generic calls
carry explicit type arguments; borrow/unwrap glue comes from the recorded
transformation chains.

Rendering is profile-driven so the pipeline core stays independent of the
emitted syntax. The default profile targets a Rust-style library with an
AFL-compatible stdin entry point and can inline a library stub, which keeps
fixture drivers compilable with a bare toolchain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .bounds import ASSUMED_VALID, build_impl_index
from .corpus import Corpus, CorpusError, load_corpus_file, type_text
from .graph import build_graph, graph_to_dot, graph_to_json
from .lattice import Top
from .prune import ApiInstance, run_prune, prune_to_json
from .search import run_search, catalog_to_json
from .sequence import (
    ApiSequence,
    PrimitiveSlot,
    SequenceLimits,
    generate_sequences,
    sequences_to_json,
    validate_sequence,
)

PRELUDE_SHIMS = """\
fn vec_of<T>(x: T) -> Vec<T> { vec![x] }
fn box_of<T>(x: T) -> Box<T> { Box::new(x) }
fn some_of<T>(x: T) -> Option<T> { Some(x) }
fn ok_of<T, E>(x: T) -> Result<T, E> { Ok(x) }
"""

_FIXED_WIDTH = {
    "i8": 1, "u8": 1, "bool": 1,
    "i16": 2, "u16": 2,
    "i32": 4, "u32": 4, "f32": 4, "char": 4,
    "i64": 8, "u64": 8, "f64": 8,
}
_VARIABLE = {"bytes", "str"}
_FIXED_SLICE_WIDTH = 16  # non-final slice slots get a fixed cut


@dataclass(frozen=True)
class RenderProfile:
    name: str = "rust-byte-buffer"
    extension: str = "rs"
    preamble: str = ""
    include_shims: bool = True

    def decode_expr(self, prim: str, offset: int, width) -> str:
        if prim == "u8":
            return f"data[{offset}]"
        if prim == "i8":
            return f"data[{offset}] as i8"
        if prim == "bool":
            return f"data[{offset}] & 1 == 1"
        if prim == "char":
            return (
                f"char::from_u32(u32::from_le_bytes(data[{offset}..{offset + 4}]"
                ".try_into().unwrap()) % 0xD800).unwrap_or('a')"
            )
        if prim in _FIXED_WIDTH:
            w = _FIXED_WIDTH[prim]
            return f"{prim}::from_le_bytes(data[{offset}..{offset + w}].try_into().unwrap())"
        if prim == "bytes":
            end = "" if width == "rest" else str(offset + width)
            return f"&data[{offset}..{end}]"
        if prim == "str":
            end = "" if width == "rest" else str(offset + width)
            return f'core::str::from_utf8(&data[{offset}..{end}]).unwrap_or("")'
        raise ValueError(f"no decoding rule for primitive {prim!r}")

    def check_source(self, text: str) -> list[str]:
        """Cheap well-formedness self-test: balanced delimiters outside
        literals, and a main entry point."""
        issues = []
        stack = []
        pairs = {")": "(", "]": "[", "}": "{"}
        i, in_str, in_char, in_comment = 0, False, False, False
        while i < len(text):
            ch = text[i]
            if in_comment:
                if ch == "\n":
                    in_comment = False
            elif in_str:
                if ch == "\\":
                    i += 1
                elif ch == '"':
                    in_str = False
            elif in_char:
                if ch == "\\":
                    i += 1
                elif ch == "'":
                    in_char = False
            elif ch == '"':
                in_str = True
            elif ch == "'" and i + 1 < len(text) and (text[i + 1] == "\\" or (i + 2 < len(text) and text[i + 2] == "'")):
                in_char = True
            elif ch == "/" and text[i : i + 2] == "//":
                in_comment = True
            elif ch in "([{":
                stack.append(ch)
            elif ch in ")]}":
                if not stack or stack[-1] != pairs[ch]:
                    issues.append(f"unbalanced {ch!r} at offset {i}")
                    break
                stack.pop()
            i += 1
        if stack:
            issues.append(f"unclosed {stack[-1]!r}")
        if "fn main(" not in text:
            issues.append("missing fn main")
        return issues


DEFAULT_PROFILE = RenderProfile()


@dataclass
class DriverArtifact:
    driver_id: str
    source_text: str
    byte_budget: int
    slot_layout: list[dict]  # {slot, prim, offset, width} with width int | "rest"
    target_api: str
    assumed_bounds: bool


def _layout_slots(slots: list[tuple[int, str]]) -> tuple[list[dict], int]:
    fixed = [(i, p) for i, p in slots if p in _FIXED_WIDTH]
    variable = [(i, p) for i, p in slots if p in _VARIABLE]
    unknown = [(i, p) for i, p in slots if p not in _FIXED_WIDTH and p not in _VARIABLE]
    if unknown:
        raise ValueError(f"no decoding rule for primitive {unknown[0][1]!r}")
    layout = []
    offset = 0
    for i, p in fixed:
        layout.append({"slot": i, "prim": p, "offset": offset, "width": _FIXED_WIDTH[p]})
        offset += _FIXED_WIDTH[p]
    for k, (i, p) in enumerate(variable):
        last = k == len(variable) - 1
        width = "rest" if last else _FIXED_SLICE_WIDTH
        layout.append({"slot": i, "prim": p, "offset": offset, "width": width})
        offset += 0 if last else _FIXED_SLICE_WIDTH
    return layout, offset


_GLUE = {
    "ref": "&{0}",
    "ref_mut": "&mut {0}",
    "ptr_const": "(&{0}) as *const _",
    "ptr_mut": "(&mut {0}) as *mut _",
    "unwrap_result": "(match {0} {{ Ok(v) => v, Err(_) => return }})",
    "unwrap_option": "(match {0} {{ Some(v) => v, None => return }})",
}


def _glue_expr(base: str, chain: tuple[str, ...]) -> str:
    expr = base
    for rule in chain:
        expr = _GLUE[rule].format(expr)
    return expr


def render_driver(
    seq: ApiSequence,
    instances: dict[str, ApiInstance],
    profile: RenderProfile = DEFAULT_PROFILE,
    driver_id: str = "driver_0000",
) -> DriverArtifact:
    """Render one sequence as a standalone driver source file."""
    if not seq.calls:
        raise ValueError("cannot render an empty sequence")
    layout, budget = _layout_slots(seq.slots)

    mut_locals: set[str] = set()
    for call in seq.calls:
        for b in call.bindings:
            first = b.chain[0] if b.chain else None
            if first in ("ref_mut", "ptr_mut"):
                name = f"slot_{b.slot}" if isinstance(b, PrimitiveSlot) else f"v{b.call_index}"
                mut_locals.add(name)

    body: list[str] = []
    if budget > 0:
        body.append(f"    if data.len() < {budget} {{")
        body.append("        return;")
        body.append("    }")
    for entry in layout:
        name = f"slot_{entry['slot']}"
        mut = "mut " if name in mut_locals else ""
        expr = profile.decode_expr(entry["prim"], entry["offset"], entry["width"])
        body.append(f"    let {mut}{name} = {expr};")

    assumed = False
    for i, call in enumerate(seq.calls):
        inst = instances[call.instance_id]
        assumed = assumed or inst.bounds_outcome == ASSUMED_VALID
        args = []
        for b in call.bindings:
            base = f"slot_{b.slot}" if isinstance(b, PrimitiveSlot) else f"v{b.call_index}"
            args.append(_glue_expr(base, b.chain))
        callee = inst.signature.name
        if inst.solution is not None:
            targs = ", ".join(
                type_text(s) for s in inst.solution.slots if not isinstance(s, Top)
            )
            callee = f"{callee}::<{targs}>"
        call_expr = f"{callee}({', '.join(args)})"
        if inst.signature.output is not None:
            name = f"v{i}"
            mut = "mut " if name in mut_locals else ""
            body.append(f"    let {mut}{name} = {call_expr};")
        else:
            body.append(f"    {call_expr};")

    parts = [
        "#![allow(unused_variables, unused_mut, unused_imports, dead_code, unused_parens)]",
        f"// {driver_id}: exercises {seq.target}",
        "",
    ]
    if profile.preamble:
        parts += [profile.preamble.rstrip(), ""]
    if profile.include_shims:
        parts += [PRELUDE_SHIMS.rstrip(), ""]
    parts += [
        "fn fuzz_target(data: &[u8]) {",
        *body,
        "}",
        "",
        "fn main() {",
        "    use std::io::Read;",
        "    let mut data = Vec::new();",
        "    if std::io::stdin().read_to_end(&mut data).is_err() {",
        "        return;",
        "    }",
        "    fuzz_target(&data);",
        "}",
        "",
    ]
    return DriverArtifact(
        driver_id=driver_id,
        source_text="\n".join(parts),
        byte_budget=budget,
        slot_layout=layout,
        target_api=seq.target,
        assumed_bounds=assumed,
    )


# --------------------------------------------------------------------------
# Run configuration and the end-to-end pipeline


@dataclass
class RunConfig:
    corpus_path: str
    output_dir: str
    max_depth: int = 2
    max_sequences: int = 300
    max_seq_len: int = 8
    seed: Optional[int] = None
    prelude: bool = True
    require_mono: bool = True
    bounds_fuel: int = 4

    def validate(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.max_sequences < 1:
            raise ValueError("max_sequences must be >= 1")
        if self.max_seq_len < 1:
            raise ValueError("max_seq_len must be >= 1")
        if self.bounds_fuel < 0:
            raise ValueError("bounds_fuel must be >= 0")

    def as_dict(self) -> dict:
        return {
            "corpus": str(self.corpus_path),
            "max_depth": self.max_depth,
            "max_sequences": self.max_sequences,
            "max_seq_len": self.max_seq_len,
            "seed": self.seed,
            "prelude": self.prelude,
            "require_mono": self.require_mono,
            "bounds_fuel": self.bounds_fuel,
        }


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


def _dump(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def emit_manifest(
    artifacts: list[DriverArtifact], cfg: RunConfig, statistics: dict, out_dir: Path
) -> Path:
    manifest = {
        "config": cfg.as_dict(),
        "drivers": [
            {
                "id": a.driver_id,
                "file": f"{a.driver_id}.rs",
                "target": a.target_api,
                "byte_budget": a.byte_budget,
                "slot_layout": a.slot_layout,
                "assumed_bounds": a.assumed_bounds,
            }
            for a in artifacts
        ],
        "statistics": statistics,
    }
    path = out_dir / "manifest.json"
    _dump(path, manifest)
    return path


@dataclass
class PipelineResult:
    corpus: Corpus
    graph: object = None
    catalog: object = None
    reserved: object = None
    sequences: Optional[list[ApiSequence]] = None
    artifacts: Optional[list[DriverArtifact]] = None
    statistics: Optional[dict] = None


def run_pipeline(
    cfg: RunConfig,
    profile: RenderProfile = DEFAULT_PROFILE,
    write_dot: bool = False,
    stop_after: str = "run",
) -> PipelineResult:
    """load -> graph -> search -> prune -> sequences -> render -> manifest.

    ``stop_after`` names the last stage to execute (``graph``, ``solve``,
    ``prune``, ``sequences``, ``synth``, or ``run``); each completed stage
    leaves its JSON dump in the output directory.
    """
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    try:
        corpus = load_corpus_file(cfg.corpus_path, prelude=cfg.prelude)
    except (CorpusError, OSError) as e:
        raise StageError("corpus", e) from e

    try:
        graph = build_graph(corpus)
        _dump(out / "graph.json", graph_to_json(graph))
        if write_dot:
            (out / "graph.dot").write_text(graph_to_dot(graph), encoding="utf-8")
    except Exception as e:
        raise StageError("graph", e) from e
    result = PipelineResult(corpus, graph)
    if stop_after == "graph":
        return result

    idx = build_impl_index(corpus)
    try:
        catalog = run_search(graph, corpus, cfg.max_depth, idx, cfg.bounds_fuel)
        _dump(out / "catalog.json", catalog_to_json(catalog))
    except Exception as e:
        raise StageError("search", e) from e
    result.catalog = catalog
    if stop_after == "solve":
        return result

    try:
        reserved = run_prune(graph, catalog, corpus, idx, cfg.bounds_fuel, cfg.seed)
        _dump(out / "prune.json", prune_to_json(reserved, catalog))
    except Exception as e:
        raise StageError("prune", e) from e
    result.reserved = reserved
    if stop_after == "prune":
        return result

    try:
        limits = SequenceLimits(cfg.max_sequences, cfg.max_seq_len, cfg.require_mono)
        sequences, seq_report = generate_sequences(reserved, limits, cfg.seed)
        instances = {i.instance_id: i for i in reserved.instances}
        for s in sequences:
            ok, reason = validate_sequence(s, instances)
            if not ok:
                raise RuntimeError(f"generated sequence {s.seq_id} invalid: {reason}")
        _dump(out / "sequences.json", sequences_to_json(sequences))
    except Exception as e:
        raise StageError("sequences", e) from e
    result.sequences = sequences
    if stop_after == "sequences":
        return result

    try:
        artifacts = []
        for i, s in enumerate(sequences):
            a = render_driver(s, instances, profile, f"driver_{i:04d}")
            (out / f"{a.driver_id}.{profile.extension}").write_text(
                a.source_text, encoding="utf-8"
            )
            artifacts.append(a)
        statistics = {
            "apis": len(corpus.apis),
            "nongeneric_apis": sum(1 for a in corpus.apis if not a.is_generic),
            "generic_apis": sum(1 for a in corpus.apis if a.is_generic),
            "mono_apis": catalog.mono_count(),
            "reserved_apis": len(reserved.instances),
            "reserved_mono_apis": reserved.mono_reserved(),
            "reduction_ratio": reserved.reduction_ratio(catalog.mono_count()),
            "sequences": len(sequences),
            "drivers": len(artifacts),
            "drivers_assumed_bounds": sum(1 for a in artifacts if a.assumed_bounds),
            "sequence_drops": {
                "over_cap": seq_report.dropped_over_cap,
                "no_mono": seq_report.dropped_no_mono,
                "unreachable": [list(u) for u in seq_report.unreachable],
            },
            "bounds": idx.stats.as_dict(),
            "search_rounds": catalog.rounds,
        }
        emit_manifest(artifacts, cfg, statistics, out)
    except Exception as e:
        raise StageError("synth", e) from e

    result.artifacts = artifacts
    result.statistics = statistics
    return result
