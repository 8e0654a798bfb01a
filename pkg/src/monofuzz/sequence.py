"""Valid call-sequence construction over the reserved API instances.

Every reserved instance gets one dedicated sequence whose final call is
that instance; earlier calls produce whatever its inputs need. An input is
fed either straight from the fuzzer (a primitive slot, possibly borrowed)
or from the output of an earlier call, possibly through a borrow/unwrap
chain. Values are single-move: once an output is consumed by value it is
not handed to a second consumer, so the rendered code never uses a moved
local.

Construction is demand-driven and deterministic: producers are chosen by
preferring a value already in the sequence, then the producer with the
fewest unmet inputs, then instance-id order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .corpus import Deco, Prim, TypeExpr, type_text
from .lattice import apply_transformations, chain_consumes
from .prune import ApiInstance, ReservedSet
from .search import is_primitive


@dataclass(frozen=True)
class PrimitiveSlot:
    """Input decoded from the fuzz buffer; ``chain`` is the glue applied to
    the decoded value (e.g. a borrow)."""

    slot: int
    prim: str
    chain: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValueFrom:
    """Input taken from an earlier call's output through ``chain``."""

    call_index: int
    chain: tuple[str, ...] = ()


Binding = Union[PrimitiveSlot, ValueFrom]


@dataclass(frozen=True)
class Call:
    instance_id: str
    bindings: tuple[Binding, ...]


@dataclass
class ApiSequence:
    seq_id: str
    target: str
    calls: list[Call]
    slots: list[tuple[int, str]]  # (slot index, primitive name), buffer order

    def instance_ids(self) -> set[str]:
        return {c.instance_id for c in self.calls}


@dataclass
class SequenceLimits:
    max_sequences: int = 300
    max_seq_len: int = 8
    require_mono: bool = True


@dataclass
class SequenceReport:
    dropped_over_cap: list[str] = field(default_factory=list)
    dropped_no_mono: list[str] = field(default_factory=list)
    unreachable: list[tuple[str, str]] = field(default_factory=list)  # (target, missing input)


class _Unbuildable(Exception):
    def __init__(self, needed: TypeExpr):
        self.needed = needed
        super().__init__(type_text(needed))


def _prim_chain(needed: TypeExpr) -> Optional[tuple[str, tuple[str, ...]]]:
    """Chain feeding ``needed`` directly from one fuzzer primitive, if any."""
    core = needed
    while isinstance(core, Deco):
        core = core.inner
    if not isinstance(core, Prim):
        return None
    options = apply_transformations(core, needed)
    if not options:
        return None
    return core.name, options[0][0]


class _Builder:
    def __init__(self, instances: dict[str, ApiInstance], max_len: int):
        self.instances = instances
        self.max_len = max_len
        self.calls: list[Call] = []
        self.outputs: list[tuple[int, TypeExpr, bool]] = []  # (call idx, type, consumed)
        self.slots: list[tuple[int, str]] = []
        self.building: set[str] = set()

    def bind_input(self, needed: TypeExpr) -> Binding:
        pc = _prim_chain(needed)
        if pc is not None:
            name, chain = pc
            slot = len(self.slots)
            self.slots.append((slot, name))
            return PrimitiveSlot(slot, name, chain)
        # Reuse a value already in the sequence when one bridges.
        for i, (idx, ty, consumed) in enumerate(self.outputs):
            if consumed:
                continue
            options = apply_transformations(ty, needed)
            if options:
                chain = options[0][0]
                if chain_consumes(chain):
                    self.outputs[i] = (idx, ty, True)
                return ValueFrom(idx, chain)
        producer = self._pick_producer(needed)
        if producer is None:
            raise _Unbuildable(needed)
        idx = self.emit(producer)
        out = producer.signature.output
        assert out is not None
        chain = apply_transformations(out, needed)[0][0]
        if chain_consumes(chain):
            for i, (j, ty, consumed) in enumerate(self.outputs):
                if j == idx and not consumed:
                    self.outputs[i] = (j, ty, True)
                    break
        return ValueFrom(idx, chain)

    def _unmet(self, inst: ApiInstance) -> int:
        avail = [ty for (_, ty, consumed) in self.outputs if not consumed]
        n = 0
        for t in inst.signature.inputs:
            if _prim_chain(t) is not None:
                continue
            if not any(apply_transformations(a, t) for a in avail):
                n += 1
        return n

    def _pick_producer(self, needed: TypeExpr) -> Optional[ApiInstance]:
        candidates = []
        for inst in self.instances.values():
            if inst.instance_id in self.building:
                continue  # cycle guard
            out = inst.signature.output
            if out is not None and apply_transformations(out, needed):
                candidates.append(inst)
        if not candidates:
            return None
        return min(candidates, key=lambda i: (self._unmet(i), i.instance_id))

    def emit(self, inst: ApiInstance) -> int:
        if len(self.calls) >= self.max_len:
            raise _Unbuildable(inst.signature.output or Prim("unit"))
        self.building.add(inst.instance_id)
        try:
            bindings = tuple(self.bind_input(t) for t in inst.signature.inputs)
        finally:
            self.building.discard(inst.instance_id)
        if len(self.calls) >= self.max_len:
            raise _Unbuildable(inst.signature.output or Prim("unit"))
        idx = len(self.calls)
        self.calls.append(Call(inst.instance_id, bindings))
        if inst.signature.output is not None:
            self.outputs.append((idx, inst.signature.output, False))
        return idx


def build_sequence(
    target: ApiInstance,
    instances: dict[str, ApiInstance],
    seq_id: str,
    max_len: int = 8,
) -> ApiSequence:
    """Shortest-effort sequence ending in ``target``; raises on failure."""
    b = _Builder(instances, max_len)
    b.emit(target)
    return ApiSequence(seq_id=seq_id, target=target.instance_id, calls=b.calls, slots=b.slots)


def generate_sequences(
    reserved: ReservedSet,
    limits: Optional[SequenceLimits] = None,
    seed: Optional[int] = None,
) -> tuple[list[ApiSequence], SequenceReport]:
    """One dedicated sequence per reserved instance, generic targets first,
    already-covered targets deferred, capped at ``limits.max_sequences``."""
    limits = limits or SequenceLimits()
    report = SequenceReport()
    instances = {i.instance_id: i for i in reserved.instances}

    mono_targets = [i for i in reserved.instances if i.is_mono]
    plain_targets = [i for i in reserved.instances if not i.is_mono]
    ordered = mono_targets + plain_targets

    sequences: list[ApiSequence] = []
    covered: set[str] = set()
    deferred: list[ApiInstance] = []

    def try_emit(target: ApiInstance) -> None:
        if len(sequences) >= limits.max_sequences:
            report.dropped_over_cap.append(target.instance_id)
            return
        try:
            seq = build_sequence(
                target, instances, f"seq_{len(sequences):04d}", limits.max_seq_len
            )
        except _Unbuildable as e:
            report.unreachable.append((target.instance_id, str(e)))
            return
        if limits.require_mono and not any(
            instances[c.instance_id].is_mono for c in seq.calls
        ):
            report.dropped_no_mono.append(target.instance_id)
            return
        sequences.append(seq)
        covered.update(seq.instance_ids())

    for target in ordered:
        if target.instance_id in covered:
            deferred.append(target)
        else:
            try_emit(target)
    for target in deferred:
        try_emit(target)
    return sequences, report


def validate_sequence(
    seq: ApiSequence, instances: dict[str, ApiInstance]
) -> tuple[bool, str]:
    """Re-check reachability and binding structure call by call."""
    slot_types: dict[int, str] = {}
    for i, call in enumerate(seq.calls):
        inst = instances.get(call.instance_id)
        if inst is None:
            return False, f"call {i}: unknown instance {call.instance_id}"
        if len(call.bindings) != len(inst.signature.inputs):
            return False, f"call {i}: {len(call.bindings)} bindings for {len(inst.signature.inputs)} inputs"
        for pos, (binding, needed) in enumerate(zip(call.bindings, inst.signature.inputs)):
            if isinstance(binding, PrimitiveSlot):
                got = _chase_chain(Prim(binding.prim), binding.chain)
                if got != needed:
                    return False, (
                        f"call {i} input {pos}: slot of {binding.prim} yields "
                        f"{type_text(got) if got else '?'}, needs {type_text(needed)}"
                    )
                if binding.slot in slot_types:
                    return False, f"call {i} input {pos}: slot {binding.slot} reused"
                slot_types[binding.slot] = binding.prim
            elif isinstance(binding, ValueFrom):
                if binding.call_index >= i:
                    return False, f"call {i} input {pos}: value from later call {binding.call_index}"
                src = instances[seq.calls[binding.call_index].instance_id]
                if src.signature.output is None:
                    return False, f"call {i} input {pos}: source call has no output"
                got = _chase_chain(src.signature.output, binding.chain)
                if got != needed:
                    return False, (
                        f"call {i} input {pos}: chain yields "
                        f"{type_text(got) if got else '?'}, needs {type_text(needed)}"
                    )
            else:
                return False, f"call {i} input {pos}: unknown binding {binding!r}"
        # Reachability re-check independent of the recorded bindings.
        for pos, needed in enumerate(inst.signature.inputs):
            ok = is_primitive(needed) or _prim_chain(needed) is not None
            if not ok:
                for j in range(i):
                    out = instances[seq.calls[j].instance_id].signature.output
                    if out is not None and apply_transformations(out, needed):
                        ok = True
                        break
            if not ok:
                return False, f"call {i} input {pos}: {type_text(needed)} not producible from prefix"
    return True, ""


def _chase_chain(t: TypeExpr, chain: tuple[str, ...]) -> Optional[TypeExpr]:
    from .lattice import apply_rule

    cur: Optional[TypeExpr] = t
    for rule in chain:
        if cur is None:
            return None
        cur = apply_rule(rule, cur)
    return cur


def sequences_to_json(seqs: list[ApiSequence]) -> list[dict]:
    out = []
    for s in seqs:
        out.append(
            {
                "id": s.seq_id,
                "target": s.target,
                "slots": [{"slot": i, "prim": p} for i, p in s.slots],
                "calls": [
                    {
                        "instance": c.instance_id,
                        "bindings": [
                            {"kind": "slot", "slot": b.slot, "prim": b.prim, "chain": list(b.chain)}
                            if isinstance(b, PrimitiveSlot)
                            else {"kind": "value", "from": b.call_index, "chain": list(b.chain)}
                            for b in c.bindings
                        ],
                    }
                    for c in s.calls
                ],
            }
        )
    return out
