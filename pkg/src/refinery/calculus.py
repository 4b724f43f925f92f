"""Schema calculus: signatures, IO transformers, preconditions and piping."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from refinery.core import (
    Binding,
    ModelError,
    Operation,
    Row,
    Slot,
    SlotKind,
    all_rows,
    canonical_slots,
    check_signature,
    row_key,
)

__all__ = [
    "IOTransformer",
    "Signature",
    "TransformerProperties",
    "converse",
    "identity_transformer",
    "io_signatures",
    "is_output_transformer",
    "make_transformer",
    "pipe",
    "precondition",
    "signature_of",
    "transformer_properties",
]


@dataclass(frozen=True)
class Signature:
    slots: tuple[Slot, ...]

    def __post_init__(self):
        check_signature(self.slots)

    def _of(self, kind):
        return tuple(s for s in self.slots if s.kind is kind)

    @property
    def inputs(self):
        return self._of(SlotKind.INPUT)

    @property
    def outputs(self):
        return self._of(SlotKind.OUTPUT)

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.slots]


@dataclass(frozen=True)
class IOTransformer:
    """A relation with inputs and outputs only.

    ``pairs`` holds (input row, output row) tuples aligned with ``inputs`` and
    ``outputs`` respectively.
    """

    name: str
    inputs: tuple[Slot, ...]
    outputs: tuple[Slot, ...]
    pairs: frozenset[tuple[Row, Row]]

    def __post_init__(self):
        if any(s.kind is not SlotKind.INPUT for s in self.inputs) or any(
            s.kind is not SlotKind.OUTPUT for s in self.outputs
        ):
            raise ModelError(f"transformer {self.name} may only have input and output slots")
        check_signature(self.inputs + self.outputs)

    @property
    def slots(self) -> tuple[Slot, ...]:
        return self.inputs + self.outputs

    def rows(self) -> list[tuple[Row, Row]]:
        return sorted(
            self.pairs, key=lambda p: (row_key(self.inputs, p[0]), row_key(self.outputs, p[1]))
        )

    def bindings(self) -> list[Binding]:
        return [Binding.of(self.slots, i + o) for i, o in self.rows()]

    def image(self, inp: Row) -> list[Row]:
        return sorted((o for i, o in self.pairs if i == inp), key=lambda r: row_key(self.outputs, r))

    @functools.cached_property
    def properties(self) -> TransformerProperties:
        return transformer_properties(self)


def make_transformer(
    name: str, inputs: Sequence[Slot], outputs: Sequence[Slot], pairs: Iterable = ()
) -> IOTransformer:
    """Build a validated transformer.

    ``pairs`` items are ``(input_row, output_row)`` tuples or single mappings
    from slot labels to values covering every slot.
    """
    inputs, outputs = tuple(inputs), tuple(outputs)
    rows = set()
    for p in pairs:
        if isinstance(p, tuple) and len(p) == 2 and all(isinstance(x, tuple) for x in p):
            i, o = p
        else:
            b = dict(p)
            try:
                i = tuple(b.pop(s.label) for s in inputs)
                o = tuple(b.pop(s.label) for s in outputs)
            except KeyError as e:
                raise ModelError(f"transformer {name}: pair misses slot {e.args[0]}") from None
            if b:
                raise ModelError(f"transformer {name}: unknown slot(s) {', '.join(sorted(b))}")
        if len(i) != len(inputs) or len(o) != len(outputs):
            raise ModelError(f"transformer {name}: pair {i, o} has wrong arity")
        for s, v in zip(inputs + outputs, i + o):
            if v not in s.type:
                raise ModelError(f"transformer {name}: {s.label}={v} is not a value of {s.type.name}")
        rows.add((i, o))
    return IOTransformer(name, inputs, outputs, frozenset(rows))


def identity_transformer(name: str, slots: Sequence[Slot]) -> IOTransformer:
    """Copy each listed slot from input to the output of the same base name."""
    ins = tuple(s.with_kind(SlotKind.INPUT) for s in slots)
    outs = tuple(s.with_kind(SlotKind.OUTPUT) for s in slots)
    return IOTransformer(name, ins, outs, frozenset((r, r) for r in all_rows(ins)))


def signature_of(s: Operation | IOTransformer) -> Signature:
    return Signature(tuple(s.slots))


def io_signatures(s: Operation | IOTransformer) -> tuple[tuple[Slot, ...], tuple[Slot, ...]]:
    sig = signature_of(s)
    return sig.inputs, sig.outputs


def converse(t: IOTransformer) -> IOTransformer:
    ins = tuple(s.with_kind(SlotKind.INPUT) for s in t.outputs)
    outs = tuple(s.with_kind(SlotKind.OUTPUT) for s in t.inputs)
    return IOTransformer(t.name, ins, outs, frozenset((o, i) for i, o in t.pairs))


def _base(slots: Iterable[Slot]) -> dict[str, object]:
    return {s.name: s.type for s in slots}


def is_output_transformer(t: IOTransformer, s: Operation) -> bool:
    """True iff ``t``'s inputs are exactly ``s``'s outputs, by base name and type."""
    tin = [(x.name, x.type) for x in t.inputs]
    sout = [(x.name, x.type) for x in s.outputs]
    return len(tin) == len(set(tin)) and set(tin) == set(sout)


class TransformerProperties(NamedTuple):
    total: bool
    injective: bool
    functional: bool


def transformer_properties(t: IOTransformer) -> TransformerProperties:
    fwd: dict[Row, set[Row]] = {}
    back: dict[Row, set[Row]] = {}
    for i, o in t.pairs:
        fwd.setdefault(i, set()).add(o)
        back.setdefault(o, set()).add(i)
    total = all(i in fwd for i in all_rows(t.inputs))
    return TransformerProperties(
        total=total,
        injective=all(len(v) == 1 for v in back.values()),
        functional=all(len(v) == 1 for v in fwd.values()),
    )


def pre_rows(op: Operation) -> frozenset[Row]:
    n = op.n_pre
    return frozenset(r[:n] for r in op.transitions)


def precondition(op: Operation) -> frozenset[Binding]:
    """Bindings of (state, inputs) at which ``op`` has some outcome."""
    pre = op.pre_slots
    return frozenset(Binding.of(pre, r) for r in pre_rows(op))


def _align(t: IOTransformer, s: Operation) -> list[int]:
    # position in s's output part for each of t's inputs
    pos = {x.name: k for k, x in enumerate(s.outputs)}
    return [pos[x.name] for x in t.inputs]


def pipe(s: Operation, t: IOTransformer) -> Operation:
    """Post-compose ``s`` with output transformer ``t``, hiding the joined outputs."""
    if not is_output_transformer(t, s):
        raise ModelError(f"{t.name} is not an output transformer for {s.name}")
    align = _align(t, s)
    by_input: dict[Row, list[Row]] = {}
    for i, o in t.pairs:
        by_input.setdefault(i, []).append(o)
    n = s.n_pre + len(s.primed)
    rows = set()
    for r in s.transitions:
        head, out = r[:n], r[n:]
        for o in by_input.get(tuple(out[k] for k in align), ()):
            rows.add(head + o)
    slots = canonical_slots(s.pre_slots + s.primed + t.outputs)
    check_signature(slots)
    return Operation(f"{s.name}>>{t.name}", slots, frozenset(rows))
