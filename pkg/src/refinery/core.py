"""Typed finite universe: value types, slots, bindings, operations, tables, reports.

Values are opaque symbols (strings) ordered by declaration.  Relations are
stored as frozensets of value tuples ("rows") aligned with a slot layout;
:class:`Binding` is the named view used for witnesses and public results.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "Binding",
    "CheckReport",
    "FiniteType",
    "FunctionTable",
    "ModelError",
    "Operation",
    "Slot",
    "SlotKind",
    "eval_function",
    "make_finite_type",
    "make_operation",
]

Row = tuple[str, ...]


class ModelError(ValueError):
    """Raised when a model object violates its typing invariants."""


class SlotKind(enum.Enum):
    STATE = "state"
    INPUT = "input"
    PRIMED = "primed"
    OUTPUT = "output"


# canonical layout order; the (state, input) prefix of a row is its pre-part
_KIND_ORDER = {SlotKind.STATE: 0, SlotKind.INPUT: 1, SlotKind.PRIMED: 2, SlotKind.OUTPUT: 3}
_DECORATION = {SlotKind.STATE: "", SlotKind.INPUT: "?", SlotKind.PRIMED: "'", SlotKind.OUTPUT: "!"}


@dataclass(frozen=True)
class FiniteType:
    name: str
    values: tuple[str, ...]

    def __post_init__(self):
        if not self.values:
            raise ModelError(f"type {self.name} has no values")
        seen = set()
        for v in self.values:
            if v in seen:
                raise ModelError(f"type {self.name}: duplicate value {v}")
            seen.add(v)

    def __iter__(self) -> Iterator[str]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, value) -> bool:
        return value in self.values

    def index(self, value: str) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise ModelError(f"{value} is not a value of type {self.name}") from None

    def issubset(self, other: FiniteType) -> bool:
        return set(self.values) <= set(other.values)


def make_finite_type(name: str, values: Iterable[str]) -> FiniteType:
    return FiniteType(name, tuple(values))


@dataclass(frozen=True)
class Slot:
    """A named, typed position in a schema signature.

    ``name`` is the undecorated base name; ``label`` adds the Z decoration
    (``a!``, ``q?``, ``b'``).
    """

    name: str
    kind: SlotKind
    type: FiniteType

    @property
    def label(self) -> str:
        return self.name + _DECORATION[self.kind]

    def with_kind(self, kind: SlotKind) -> Slot:
        return Slot(self.name, kind, self.type)

    def __repr__(self):
        return f"{self.label}:{self.type.name}"


def canonical_slots(slots: Iterable[Slot]) -> tuple[Slot, ...]:
    """Stable-sort slots into state, input, primed, output order."""
    return tuple(sorted(slots, key=lambda s: _KIND_ORDER[s.kind]))


def check_signature(slots: Sequence[Slot]) -> None:
    labels = [s.label for s in slots]
    dup = {l for l in labels if labels.count(l) > 1}
    if dup:
        raise ModelError(f"duplicate slot(s): {', '.join(sorted(dup))}")
    states = {s.name: s for s in slots if s.kind is SlotKind.STATE}
    primed = {s.name: s for s in slots if s.kind is SlotKind.PRIMED}
    if states.keys() != primed.keys():
        odd = sorted(states.keys() ^ primed.keys())
        raise ModelError(f"unpaired state slot(s): {', '.join(odd)}")
    for name, s in states.items():
        # the after-state may live in a subtype (b: BigData, b': StructuredData)
        if not primed[name].type.issubset(s.type):
            raise ModelError(
                f"slot {name}': type {primed[name].type.name} is not included in {s.type.name}"
            )


class Binding(Mapping[str, str]):
    """An immutable assignment of values to slot labels, in slot order."""

    __slots__ = ("_items",)

    def __init__(self, items: Iterable[tuple[str, str]] | Mapping[str, str] = ()):
        if isinstance(items, Mapping):
            items = items.items()
        self._items = tuple((str(k), str(v)) for k, v in items)

    @classmethod
    def of(cls, slots: Sequence[Slot], row: Sequence[str]) -> Binding:
        return cls(zip((s.label for s in slots), row))

    def __getitem__(self, key):
        for k, v in self._items:
            if k == key:
                return v
        raise KeyError(key)

    def __iter__(self):
        return (k for k, _ in self._items)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        return hash(frozenset(self._items))

    def __eq__(self, other):
        if isinstance(other, Mapping):
            return dict(self._items) == dict(other.items())
        return NotImplemented

    def __repr__(self):
        return "{" + ", ".join(f"{k}={v}" for k, v in self._items) + "}"


def row_key(slots: Sequence[Slot], row: Row) -> tuple[int, ...]:
    return tuple(s.type.index(v) for s, v in zip(slots, row))


def all_rows(slots: Sequence[Slot]) -> Iterator[Row]:
    """Every well-typed row over ``slots``, in value-index order."""
    return itertools.product(*(s.type.values for s in slots))


def _coerce_row(slots: Sequence[Slot], item, what: str) -> Row:
    if isinstance(item, Mapping):
        keyed = {}
        for k, v in item.items():
            keyed[k.label if isinstance(k, Slot) else k] = v
        missing = [s.label for s in slots if s.label not in keyed]
        if missing:
            raise ModelError(f"{what}: binding misses slot(s) {', '.join(missing)}")
        extra = sorted(set(keyed) - {s.label for s in slots})
        if extra:
            raise ModelError(f"{what}: binding names unknown slot(s) {', '.join(extra)}")
        row = tuple(keyed[s.label] for s in slots)
    else:
        row = tuple(item)
        if len(row) != len(slots):
            raise ModelError(f"{what}: row {row} has wrong arity for {len(slots)} slots")
    for s, v in zip(slots, row):
        if v not in s.type:
            raise ModelError(f"{what}: {s.label}={v} is not a value of {s.type.name}")
    return row


class SlotLayout:
    """Slot-kind accessors for anything with a canonical ``slots`` tuple."""

    slots: tuple[Slot, ...]

    def _of(self, kind):
        return tuple(s for s in self.slots if s.kind is kind)

    @property
    def state(self) -> tuple[Slot, ...]:
        return self._of(SlotKind.STATE)

    @property
    def inputs(self) -> tuple[Slot, ...]:
        return self._of(SlotKind.INPUT)

    @property
    def primed(self) -> tuple[Slot, ...]:
        return self._of(SlotKind.PRIMED)

    @property
    def outputs(self) -> tuple[Slot, ...]:
        return self._of(SlotKind.OUTPUT)

    @property
    def pre_slots(self) -> tuple[Slot, ...]:
        return self.state + self.inputs

    @property
    def post_slots(self) -> tuple[Slot, ...]:
        return self.primed + self.outputs

    @property
    def n_pre(self) -> int:
        return len(self.state) + len(self.inputs)


@dataclass(frozen=True)
class Operation(SlotLayout):
    """A finite relation over (state, inputs) -> (state', outputs).

    ``slots`` is in canonical kind order, so every row splits into a pre-part
    (state and inputs) followed by a post-part (after-state and outputs).
    """

    name: str
    slots: tuple[Slot, ...]
    transitions: frozenset[Row]

    def rows(self) -> list[Row]:
        """Transitions sorted by value indices (deterministic enumeration)."""
        return sorted(self.transitions, key=lambda r: row_key(self.slots, r))

    def bindings(self) -> list[Binding]:
        return [Binding.of(self.slots, r) for r in self.rows()]

    def split(self, row: Row) -> tuple[Row, Row, Row]:
        """Split a row into (pre, after-state, outputs)."""
        n, m = self.n_pre, len(self.primed)
        return row[:n], row[n : n + m], row[n + m :]

    def successors(self) -> dict[Row, list[Row]]:
        """Map each pre-row to its post-rows, both sorted."""
        out: dict[Row, list[Row]] = {}
        n = self.n_pre
        for r in self.rows():
            out.setdefault(r[:n], []).append(r[n:])
        return out

    def same_relation(self, other: Operation) -> bool:
        return self.slots == other.slots and self.transitions == other.transitions

    def renamed(self, name: str) -> Operation:
        return Operation(name, self.slots, self.transitions)


def make_operation(name: str, slots: Iterable[Slot], transitions: Iterable = ()) -> Operation:
    """Build a validated operation.

    ``transitions`` items are mappings (slot label or :class:`Slot` to value)
    or value tuples already in canonical slot order.
    """
    slots = canonical_slots(slots)
    check_signature(slots)
    rows = frozenset(_coerce_row(slots, t, f"operation {name}") for t in transitions)
    return Operation(name, slots, rows)


@dataclass(frozen=True)
class FunctionTable:
    name: str
    domain: FiniteType
    codomain: FiniteType
    entries: Mapping[str, str] = field(hash=False)

    def __post_init__(self):
        missing = [v for v in self.domain if v not in self.entries]
        if missing:
            raise ModelError(f"function {self.name} undefined at {', '.join(missing)}")
        for k, v in self.entries.items():
            if k not in self.domain:
                raise ModelError(f"function {self.name}: {k} is outside {self.domain.name}")
            if v not in self.codomain:
                raise ModelError(f"function {self.name}: image {v} is outside {self.codomain.name}")
        object.__setattr__(self, "entries", dict(self.entries))

    def __call__(self, arg: str) -> str:
        return eval_function(self, arg)


def eval_function(table: FunctionTable, arg: str) -> str:
    if arg not in table.domain:
        raise ModelError(f"{table.name}: argument {arg} is outside {table.domain.name}")
    return table.entries[arg]


PASS, FAIL = "pass", "fail"


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one checker run.

    ``details`` carries checker-specific extras (a found transformer,
    sub-verdicts) and is rendered only when nonempty.
    """

    check: str
    verdict: str
    failed_condition: str | None = None
    witnesses: tuple[Binding, ...] = ()
    degree: Fraction | None = None
    details: Mapping[str, object] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.verdict not in (PASS, FAIL):
            raise ModelError(f"bad verdict {self.verdict!r}")
        if self.verdict == FAIL and self.failed_condition is None:
            raise ModelError("a failing report must name its failed condition")
        if self.degree is not None and not 0 <= self.degree <= 1:
            raise ModelError(f"degree {self.degree} outside [0, 1]")
        object.__setattr__(self, "witnesses", tuple(self.witnesses))

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    @classmethod
    def ok(cls, check: str, **kw) -> CheckReport:
        return cls(check, PASS, **kw)

    @classmethod
    def fail(cls, check: str, condition: str, witnesses: Iterable[Binding] = (), **kw) -> CheckReport:
        return cls(check, FAIL, condition, tuple(witnesses), **kw)
