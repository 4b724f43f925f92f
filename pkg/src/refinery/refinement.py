"""Output refinement, transformer search, output abstraction, downward simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from refinery import _kernels
from refinery.calculus import (
    IOTransformer,
    is_output_transformer,
    pipe,
    pre_rows,
    transformer_properties,
)
from refinery.core import (
    Binding,
    CheckReport,
    FiniteType,
    ModelError,
    Operation,
    Row,
    Slot,
    SlotKind,
    all_rows,
    row_key,
)

__all__ = [
    "DataType",
    "RefinementError",
    "RetrieveRelation",
    "SearchBudgetExhausted",
    "add_exhaust",
    "check_downward_simulation",
    "check_output_abstraction",
    "check_output_refinement",
    "extend_unconstrained",
    "make_datatype",
    "make_retrieve",
    "search_output_transformer",
]

DEFAULT_BUDGET = 1_000_000


class RefinementError(ModelError):
    """The two sides of a check are not comparable (slot or type mismatch)."""


class SearchBudgetExhausted(RuntimeError):
    """The candidate budget ran out before the search space was exhausted.

    This is an "unknown" outcome, not a proof that no transformer exists.
    """

    def __init__(self, examined: int, total: int):
        self.examined = examined
        self.total = total
        super().__init__(f"budget exhausted after {examined} of {total} candidates")


def _sig(slots: Sequence[Slot]):
    return [(s.label, s.type) for s in slots]


def _same_frame(aop: Operation, cop: Operation) -> None:
    if _sig(aop.state) != _sig(cop.state):
        raise RefinementError(
            f"state-slot mismatch: {aop.name} has {list(aop.state)}, {cop.name} has {list(cop.state)}"
        )
    if _sig(aop.inputs) != _sig(cop.inputs):
        raise RefinementError(
            f"input-slot mismatch: {aop.name} has {list(aop.inputs)}, {cop.name} has {list(cop.inputs)}"
        )


def _permutation(src: Sequence[Slot], dst: Sequence[Slot]) -> list[int] | None:
    """Positions in ``src`` for each slot of ``dst`` matched by label and type."""
    pos = {(s.label, s.type): k for k, s in enumerate(src)}
    try:
        perm = [pos[(s.label, s.type)] for s in dst]
    except KeyError:
        return None
    return perm if len(src) == len(dst) else None


# --- plain output refinement ------------------------------------------------


def check_output_refinement(aop: Operation, cop: Operation, ot: IOTransformer) -> CheckReport:
    """Check that ``cop`` output-refines ``aop`` through transformer ``ot``.

    Conditions are tried in order: transformer shape, totality, injectivity,
    applicability, correctness.  The report names the first one violated.
    """
    check = "check-output"
    _same_frame(aop, cop)
    out_perm = _permutation(ot.outputs, [s.with_kind(SlotKind.OUTPUT) for s in cop.outputs])
    if not is_output_transformer(ot, aop) or out_perm is None:
        return CheckReport.fail(check, "output-transformer")

    fwd: dict[Row, list[Row]] = {}
    back: dict[Row, list[Row]] = {}
    for i, o in ot.rows():
        fwd.setdefault(i, []).append(o)
        back.setdefault(o, []).append(i)
    missing = [Binding.of(ot.inputs, i) for i in all_rows(ot.inputs) if i not in fwd]
    if missing:
        return CheckReport.fail(check, "totality", missing)
    for o, ins in back.items():
        if len(ins) > 1:
            return CheckReport.fail(
                check, "injectivity", [Binding.of(ot.slots, i + o) for i in ins[:2]]
            )

    apre, cpre = pre_rows(aop), pre_rows(cop)
    gaps = sorted(apre - cpre, key=lambda r: row_key(aop.pre_slots, r))
    if gaps:
        return CheckReport.fail(check, "applicability", [Binding.of(aop.pre_slots, r) for r in gaps])

    piped = pipe(aop, ot)
    n = cop.n_pre + len(cop.primed)
    allowed = {r[:n] + tuple(r[n + k] for k in out_perm) for r in piped.transitions}
    bad = [r for r in cop.rows() if r[: cop.n_pre] in apre and r not in allowed]
    if bad:
        return CheckReport.fail(check, "correctness", [Binding.of(cop.slots, r) for r in bad])
    return CheckReport.ok(check)


# --- transformer search -----------------------------------------------------


@dataclass(frozen=True)
class _Problem:
    ins: tuple[Slot, ...]
    outs: tuple[Slot, ...]
    pairs: list[tuple[Row, Row]]
    row_masks: list[int]
    col_masks: list[int]
    need_masks: list[int]
    kmin: int
    kmax: int

    @property
    def total(self) -> int:
        n = len(self.pairs)
        return sum(math.comb(n, k) for k in range(self.kmin, self.kmax + 1))

    def transformer(self, name: str, mask: int) -> IOTransformer:
        chosen = frozenset(p for k, p in enumerate(self.pairs) if mask >> k & 1)
        return IOTransformer(name, self.ins, self.outs, chosen)


def _search_problem(aop: Operation, cop: Operation) -> _Problem | None:
    """Encode the search as bitmasks, or return None if no candidate can pass."""
    _same_frame(aop, cop)
    if [s.label for s in aop.primed] != [s.label for s in cop.primed]:
        raise RefinementError(f"after-state mismatch between {aop.name} and {cop.name}")
    if not pre_rows(aop) <= pre_rows(cop):
        return None
    ins = tuple(s.with_kind(SlotKind.INPUT) for s in aop.outputs)
    outs = tuple(cop.outputs)
    in_rows, out_rows = list(all_rows(ins)), list(all_rows(outs))
    in_ix = {r: k for k, r in enumerate(in_rows)}
    out_ix = {r: k for k, r in enumerate(out_rows)}
    width = len(out_rows)
    pairs = [(i, o) for i in in_rows for o in out_rows]

    def bit(i: Row, o: Row) -> int:
        return 1 << (in_ix[i] * width + out_ix[o])

    row_masks = [((1 << width) - 1) << (k * width) for k in range(len(in_rows))]
    col_masks = [sum(1 << (k * width + j) for k in range(len(in_rows))) for j in range(width)]

    n = aop.n_pre + len(aop.primed)
    heads: dict[Row, list[Row]] = {}
    for r in aop.transitions:
        heads.setdefault(r[:n], []).append(r[n:])
    apre = pre_rows(aop)
    need_masks = set()
    for r in cop.transitions:
        if r[: cop.n_pre] not in apre:
            continue
        m = 0
        for o in heads.get(r[:n], ()):
            m |= bit(o, r[n:])
        if not m:
            return None
        need_masks.add(m)
    # a total injective relation has between |inputs| and |outputs| pairs
    kmin, kmax = len(in_rows), min(width, len(pairs))
    return _Problem(
        ins, outs, pairs, row_masks, col_masks, sorted(need_masks), kmin, max(kmax, kmin - 1)
    )


def search_output_transformer(
    aop: Operation, cop: Operation, budget: int = DEFAULT_BUDGET, *, name: str | None = None
) -> IOTransformer | None:
    """Find the first transformer under which ``cop`` output-refines ``aop``.

    Candidates are relations from ``aop``'s output tuples to ``cop``'s,
    ordered by size and then lexicographically by pair index.  Returns None
    when the space is exhausted without success (a proof of non-refinability)
    and raises :class:`SearchBudgetExhausted` when ``budget`` candidates were
    examined without reaching the end.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    prob = _search_problem(aop, cop)
    if prob is None:
        return None
    status, mask, examined = _kernels.first_passing(
        len(prob.pairs), prob.row_masks, prob.col_masks, prob.need_masks, budget, prob.kmin, prob.kmax
    )
    if status == _kernels.BUDGET:
        raise SearchBudgetExhausted(examined, prob.total)
    if status == _kernels.NONE:
        return None
    ot = prob.transformer(name or f"OT_{aop.name}_{cop.name}", mask)
    verdict = check_output_refinement(aop, cop, ot)
    if not verdict.passed:  # pragma: no cover - kernel/checker disagreement is a bug
        raise AssertionError(f"search returned a transformer failing {verdict.failed_condition}")
    return ot


def search_space_size(aop: Operation, cop: Operation) -> int:
    """Number of candidates an exhaustive search examines (0 if decided up front)."""
    prob = _search_problem(aop, cop)
    return 0 if prob is None else prob.total


def check_output_abstraction(
    abstract: Operation, concrete: Operation, budget: int = DEFAULT_BUDGET
) -> CheckReport:
    """Check that replacing ``concrete``'s outputs by ``abstract``'s is an output abstraction.

    That is, output refinement holds the other way round: some total
    injective transformer takes ``abstract``'s (information) outputs to
    ``concrete``'s (exhaust) outputs.  The witness is attached under
    ``details["transformer"]``.
    """
    check = "check-abstraction"
    ot = search_output_transformer(abstract, concrete, budget)
    if ot is None:
        if not pre_rows(abstract) <= pre_rows(concrete):
            gaps = sorted(
                pre_rows(abstract) - pre_rows(concrete), key=lambda r: row_key(abstract.pre_slots, r)
            )
            return CheckReport.fail(
                check, "applicability", [Binding.of(abstract.pre_slots, r) for r in gaps]
            )
        return CheckReport.fail(check, "no-transformer")
    return CheckReport.ok(check, details={"transformer": ot})


# --- exhaust helpers --------------------------------------------------------


def add_exhaust(op: Operation, name: str, type_: FiniteType) -> Operation:
    """Add a fresh output slot that may take any value (an unconnected wire)."""
    slot = Slot(name, SlotKind.OUTPUT, type_)
    rows = frozenset(r + (v,) for r in op.transitions for v in type_)
    return Operation(op.name, op.slots + (slot,), rows)


def extend_unconstrained(ot: IOTransformer, name: str, type_: FiniteType) -> IOTransformer:
    """Add an output slot to ``ot`` that is left unconstrained."""
    slot = Slot(name, SlotKind.OUTPUT, type_)
    pairs = frozenset((i, o + (v,)) for i, o in ot.pairs for v in type_)
    return IOTransformer(ot.name, ot.inputs, ot.outputs + (slot,), pairs)


# --- downward simulation ----------------------------------------------------


@dataclass(frozen=True)
class RetrieveRelation:
    name: str
    abstract: FiniteType
    concrete: FiniteType
    pairs: frozenset[tuple[str, str]]

    def __post_init__(self):
        for a, c in self.pairs:
            if a not in self.abstract or c not in self.concrete:
                raise ModelError(f"retrieve {self.name}: pair ({a}, {c}) is ill-typed")

    def rows(self) -> list[tuple[str, str]]:
        return sorted(self.pairs, key=lambda p: (self.abstract.index(p[0]), self.concrete.index(p[1])))


def make_retrieve(name: str, abstract: FiniteType, concrete: FiniteType, pairs: Iterable) -> RetrieveRelation:
    return RetrieveRelation(name, abstract, concrete, frozenset((a, c) for a, c in pairs))


@dataclass(frozen=True)
class DataType:
    """A state space, its initial states, and the operations over it.

    Operations carry exactly one state slot whose type includes ``state``;
    only their transitions from states in ``state`` are considered.
    """

    name: str
    state: FiniteType
    init: frozenset[str]
    ops: tuple[Operation, ...]

    def __post_init__(self):
        bad = sorted(v for v in self.init if v not in self.state)
        if bad:
            raise ModelError(f"datatype {self.name}: initial value(s) {', '.join(bad)} outside {self.state.name}")
        for op in self.ops:
            if len(op.state) != 1:
                raise ModelError(f"datatype {self.name}: operation {op.name} needs exactly one state slot")
            if not self.state.issubset(op.state[0].type):
                raise ModelError(
                    f"datatype {self.name}: {self.state.name} is not included in {op.name}'s state type"
                )
            for r in op.transitions:
                if r[0] in self.state and r[op.n_pre] not in self.state:
                    raise ModelError(
                        f"datatype {self.name}: {op.name} leaves {self.state.name} ({r[0]} -> {r[op.n_pre]})"
                    )


def make_datatype(name: str, state: FiniteType, ops: Iterable[Operation], init: Iterable[str] | None = None) -> DataType:
    """Build a data type; ``init=None`` makes every state initial."""
    return DataType(name, state, frozenset(state.values if init is None else init), tuple(ops))


def _steps(op: Operation, space: FiniteType) -> dict[tuple[str, Row], list[tuple[str, Row]]]:
    """(state, inputs) -> sorted [(state', outputs)], restricted to ``space``."""
    out: dict[tuple[str, Row], list[tuple[str, Row]]] = {}
    n = op.n_pre
    for r in op.rows():
        if r[0] in space:
            out.setdefault((r[0], r[1:n]), []).append((r[n], r[n + 1 :]))
    return out


def _sim_witness(ins: Sequence[Slot], a: str, c: str, i: Row = (), tail: dict | None = None) -> Binding:
    items = [("abstract", a), ("concrete", c)] + [(s.label, v) for s, v in zip(ins, i)]
    return Binding(items + list((tail or {}).items()))


def check_downward_simulation(adt: DataType, cdt: DataType, r: RetrieveRelation) -> CheckReport:
    """Downward simulation with retrieve relation ``r``: init, applicability, correctness."""
    check = "check-data"
    if r.abstract != adt.state or r.concrete != cdt.state:
        raise RefinementError(
            f"retrieve {r.name} relates {r.abstract.name} to {r.concrete.name}, "
            f"not {adt.state.name} to {cdt.state.name}"
        )
    if len(adt.ops) != len(cdt.ops):
        raise RefinementError(f"{adt.name} and {cdt.name} have different numbers of operations")

    bad_init = [
        Binding([("concrete", c)])
        for c in cdt.state
        if c in cdt.init and not any((a, c) in r.pairs for a in adt.init)
    ]
    if bad_init:
        return CheckReport.fail(check, "initialization", bad_init)

    for aop, cop in zip(adt.ops, cdt.ops):
        if _sig(aop.inputs) != _sig(cop.inputs) or _sig(aop.outputs) != _sig(cop.outputs):
            raise RefinementError(f"{aop.name} and {cop.name} differ in inputs or outputs")
        astep, cstep = _steps(aop, adt.state), _steps(cop, cdt.state)
        in_rows = list(all_rows(aop.inputs))
        detail = {"operations": f"{aop.name} / {cop.name}"}

        gaps = [
            _sim_witness(aop.inputs, a, c, i)
            for a, c in r.rows()
            for i in in_rows
            if (a, i) in astep and (c, i) not in cstep
        ]
        if gaps:
            return CheckReport.fail(check, "applicability", gaps, details=detail)

        bad = []
        for a, c in r.rows():
            for i in in_rows:
                if (a, i) not in astep:
                    continue
                for c2, o in cstep.get((c, i), ()):
                    if not any(o2 == o and (a2, c2) in r.pairs for a2, o2 in astep[(a, i)]):
                        tail = {cop.state[0].label + "'": c2}
                        tail.update((s.label, v) for s, v in zip(cop.outputs, o))
                        bad.append(_sim_witness(aop.inputs, a, c, i, tail))
        if bad:
            return CheckReport.fail(check, "correctness", bad, details=detail)
    return CheckReport.ok(check)
