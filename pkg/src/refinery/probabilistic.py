"""Finite distributions with exact weights, demonic choice, and graded refinement.

A :class:`ProbOperation` maps each (state, inputs) row to a nonempty set of
distributions over (state', outputs) rows.  Probabilistic choice is
:func:`mix`; demonic choice is the set union :func:`demonic_join`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from refinery.calculus import pre_rows
from refinery.core import (
    Binding,
    CheckReport,
    ModelError,
    Operation,
    Row,
    Slot,
    SlotLayout,
    canonical_slots,
    check_signature,
    row_key,
)

__all__ = [
    "Distribution",
    "ProbOperation",
    "check_prob_refinement",
    "demonic_join",
    "format_fraction",
    "make_prob_operation",
    "mix",
    "mix_sets",
    "point",
    "refinement_degree",
    "support_lift",
]


def as_fraction(p) -> Fraction:
    """Exact rational from a Fraction, int, or decimal/fraction string.

    Floats are rejected: ``0.93`` as a binary float is not 93/100.
    """
    if isinstance(p, float):
        raise TypeError("probabilities must be exact; pass a string like '0.93' or a Fraction")
    return Fraction(p)


def format_fraction(p: Fraction) -> str:
    """Shortest exact decimal (``0.93``), or ``n/d`` when none exists."""
    p = Fraction(p)
    d, twos, fives = p.denominator, 0, 0
    while d % 2 == 0:
        d, twos = d // 2, twos + 1
    while d % 5 == 0:
        d, fives = d // 5, fives + 1
    if d != 1:
        return f"{p.numerator}/{p.denominator}"
    places = max(twos, fives)
    if places == 0:
        return str(p.numerator)
    scaled = p.numerator * 10**places // p.denominator
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


@dataclass(frozen=True)
class Distribution:
    """A finitely supported probability distribution; weights sum to exactly 1."""

    weights: frozenset[tuple[Row, Fraction]]

    def __post_init__(self):
        total = Fraction(0)
        seen = set()
        for t, w in self.weights:
            if not 0 < w <= 1:
                raise ModelError(f"weight {w} of {t} is outside (0, 1]")
            if t in seen:
                raise ModelError(f"outcome {t} listed twice")
            seen.add(t)
            total += w
        if total != 1:
            raise ModelError(f"distribution sums to {total}")

    @classmethod
    def of(cls, weights: Mapping | Iterable[tuple]) -> Distribution:
        """Build from ``{outcome: weight}``; zero weights are dropped, duplicates summed."""
        items = weights.items() if isinstance(weights, Mapping) else weights
        acc: dict[Row, Fraction] = {}
        for t, w in items:
            t = t if isinstance(t, tuple) else (t,)
            acc[t] = acc.get(t, Fraction(0)) + as_fraction(w)
        return cls(frozenset((t, w) for t, w in acc.items() if w != 0))

    def as_dict(self) -> dict[Row, Fraction]:
        return dict(self.weights)

    @property
    def support(self) -> frozenset[Row]:
        return frozenset(t for t, _ in self.weights)

    def __getitem__(self, outcome) -> Fraction:
        outcome = outcome if isinstance(outcome, tuple) else (outcome,)
        return self.as_dict().get(outcome, Fraction(0))

    def mass(self, outcomes) -> Fraction:
        return sum((w for t, w in self.weights if t in outcomes), Fraction(0))

    def sorted_items(self, slots: Sequence[Slot] | None = None) -> list[tuple[Row, Fraction]]:
        key = (lambda tw: row_key(slots, tw[0])) if slots else (lambda tw: tw[0])
        return sorted(self.weights, key=key)


def point(outcome) -> Distribution:
    return Distribution.of({outcome: 1})


def mix(d1: Distribution, p, d2: Distribution) -> Distribution:
    """``d1`` with probability ``p``, otherwise ``d2``."""
    p = as_fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"mixing weight {p} is outside [0, 1]")
    acc: dict[Row, Fraction] = {}
    for t, w in d1.weights:
        acc[t] = acc.get(t, Fraction(0)) + p * w
    for t, w in d2.weights:
        acc[t] = acc.get(t, Fraction(0)) + (1 - p) * w
    return Distribution(frozenset((t, w) for t, w in acc.items() if w != 0))


def demonic_join(sets: Sequence[Iterable[Distribution]]) -> frozenset[Distribution]:
    if not sets:
        raise ValueError("demonic choice needs at least one alternative")
    out: set[Distribution] = set()
    for s in sets:
        out.update(s)
    return frozenset(out)


def mix_sets(s1: Iterable[Distribution], p, s2: Iterable[Distribution]) -> frozenset[Distribution]:
    """Probabilistic choice between two demonic sets, resolved pointwise."""
    s2 = list(s2)
    return frozenset(mix(a, p, b) for a in s1 for b in s2)


@dataclass(frozen=True)
class ProbOperation(SlotLayout):
    name: str
    slots: tuple[Slot, ...]
    behavior: Mapping[Row, frozenset[Distribution]]

    def __post_init__(self):
        object.__setattr__(self, "behavior", dict(self.behavior))

    def __hash__(self):
        return hash((self.name, self.slots, frozenset(self.behavior.items())))

    def domain(self) -> list[Row]:
        return sorted(self.behavior, key=lambda r: row_key(self.pre_slots, r))

    def choices(self, pre: Row) -> list[Distribution]:
        """The demonic alternatives at ``pre`` in a deterministic order."""
        post = self.post_slots
        return sorted(self.behavior[pre], key=lambda d: [(row_key(post, t), w) for t, w in d.sorted_items(post)])


def make_prob_operation(name: str, slots: Iterable[Slot], behavior: Mapping) -> ProbOperation:
    """Validate slots and every distribution's support against them.

    ``behavior`` maps a pre-row (tuple or binding over state and inputs) to a
    distribution or an iterable of them.
    """
    slots = canonical_slots(slots)
    check_signature(slots)
    probe = Operation(name, slots, frozenset())
    pre, post = probe.pre_slots, probe.post_slots
    table: dict[Row, frozenset[Distribution]] = {}
    for key, ds in behavior.items():
        key = tuple(key[s.label] for s in pre) if isinstance(key, Mapping) else tuple(key)
        if len(key) != len(pre) or any(v not in s.type for s, v in zip(pre, key)):
            raise ModelError(f"prob {name}: ill-typed pre-binding {key}")
        ds = frozenset([ds] if isinstance(ds, Distribution) else ds)
        if not ds:
            raise ModelError(f"prob {name}: no distribution offered at {key}")
        for d in ds:
            for t in d.support:
                if len(t) != len(post) or any(v not in s.type for s, v in zip(post, t)):
                    raise ModelError(f"prob {name}: ill-typed outcome {t} at {key}")
        if key in table:
            raise ModelError(f"prob {name}: pre-binding {key} defined twice")
        table[key] = ds
    return ProbOperation(name, slots, table)


def support_lift(pop: ProbOperation) -> Operation:
    """Forget weights: every outcome in some offered distribution becomes a transition."""
    rows = frozenset(pre + t for pre, ds in pop.behavior.items() for d in ds for t in d.support)
    return Operation(pop.name, pop.slots, rows)


def _labels(slots):
    return [s.label for s in slots]


def _types(slots):
    return [s.type for s in slots]


def _check_frame(target: Operation, pop: ProbOperation, *, with_state_after: bool) -> None:
    ok = (
        _labels(target.slots) == _labels(pop.slots)
        and _types(target.pre_slots) == _types(pop.pre_slots)
        and _types(target.outputs) == _types(pop.outputs)
    )
    if ok and with_state_after:
        ok = all(p.type.issubset(t.type) for t, p in zip(target.primed, pop.primed))
    if not ok:
        raise ModelError(f"slot mismatch between {target.name} and {pop.name}")


def check_prob_refinement(aop: Operation, pop: ProbOperation) -> CheckReport:
    """Pass iff every possible probabilistic behaviour was allowed by ``aop``."""
    check = "check-prob"
    _check_frame(aop, pop, with_state_after=True)
    apre = pre_rows(aop)
    gaps = sorted(apre - pop.behavior.keys(), key=lambda r: row_key(aop.pre_slots, r))
    if gaps:
        return CheckReport.fail(check, "applicability", [Binding.of(aop.pre_slots, r) for r in gaps])
    lifted = support_lift(pop)
    escapes = [r for r in lifted.rows() if r[: aop.n_pre] in apre and r not in aop.transitions]
    if escapes:
        return CheckReport.fail(check, "correctness", [Binding.of(pop.slots, r) for r in escapes])
    return CheckReport.ok(check)


def _allowed_outputs(target: Operation) -> dict[Row, frozenset[Row]]:
    n, m = target.n_pre, len(target.primed)
    acc: dict[Row, set[Row]] = {}
    for r in target.transitions:
        acc.setdefault(r[:n], set()).add(r[n + m :])
    return {k: frozenset(v) for k, v in acc.items()}


def degree_profile(target: Operation, pop: ProbOperation) -> list[tuple[Row, Distribution, Fraction]]:
    """Allowed-output mass of every demonic pick at every pre-binding of ``target``."""
    _check_frame(target, pop, with_state_after=False)
    allowed = _allowed_outputs(target)
    missing = sorted(allowed.keys() - pop.behavior.keys(), key=lambda r: row_key(target.pre_slots, r))
    if missing:
        raise ModelError(
            f"{pop.name} is undefined at {Binding.of(target.pre_slots, missing[0])}, "
            f"where {target.name} is defined"
        )
    m = len(pop.primed)
    out = []
    for pre in sorted(allowed, key=lambda r: row_key(target.pre_slots, r)):
        ok = allowed[pre]
        for d in pop.choices(pre):
            mass = sum((w for t, w in d.weights if t[m:] in ok), Fraction(0))
            out.append((pre, d, mass))
    return out


def refinement_degree(target: Operation, pop: ProbOperation) -> Fraction:
    """Worst-case probability that ``pop`` produces outputs ``target`` allows.

    Only outputs are observed; after-states are ignored.  The minimum ranges
    over pre-bindings of ``target`` and over the demonic alternatives there.
    A target with empty precondition has degree 1.
    """
    return min((mass for _, _, mass in degree_profile(target, pop)), default=Fraction(1))


def degree_report(target: Operation, pop: ProbOperation, threshold=0) -> CheckReport:
    """Wrap :func:`refinement_degree`; the verdict is ``degree >= threshold``."""
    profile = degree_profile(target, pop)
    degree = min((mass for _, _, mass in profile), default=Fraction(1))
    if degree >= as_fraction(threshold):
        return CheckReport.ok("degree", degree=degree)
    worst = [Binding.of(target.pre_slots, pre) for pre, _, mass in profile if mass == degree]
    return CheckReport.fail("degree", "degree", list(dict.fromkeys(worst)), degree=degree)
