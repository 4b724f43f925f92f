"""Noise models ``out: SIGNAL x NOISE -> SIGNAL`` and refinement modulo noise."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from refinery.calculus import IOTransformer, pre_rows
from refinery.core import (
    Binding,
    CheckReport,
    FiniteType,
    ModelError,
    Operation,
    Slot,
    SlotKind,
    row_key,
)

__all__ = [
    "NoiseModel",
    "build_oot",
    "check_absorption",
    "check_noisy_refinement",
    "make_noise_model",
    "noise_orbit",
]


@dataclass(frozen=True)
class NoiseModel:
    name: str
    signal: FiniteType
    noise: FiniteType
    table: Mapping[tuple[str, str], str] = field(hash=False)

    def __post_init__(self):
        table = dict(self.table)
        for a in self.signal:
            for x in self.noise:
                if (a, x) not in table:
                    raise ModelError(f"noise {self.name}: out({a},{x}) is undefined")
        for (a, x), v in table.items():
            if a not in self.signal or x not in self.noise:
                raise ModelError(f"noise {self.name}: out({a},{x}) is outside the domain")
            if v not in self.signal:
                raise ModelError(f"noise {self.name}: out({a},{x}) = {v} is not a signal")
        object.__setattr__(self, "table", table)

    def out(self, a: str, x: str) -> str:
        return self.table[(a, x)]


def make_noise_model(name: str, signal: FiniteType, noise: FiniteType, out) -> NoiseModel:
    """``out`` is a mapping ``(a, x) -> signal`` or a callable ``out(a, x)``."""
    if callable(out):
        out = {(a, x): out(a, x) for a in signal for x in noise}
    return NoiseModel(name, signal, noise, out)


def check_absorption(m: NoiseModel) -> CheckReport:
    """Adding noise twice must be the same as adding it once, for some noise value."""
    witnesses = []
    for a in m.signal:
        once = {m.out(a, z) for z in m.noise}
        for x in m.noise:
            for y in m.noise:
                if m.out(m.out(a, x), y) not in once:
                    witnesses.append(Binding([("a", a), ("x", x), ("y", y)]))
    if witnesses:
        return CheckReport.fail("noise-check", "absorption", witnesses)
    return CheckReport.ok("noise-check")


def noise_orbit(m: NoiseModel, a: str) -> frozenset[str]:
    if a not in m.signal:
        raise ModelError(f"{a} is not a value of {m.signal.name}")
    return frozenset(m.out(a, x) for x in m.noise)


def build_oot(m: NoiseModel) -> IOTransformer:
    """The original-output transformer: ``ot?`` is ``oo!`` with some noise added.

    Its :attr:`~IOTransformer.properties` tell whether the noisy output still
    determines the original one.
    """
    ot = Slot("ot", SlotKind.INPUT, m.signal)
    oo = Slot("oo", SlotKind.OUTPUT, m.signal)
    pairs = frozenset(((m.out(o, x),), (o,)) for o in m.signal for x in m.noise)
    return IOTransformer(f"OOT_{m.name}", (ot,), (oo,), pairs)


def check_noisy_refinement(aop: Operation, cop: Operation, m: NoiseModel) -> CheckReport:
    """Refinement modulo adding noise to the single output.

    Conditions, in order: applicability, noise-match (each concrete output is
    a noisy version of an abstract one from the same step), and
    oot-functionality.  ``details`` records the noise-match sub-verdict and
    the transformer properties whatever the outcome.
    """
    check = "check-noisy"
    for op in (aop, cop):
        if len(op.outputs) != 1 or op.outputs[0].type != m.signal:
            raise ModelError(f"{op.name} must have exactly one output of type {m.signal.name}")
    if [(s.label, s.type) for s in aop.pre_slots] != [(s.label, s.type) for s in cop.pre_slots] or [
        s.label for s in aop.primed
    ] != [s.label for s in cop.primed]:
        raise ModelError(f"state/input slot mismatch between {aop.name} and {cop.name}")

    oot = build_oot(m)
    props = oot.properties
    details = {
        "oot": {"total": props.total, "injective": props.injective, "functional": props.functional}
    }

    apre, cpre = pre_rows(aop), pre_rows(cop)
    gaps = sorted(apre - cpre, key=lambda r: row_key(aop.pre_slots, r))
    if gaps:
        details["noise_match"] = "unchecked"
        return CheckReport.fail(check, "applicability", [Binding.of(aop.pre_slots, r) for r in gaps], details=details)

    n = aop.n_pre + len(aop.primed)
    heads: dict[tuple, set[str]] = {}
    for r in aop.transitions:
        heads.setdefault(r[:n], set()).add(r[n])
    bad = []
    for r in cop.rows():
        if r[: cop.n_pre] not in apre:
            continue
        if not any(((r[n],), (o,)) in oot.pairs for o in heads.get(r[:n], ())):
            bad.append(Binding.of(cop.slots, r))
    details["noise_match"] = "fail" if bad else "pass"
    if bad:
        return CheckReport.fail(check, "noise-match", bad, details=details)
    if not props.functional:
        clash = next(t for t, _ in oot.rows() if len(oot.image(t)) > 1)
        witnesses = [Binding.of(oot.slots, clash + o) for o in oot.image(clash)]
        return CheckReport.fail(check, "oot-functionality", witnesses, details=details)
    return CheckReport.ok(check, details=details)
