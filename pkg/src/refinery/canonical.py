"""The reference workspace: big-data schemas, exhaust operations, noise models.

Built programmatically from function tables so tests can compare it with the
bundled ``golden/canonical.rfn``.
"""

from __future__ import annotations

from importlib import resources

from refinery.calculus import identity_transformer, make_transformer
from refinery.core import FunctionTable, Slot, SlotKind, make_finite_type, make_operation
from refinery.dsl import Workspace
from refinery.noise import make_noise_model
from refinery.probabilistic import Distribution, make_prob_operation, mix_sets, point
from refinery.refinement import make_datatype, make_retrieve

Answer = make_finite_type("Answer", ["yes", "no"])
BigData = make_finite_type("BigData", ["d0", "d1", "d2", "d3"])
StructuredData = make_finite_type("StructuredData", ["d0", "d1"])
Unit = make_finite_type("Unit", ["u"])
Bit = make_finite_type("Bit", ["0", "1"])
Raw = make_finite_type("Raw", ["r0", "r1", "r2", "r3"])
Tri = make_finite_type("Tri", ["0", "1", "2"])
One = make_finite_type("One", ["1"])
Quiet = make_finite_type("Quiet", ["n"])

cleverprocessing = FunctionTable(
    "cleverprocessing", BigData, StructuredData, {"d0": "d0", "d1": "d0", "d2": "d1", "d3": "d1"}
)
answer = FunctionTable("answer", StructuredData, Answer, {"d0": "yes", "d1": "no"})
parity = FunctionTable("parity", Raw, Bit, {"r0": "0", "r1": "1", "r2": "0", "r3": "1"})

GOLDEN = "canonical.rfn"


def _s(name, kind, ty):
    return Slot(name, kind, ty)


S, P, O = SlotKind.STATE, SlotKind.PRIMED, SlotKind.OUTPUT


def canonical_workspace() -> Workspace:
    ws = Workspace()
    for t in (Answer, BigData, StructuredData, Unit, Bit, Raw, Tri, One, Quiet):
        ws.types[t.name] = t
    ws.supertypes["StructuredData"] = "BigData"

    big = [_s("b", S, BigData), _s("b", P, BigData), _s("a", O, Answer)]
    learned = [_s("b", S, BigData), _s("b", P, StructuredData), _s("a", O, Answer)]
    unit = [_s("u", S, Unit), _s("u", P, Unit)]
    raw = [_s("s", S, Raw), _s("s", P, Raw)]
    ops = [
        make_operation(
            "RawIgnorance", big, [{"b": x, "b'": x, "a!": v} for x in BigData for v in Answer]
        ),
        make_operation(
            "MachineLearn",
            learned,
            [{"b": x, "b'": cleverprocessing(x), "a!": answer(cleverprocessing(x))} for x in BigData],
        ),
        make_operation(
            "Result", learned, [{"b": x, "b'": cleverprocessing(x), "a!": "yes"} for x in BigData]
        ),
        make_operation("AnsOp", unit + [_s("a", O, Answer)], [("u", "u", "yes")]),
        make_operation(
            "ExhaustOp",
            unit + [_s("a", O, Answer), _s("e", O, Bit)],
            [("u", "u", "yes", e) for e in Bit],
        ),
        make_operation("RawExhaustOp", raw + [_s("r", O, Raw)], [(x, x, x) for x in Raw]),
        make_operation("ParityOp", raw + [_s("p", O, Bit)], [(x, x, parity(x)) for x in Raw]),
        make_operation("Emit0", unit + [_s("o", O, Bit)], [("u", "u", "0")]),
        make_operation("Emit1", unit + [_s("o", O, Bit)], [("u", "u", "1")]),
        make_operation("Emit01", unit + [_s("o", O, Bit)], [("u", "u", o) for o in Bit]),
    ]
    ws.operations = {op.name: op for op in ops}

    a_in = Slot("a", SlotKind.INPUT, Answer)
    a_out, e_out = Slot("a", O, Answer), Slot("e", O, Bit)
    transformers = [
        make_transformer(
            "CopyOT", [a_in], [a_out, e_out], [((v,), (v, e)) for v in Answer for e in Bit]
        ),
        identity_transformer("AnsId", [a_out]),
        make_transformer(
            "ParityOT",
            [Slot("r", SlotKind.INPUT, Raw)],
            [Slot("p", O, Bit)],
            [((x,), (parity(x),)) for x in Raw],
        ),
    ]
    ws.transformers = {t.name: t for t in transformers}

    confident = lambda after: Distribution.of({(after, "yes"): "0.93", (after, "no"): "0.07"})  # noqa: E731
    probs = [
        # after-state unchanged, so RawIgnorance's frame matches exactly
        make_prob_operation("ML", big, {(x,): confident(x) for x in BigData}),
        make_prob_operation(
            "MLClever", learned, {(x,): confident(cleverprocessing(x)) for x in BigData}
        ),
        # yes (0.93) + (yes |~| no) (0.07), expanded pointwise
        make_prob_operation(
            "MLMixed",
            learned,
            {
                (x,): mix_sets(
                    [point((cleverprocessing(x), "yes"))],
                    "0.93",
                    [point((cleverprocessing(x), v)) for v in Answer],
                )
                for x in BigData
            },
        ),
    ]
    ws.probs = {p.name: p for p in probs}

    models = [
        make_noise_model("Xor", Bit, Bit, lambda a, x: str(int(a) ^ int(x))),
        make_noise_model("Or", Bit, Bit, lambda a, x: str(int(a) | int(x))),
        make_noise_model("Increment", Tri, One, lambda a, x: str((int(a) + 1) % 3)),
        make_noise_model("Quiet", Bit, Quiet, lambda a, x: a),
    ]
    ws.noise_models = {m.name: m for m in models}

    ws.datatypes = {
        "Ignorance": make_datatype("Ignorance", BigData, [ws.operations["RawIgnorance"]]),
        "Learner": make_datatype("Learner", StructuredData, [ws.operations["MachineLearn"]]),
    }
    ws.retrieves = {
        "Universal": make_retrieve(
            "Universal", BigData, StructuredData, [(a, c) for a in BigData for c in StructuredData]
        ),
        "Identity": make_retrieve("Identity", BigData, StructuredData, [(c, c) for c in StructuredData]),
    }
    ws.validate()
    return ws


def golden_path(name: str = GOLDEN):
    return resources.files("refinery") / "golden" / name


def golden_names() -> list[str]:
    return sorted(p.name for p in (resources.files("refinery") / "golden").iterdir() if p.name.endswith(".rfn"))


def load_golden(name: str = GOLDEN) -> Workspace:
    from refinery.dsl import parse_spec

    return parse_spec(golden_path(name).read_text(encoding="utf-8"))
