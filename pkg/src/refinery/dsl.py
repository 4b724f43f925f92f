"""The ``.rfn`` specification language: parsing, validation and rendering.

A spec file declares finite types, operations, IO transformers,
probabilistic operations, noise models, data types and retrieve relations,
all by explicit enumeration::

    type Answer { yes no }
    subtype StructuredData of BigData { d0 d1 }
    op AnsOp { state u:Unit out a:Answer trans { u=u -> u'=u, a=yes } }
    transformer CopyOT { in a:Answer out a:Answer rel { a=yes -> a=yes ; a=no -> a=no } }
    prob ML { state b:BigData out a:Answer
              dist { b=d0 -> [ 0.93: b'=d0, a=yes | 0.07: b'=d0, a=no ] ; } }
    noise Or { signal Bit noisetype Bit out { 0,0 -> 0 ; 0,1 -> 1 ; 1,0 -> 1 ; 1,1 -> 1 } }
    datatype Abs { state BigData init { d0 } op RawIgnorance }
    retrieve Univ { BigData <-> StructuredData pairs { d0, d0 ; d1, d1 } }

Declarations may appear in any order; names are resolved in a second pass.
Errors are reported as :class:`ParseDiagnostic` records carried by
:class:`SpecError`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from refinery.calculus import IOTransformer
from refinery.core import (
    FiniteType,
    ModelError,
    Operation,
    Slot,
    SlotKind,
    canonical_slots,
    check_signature,
)
from refinery.noise import NoiseModel
from refinery.probabilistic import Distribution, ProbOperation, format_fraction
from refinery.refinement import DataType, RetrieveRelation

__all__ = ["ParseDiagnostic", "SpecError", "Workspace", "parse_spec", "render_spec"]


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str
    line: int
    column: int
    message: str

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class SpecError(Exception):
    """A spec failed to parse or validate; ``diagnostics`` says where and why."""

    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


_CATEGORIES = {
    "type": "types",
    "operation": "operations",
    "transformer": "transformers",
    "prob": "probs",
    "noise": "noise_models",
    "datatype": "datatypes",
    "retrieve": "retrieves",
}


@dataclass
class Workspace:
    types: dict[str, FiniteType] = field(default_factory=dict)
    supertypes: dict[str, str] = field(default_factory=dict)
    operations: dict[str, Operation] = field(default_factory=dict)
    transformers: dict[str, IOTransformer] = field(default_factory=dict)
    probs: dict[str, ProbOperation] = field(default_factory=dict)
    noise_models: dict[str, NoiseModel] = field(default_factory=dict)
    datatypes: dict[str, DataType] = field(default_factory=dict)
    retrieves: dict[str, RetrieveRelation] = field(default_factory=dict)

    def get(self, category: str, name: str):
        """Look up ``name`` in a category (``"operation"``, ``"noise"``, ...)."""
        table = getattr(self, _CATEGORIES[category])
        try:
            return table[name]
        except KeyError:
            raise KeyError(f"unknown {category} {name}") from None

    def validate(self) -> None:
        """Check cross-references and subtype inclusions; raise ModelError if broken."""
        for sub, parent in self.supertypes.items():
            if sub not in self.types or parent not in self.types:
                raise ModelError(f"subtype {sub} of {parent}: unknown type")
            if not self.types[sub].issubset(self.types[parent]):
                raise ModelError(f"subtype {sub} is not included in {parent}")
        known = set(self.types.values())

        def need(t: FiniteType, where: str):
            if t not in known:
                raise ModelError(f"{where} uses undeclared type {t.name}")

        for o in list(self.operations.values()) + list(self.probs.values()):
            for s in o.slots:
                need(s.type, o.name)
        for t in self.transformers.values():
            for s in t.slots:
                need(s.type, t.name)
        for m in self.noise_models.values():
            need(m.signal, m.name)
            need(m.noise, m.name)
        for r in self.retrieves.values():
            need(r.abstract, r.name)
            need(r.concrete, r.name)
        ops = list(self.operations.values())
        for d in self.datatypes.values():
            need(d.state, d.name)
            for op in d.ops:
                if op not in ops:
                    raise ModelError(f"datatype {d.name} uses undeclared operation {op.name}")


# --- lexer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<punct><->|->|[{}\[\]=,;:|])
  | (?P<number>[0-9]+\.[0-9]+|[0-9]+/[0-9]+)
  | (?P<ident>[A-Za-z0-9_]+'?)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


class _Abort(Exception):
    def __init__(self, diag: ParseDiagnostic):
        self.diag = diag


def _err(tok_or_pos, message: str) -> ParseDiagnostic:
    line, col = (tok_or_pos.line, tok_or_pos.col) if isinstance(tok_or_pos, Token) else tok_or_pos
    return ParseDiagnostic("error", line, col, message)


def tokenize(source: str) -> list[Token]:
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise _Abort(_err((line, pos - line_start + 1), f"unexpected character {source[pos]!r}"))
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            toks.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


# --- syntax -----------------------------------------------------------------


@dataclass
class _Assign:
    name: str
    primed: bool
    value: str
    tok: Token


@dataclass
class _Row:
    left: list[_Assign]
    right: list[_Assign]
    tok: Token


@dataclass
class _SlotDecl:
    section: str
    name: str
    primed: bool
    type_tok: Token
    tok: Token


@dataclass
class _Decl:
    keyword: str
    name: Token
    data: dict


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("punct", "ident")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise _Abort(_err(self.tok, f"expected '{text}', found {self._show(self.tok)}"))
        return self.next()

    def ident(self, what: str, primed_ok: bool = False) -> Token:
        t = self.tok
        if t.kind != "ident" or (t.text.endswith("'") and not primed_ok):
            raise _Abort(_err(t, f"expected {what}, found {self._show(t)}"))
        return self.next()

    @staticmethod
    def _show(t: Token) -> str:
        return "end of input" if t.kind == "eof" else f"'{t.text}'"

    def peek_is_decl(self) -> bool:
        """True at ``name :``, the start of a slot declaration."""
        if self.tok.kind != "ident" or self.i + 1 >= len(self.toks):
            return False
        return self.toks[self.i + 1].text == ":"

    # top level

    def spec(self) -> list[_Decl]:
        decls = []
        handlers = {
            "type": self.type_decl,
            "subtype": self.type_decl,
            "op": self.op_decl,
            "transformer": self.transformer_decl,
            "prob": self.prob_decl,
            "noise": self.noise_decl,
            "datatype": self.datatype_decl,
            "retrieve": self.retrieve_decl,
        }
        while self.tok.kind != "eof":
            kw = self.tok
            handler = handlers.get(kw.text) if kw.kind == "ident" else None
            if handler is None:
                raise _Abort(_err(kw, f"expected a declaration keyword, found {self._show(kw)}"))
            self.next()
            decls.append(handler(kw.text))
        return decls

    def type_decl(self, kw: str) -> _Decl:
        name = self.ident("type name")
        parent = None
        if kw == "subtype":
            self.expect("of")
            parent = self.ident("parent type name")
        self.expect("{")
        values = []
        while not self.at("}"):
            values.append(self.ident("value"))
        self.expect("}")
        return _Decl(kw, name, {"values": values, "parent": parent})

    def slot_sections(self, sections: tuple[str, ...]) -> list[_SlotDecl]:
        slots = []
        while self.tok.kind == "ident" and self.tok.text in sections and not self.peek_is_decl():
            section = self.next().text
            while self.peek_is_decl():
                n = self.ident("slot name", primed_ok=(section == "state"))
                self.expect(":")
                ty = self.ident("type name")
                base = n.text.rstrip("'")
                slots.append(_SlotDecl(section, base, n.text.endswith("'"), ty, n))
        return slots

    def assigns(self, stop: tuple[str, ...]) -> list[_Assign]:
        out = []
        if any(self.at(s) for s in stop):
            return out
        while True:
            n = self.ident("slot name", primed_ok=True)
            self.expect("=")
            v = self.ident("value")
            out.append(_Assign(n.text.rstrip("'"), n.text.endswith("'"), v.text, n))
            if not self.at(","):
                return out
            self.next()

    def rows(self, kw: str) -> list[_Row]:
        self.expect(kw)
        self.expect("{")
        rows = []
        while not self.at("}"):
            start = self.tok
            left = self.assigns(("->",))
            self.expect("->")
            right = self.assigns((";", "}"))
            rows.append(_Row(left, right, start))
            if self.at(";"):
                self.next()
            elif not self.at("}"):
                raise _Abort(_err(self.tok, f"expected ';' or '}}', found {self._show(self.tok)}"))
        self.expect("}")
        return rows

    def op_decl(self, kw: str) -> _Decl:
        name = self.ident("operation name")
        self.expect("{")
        slots = self.slot_sections(("state", "in", "out"))
        rows = self.rows("trans")
        self.expect("}")
        return _Decl(kw, name, {"slots": slots, "rows": rows})

    def transformer_decl(self, kw: str) -> _Decl:
        name = self.ident("transformer name")
        self.expect("{")
        slots = self.slot_sections(("in", "out"))
        rows = self.rows("rel")
        self.expect("}")
        return _Decl(kw, name, {"slots": slots, "rows": rows})

    def weight(self) -> tuple[Fraction, Token]:
        t = self.tok
        if t.kind == "number" or (t.kind == "ident" and t.text.isdigit()):
            self.next()
            return Fraction(t.text), t
        raise _Abort(_err(t, f"expected a probability, found {self._show(t)}"))

    def prob_decl(self, kw: str) -> _Decl:
        name = self.ident("prob name")
        self.expect("{")
        slots = self.slot_sections(("state", "in", "out"))
        self.expect("dist")
        self.expect("{")
        entries = []
        while not self.at("}"):
            start = self.tok
            left = self.assigns(("->",))
            self.expect("->")
            alts = []
            while self.at("["):
                open_tok = self.next()
                branches = []
                while True:
                    w, wt = self.weight()
                    self.expect(":")
                    branches.append((w, wt, self.assigns(("|", "]"))))
                    if not self.at("|"):
                        break
                    self.next()
                self.expect("]")
                alts.append((open_tok, branches))
            if not alts:
                raise _Abort(_err(self.tok, f"expected '[', found {self._show(self.tok)}"))
            entries.append((start, left, alts))
            if self.at(";"):
                self.next()
            elif not self.at("}"):
                raise _Abort(_err(self.tok, f"expected ';' or '}}', found {self._show(self.tok)}"))
        self.expect("}")
        self.expect("}")
        return _Decl(kw, name, {"slots": slots, "entries": entries})

    def noise_decl(self, kw: str) -> _Decl:
        name = self.ident("noise model name")
        self.expect("{")
        self.expect("signal")
        signal = self.ident("type name")
        self.expect("noisetype")
        noise = self.ident("type name")
        self.expect("out")
        self.expect("{")
        rows = []
        while not self.at("}"):
            a = self.ident("signal value")
            self.expect(",")
            x = self.ident("noise value")
            self.expect("->")
            v = self.ident("signal value")
            rows.append((a, x, v))
            if self.at(";"):
                self.next()
            elif not self.at("}"):
                raise _Abort(_err(self.tok, f"expected ';' or '}}', found {self._show(self.tok)}"))
        self.expect("}")
        self.expect("}")
        return _Decl(kw, name, {"signal": signal, "noise": noise, "rows": rows})

    def datatype_decl(self, kw: str) -> _Decl:
        name = self.ident("datatype name")
        self.expect("{")
        self.expect("state")
        state = self.ident("type name")
        init = None
        if self.at("init"):
            self.next()
            self.expect("{")
            init = []
            while not self.at("}"):
                init.append(self.ident("value"))
            self.expect("}")
        ops = []
        while self.at("op"):
            self.next()
            ops.append(self.ident("operation name"))
            while self.tok.kind == "ident" and not self.at("op") and not self.at("}"):
                ops.append(self.next())
        self.expect("}")
        return _Decl(kw, name, {"state": state, "init": init, "ops": ops})

    def retrieve_decl(self, kw: str) -> _Decl:
        name = self.ident("retrieve name")
        self.expect("{")
        a = self.ident("type name")
        self.expect("<->")
        c = self.ident("type name")
        self.expect("pairs")
        self.expect("{")
        pairs = []
        while not self.at("}"):
            x = self.ident("value")
            self.expect(",")
            y = self.ident("value")
            pairs.append((x, y))
            if self.at(";"):
                self.next()
            elif not self.at("}"):
                raise _Abort(_err(self.tok, f"expected ';' or '}}', found {self._show(self.tok)}"))
        self.expect("}")
        self.expect("}")
        return _Decl(kw, name, {"a": a, "c": c, "pairs": pairs})


# --- resolution -------------------------------------------------------------


class _Resolver:
    def __init__(self, decls: list[_Decl]):
        self.decls = decls
        self.diags: list[ParseDiagnostic] = []
        self.ws = Workspace()

    def error(self, tok: Token, message: str) -> None:
        self.diags.append(_err(tok, message))

    def type(self, tok: Token) -> FiniteType | None:
        t = self.ws.types.get(tok.text)
        if t is None:
            self.error(tok, f"unknown type {tok.text}")
        return t

    def value(self, ty: FiniteType, tok: Token) -> bool:
        if tok.text not in ty:
            self.error(tok, f"{tok.text} is not a value of {ty.name}")
            return False
        return True

    def run(self) -> Workspace:
        by_kind: dict[str, list[_Decl]] = {}
        seen: dict[tuple[str, str], Token] = {}
        for d in self.decls:
            cat = {"subtype": "type", "op": "operation"}.get(d.keyword, d.keyword)
            key = (cat, d.name.text)
            if key in seen:
                self.error(d.name, f"duplicate {cat} {d.name.text} (first declared at line {seen[key].line})")
                continue
            seen[key] = d.name
            by_kind.setdefault(cat, []).append(d)

        self.types(by_kind.get("type", []))
        for d in by_kind.get("operation", []):
            self.guard(d, self.operation)
        for d in by_kind.get("transformer", []):
            self.guard(d, self.transformer)
        for d in by_kind.get("prob", []):
            self.guard(d, self.prob)
        for d in by_kind.get("noise", []):
            self.guard(d, self.noise)
        for d in by_kind.get("retrieve", []):
            self.guard(d, self.retrieve)
        for d in by_kind.get("datatype", []):
            self.guard(d, self.datatype)
        return self.ws

    def guard(self, d: _Decl, fn) -> None:
        before = len(self.diags)
        try:
            fn(d)
        except ModelError as e:
            if len(self.diags) == before:
                self.error(d.name, str(e))

    def types(self, decls: list[_Decl]) -> None:
        pending = list(decls)
        names = {d.name.text for d in decls}
        while pending:
            progress = False
            for d in list(pending):
                parent = d.data["parent"]
                if parent is not None and parent.text in names and parent.text not in self.ws.types:
                    continue  # parent not resolved yet
                pending.remove(d)
                progress = True
                self.one_type(d)
            if not progress:
                for d in pending:
                    self.error(d.name, f"subtype {d.name.text} is part of a subtype cycle")
                break

    def one_type(self, d: _Decl) -> None:
        values = d.data["values"]
        if not values:
            self.error(d.name, f"type {d.name.text} has no values")
            return
        seen = set()
        for v in values:
            if v.text in seen:
                self.error(v, f"duplicate value {v.text} in type {d.name.text}")
                return
            seen.add(v.text)
        ty = FiniteType(d.name.text, tuple(v.text for v in values))
        parent = d.data["parent"]
        if parent is not None:
            pt = self.type(parent)
            if pt is None:
                return
            for v in values:
                if v.text not in pt:
                    self.error(v, f"subtype {ty.name}: {v.text} is not a value of {pt.name}")
                    return
            self.ws.supertypes[ty.name] = pt.name
        self.ws.types[ty.name] = ty

    def slots(self, decls: list[_SlotDecl], owner: str) -> list[Slot] | None:
        kinds = {"in": SlotKind.INPUT, "out": SlotKind.OUTPUT}
        slots: list[Slot] = []
        overrides: dict[str, tuple[FiniteType, Token]] = {}
        ok = True
        for s in decls:
            ty = self.type(s.type_tok)
            if ty is None:
                ok = False
                continue
            if s.section == "state":
                if s.primed:
                    overrides[s.name] = (ty, s.tok)
                else:
                    slots.append(Slot(s.name, SlotKind.STATE, ty))
            else:
                slots.append(Slot(s.name, kinds[s.section], ty))
        if not ok:
            return None
        states = {s.name for s in slots if s.kind is SlotKind.STATE}
        for name, (ty, tok) in overrides.items():
            if name not in states:
                self.error(tok, f"{name}' has no matching state slot {name}")
                return None
        primed = [
            Slot(s.name, SlotKind.PRIMED, overrides.get(s.name, (s.type,))[0])
            for s in slots
            if s.kind is SlotKind.STATE
        ]
        ins = {s.name for s in slots if s.kind is SlotKind.INPUT}
        clash = sorted(states & ins)
        if clash:
            self.error(decls[0].tok, f"{owner}: {clash[0]} is both a state and an input slot")
            return None
        out = slots + primed
        try:
            check_signature(out)
        except ModelError as e:
            self.error(decls[0].tok if decls else Token("eof", "", 1, 1), f"{owner}: {e}")
            return None
        return out

    def assign_row(self, owner: str, slots: list[Slot], row: _Row, left_kinds, right_kinds):
        """Resolve one ``left -> right`` row into values keyed by slot, or None."""
        index = {}
        for s in slots:
            side = "L" if s.kind in left_kinds else "R"
            index[(side, s.name, s.kind is SlotKind.PRIMED)] = s
        got: dict[Slot, str] = {}
        ok = True
        for side, assigns in (("L", row.left), ("R", row.right)):
            for a in assigns:
                s = index.get((side, a.name, a.primed))
                shown = a.name + ("'" if a.primed else "")
                if s is None:
                    self.error(a.tok, f"{owner}: no slot {shown} on this side of '->'")
                    ok = False
                elif s in got:
                    self.error(a.tok, f"{owner}: slot {shown} assigned twice")
                    ok = False
                elif a.value not in s.type:
                    self.error(a.tok, f"{owner}: {a.value} is not a value of {s.type.name}")
                    ok = False
                else:
                    got[s] = a.value
        if ok:
            missing = [s.label for s in slots if s not in got]
            if missing:
                self.error(row.tok, f"{owner}: row misses slot(s) {', '.join(missing)}")
                ok = False
        return got if ok else None

    def operation(self, d: _Decl) -> None:
        name = d.name.text
        slots = self.slots(d.data["slots"], name)
        if slots is None:
            return
        left = (SlotKind.STATE, SlotKind.INPUT)
        probe = Operation(name, canonical_slots(slots), frozenset())
        rows = set()
        for r in d.data["rows"]:
            got = self.assign_row(name, slots, r, left, None)
            if got is not None:
                rows.add(tuple(got[s] for s in probe.slots))
        self.ws.operations[name] = Operation(name, probe.slots, frozenset(rows))

    def transformer(self, d: _Decl) -> None:
        name = d.name.text
        slots = self.slots(d.data["slots"], name)
        if slots is None:
            return
        ins = tuple(s for s in slots if s.kind is SlotKind.INPUT)
        outs = tuple(s for s in slots if s.kind is SlotKind.OUTPUT)
        pairs = set()
        for r in d.data["rows"]:
            got = self.assign_row(name, slots, r, (SlotKind.INPUT,), None)
            if got is not None:
                pairs.add((tuple(got[s] for s in ins), tuple(got[s] for s in outs)))
        self.ws.transformers[name] = IOTransformer(name, ins, outs, frozenset(pairs))

    def prob(self, d: _Decl) -> None:
        name = d.name.text
        slots = self.slots(d.data["slots"], name)
        if slots is None:
            return
        probe = Operation(name, canonical_slots(slots), frozenset())
        pre, post = probe.pre_slots, probe.post_slots
        behavior: dict[tuple, frozenset] = {}
        for start, left, alts in d.data["entries"]:
            got = self.assign_row(name, list(pre), _Row(left, [], start), (SlotKind.STATE, SlotKind.INPUT), None)
            if got is None:
                continue
            key = tuple(got[s] for s in pre)
            if key in behavior:
                self.error(start, f"{name}: pre-binding defined twice")
                continue
            dists = set()
            for open_tok, branches in alts:
                weights: dict[tuple, Fraction] = {}
                bad = False
                for w, wt, assigns in branches:
                    if not 0 < w <= 1:
                        self.error(wt, f"{name}: weight {format_fraction(w)} is outside (0, 1]")
                        bad = True
                        continue
                    g = self.assign_row(name, list(post), _Row([], assigns, wt), (), None)
                    if g is None:
                        bad = True
                        continue
                    t = tuple(g[s] for s in post)
                    if t in weights:
                        self.error(wt, f"{name}: outcome listed twice in one distribution")
                        bad = True
                        continue
                    weights[t] = w
                if bad:
                    continue
                total = sum(weights.values(), Fraction(0))
                if total != 1:
                    self.error(open_tok, f"{name}: distribution sums to {total}")
                    continue
                dists.add(Distribution(frozenset(weights.items())))
            if len(dists) == len(alts):
                behavior[key] = frozenset(dists)
        self.ws.probs[name] = ProbOperation(name, probe.slots, behavior)

    def noise(self, d: _Decl) -> None:
        signal, noise = self.type(d.data["signal"]), self.type(d.data["noise"])
        if signal is None or noise is None:
            return
        table = {}
        for a, x, v in d.data["rows"]:
            if not (self.value(signal, a) and self.value(noise, x) and self.value(signal, v)):
                continue
            if (a.text, x.text) in table:
                self.error(a, f"out({a.text},{x.text}) defined twice")
                continue
            table[(a.text, x.text)] = v.text
        missing = [(a, x) for a in signal for x in noise if (a, x) not in table]
        if missing:
            self.error(d.name, f"noise {d.name.text}: out({missing[0][0]},{missing[0][1]}) is undefined")
            return
        self.ws.noise_models[d.name.text] = NoiseModel(d.name.text, signal, noise, table)

    def retrieve(self, d: _Decl) -> None:
        a, c = self.type(d.data["a"]), self.type(d.data["c"])
        if a is None or c is None:
            return
        pairs = set()
        for x, y in d.data["pairs"]:
            if self.value(a, x) and self.value(c, y):
                pairs.add((x.text, y.text))
        self.ws.retrieves[d.name.text] = RetrieveRelation(d.name.text, a, c, frozenset(pairs))

    def datatype(self, d: _Decl) -> None:
        state = self.type(d.data["state"])
        if state is None:
            return
        ops = []
        for t in d.data["ops"]:
            op = self.ws.operations.get(t.text)
            if op is None:
                self.error(t, f"unknown operation {t.text}")
                return
            ops.append(op)
        init_toks = d.data["init"]
        if init_toks is None:
            init = frozenset(state.values)
        else:
            if not all(self.value(state, v) for v in init_toks):
                return
            init = frozenset(v.text for v in init_toks)
        self.ws.datatypes[d.name.text] = DataType(d.name.text, state, init, tuple(ops))


def parse_spec(source: str | bytes) -> Workspace:
    """Parse and validate ``.rfn`` source; raise :class:`SpecError` on any error."""
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as e:
            raise SpecError([ParseDiagnostic("error", 1, 1, f"source is not UTF-8 ({e.reason})")]) from None
    try:
        decls = _Parser(tokenize(source)).spec()
    except _Abort as a:
        raise SpecError([a.diag]) from None
    resolver = _Resolver(decls)
    ws = resolver.run()
    if resolver.diags:
        raise SpecError(sorted(resolver.diags, key=lambda d: (d.line, d.column)))
    return ws


# --- rendering --------------------------------------------------------------


def _decls(slots, primed=()) -> str:
    overrides = {p.name: p for p in primed}
    parts = []
    for s in slots:
        parts.append(f"{s.name}:{s.type.name}")
        p = overrides.get(s.name)
        if p is not None and p.type != s.type:
            parts.append(f"{s.name}':{p.type.name}")
    return " ".join(parts)


def _header(layout) -> list[str]:
    out = []
    if getattr(layout, "state", ()):
        out.append("  state " + _decls(layout.state, layout.primed))
    if layout.inputs:
        out.append("  in " + _decls(layout.inputs))
    if layout.outputs:
        out.append("  out " + _decls(layout.outputs))
    return out


def _assigns(slots, row) -> str:
    return ", ".join(f"{s.label.rstrip('?!')}={v}" for s, v in zip(slots, row))


def _rows_block(kw: str, lines: list[str]) -> list[str]:
    if not lines:
        return [f"  {kw} {{ }}"]
    return [f"  {kw} {{"] + [f"    {l} ;" for l in lines] + ["  }"]


def _type_order(ws: Workspace) -> Iterator[FiniteType]:
    done: set[str] = set()

    def visit(name: str):
        if name in done:
            return
        parent = ws.supertypes.get(name)
        if parent is not None:
            visit(parent)
        done.add(name)
        order.append(ws.types[name])

    order: list[FiniteType] = []
    for name in sorted(ws.types):
        visit(name)
    return iter(order)


def render_spec(ws: Workspace) -> str:
    """Canonical source for ``ws``: sorted by name, rows in value-index order."""
    out: list[str] = []
    for t in _type_order(ws):
        values = " ".join(t.values)
        parent = ws.supertypes.get(t.name)
        if parent is None:
            out.append(f"type {t.name} {{ {values} }}")
        else:
            out.append(f"subtype {t.name} of {parent} {{ {values} }}")
    out.append("")

    for name in sorted(ws.operations):
        op = ws.operations[name]
        lines = []
        for r in op.rows():
            pre, post = r[: op.n_pre], r[op.n_pre :]
            lines.append(f"{_assigns(op.pre_slots, pre)} -> {_assigns(op.post_slots, post)}".strip())
        out += [f"op {name} {{"] + _header(op) + _rows_block("trans", lines) + ["}", ""]

    for name in sorted(ws.transformers):
        t = ws.transformers[name]
        lines = [f"{_assigns(t.inputs, i)} -> {_assigns(t.outputs, o)}".strip() for i, o in t.rows()]
        out += [f"transformer {name} {{"] + _header(t) + _rows_block("rel", lines) + ["}", ""]

    for name in sorted(ws.probs):
        p = ws.probs[name]
        lines = []
        for pre in p.domain():
            alts = []
            for d in p.choices(pre):
                branches = [
                    f"{format_fraction(w)}: {_assigns(p.post_slots, t)}" for t, w in d.sorted_items(p.post_slots)
                ]
                alts.append("[ " + " | ".join(branches) + " ]")
            lines.append(f"{_assigns(p.pre_slots, pre)} -> {' '.join(alts)}".strip())
        out += [f"prob {name} {{"] + _header(p) + _rows_block("dist", lines) + ["}", ""]

    for name in sorted(ws.noise_models):
        m = ws.noise_models[name]
        lines = [f"{a},{x} -> {m.out(a, x)}" for a in m.signal for x in m.noise]
        out += [f"noise {name} {{", f"  signal {m.signal.name} noisetype {m.noise.name}"]
        out += _rows_block("out", lines) + ["}", ""]

    for name in sorted(ws.retrieves):
        r = ws.retrieves[name]
        lines = [f"{a}, {c}" for a, c in r.rows()]
        out += [f"retrieve {name} {{", f"  {r.abstract.name} <-> {r.concrete.name}"]
        out += _rows_block("pairs", lines) + ["}", ""]

    for name in sorted(ws.datatypes):
        d = ws.datatypes[name]
        init = " ".join(v for v in d.state if v in d.init)
        ops = " ".join(op.name for op in d.ops)
        out.append(f"datatype {name} {{ state {d.state.name} init {{ {init} }}" + (f" op {ops}" if ops else "") + " }")

    while out and out[-1] == "":
        out.pop()
    return "\n".join(out) + "\n"
