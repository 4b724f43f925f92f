"""Command-line entry point.

Exit status: 0 when the check passes, 1 when it fails, 2 for usage, parse
or validation errors and for transformer searches cut off by ``--budget``.
Without ``--spec`` the bundled canonical workspace is used.
"""

from __future__ import annotations

import json
import os
import sys
from fractions import Fraction

import click

from refinery.calculus import IOTransformer
from refinery.canonical import golden_path
from refinery.core import Binding, CheckReport, ModelError
from refinery.dsl import SpecError, Workspace, parse_spec
from refinery.noise import check_absorption, check_noisy_refinement
from refinery.probabilistic import as_fraction, check_prob_refinement, degree_report, format_fraction
from refinery.refinement import (
    DEFAULT_BUDGET,
    RefinementError,
    SearchBudgetExhausted,
    check_downward_simulation,
    check_output_abstraction,
    check_output_refinement,
    search_output_transformer,
)

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


# --- report rendering -------------------------------------------------------


def _jsonable(value):
    if isinstance(value, IOTransformer):
        return {
            "name": value.name,
            "inputs": [f"{s.label}:{s.type.name}" for s in value.inputs],
            "outputs": [f"{s.label}:{s.type.name}" for s in value.outputs],
            "pairs": [dict(b) for b in value.bindings()],
        }
    if isinstance(value, Binding):
        return dict(value)
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def report_to_dict(r: CheckReport) -> dict:
    out = {
        "check": r.check,
        "verdict": r.verdict,
        "failed_condition": r.failed_condition,
        "degree": None if r.degree is None else format_fraction(r.degree),
        "witnesses": [dict(w) for w in r.witnesses],
    }
    if r.details:
        out["details"] = _jsonable(dict(r.details))
    return out


def report_from_dict(d: dict) -> CheckReport:
    """Inverse of :func:`report_to_dict` (details are kept as plain JSON)."""
    return CheckReport(
        d["check"],
        d["verdict"],
        d["failed_condition"],
        tuple(Binding(w) for w in d["witnesses"]),
        None if d["degree"] is None else Fraction(d["degree"]),
        d.get("details", {}),
    )


def _color_enabled() -> bool:
    return os.environ.get("REFINERY_COLOR", "0") == "1"


def _fmt_binding(b) -> str:
    return ", ".join(f"{k}={v}" for k, v in b.items())


def render_report(r: CheckReport, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(report_to_dict(r), separators=(",", ":"))
    word = r.verdict.upper()
    if _color_enabled():
        word = click.style(word, fg="green" if r.passed else "red", bold=True)
    head = f"{r.check}: {word}"
    if r.failed_condition:
        head += f" ({r.failed_condition})"
    lines = [head]
    if r.degree is not None:
        lines.append(f"  degree: {format_fraction(r.degree)}")
    for w in r.witnesses:
        lines.append(f"  witness: {_fmt_binding(w)}")
    for key, value in r.details.items():
        if isinstance(value, IOTransformer):
            lines.append(f"  {key}: {value.name} ({', '.join(str(s) for s in value.slots)})")
            for b in value.bindings():
                lines.append(f"    {_fmt_binding(b)}")
        elif isinstance(value, dict):
            lines.append(f"  {key}: " + ", ".join(f"{k}={v}" for k, v in value.items()))
        else:
            lines.append(f"  {key}: {value}")
    return "\n".join(lines)


# --- commands ---------------------------------------------------------------


class Failure(Exception):
    """Abort the command with exit status 2 and a message on stderr."""


def _load(spec: str | None) -> Workspace:
    if spec is None:
        text = golden_path().read_text(encoding="utf-8")
    else:
        try:
            with open(spec, "rb") as fh:
                text = fh.read()
        except OSError as e:
            raise Failure(f"cannot read {spec}: {e.strerror}") from None
    return parse_spec(text)


def _emit(ctx: click.Context, report: CheckReport) -> None:
    click.echo(render_report(report, ctx.obj["format"]), color=_color_enabled())
    ctx.exit(EXIT_PASS if report.passed else EXIT_FAIL)


def _run(ctx: click.Context, fn) -> None:
    """Load the workspace, run ``fn(ws)`` and map its outcome to an exit status."""
    try:
        ws = _load(ctx.obj["spec"])
        report = fn(ws)
    except SpecError as e:
        for d in e.diagnostics:
            click.echo(f"{ctx.obj['spec'] or 'canonical'}:{d}", err=True)
        ctx.exit(EXIT_ERROR)
    except SearchBudgetExhausted as e:
        click.echo(f"unknown: {e}", err=True)
        ctx.exit(EXIT_ERROR)
    except KeyError as e:
        click.echo(f"error: {e.args[0]}", err=True)
        ctx.exit(EXIT_ERROR)
    except (Failure, ModelError, RefinementError, ValueError) as e:
        click.echo(f"error: {e}", err=True)
        ctx.exit(EXIT_ERROR)
    _emit(ctx, report)


spec_option = click.option(
    "--spec", "-s", type=click.Path(dir_okay=False), default=None,
    help="Spec file (.rfn); defaults to the bundled canonical workspace.",
)
budget_option = click.option(
    "--budget", type=click.IntRange(min=1), default=DEFAULT_BUDGET, show_default=True,
    help="Maximum number of candidate transformers to examine.",
)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@spec_option
@click.pass_context
def cli(ctx, fmt, spec):
    """Check refinement relations between finite specifications."""
    ctx.ensure_object(dict)
    ctx.obj.update(format=fmt, spec=spec)


def _spec_override(ctx, spec):
    if spec is not None:
        ctx.obj["spec"] = spec


@cli.command("check-output")
@click.option("--abstract", "aop", required=True)
@click.option("--concrete", "cop", required=True)
@click.option("--ot", required=True, help="Output transformer name.")
@spec_option
@click.pass_context
def check_output(ctx, aop, cop, ot, spec):
    """Plain output refinement through a given transformer."""
    _spec_override(ctx, spec)
    _run(ctx, lambda ws: check_output_refinement(
        ws.get("operation", aop), ws.get("operation", cop), ws.get("transformer", ot)))


@cli.command("search-ot")
@click.option("--abstract", "aop", required=True)
@click.option("--concrete", "cop", required=True)
@budget_option
@spec_option
@click.pass_context
def search_ot(ctx, aop, cop, budget, spec):
    """Search for an output transformer making CONCRETE refine ABSTRACT."""
    _spec_override(ctx, spec)

    def go(ws):
        a, c = ws.get("operation", aop), ws.get("operation", cop)
        found = search_output_transformer(a, c, budget)
        if found is None:
            return CheckReport.fail("search-ot", "no-transformer")
        return CheckReport.ok("search-ot", details={"transformer": found})

    _run(ctx, go)


@cli.command("check-abstraction")
@click.option("--abstract", "aop", required=True, help="The information-level operation.")
@click.option("--concrete", "cop", required=True, help="The exhaust-level operation.")
@budget_option
@spec_option
@click.pass_context
def check_abstraction(ctx, aop, cop, budget, spec):
    """Is trading CONCRETE's outputs for ABSTRACT's an output abstraction?"""
    _spec_override(ctx, spec)
    _run(ctx, lambda ws: check_output_abstraction(
        ws.get("operation", aop), ws.get("operation", cop), budget))


@cli.command("check-data")
@click.option("--abstract", "adt", required=True, help="Abstract datatype.")
@click.option("--concrete", "cdt", required=True, help="Concrete datatype.")
@click.option("--retrieve", "ret", required=True)
@spec_option
@click.pass_context
def check_data(ctx, adt, cdt, ret, spec):
    """Downward simulation between two datatypes."""
    _spec_override(ctx, spec)
    _run(ctx, lambda ws: check_downward_simulation(
        ws.get("datatype", adt), ws.get("datatype", cdt), ws.get("retrieve", ret)))


@cli.command("check-prob")
@click.option("--abstract", "aop", required=True)
@click.option("--prob", "pop", required=True)
@spec_option
@click.pass_context
def check_prob(ctx, aop, pop, spec):
    """Does a probabilistic operation refine a nondeterministic one?"""
    _spec_override(ctx, spec)
    _run(ctx, lambda ws: check_prob_refinement(ws.get("operation", aop), ws.get("prob", pop)))


@cli.command("degree")
@click.option("--target", required=True)
@click.option("--prob", "pop", required=True)
@click.option("--min", "minimum", default="0", show_default=True,
              help="Pass only if the degree is at least this (e.g. 0.9 or 9/10).")
@spec_option
@click.pass_context
def degree(ctx, target, pop, minimum, spec):
    """Worst-case probability of producing outputs TARGET allows."""
    _spec_override(ctx, spec)
    try:
        threshold = as_fraction(minimum)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"not an exact probability: {minimum}", param_hint="--min")
    _run(ctx, lambda ws: degree_report(ws.get("operation", target), ws.get("prob", pop), threshold))


@cli.command("noise-check")
@click.option("--model", required=True)
@spec_option
@click.pass_context
def noise_check(ctx, model, spec):
    """Check the absorption axiom of a noise model."""
    _spec_override(ctx, spec)
    _run(ctx, lambda ws: check_absorption(ws.get("noise", model)))


@cli.command("check-noisy")
@click.option("--abstract", "aop", required=True)
@click.option("--concrete", "cop", required=True)
@click.option("--model", required=True)
@spec_option
@click.pass_context
def check_noisy(ctx, aop, cop, model, spec):
    """Refinement modulo noise added to outputs."""
    _spec_override(ctx, spec)
    _run(ctx, lambda ws: check_noisy_refinement(
        ws.get("operation", aop), ws.get("operation", cop), ws.get("noise", model)))


@cli.command("validate")
@spec_option
@click.pass_context
def validate(ctx, spec):
    """Parse and validate a spec file."""
    _spec_override(ctx, spec)

    def go(ws):
        ws.validate()
        counts = {
            "types": len(ws.types),
            "operations": len(ws.operations),
            "transformers": len(ws.transformers),
            "probs": len(ws.probs),
            "noise_models": len(ws.noise_models),
            "datatypes": len(ws.datatypes),
            "retrieves": len(ws.retrieves),
        }
        return CheckReport.ok("validate", details={"counts": counts})

    _run(ctx, go)


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="refinery", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return EXIT_ERROR
    except click.exceptions.Abort:
        return EXIT_ERROR
    # click hands back ctx.exit() codes as the return value outside standalone mode
    return rv if isinstance(rv, int) else EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
