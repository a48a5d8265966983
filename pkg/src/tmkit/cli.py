"""Command-line front end.

Results go to stdout; notes and errors go to stderr.  Exit codes: 0 for
success, 1 for a negative result (validation errors, an invalid or
underivable argument, a failed run, a nonconforming trace), 2 for
unusable input (bad syntax, bad files, bad usage).  Output is plain by
default so runs are byte-reproducible; set ``TMKIT_COLOR=1`` to color
the stderr side.
"""
from __future__ import annotations

import os
import pathlib
from typing import NoReturn, Optional

import click

from . import __version__
from .convert import (
    ConvertError,
    chronology_to_dot,
    from_json,
    generate_report,
    import_flowchart,
    load_flowchart,
    to_dot,
    to_json,
)
from .dsl import format_document, parse
from .dynamics import (
    Document,
    Scenario,
    SimulationError,
    check_coverage,
    conformance,
    parse_scenario,
    simulate as simulate_chronology,
    trace_from_json,
    trace_to_json,
)
from .errors import TmkitError
from .logic import (
    LogicError,
    derive,
    format_proof,
    parse_argument,
    truth_table_validate,
)
from .model import SimplifyError, simplify as simplify_model, validate

_MODEL_FILE = click.Path(exists=True, dir_okay=False)


def _style(text: str, color: str) -> str:
    if os.environ.get("TMKIT_COLOR") == "1":
        return click.style(text, fg=color)
    return text


def _note(message: str) -> None:
    click.echo(_style(f"note: {message}", "yellow"), err=True)


def _fail(message: str, code: int) -> NoReturn:
    click.echo(_style(f"error: {message}", "red"), err=True)
    raise SystemExit(code)


def _load_document(path: str) -> Document:
    try:
        text = pathlib.Path(path).read_text()
    except OSError as exc:
        _fail(str(exc), 2)
    try:
        if path.endswith(".json"):
            return from_json(text)
        return parse(text)
    except TmkitError as exc:
        _fail(str(exc), 2)


def _load_scenario(path: str) -> Scenario:
    try:
        return parse_scenario(
            pathlib.Path(path).read_text(), name=pathlib.Path(path).stem
        )
    except (OSError, TmkitError) as exc:
        _fail(str(exc), 2)


def _write(output: Optional[str], text: str) -> None:
    if output is None:
        click.echo(text, nl=False)
    else:
        pathlib.Path(output).write_text(text)


@click.group()
@click.version_option(version=__version__, prog_name="tmkit")
def main() -> None:
    """Model thimacs, their events, and the arguments behind them."""


@main.command()
@click.argument("model_file", type=_MODEL_FILE)
def check(model_file: str) -> None:
    """Validate a model and print what the rules find."""
    doc = _load_document(model_file)
    diagnostics = validate(doc.model)
    for diagnostic in diagnostics:
        click.echo(str(diagnostic))
    errors = sum(1 for d in diagnostics if d.severity == "error")
    click.echo(f"{errors} errors, {len(diagnostics) - errors} warnings")
    if errors:
        raise SystemExit(1)


@main.command()
@click.argument("model_file", type=_MODEL_FILE)
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def simplify(model_file: str, output: Optional[str]) -> None:
    """Collapse transport actions and print the reduced model."""
    doc = _load_document(model_file)
    try:
        reduced = simplify_model(doc.model)
    except SimplifyError as exc:
        for diagnostic in exc.diagnostics:
            click.echo(_style(str(diagnostic), "red"), err=True)
        _fail("cannot simplify a model that has errors", 1)
    if doc.events or doc.chronology is not None:
        _note("events and chronology dropped; their regions name removed actions")
    _write(output, format_document(Document(reduced)))


@main.command()
@click.argument("model_file", type=_MODEL_FILE)
@click.option("--coverage", is_flag=True, help="List actions no event covers.")
def events(model_file: str, coverage: bool) -> None:
    """List a model's events (or its coverage gaps)."""
    doc = _load_document(model_file)
    if coverage:
        uncovered = check_coverage(doc.model, doc.events)
        for action_id in uncovered:
            click.echo(action_id)
        if not uncovered:
            _note("every action is covered")
        return
    if not doc.events:
        _note("no events defined")
        return
    for event in doc.events:
        click.echo(f"{event.id}: {event.label} ({len(event.region)} actions)")


@main.command()
@click.argument("model_file", type=_MODEL_FILE)
@click.option(
    "--scenario", "scenario_file", required=True, type=_MODEL_FILE,
    help="Decision file: one 'guard = T,F,...' line per guard.",
)
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def simulate(model_file: str, scenario_file: str, output: Optional[str]) -> None:
    """Walk the chronology under a scenario; print the trace as JSON."""
    doc = _load_document(model_file)
    if doc.chronology is None:
        _fail("model has no chronology to simulate", 2)
    scenario = _load_scenario(scenario_file)
    try:
        trace = simulate_chronology(doc.chronology, scenario)
    except SimulationError as exc:
        _fail(str(exc), 1)
    _write(output, trace_to_json(trace))


@main.command()
@click.argument("model_file", type=_MODEL_FILE)
@click.argument("trace_file", type=_MODEL_FILE)
def conform(model_file: str, trace_file: str) -> None:
    """Check a recorded trace against the chronology."""
    doc = _load_document(model_file)
    if doc.chronology is None:
        _fail("model has no chronology to conform against", 2)
    try:
        trace = trace_from_json(pathlib.Path(trace_file).read_text())
    except (OSError, TmkitError) as exc:
        _fail(str(exc), 2)
    result = conformance(trace, doc.chronology)
    if result.ok:
        click.echo("ok")
    else:
        click.echo(f"violation at {result.violation}")
        raise SystemExit(1)


@main.command()
@click.argument("argument_file", type=_MODEL_FILE)
def prove(argument_file: str) -> None:
    """Derive an argument's goal by chaining premises."""
    argument = _load_argument(argument_file)
    path = derive(argument)
    if path is None:
        _fail("no derivation found", 1)
    click.echo(format_proof(path), nl=False)


@main.command(name="validate-arg")
@click.argument("argument_file", type=_MODEL_FILE)
def validate_arg(argument_file: str) -> None:
    """Check an argument against its full truth table."""
    argument = _load_argument(argument_file)
    try:
        valid, countermodel, checked = truth_table_validate(argument)
    except LogicError as exc:
        _fail(str(exc), 2)
    if valid:
        click.echo(f"valid ({checked} assignments checked)")
    else:
        rendered = " ".join(
            f"{var}={'T' if value else 'F'}"
            for var, value in sorted(countermodel.items())
        )
        click.echo(f"invalid: {rendered}")
        raise SystemExit(1)


def _load_argument(path: str):
    try:
        return parse_argument(pathlib.Path(path).read_text())
    except (OSError, LogicError) as exc:
        _fail(str(exc), 2)


@main.command(name="import")
@click.argument("chart_file", type=_MODEL_FILE)
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def import_chart(chart_file: str, output: Optional[str]) -> None:
    """Turn a swimlane flowchart (JSON) into model text."""
    try:
        chart = load_flowchart(pathlib.Path(chart_file).read_text())
        model, notes = import_flowchart(chart)
    except (OSError, ConvertError) as exc:
        _fail(str(exc), 2)
    for note in notes:
        _note(note)
    _write(output, format_document(Document(model)))


@main.command()
@click.argument("model_file", type=_MODEL_FILE)
@click.option("--format", "fmt", type=click.Choice(["json", "dot"]), required=True)
@click.option(
    "--part", type=click.Choice(["model", "chronology"]), default="model",
    help="Which graph to draw (dot output only).",
)
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def export(model_file: str, fmt: str, part: str, output: Optional[str]) -> None:
    """Write a document as canonical JSON or Graphviz text."""
    doc = _load_document(model_file)
    if fmt == "json":
        if part != "model":
            _fail("--part applies to dot output only", 2)
        _write(output, to_json(doc))
        return
    if part == "chronology":
        if doc.chronology is None:
            _fail("model has no chronology to draw", 2)
        _write(output, chronology_to_dot(doc.chronology))
    else:
        _write(output, to_dot(doc))


@main.command()
@click.argument("model_file", type=_MODEL_FILE)
@click.option(
    "--scenario", "scenario_files", multiple=True, type=_MODEL_FILE,
    help="Walk this scenario in the report (repeatable).",
)
def report(model_file: str, scenario_files: tuple[str, ...]) -> None:
    """Summarize a document: thimacs, findings, events, walks."""
    doc = _load_document(model_file)
    scenarios = [_load_scenario(f) for f in scenario_files]
    try:
        text = generate_report(doc, scenarios)
    except SimulationError as exc:
        _fail(str(exc), 1)
    except ConvertError as exc:
        _fail(str(exc), 2)
    click.echo(text, nl=False)
