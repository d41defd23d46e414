"""Command-line front end.

Exit codes: 0 ok, 1 internal error, 2 bad flags or input, 3 parity
violation (trace/fuzz), 4 degenerate field, 5 no convergence, 6 pair search
failed. Failures print a single line to stderr and nothing to stdout.
"""
from __future__ import annotations

import functools
import json
import math
import sys

import click
import numpy as np

from .dyson_solver import SolverConfig, chord_to_angle, solve
from .errors import (DegenerateField, EvaluationError, ExprSyntaxError, InvalidLabelling,
                     InvalidMesh, LevelTooLarge, NoConvergence, NotOdd, PairSearchFailed,
                     ROutOfRange, TheoremViolation, ThetaOutOfRange)
from .field_expr import field_from_text
from .labelling import label_by_sign, load_labelling, validate_labelling
from .sphere_mesh import build_refined, load_mesh, mesh_diameter, save_mesh, validate
from .zero_paths import fuzz as run_fuzz
from .zero_paths import paths_to_dict, trace_all

EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_THEOREM = 3
EXIT_DEGENERATE = 4
EXIT_NO_CONVERGENCE = 5
EXIT_PAIR_FAILED = 6

_EXIT_CODES = [
    (TheoremViolation, EXIT_THEOREM),
    (DegenerateField, EXIT_DEGENERATE),
    (NoConvergence, EXIT_NO_CONVERGENCE),
    (PairSearchFailed, EXIT_PAIR_FAILED),
    ((InvalidMesh, InvalidLabelling, LevelTooLarge, ExprSyntaxError, ROutOfRange,
      ThetaOutOfRange, NotOdd, EvaluationError, OSError), EXIT_USAGE),
]


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.exceptions.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001 - mapped to exit codes
            for types, code in _EXIT_CODES:
                if isinstance(exc, types):
                    _fail(code, f"{type(exc).__name__}: {exc}")
            _fail(EXIT_INTERNAL, f"{type(exc).__name__}: {exc}")
    return wrapper


def _write_json(data, out):
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(data, fh)
        fh.write("\n")


@click.group()
def cli():
    """Trace antipodal zero paths on sphere triangulations and find equal-value diameters."""


@cli.command("mesh")
@click.option("--levels", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@_handle_errors
def cmd_mesh(levels, out):
    """Build the subdivided octahedron and report its counts."""
    T = build_refined(levels)
    if out:
        save_mesh(T, out)
    click.echo(f"V={T.n_vertices} E={T.n_edges} F={T.n_triangles} Euler={T.euler_characteristic()}")
    click.echo(f"mesh_diameter={mesh_diameter(T)!r}")


@cli.command("trace")
@click.option("--mesh", "mesh_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--levels", type=click.IntRange(min=0), default=None)
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--fn", "expr", default=None, help="Field whose sign gives the labels.")
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@_handle_errors
def cmd_trace(mesh_path, levels, labels_path, expr, seed, out):
    """Trace every zero path of a labelling and certify the invariant one."""
    if (mesh_path is None) == (levels is None):
        raise click.UsageError("give exactly one of --mesh / --levels")
    if (labels_path is None) == (expr is None):
        raise click.UsageError("give exactly one of --labels / --fn")
    if mesh_path:
        T = load_mesh(mesh_path)
        report = validate(T)
        if not report.ok:
            raise InvalidMesh(f"{len(report.violations)} violations, first {report.violations[0]}")
    else:
        T = build_refined(levels)
    if labels_path:
        lab = load_labelling(labels_path)
        report = validate_labelling(T, lab)
        if not report.ok:
            raise InvalidLabelling(f"first violation {report.violations[0]}")
    else:
        T, lab = label_by_sign(T, field_from_text(expr), seed=seed)
    result = trace_all(T, lab)
    if out:
        _write_json(paths_to_dict(result), out)
    click.echo(f"m={len(result.paths)} invariant={result.invariant_index}")
    click.echo("lengths=" + ",".join(str(len(p)) for p in result.paths))
    if lab.tie_retries_used:
        click.echo(f"tie_retries={lab.tie_retries_used}")


def _solver_options(fn):
    options = [
        click.option("--start-level", type=click.IntRange(min=0), default=SolverConfig.start_level, show_default=True),
        click.option("--max-level", type=click.IntRange(min=0), default=SolverConfig.max_level, show_default=True),
        click.option("--residual-tol", type=float, default=SolverConfig.residual_tol, show_default=True),
        click.option("--pair-tol", type=float, default=SolverConfig.pair_tol, show_default=True),
        click.option("--samples-per-segment", type=click.IntRange(min=1), default=SolverConfig.samples_per_segment, show_default=True),
        click.option("--seed", type=int, default=SolverConfig.seed, show_default=True),
        click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _config(start_level, max_level, residual_tol, pair_tol, samples_per_segment, seed):
    try:
        return SolverConfig(start_level=start_level, max_level=max_level,
                            residual_tol=residual_tol, pair_tol=pair_tol,
                            samples_per_segment=samples_per_segment, seed=seed)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def _run_solver(expr, theta, cfg, out):
    q = solve(field_from_text(expr), theta, cfg)
    if out:
        _write_json(q.to_dict(), out)
    click.echo("values=" + " ".join(f"{v:.12g}" for v in q.values))
    click.echo(f"value_spread={q.value_spread:.3e}")
    click.echo(f"angle={q.angle:.15g} theta={q.theta:.15g} chord={q.chord:.15g}")
    click.echo(f"x={' '.join(f'{v:.12g}' for v in q.x)}")
    click.echo(f"y={' '.join(f'{v:.12g}' for v in q.y)}")
    click.echo(f"level={q.level} curve_samples={q.curve_samples}")


@cli.command("dyson")
@click.option("--fn", "expr", required=True)
@click.option("--theta", type=float, default=None, help="Angle between the diameters (default pi/2).")
@click.option("--r", "chord", type=float, default=None, help="Chord between x and y instead of an angle.")
@_solver_options
@_handle_errors
def cmd_dyson(expr, theta, chord, out, **solver):
    """Find x, y at the given angle with f(x) = f(-x) = f(y) = f(-y)."""
    if theta is not None and chord is not None:
        raise click.UsageError("give at most one of --theta / --r")
    if chord is not None:
        theta = chord_to_angle(chord)
    elif theta is None:
        theta = math.pi / 2
    _run_solver(expr, theta, _config(**solver), out)


@cli.command("livesay")
@click.option("--fn", "expr", required=True)
@click.option("--r", "chord", type=float, required=True, help="Chord length in (0, 2).")
@_solver_options
@_handle_errors
def cmd_livesay(expr, chord, out, **solver):
    """Equal-value diameters whose endpoints x, y are at chord distance r."""
    _run_solver(expr, chord_to_angle(chord), _config(**solver), out)


@cli.command("fuzz")
@click.option("--levels", type=click.IntRange(min=0), default=3, show_default=True)
@click.option("--runs", type=click.IntRange(min=1), default=500, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@_handle_errors
def cmd_fuzz(levels, runs, seed, workers):
    """Certify the parity structure on random antisymmetric labellings."""
    build_refined(levels)
    report = run_fuzz(levels, runs, seed, workers)
    if not report.ok:
        _fail(EXIT_THEOREM, " ".join(report.lines()))
    for line in report.lines():
        click.echo(line)


@cli.command("export")
@click.option("--in", "in_path", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["obj", "json"]), default="obj", show_default=True)
@click.option("--project-sphere", type=bool, default=False, show_default=True,
              help="Project chord midpoints radially onto the unit sphere.")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None)
@_handle_errors
def cmd_export(in_path, fmt, project_sphere, out):
    """Write traced paths as OBJ polylines or plain JSON polylines."""
    try:
        with open(in_path, encoding="utf-8") as fh:
            data = json.load(fh)
        polylines = [np.asarray(p["midpoints"], dtype=np.float64).reshape(-1, 3)
                     for p in data["paths"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise click.UsageError(f"cannot read paths file {in_path}: {exc}") from exc
    if project_sphere:
        polylines = [p / np.linalg.norm(p, axis=1)[:, None] for p in polylines]
    if fmt == "obj":
        text = export_obj(polylines)
    else:
        text = json.dumps({"polylines": [p.tolist() for p in polylines]}) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def export_obj(polylines) -> str:
    """Closed polylines as OBJ vertices and ``l`` segments (1-based indices)."""
    lines = []
    segs = []
    base = 1
    for poly in polylines:
        for p in poly:
            lines.append("v " + " ".join(repr(float(c)) for c in p))
        n = len(poly)
        segs += [f"l {base + k} {base + (k + 1) % n}" for k in range(n)]
        base += n
    return "\n".join(lines + segs) + "\n"


def main(argv=None):
    cli.main(args=argv, prog_name="zero-tracer")


if __name__ == "__main__":
    main()
