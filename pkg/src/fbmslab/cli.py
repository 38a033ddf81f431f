"""Command line entry point: ``fbmslab generate|solve|verify|steklov|convergence``.

Exit codes: 0 all checks pass, 1 a check failed (or the solver did not
converge), 2 verification not applicable to the input, 3 input error.
"""
from __future__ import annotations

import json
import logging
import os
import sys

import click

EXIT_PASS, EXIT_FAIL, EXIT_NOT_APPLICABLE, EXIT_INPUT = 0, 1, 2, 3


def _write_json(path, payload):
    if path:
        with open(path, "w") as fh:
            fh.write(json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n")


def _levels(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}") from exc


class _Exit(Exception):
    def __init__(self, code):
        self.code = code


def _load(ctx, input_path, family, level):
    from .errors import MeshValidityError
    from .report import PipelineConfig, load_mesh
    try:
        cfg = PipelineConfig(input_path=input_path, family=family, level=level, seed=ctx.obj["seed"])
        return cfg, load_mesh(cfg)
    except (OSError, ValueError, MeshValidityError) as exc:
        click.echo(f"input error: {exc}", err=True)
        raise _Exit(EXIT_INPUT) from exc


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for noisy fixtures.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Thread count for the linear algebra backends.")
@click.option("--json-out", type=click.Path(dir_okay=False), default=None,
              help="Write a machine-readable summary here.")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx, seed, threads, json_out, verbose):
    """Build, relax and verify free boundary minimal surfaces in the unit ball."""
    if threads < 1:
        raise click.BadParameter("--threads must be positive")
    # the numerical modules are imported lazily so these take effect
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(threads)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"seed": seed, "json_out": json_out}


def _run(fn):
    try:
        code = fn()
    except _Exit as e:
        code = e.code
    sys.exit(code)


_FAMILY = click.Choice(["catenoid", "noisy-catenoid", "disk", "shell", "translated-sphere"])


@main.command()
@click.argument("family", type=_FAMILY)
@click.option("--level", type=int, default=3, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.pass_context
def generate(ctx, family, level, out_path):
    """Write a fixture mesh as OBJ."""
    def body():
        from .mesh import write_obj
        _, mesh = _load(ctx, None, family, level)
        write_obj(mesh, out_path)
        _write_json(ctx.obj["json_out"], {"family": family, "level": level,
                                         "n_vertices": mesh.n_vertices, "n_faces": mesh.n_faces})
        return EXIT_PASS
    _run(body)


@main.command()
@click.option("--input", "input_path", type=click.Path(dir_okay=False), required=True)
@click.option("--output", "output_path", type=click.Path(dir_okay=False), required=True)
@click.option("--grad-tol", type=float, default=1e-8, show_default=True)
@click.option("--max-iters", type=int, default=5000, show_default=True)
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def solve(ctx, input_path, output_path, grad_tol, max_iters, trace_path):
    """Relax a mesh toward a free boundary minimal surface."""
    def body():
        from .errors import MeshDegenerationError, PreconditionError
        from .mesh import surface_area, write_obj
        from .solver import SolverConfig, free_boundary_residual, solve as run_solve
        _, mesh = _load(ctx, input_path, None, 0)
        try:
            cfg = SolverConfig(max_iters=max_iters, grad_tol=grad_tol)
            out, trace = run_solve(mesh, cfg)
        except (PreconditionError, ValueError) as exc:
            click.echo(f"input error: {exc}", err=True)
            return EXIT_INPUT
        except MeshDegenerationError as exc:
            click.echo(f"solver failed: {exc}", err=True)
            return EXIT_FAIL
        write_obj(out, output_path)
        if trace_path:
            trace.write_csv(trace_path)
        summary = {"reason": trace.reason, "iterations": trace.iterations,
                   "area": surface_area(out), "grad_norm": trace.grad_norm[-1],
                   "grad_tol": grad_tol}
        if len(out.boundary_vertices):
            summary["free_boundary_residual"] = free_boundary_residual(out)
        _write_json(ctx.obj["json_out"], summary)
        click.echo(f"{trace.reason} after {trace.iterations} iterations, area {summary['area']:.10g}")
        return EXIT_PASS if trace.converged else EXIT_FAIL
    _run(body)


@main.command()
@click.option("--input", "input_path", type=click.Path(dir_okay=False), default=None)
@click.option("--family", type=_FAMILY, default=None)
@click.option("--level", type=int, default=3, show_default=True)
@click.option("--levels", type=str, default=None,
              help="Comma-separated refinement levels of --family for a convergence table.")
@click.option("--table", "table_path", type=click.Path(dir_okay=False), default=None,
              help="CSV destination for the --levels table.")
@click.pass_context
def verify(ctx, input_path, family, level, levels, table_path):
    """Evaluate every identity and inequality check on one mesh."""
    def body():
        from .errors import DisconnectedMeshError
        from .report import CONVERGENCE_COLUMNS, PipelineConfig, convergence_table, verify_mesh, write_csv
        if levels is not None:
            if family is None or table_path is None:
                click.echo("input error: --levels needs --family and --table", err=True)
                return EXIT_INPUT
            try:
                tcfg = PipelineConfig(family=family, levels=_levels(levels), seed=ctx.obj["seed"])
            except (ValueError, click.BadParameter) as exc:
                click.echo(f"input error: {exc}", err=True)
                return EXIT_INPUT
            write_csv(convergence_table(tcfg), table_path, CONVERGENCE_COLUMNS)
        cfg, mesh = _load(ctx, input_path, family, level)
        try:
            rep = verify_mesh(mesh, input_path or f"{family}@level{level}", cfg.tolerances)
        except DisconnectedMeshError as exc:
            click.echo(f"input error: {exc}", err=True)
            return EXIT_INPUT
        if ctx.obj["json_out"]:
            with open(ctx.obj["json_out"], "w") as fh:
                fh.write(rep.to_json())
        for name, check in sorted(rep.checks.items()):
            click.echo(f"{check.status:15s} {name}")
        return rep.exit_code
    _run(body)


@main.command()
@click.option("--input", "input_path", type=click.Path(dir_okay=False), default=None)
@click.option("--family", type=_FAMILY, default=None)
@click.option("--level", type=int, default=3, show_default=True)
@click.option("-k", "k", type=int, default=8, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def steklov(ctx, input_path, family, level, k, out_path):
    """Lowest Steklov eigenvalues, with the 8*pi and sigma_1 = 1 comparisons."""
    def body():
        from .errors import PreconditionError
        from .report import verify_mesh, write_csv
        from .steklov import conjecture_checks, steklov_spectrum
        _, mesh = _load(ctx, input_path, family, level)
        try:
            res = steklov_spectrum(mesh, k)
        except PreconditionError as exc:
            click.echo(f"not applicable: {exc}", err=True)
            return EXIT_NOT_APPLICABLE
        rows = [{"index": i, "sigma": float(s), "sigma_times_boundary_length": float(s) * res.boundary_length}
                for i, s in enumerate(res.eigenvalues)]
        if out_path:
            write_csv(rows, out_path, ("index", "sigma", "sigma_times_boundary_length"))
        checks = conjecture_checks(res, verify_mesh(mesh))
        _write_json(ctx.obj["json_out"], {"eigenvalues": [r["sigma"] for r in rows],
                                         "checks": checks.as_dict()})
        for r in rows:
            click.echo(f"{r['index']:3d} {r['sigma']:.10f}")
        return EXIT_PASS if checks.kokarev_holds else EXIT_FAIL
    _run(body)


@main.command()
@click.option("--family", type=_FAMILY, required=True)
@click.option("--levels", type=str, default="1,2,3", show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.pass_context
def convergence(ctx, family, levels, out_path):
    """Tabulate residuals over refinement levels as CSV."""
    def body():
        from .report import CONVERGENCE_COLUMNS, PipelineConfig, convergence_table, write_csv
        try:
            cfg = PipelineConfig(family=family, levels=_levels(levels), seed=ctx.obj["seed"])
        except (ValueError, click.BadParameter) as exc:
            click.echo(f"input error: {exc}", err=True)
            return EXIT_INPUT
        rows = convergence_table(cfg)
        write_csv(rows, out_path, CONVERGENCE_COLUMNS)
        _write_json(ctx.obj["json_out"], {"family": family, "rows": rows})
        return EXIT_PASS
    _run(body)


if __name__ == "__main__":
    main()
