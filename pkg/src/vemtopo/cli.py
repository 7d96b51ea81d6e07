"""Command-line front end.

Subcommands::

    vemtopo mesh gen (--problem NAME | --config FILE) [--res N] [--seed S] --out mesh.txt
    vemtopo solve (--problem NAME | --config FILE) [--res N] [--rho V] [--out DIR]
    vemtopo optimize --config FILE [--out DIR]
    vemtopo bench NAME [--res N] [--rmin R] [--mesh KIND] [--method mma|oc] [--max-iters N] [--out DIR]
    vemtopo export --checkpoint FILE [--svg PATH] [--vtk PATH]

Usage errors exit with status 2, run failures with status 1 and a one-line
diagnostic on stderr.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from vemtopo.benchmarks import NAMES, expected_qualitative_checks, get_problem
from vemtopo.errors import ConfigError, VemTopoError
from vemtopo.io import (
    Checkpoint,
    RunConfig,
    ensure_output_dir,
    load_config,
    read_checkpoint,
    write_checkpoint,
    write_config,
    write_history,
    write_svg_density,
    write_vtk,
)
from vemtopo.mesh.textio import read_mesh, write_mesh
from vemtopo.problem import ProblemDefinition
from vemtopo.system import assemble, compliance, dissipated_energy, solve
from vemtopo.topopt import Evaluator, build_filter, physical_from_raw, run_optimization

logger = logging.getLogger("vemtopo")


def _field_name(problem: ProblemDefinition) -> str:
    return "velocity" if problem.material.mode == "stokes" else "displacement"


def _problem_from_args(args) -> ProblemDefinition:
    if args.config:
        if args.res is not None or args.seed is not None:
            raise ConfigError("--res and --seed apply to --problem; edit the config instead")
        return load_config(args.config).problem
    kw = {} if args.seed is None else {"seed": args.seed}
    return get_problem(args.problem, res=args.res, **kw)


def _write_run(problem: ProblemDefinition, cfg: RunConfig, out: Path) -> int:
    ensure_output_dir(out)
    mesh = problem.build_mesh()
    logger.info("%s: %d elements", problem.name, mesh.n_elements)
    state = run_optimization(problem, cfg.options(), mesh=mesh)
    rho = state.design.physical
    write_mesh(mesh, out / "mesh.txt")
    write_checkpoint(Checkpoint("mesh.txt", state.design.raw, problem.to_dict(), state.iteration),
                     out / "checkpoint.dat")
    write_config(cfg, out / "config.toml")
    write_history(state.history, out / "history.csv")
    write_svg_density(mesh, rho, out / "density.svg")
    write_vtk(mesh, out / "fields.vtk", rho, {_field_name(problem): state.displacement})
    status = "converged" if state.converged else "stopped at the iteration cap"
    print(f"{problem.name}: {status} after {state.iteration} iterations, "
          f"objective {state.objective:.10g}, volume {state.volume:.6f}")
    for check in expected_qualitative_checks(problem, mesh, rho):
        print(check.line())
    print(f"outputs written to {out}")
    return 0


def cmd_mesh_gen(args) -> int:
    problem = _problem_from_args(args)
    mesh = problem.build_mesh()
    write_mesh(mesh, args.out)
    print(f"{mesh.n_elements} elements, {mesh.n_vertices} vertices written to {args.out}")
    return 0


def cmd_solve(args) -> int:
    problem = _problem_from_args(args)
    mesh = problem.build_mesh()
    filt = build_filter(mesh, problem.r_min_factor * mesh.mean_size)
    ev = Evaluator(mesh, problem, filt)
    value = problem.volume_fraction if args.rho is None else args.rho
    rho = np.where(ev.mask, problem.rho_min, value)
    system = assemble(ev.assembler, rho, ev.bcs)
    u = solve(system)
    if problem.objective == "energy":
        print(f"dissipated energy {dissipated_energy(system.full_matrix, u):.17g}")
    else:
        print(f"compliance {compliance(system.loads, u):.17g}")
    if args.out:
        out = ensure_output_dir(args.out)
        write_vtk(mesh, out / "fields.vtk", rho, {_field_name(problem): u})
        print(f"fields written to {out / 'fields.vtk'}")
    return 0


def cmd_optimize(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out) if args.out else cfg.output
    return _write_run(cfg.problem, cfg, out)


def cmd_bench(args) -> int:
    kw = {}
    if args.mesh:
        kw["mesh"] = args.mesh
    try:
        problem = get_problem(args.name, res=args.res, r_min=args.rmin, **kw)
    except TypeError:
        raise ConfigError(f"--mesh is not available for {args.name}") from None
    cfg = RunConfig(problem, Path(args.out), max_iters=args.max_iters, tol=args.tol,
                    method=args.method)
    return _write_run(problem, cfg, Path(args.out))


def cmd_export(args) -> int:
    ckpt = read_checkpoint(args.checkpoint)
    problem = ProblemDefinition.from_dict(ckpt.problem)
    mesh = read_mesh(ckpt.mesh_path(args.checkpoint), problem.domain)
    if ckpt.raw.size != mesh.n_elements:
        raise VemTopoError(f"checkpoint holds {ckpt.raw.size} densities for {mesh.n_elements} cells")
    filt = build_filter(mesh, problem.r_min_factor * mesh.mean_size)
    mask = problem.non_design_mask(mesh)
    rho = physical_from_raw(ckpt.raw, filt, mask, np.full(mesh.n_elements, problem.rho_min))
    if not args.svg and not args.vtk:
        raise VemTopoError("nothing to export: pass --svg and/or --vtk")
    if args.svg:
        write_svg_density(mesh, rho, args.svg)
        print(f"wrote {args.svg}")
    if args.vtk:
        write_vtk(mesh, args.vtk, rho)
        print(f"wrote {args.vtk}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vemtopo", description="VEM topology optimization")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every iteration")
    sub = parser.add_subparsers(dest="command", required=True)

    def source(p):
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--problem", choices=NAMES)
        g.add_argument("--config")
        p.add_argument("--res", type=int)
        p.add_argument("--seed", type=int)

    mesh = sub.add_parser("mesh", help="mesh utilities")
    mesh_sub = mesh.add_subparsers(dest="mesh_command", required=True)
    gen = mesh_sub.add_parser("gen", help="generate the mesh of a problem")
    source(gen)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_mesh_gen)

    sol = sub.add_parser("solve", help="single state solve on a uniform density")
    source(sol)
    sol.add_argument("--rho", type=float, help="uniform density (default: volume fraction)")
    sol.add_argument("--out")
    sol.set_defaults(func=cmd_solve)

    opt = sub.add_parser("optimize", help="run the optimization described by a config file")
    opt.add_argument("--config", required=True)
    opt.add_argument("--out")
    opt.set_defaults(func=cmd_optimize)

    bench = sub.add_parser("bench", help="run a catalog benchmark")
    bench.add_argument("name", choices=NAMES)
    bench.add_argument("--res", type=int)
    bench.add_argument("--rmin", type=float)
    bench.add_argument("--mesh", choices=["structured", "voronoi", "quad"])
    bench.add_argument("--method", choices=["mma", "oc"], default="mma")
    bench.add_argument("--max-iters", type=int, default=400)
    bench.add_argument("--tol", type=float, default=0.01)
    bench.add_argument("--out", default="run")
    bench.set_defaults(func=cmd_bench)

    exp = sub.add_parser("export", help="re-render a saved checkpoint")
    exp.add_argument("--checkpoint", required=True)
    exp.add_argument("--svg")
    exp.add_argument("--vtk")
    exp.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except (VemTopoError, OSError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"vemtopo: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
