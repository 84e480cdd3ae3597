"""Command-line front end: generate, solve, eval, render, lse, export-qubo."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import baselines, solvers
from .admm import AdmmConfig, run_admm
from .experiment import run_experiment
from .geometry import LightParams, coverage_matrix, light_levels
from .heightmap import HeightmapError, generate_perlin_map, load_heightmap, save_heightmap
from .qubo import (LinearConstraintSystem, build_admm_step_qubo, build_lse_constraints,
                   build_slack_qubo, export_qubo, lse_violations)
from .render import render_rgb, to_ppm

logger = logging.getLogger("torchplace")

SOLVER_CHOICES = ["sa", "tabu", "tabusa", "exhaustive", "greedy"]


def _params(args) -> LightParams:
    return LightParams(args.l_torch, args.l_min)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def load_solution(path, hmap) -> np.ndarray:
    """Selection vector from a solution JSON file."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    x = np.zeros(hmap.n, dtype=np.int64)
    for r, c in data["torches"]:
        try:
            x[hmap.index.position(int(r), int(c))] = 1
        except KeyError:
            raise ValueError(f"torch at ({r}, {c}) is not a floor tile") from None
    return x


def format_light_grid(hmap, layout) -> str:
    grid = np.full(hmap.elevation.shape, "#", dtype=object)
    for k, (i, j) in enumerate(hmap.index.ordering):
        mark = "*" if layout.selection[k] else ""
        grid[i, j] = f"{int(layout.light[k])}{mark}"
    width = max(len(s) for s in grid.ravel())
    return "\n".join(" ".join(s.rjust(width) for s in row) for row in grid)


# --- subcommands ------------------------------------------------------------

def cmd_generate(args) -> int:
    hmap = generate_perlin_map(args.width, args.height, args.seed, args.wall_threshold, args.levels)
    save_heightmap(hmap, args.out)
    print(f"wrote {args.out}: {hmap.width}x{hmap.height}, n={hmap.n}")
    return 0


def _solution(args, hmap, x, iterations: int, extra=None) -> dict:
    layout = light_levels(hmap, x, _params(args))
    data = {
        "map": str(args.map),
        "torches": [list(hmap.index.site(k)) for k in np.flatnonzero(x)],
        "torch_count": layout.torches,
        "violations": layout.violations,
        "iterations": iterations,
        "solver": args.solver,
        "seed": args.seed,
    }
    data.update(extra or {})
    return data


def cmd_solve(args) -> int:
    hmap = load_heightmap(args.map)
    cov = coverage_matrix(hmap, _params(args))
    prefix = Path(args.out_prefix)

    if args.solver == "greedy":
        chosen = baselines.greedy_cover(baselines.to_setcover(cov))
        x = np.zeros(hmap.n, dtype=np.int64)
        x[chosen] = 1
        data = _solution(args, hmap, x, 0)
    else:
        c = LinearConstraintSystem.from_coverage(cov)
        cfg = AdmmConfig(mu0=args.mu0, rho=args.rho, budget=args.budget, early_exit=args.early_exit,
                         anchor_scale=args.anchor_scale,
                         solver=solvers.SolverConfig(solvers.SolverKind(args.solver), args.seed))
        if args.repeats == 1:
            runs = [run_admm(c, cfg)]
        else:
            report = run_experiment(c, cfg, args.repeats, args.seed, args.workers)
            runs = report.runs
            (prefix.parent / f"{prefix.name}.stats.csv").write_text(report.to_csv())
        for r, run in enumerate(runs):
            name = f"{prefix.name}.trace.csv" if len(runs) == 1 else f"{prefix.name}.run{r}.trace.csv"
            (prefix.parent / name).write_text(run.trace.to_csv())
        # report the run with the fewest torches among those with the fewest violations
        best = min(range(len(runs)),
                   key=lambda r: (c.violations(runs[r].x), int(runs[r].x.sum())))
        run = runs[best]
        data = _solution(args, hmap, run.x, len(run.trace),
                         {"run": best, "feasible_iteration": run.best_feasible_iteration,
                          "final_iterate_violations": c.violations(run.state.x)})

    out = prefix.parent / f"{prefix.name}.json"
    out.write_text(json.dumps(data, indent=2) + "\n")
    print(f"torches={data['torch_count']} violations={data['violations']} -> {out}")
    return 0 if data["violations"] == 0 else 1


def cmd_eval(args) -> int:
    hmap = load_heightmap(args.map)
    x = load_solution(args.solution, hmap)
    layout = light_levels(hmap, x, _params(args))
    print(format_light_grid(hmap, layout))
    print(f"torches: {layout.torches}")
    print(f"violations: {layout.violations}")
    return 0 if layout.violations == 0 else 1


def cmd_render(args) -> int:
    hmap = load_heightmap(args.map)
    layout = None
    if args.solution:
        layout = light_levels(hmap, load_solution(args.solution, hmap), _params(args))
    Path(args.out).write_bytes(to_ppm(render_rgb(hmap, layout, _params(args)), args.scale))
    return 0


def cmd_lse(args) -> int:
    """Report how the log-sum-exp constraints judge the zero and greedy layouts."""
    hmap = load_heightmap(args.map)
    params = _params(args)
    cov = coverage_matrix(hmap, params)
    greedy = np.zeros(hmap.n, dtype=np.int64)
    greedy[baselines.greedy_cover(baselines.to_setcover(cov))] = 1
    for alpha in args.alpha:
        cons = build_lse_constraints(hmap, params, alpha)
        coeffs = np.abs(np.concatenate([u for u, _ in cons]))
        nz = coeffs[coeffs > 0]
        spread = float(nz.max() / nz.min()) if nz.size else 1.0
        print(f"alpha={alpha:g} zero={lse_violations(cons, np.zeros(hmap.n))} "
              f"greedy={lse_violations(cons, greedy)} (exact {cov.violations(greedy)}) "
              f"coefficient spread={spread:.3g}")
    return 0


def cmd_export_qubo(args) -> int:
    hmap = load_heightmap(args.map)
    c = LinearConstraintSystem.from_coverage(coverage_matrix(hmap, _params(args)))
    if args.form == "slack":
        q = build_slack_qubo(c, args.beta if args.beta else c.n + 1)
    else:
        zeros = np.zeros(c.d.shape[0])
        q = build_admm_step_qubo(c, zeros, zeros, args.mu0)
    Path(args.out).write_text(export_qubo(q))
    print(f"wrote {args.out}: {q.n} variables")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torchplace", description="Torch placement via QUBO and ADMM.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def light_flags(p):
        p.add_argument("--l-torch", type=int, default=14)
        p.add_argument("--l-min", type=int, default=8)

    p = sub.add_parser("generate", help="write a Perlin-noise cave heightmap")
    p.add_argument("--width", type=_positive_int, required=True)
    p.add_argument("--height", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--wall-threshold", type=float, default=0.58)
    p.add_argument("--levels", type=_positive_int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="place torches with ADMM or the greedy baseline")
    p.add_argument("--map", required=True)
    p.add_argument("--solver", choices=SOLVER_CHOICES, default="tabusa")
    p.add_argument("--budget", type=_positive_int, default=30)
    p.add_argument("--mu0", type=float, default=0.01)
    p.add_argument("--rho", type=float, default=1.1)
    p.add_argument("--repeats", type=_positive_int, default=1)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--early-exit", action="store_true")
    p.add_argument("--anchor-scale", type=float, default=1.0)
    p.add_argument("--out-prefix", required=True)
    light_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="recompute light levels for a solution")
    p.add_argument("map")
    p.add_argument("solution")
    light_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="write a PPM image of a map and optional solution")
    p.add_argument("map")
    p.add_argument("--solution")
    p.add_argument("--scale", type=_positive_int, default=1)
    p.add_argument("--out", required=True)
    light_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("lse", help="diagnose the log-sum-exp constraint approximation")
    p.add_argument("map")
    p.add_argument("--alpha", type=float, nargs="+", default=[1.0, 5.0, 10.0])
    light_flags(p)
    p.set_defaults(func=cmd_lse)

    p = sub.add_parser("export-qubo", help="dump a QUBO for a map as text")
    p.add_argument("map")
    p.add_argument("--form", choices=["admm", "slack"], default="admm")
    p.add_argument("--mu0", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--out", required=True)
    light_flags(p)
    p.set_defaults(func=cmd_export_qubo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (HeightmapError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
