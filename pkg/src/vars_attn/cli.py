"""Command-line entry point: ``vars-attn {solve,ode,vars,toy,fixtures,check}``.

Data goes to stdout as CSV. Errors go to stderr as ``category: message`` and
set the exit status: 2 for usage/argument problems, 3 for unreadable or
malformed files, 4 for numeric failures. ``check`` exits 1 when a check fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings

import numpy as np

from . import checks, io
from .attention import TokenMatrix, self_attention_baseline, vars_d, vars_s, vars_sd
from .dictionary import build_dynamic, build_static, combine, gabor_kernel, random_projection
from .dynamics import IntegratorConfig, integrate_encoder_decoder, integrate_linear_recurrent, integrate_sparse_dynamics
from .errors import FormatError, NumericError, VarsError
from .fixtures import DEFAULT_SEED, make_fixtures
from .solver import SolverConfig, ista_solve
from .toy import TOY_CONFIG, RecurrentSpec, make_scene, outputs_to_image, simulate_toy

EXIT_USAGE, EXIT_FILE, EXIT_NUMERIC, EXIT_CHECK_FAILED = 2, 3, 4, 1


def default_seed() -> int:
    env = os.environ.get("VARS_SEED")
    return int(env) if env not in (None, "") else DEFAULT_SEED


def _fmt(v) -> str:
    return repr(float(v))


def _grid(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None


def _solver_cfg(args) -> SolverConfig:
    if args.tol is not None:
        return SolverConfig.converge(args.lam, tol=args.tol)
    return SolverConfig(lam=args.lam, steps=args.steps)


def _add_solver_flags(p, default_steps=3):
    p.add_argument("--lambda", dest="lam", type=float, default=0.3)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--steps", type=int, default=default_steps)
    g.add_argument("--tol", type=float, default=None)


def cmd_solve(args, out) -> int:
    p = io.read_csv_matrix(args.dict)
    x = io.read_vector(args.input)
    sc = ista_solve(p, x, _solver_cfg(args))
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["code", *map(_fmt, sc.code)])
    w.writerow(["support_size", sc.support_size])
    w.writerow(["converged", int(sc.converged)])
    w.writerow(["objective", *map(_fmt, sc.objective_trace)])
    return 0


def cmd_ode(args, out) -> int:
    p = io.read_csv_matrix(args.dict)
    x = io.read_vector(args.input)
    cfg = IntegratorConfig(dt=args.dt, t_max=args.tmax, alpha=args.alpha, beta=args.beta, gamma=args.gamma,
                           lam=args.lam, equilibrium_tol=args.eq_tol)
    if args.mode == "linear":
        state = integrate_linear_recurrent(p @ p.T, x, cfg=cfg)
    elif args.mode == "encdec":
        state = integrate_encoder_decoder(p, x, cfg)
    else:
        state = integrate_sparse_dynamics(p, x, cfg)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t", "dz_norm", "du_norm", "E"])
    rows = list(state.trajectory.rows())
    every = max(1, args.every)
    for i, row in enumerate(rows):
        if i % every == 0 or i == len(rows) - 1:
            w.writerow([_fmt(v) for v in row])
    return 0


def _load_tokens(path, grid):
    t = io.read_tensor(path)
    if t.ndim == 3:
        h, w, c = t.shape
        if grid is not None and tuple(grid) != (h, w):
            raise FormatError(f"--grid {grid} disagrees with tensor shape {t.shape}")
        return TokenMatrix(t.reshape(h * w, c), (h, w))
    if t.ndim != 2:
        raise FormatError(f"token tensor must be 2-D or 3-D, got shape {t.shape}")
    return TokenMatrix(t, grid)


def cmd_vars(args, out) -> int:
    tm = _load_tokens(args.input, args.grid)
    cfg = _solver_cfg(args)
    if args.proj:
        proj = io.read_csv_matrix(args.proj)
    else:
        proj = random_projection(tm.n_channels, args.features or tm.n_channels, seed=args.seed)
    grid = tm.grid
    if args.variant in ("s", "sd"):
        if grid is None:
            raise FormatError("static dictionaries need a token grid (3-D input or --grid)")
        kernel = io.read_csv_matrix(args.kernel) if args.kernel else gabor_kernel(3)
        static = build_static(kernel, grid)
    if args.variant == "s":
        res = vars_s(tm, static, cfg)
    elif args.variant == "d":
        res = vars_d(tm, proj, cfg)
    elif args.variant == "sd":
        res = vars_sd(tm, combine(static, build_dynamic(tm.tokens, proj)), cfg)
    else:
        res = self_attention_baseline(tm, proj)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["channel", "effective_lambda", "support_size", "objective", "converged"])
    for mu, sc in enumerate(res.diagnostics):
        w.writerow([mu, _fmt(sc.effective_lambda), sc.support_size, _fmt(sc.objective_trace[-1]), int(sc.converged)])
    if args.out_z:
        z = res.output.reshape(*grid, -1) if grid is not None else res.output
        io.write_vt(args.out_z, z)
    if args.out_map:
        img = res.saliency.reshape(grid) if grid is not None else res.saliency[None, :]
        io.write_pgm(args.out_map, img)
    return 0


def cmd_toy(args, out) -> int:
    scene = make_scene(args.scene, args.grid, b=args.b, boundary=args.boundary, seed=args.seed)
    mode = "excitation_only" if args.no_inhibition else "excitation_and_inhibition"
    spec = RecurrentSpec(args.alpha, args.beta, mode)
    with warnings.catch_warnings():
        if args.quiet:
            warnings.simplefilter("ignore", RuntimeWarning)
        z = simulate_toy(scene.grid, spec, TOY_CONFIG)
    grid = scene.grid
    idx = grid.unit_index()
    contour = set(scene.contour_units.tolist())
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["row", "col", "orientation", "contour", "output"])
    for r, c in zip(*np.nonzero(grid.occupied)):
        u = idx[r, c]
        w.writerow([r, c, _fmt(grid.orientation[r, c]), int(u in contour), _fmt(z[u])])
    if args.out_map:
        img = outputs_to_image(grid, z)
        top = img.max()
        io.write_pgm(args.out_map, img / top if top > 0 else img)
    return 0


def cmd_fixtures(args, out) -> int:
    manifest = make_fixtures(args.seed, args.out)
    out.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_check(args, out) -> int:
    results = checks.run_suite(args.suite)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["check", "status", "measured", "tolerance", "seconds", "detail"])
    for r in results:
        w.writerow([r.name, "PASS" if r.passed else "FAIL", f"{r.measured:.3e}", f"{r.tolerance:.1e}",
                    f"{r.seconds:.2f}", r.detail])
    return 0 if all(r.passed for r in results) else EXIT_CHECK_FAILED


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"usage: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="vars-attn", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=None, help="RNG seed (default: $VARS_SEED or 42)")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="ISTA lasso solve")
    p.add_argument("--dict", required=True)
    p.add_argument("--input", required=True)
    _add_solver_flags(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("ode", help="integrate recurrent dynamics, print the trajectory")
    p.add_argument("--mode", choices=("linear", "encdec", "sparse"), default="sparse")
    p.add_argument("--dict", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--tmax", type=float, default=200.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.3)
    p.add_argument("--eq-tol", type=float, default=1e-8)
    p.add_argument("--every", type=int, default=1, help="print every n-th step")
    p.set_defaults(fn=cmd_ode)

    p = sub.add_parser("vars", help="VARS attention over a token tensor")
    p.add_argument("--variant", choices=("s", "d", "sd", "sa"), default="s")
    p.add_argument("--input", required=True, help="VT01 (h x w x C or N x C) or CSV tokens")
    p.add_argument("--grid", type=_grid, default=None)
    p.add_argument("--kernel", default=None)
    p.add_argument("--proj", default=None)
    p.add_argument("--features", type=int, default=None)
    _add_solver_flags(p)
    p.add_argument("--out-map", default=None)
    p.add_argument("--out-z", default=None)
    p.set_defaults(fn=cmd_vars)

    p = sub.add_parser("toy", help="orientation-bar saliency toy model")
    p.add_argument("--scene", choices=("contour", "texture", "random"), default="contour")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--grid", type=_grid, default=(9, 9))
    p.add_argument("--boundary", choices=("torus", "open"), default="torus")
    p.add_argument("--no-inhibition", action="store_true")
    p.add_argument("--out-map", default=None)
    p.add_argument("--quiet", action="store_true", help="silence stability warnings")
    p.set_defaults(fn=cmd_toy)

    p = sub.add_parser("fixtures", help="write canonical fixtures and a manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_fixtures)

    p = sub.add_parser("check", help="run acceptance / property suites")
    p.add_argument("--suite", choices=("all", *checks.SUITES), default="all")
    p.set_defaults(fn=cmd_check)
    return ap


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    if args.seed is None:
        args.seed = default_seed()
    try:
        return args.fn(args, out)
    except (FormatError, OSError) as exc:
        category = getattr(exc, "category", "io")
        print(f"{category}: {exc}", file=sys.stderr)
        return EXIT_FILE
    except NumericError as exc:
        print(f"{exc.category}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except VarsError as exc:
        print(f"{exc.category}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
