"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .experiment import (
    CampaignAborted,
    CampaignConfig,
    DEFAULT_JITTER,
    DEFAULT_TRIALS,
    convergence_study,
    default_h_grid,
    run_campaign,
)
from .fem import SolverError
from .laws import sigmoid_law, two_steps_law
from .linalg import DEFAULT_TOL
from .meshgen import MeshParams, MeshQualityError, generate_mesh, mesh_statistics, write_mesh
from .problems import make_case

log = logging.getLogger("femprob")

CONVERGENCE_GRID = (0.2, 0.1, 0.05)
FAILED_MARKER = ".failed"


class UsageError(Exception):
    pass


def _degree(text):
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"degree must be an integer in 1..4, got {text!r}") from None
    if not 1 <= k <= 4:
        raise argparse.ArgumentTypeError(f"degree must be an integer in 1..4, got {k}")
    return k


def _positive_float(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return x


def _float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise argparse.ArgumentTypeError("mesh sizes must be positive numbers")
    return vals


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an unsigned 64-bit integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed out of range: {text}")
    return v


def _add_grid(p):
    p.add_argument("--h-min", type=_positive_float)
    p.add_argument("--h-max", type=_positive_float)
    p.add_argument("--h-steps", type=int)
    p.add_argument("--h-list", type=_float_list)


def _add_case(p):
    p.add_argument("--case", choices=("runge", "smooth", "patch"), required=True)
    p.add_argument("--alpha", type=_positive_float)
    p.add_argument("--patch-degree", type=_degree, default=1,
                   help="degree of the harmonic polynomial for --case patch")


def _add_numerics(p):
    p.add_argument("--quad-degree", type=int, help="assembly quadrature degree override")
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)
    p.add_argument("--seminorm", action="store_true", help="measure the H1 seminorm only")


def build_parser():
    parser = argparse.ArgumentParser(prog="femprob", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("campaign", help="Monte-Carlo frequency campaign for P_k vs P_m")
    _add_case(p)
    p.add_argument("--k", type=_degree, required=True)
    p.add_argument("--m", type=_degree, required=True)
    _add_grid(p)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--jitter", type=float, default=DEFAULT_JITTER)
    p.add_argument("--min-angle", type=float, default=20.0)
    _add_numerics(p)
    p.add_argument("--law", choices=("two-steps", "sigmoid", "both"), default="both")
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--emit-samples", action="store_true")
    p.add_argument("--emit-svg", action="store_true")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("convergence", help="error vs h on structured meshes")
    _add_case(p)
    p.add_argument("--k", type=_degree, required=True)
    _add_grid(p)
    p.add_argument("--seed", type=_u64, default=0)
    _add_numerics(p)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("laws", help="tabulate the two-steps and sigmoid laws")
    p.add_argument("--h-star", type=_positive_float, required=True)
    p.add_argument("--k", type=_degree, required=True)
    p.add_argument("--m", type=_degree, required=True)
    _add_grid(p)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("mesh-dump", help="write one generated mesh as text")
    p.add_argument("--h-max", type=_positive_float, required=True)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--jitter", type=float, default=DEFAULT_JITTER)
    p.add_argument("--min-angle", type=float, default=20.0)
    p.add_argument("--out", type=Path, default=Path("."))
    return parser


def _grid(args, default, required=True):
    ranged = (args.h_min, args.h_max, args.h_steps)
    if args.h_list is not None:
        if any(v is not None for v in ranged):
            raise UsageError("--h-list cannot be combined with --h-min/--h-max/--h-steps")
        return sorted(args.h_list)
    if any(v is not None for v in ranged):
        if any(v is None for v in ranged):
            raise UsageError("--h-min, --h-max and --h-steps must be given together")
        if args.h_steps < 1 or args.h_max < args.h_min:
            raise UsageError("need --h-steps >= 1 and --h-min <= --h-max")
        if args.h_steps == 1:
            return [args.h_min]
        return [float(v) for v in np.linspace(args.h_min, args.h_max, args.h_steps)]
    if default is None and required:
        raise UsageError("give --h-list or --h-min/--h-max/--h-steps")
    return list(default) if default is not None else None


def _check_case(args):
    if args.case == "runge" and args.alpha is None:
        raise UsageError("--case runge needs --alpha")
    if args.quad_degree is not None and args.quad_degree < 0:
        raise UsageError("--quad-degree must be non-negative")


class _Outputs:
    """Tracks files written by one command so a failure leaves none behind.

    ``names`` are every file the command may produce; stale copies from an
    earlier run are cleared up front so the directory never mixes runs.
    """

    def __init__(self, out: Path, names):
        self.out = out
        self.names = tuple(names)
        self.written = []

    def path(self, name):
        p = self.out / name
        self.written.append(p)
        return p

    def begin(self):
        self.out.mkdir(parents=True, exist_ok=True)
        for name in self.names + (FAILED_MARKER,):
            (self.out / name).unlink(missing_ok=True)

    def fail(self, message):
        for p in self.written:
            p.unlink(missing_ok=True)
        try:
            self.out.mkdir(parents=True, exist_ok=True)
            (self.out / FAILED_MARKER).write_text(message + "\n")
        except OSError:
            pass


def cmd_campaign(args):
    _check_case(args)
    if not args.k < args.m:
        raise UsageError(f"need --k < --m, got k={args.k}, m={args.m}")
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    grid = _grid(args, default_h_grid(args.case))
    try:
        config = CampaignConfig(
            case=args.case, k=args.k, m=args.m, h_grid=tuple(grid), trials=args.trials,
            master_seed=args.seed, alpha=args.alpha, patch_degree=args.patch_degree,
            jitter=args.jitter, min_angle_deg=args.min_angle, tol=args.tol,
            quad_degree=args.quad_degree, seminorm=args.seminorm,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    outputs = _Outputs(args.out, ("frequencies.csv", "samples.csv", "comparison.svg"))
    outputs.begin()
    try:
        table = run_campaign(config, workers=args.workers)
        io.write_frequency_csv(table, outputs.path("frequencies.csv"))
        if args.emit_samples:
            io.write_samples_csv(table.samples, outputs.path("samples.csv"))
        if args.emit_svg:
            laws = {}
            if args.law in ("two-steps", "both"):
                laws["two-steps law"] = [r.two_steps for r in table.rows]
            if args.law in ("sigmoid", "both"):
                laws["sigmoid law"] = [r.sigmoid for r in table.rows]
            title = f"P{config.k} vs P{config.m}, {config.case}"
            if config.case == "runge":
                title += f" (alpha={config.alpha:g})"
            svg = io.comparison_svg(table.h, table.frequency, laws, table.h_star, title)
            io.write_text(outputs.path("comparison.svg"), svg)
    except (CampaignAborted, OSError) as exc:
        outputs.fail(str(exc))
        print(f"femprob: campaign failed: {exc}", file=sys.stderr)
        return 1

    print(f"h_star_estimate={io.fmt(table.h_star)}")
    print(f"coef_k={io.fmt(table.coef_k.value)} (P{config.k}, {table.coef_k.sample_count} samples)")
    print(f"coef_m={io.fmt(table.coef_m.value)} (P{config.m}, {table.coef_m.sample_count} samples)")
    n_failed = sum(r.n_failed for r in table.rows)
    print(f"failed_trials={n_failed}")
    return 0


def cmd_convergence(args):
    _check_case(args)
    grid = _grid(args, CONVERGENCE_GRID)
    if len(grid) < 3:
        raise UsageError("a convergence study needs at least three mesh sizes")
    grid = sorted(set(grid), reverse=True)
    case = make_case(args.case, args.alpha, args.patch_degree)
    outputs = _Outputs(args.out, ("convergence.csv",))
    outputs.begin()
    try:
        result = convergence_study(case, args.k, grid, seed=args.seed, tol=args.tol,
                                   quad_degree=args.quad_degree, seminorm=args.seminorm)
        io.write_convergence_csv(result, outputs.path("convergence.csv"))
    except (SolverError, MeshQualityError, OSError) as exc:
        outputs.fail(str(exc))
        print(f"femprob: convergence study failed: {exc}", file=sys.stderr)
        return 1
    for h, e in zip(result.h_actual, result.errors):
        print(f"h={io.fmt(h)} error={io.fmt(e)}")
    print("slope=" + ("n/a" if result.slope is None else f"{result.slope:.6g}"))
    return 0


def cmd_laws(args):
    if not args.k < args.m:
        raise UsageError(f"need --k < --m, got k={args.k}, m={args.m}")
    grid = _grid(args, None)
    rows = [(h, two_steps_law(h, args.h_star), sigmoid_law(h, args.h_star, args.k, args.m))
            for h in grid]
    if args.out is None:
        io.write_laws_csv(rows, sys.stdout)
        return 0
    outputs = _Outputs(args.out, ("laws.csv",))
    outputs.begin()
    try:
        io.write_laws_csv(rows, outputs.path("laws.csv"))
    except OSError as exc:
        outputs.fail(str(exc))
        print(f"femprob: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_mesh_dump(args):
    try:
        params = MeshParams(args.h_max, args.seed, args.jitter, args.min_angle)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    outputs = _Outputs(args.out, ("mesh.txt",))
    outputs.begin()
    try:
        mesh = generate_mesh(params)
        write_mesh(mesh, outputs.path("mesh.txt"))
    except (MeshQualityError, OSError) as exc:
        outputs.fail(str(exc))
        print(f"femprob: {exc}", file=sys.stderr)
        return 1
    st = mesh_statistics(mesh)
    print(f"triangles={st.num_triangles} h_actual={io.fmt(st.h_actual)} "
          f"min_angle={st.min_angle:.4f} max_aspect_ratio={st.max_aspect_ratio:.4f}")
    return 0


COMMANDS = {
    "campaign": cmd_campaign,
    "convergence": cmd_convergence,
    "laws": cmd_laws,
    "mesh-dump": cmd_mesh_dump,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2


if __name__ == "__main__":
    sys.exit(main())
