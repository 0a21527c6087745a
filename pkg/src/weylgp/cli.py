"""Command-line front end.

Every subcommand reads one section of a JSON config and writes its result to a
file, so intermediate stages stay inspectable and later stages can pick them up.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import expr as ex
from . import io
from .boundary import build_boundary, coordinate_names, spec_from_dict
from .diffalg import DiffAlgebraPresentation, make_presentation
from .gp import GaussianProcess, NumericalError, apply_matrix, field_grid, posterior, pushforward, sample_prior
from .janet import AssumptionError, IncompleteBasisError, janet_basis
from .orderings import ordering_from_dict
from .ore import OperatorMatrix, OreAlgebra
from .parsing import ParseError
from .render import quiver_svg
from .syzygy import intersect_parametrizations, left_kernel, parametrize, right_kernel

EXIT_OK, EXIT_CONFIG, EXIT_ALGEBRA, EXIT_NUMERIC = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class Context:
    def __init__(self, config_path: Path, args: argparse.Namespace):
        self.config_path = config_path
        try:
            text = config_path.read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}") from None
        try:
            self.config = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{config_path}: line {err.lineno}, column {err.colno}: {err.msg}") from None
        if not isinstance(self.config, dict):
            raise ConfigError("config must be a JSON object")
        self.base = config_path.parent
        self.out_dir = Path(args.out) if args.out else self.base
        self.args = args

    def section(self, name: str) -> dict:
        sec = self.config.get(name)
        if not isinstance(sec, dict):
            raise ConfigError(f"config has no '{name}' section")
        return sec

    def presentation(self, sec: dict) -> DiffAlgebraPresentation:
        ref = sec.get("presentation", self.config.get("presentation"))
        if ref is None:
            raise ConfigError("no presentation given")
        try:
            return io.load_presentation_ref(ref, self.base)
        except FileNotFoundError as err:
            raise ConfigError(f"presentation file not found: {err.filename}") from None

    def ordering(self, sec: dict):
        return ordering_from_dict(sec.get("ordering", self.config.get("ordering")))

    def output(self, sec: dict, default: str) -> Path:
        p = Path(sec.get("out", default))
        return p if p.is_absolute() else self.out_dir / p

    def input(self, ref: str) -> Path:
        """Upstream artifacts are looked up in the output directory first, then next to the config."""
        p = Path(ref)
        if p.is_absolute():
            candidates = [p]
        else:
            candidates = [self.out_dir / p, self.base / p]
        for c in candidates:
            if c.exists():
                return c
        raise ConfigError(f"missing input file {ref!r} (run the producing stage first)")

    def matrix(self, ref, ring: OreAlgebra) -> OperatorMatrix:
        if isinstance(ref, str):
            with open(self.input(ref), encoding="utf-8") as fh:
                ref = json.load(fh)
        return io.matrix_from_json(ref, ring)


def _generators(ring: OreAlgebra, items) -> list:
    if not isinstance(items, list) or not items:
        raise ConfigError("'generators' must be a non-empty list")
    if all(isinstance(g, str) for g in items):
        return [ring.parse(g) for g in items]
    return [ring.vector([ring.parse(s) for s in row]) for row in items]


def _emit(ctx: Context, path: Path, payload: dict, summary: dict) -> None:
    io.write_json(path, payload)
    summary = dict(summary, out=str(path))
    print(json.dumps(summary, sort_keys=True))


def cmd_janet(ctx: Context) -> None:
    sec = ctx.section("janet")
    ring = OreAlgebra(ctx.presentation(sec))
    gens = _generators(ring, sec.get("generators"))
    basis = janet_basis(gens, ctx.ordering(sec))
    _emit(ctx, ctx.output(sec, "janet_basis.json"), basis.to_dict(),
          {"command": "janet", "elements": len(basis.elements)})


def cmd_nullspace(ctx: Context) -> None:
    sec = ctx.section("nullspace")
    side = ctx.args.side or sec.get("side", "right")
    if side not in ("left", "right"):
        raise ConfigError("side must be 'left' or 'right'")
    ring = OreAlgebra(ctx.presentation(sec))
    A = ctx.matrix(sec.get("matrix"), ring)
    K = (left_kernel if side == "left" else right_kernel)(A, ctx.ordering(sec))
    payload = dict(io.matrix_to_json(K), side=side)
    _emit(ctx, ctx.output(sec, f"{side}_kernel.json"), payload,
          {"command": "nullspace", "side": side, "shape": list(K.shape)})


def cmd_parametrize(ctx: Context) -> None:
    sec = ctx.section("parametrize")
    ring = OreAlgebra(ctx.presentation(sec))
    A = ctx.matrix(sec.get("matrix"), ring)
    res = parametrize(A, ctx.ordering(sec))
    _emit(ctx, ctx.output(sec, "parametrization.json"), res.to_dict(),
          {"command": "parametrize", "parametrizable": res.parametrizable})


def cmd_intersect(ctx: Context) -> None:
    sec = ctx.section("intersect")
    if "boundary" in sec:
        P = ctx.presentation(sec) if ("presentation" in sec or "presentation" in ctx.config) else None
        spec = spec_from_dict(sec["boundary"], P)
        bres = build_boundary(spec)
        if bres.numeric_only:
            raise ConfigError(f"boundary kind {spec.kind!r} is numeric-only and cannot enter symbolic intersection")
        ring = OreAlgebra(bres.presentation)
        B2 = bres.matrix
    else:
        ring = OreAlgebra(ctx.presentation(sec))
        if "B2" not in sec:
            raise ConfigError("intersect needs 'B2' or 'boundary'")
        B2 = ctx.matrix(sec["B2"], ring)
    if "B1" not in sec:
        raise ConfigError("intersect needs 'B1'")
    B1 = ctx.matrix(sec["B1"], ring)
    res = intersect_parametrizations(B1, B2, ctx.ordering(sec))
    payload = {
        "presentation": ring.presentation.to_dict(),
        "P": res.P.to_strings(), "P_shape": list(res.P.shape),
        "C1": res.C1.to_strings(), "C2": res.C2.to_strings(),
        "identity": "B1*C1 + B2*C2 = 0",
    }
    _emit(ctx, ctx.output(sec, "intersection.json"), payload,
          {"command": "intersect", "shape": list(res.P.shape)})


def _box(sec: dict) -> list[tuple[float, float]]:
    grid = sec.get("grid")
    if not isinstance(grid, dict) or "box" not in grid:
        raise ConfigError("gp needs grid.box")
    return [(io.eval_number(lo), io.eval_number(hi)) for lo, hi in grid["box"]]


def build_process(ctx: Context, sec: dict):
    """Prior process, its presentation and an operator description from a gp section."""
    ls = ctx.args.lengthscale if ctx.args.lengthscale is not None else float(sec.get("lengthscale", 1.0))
    if ls <= 0:
        raise ConfigError("lengthscale must be positive")
    if "boundary" in sec:
        spec = spec_from_dict(sec["boundary"], None)
        bres = build_boundary(spec)
        if bres.numeric_only:
            coords = coordinate_names(spec.d if spec.kind != "codim2-axis" else 3)
            P = make_presentation([], ["d" + c for c in coords], [], [], coords)
            B = bres.exprs
        else:
            P = bres.presentation
            B = bres.matrix
    else:
        if "P" not in sec:
            raise ConfigError("gp needs an operator matrix 'P' or a 'boundary'")
        ref = sec["P"]
        if isinstance(ref, str):
            with open(ctx.input(ref), encoding="utf-8") as fh:
                doc = json.load(fh)
            P = io.load_presentation_ref(doc["presentation"]) if isinstance(doc, dict) and "presentation" in doc \
                else ctx.presentation(sec)
            B = io.matrix_from_json(doc, OreAlgebra(P))
        else:
            P = ctx.presentation(sec)
            B = io.matrix_from_json(ref, OreAlgebra(P))
    rows = B.rows if isinstance(B, OperatorMatrix) else B
    base = GaussianProcess.independent_se(P.coordinates, len(rows[0]), ls)
    g = pushforward(B, base, P)
    if "mean_potential" in sec:
        pot = ex.parse_expr(str(sec["mean_potential"]), P.coordinates)
        R = OreAlgebra(P)
        default = [["dy"], ["-dx"]] if P.d == 2 else None
        op_src = sec.get("mean_operator", default)
        if op_src is None:
            raise ConfigError("mean_operator is required outside the plane")
        M = io.matrix_from_json(op_src, R)
        if M.nrows != g.ell or M.ncols != 1:
            raise ConfigError(f"mean_operator must be {g.ell} x 1")
        g = g.with_mean(apply_matrix(M, [pot], P, "x"))
    return g, P


def cmd_gp(ctx: Context) -> None:
    """A ``gp`` section may also be a list of sections, run in order."""
    secs = ctx.config.get("gp")
    if isinstance(secs, list) and secs and all(isinstance(s, dict) for s in secs):
        for sec in secs:
            _run_gp(ctx, sec)
    else:
        _run_gp(ctx, ctx.section("gp"))


def _run_gp(ctx: Context, sec: dict) -> None:
    g, P = build_process(ctx, sec)
    data = io.read_data_csv(ctx.input(sec["data"]), g.d) if sec.get("data") else None
    post = posterior(g, data if data is not None else io.DataSet.empty(g.d))
    box = _box(sec)
    res = sec["grid"].get("resolution", 31)
    region = io.region_predicate(sec["region"], P.coordinates) if sec.get("region") else None
    grid = field_grid(post, box, res, region, threads=max(1, ctx.args.threads or 1))
    out = ctx.output(sec, "grid.csv")
    io.write_grid_csv(out, grid)
    summary = {"command": "gp", "out": str(out), "points": int(grid.inside.sum()),
               "jitter_used": bool(post.jitter_used)}
    if sec.get("samples"):
        n = int(sec["samples"].get("n", 1))
        pts = grid.points[grid.inside]
        draws = sample_prior(post, pts, seed=ctx.args.seed, n_samples=n)
        spath = ctx.output(sec["samples"], "samples.npy")
        spath.parent.mkdir(parents=True, exist_ok=True)
        np.save(spath, draws)
        summary["samples"] = str(spath)
    if sec.get("svg"):
        if g.ell != 2 or g.d != 2:
            raise ConfigError("SVG rendering needs a planar field with two components")
        svg = quiver_svg(grid.axes, grid.mean, grid.inside, data.points if data is not None else None,
                         float(sec.get("arrow_scale", 1.0)), stride=int(sec.get("stride", 1)))
        spath = ctx.output({"out": sec["svg"]}, "field.svg")
        spath.write_text(svg, encoding="utf-8")
        summary["svg"] = str(spath)
    print(json.dumps(summary, sort_keys=True))


def cmd_render(ctx: Context) -> None:
    sec = ctx.section("render")
    pts, mean, _ = io.read_grid_csv(ctx.input(sec["grid"]))
    if pts.shape[1] != 2 or mean.shape[1] != 2:
        raise ConfigError("render needs a planar grid with two mean components")
    axes = [np.unique(pts[:, 0]), np.unique(pts[:, 1])]
    if len(axes[0]) * len(axes[1]) != len(pts):
        raise ConfigError("grid CSV is not a full tensor grid")
    inside = np.isfinite(mean[:, 0])
    data_pts = None
    if sec.get("data"):
        data_pts = io.read_data_csv(ctx.input(sec["data"]), 2).points
    scale = ctx.args.arrow_scale if ctx.args.arrow_scale is not None else float(sec.get("scale", 1.0))
    svg = quiver_svg(axes, mean, inside, data_pts, scale, stride=int(sec.get("stride", 1)))
    out = ctx.output(sec, "field.svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg, encoding="utf-8")
    print(json.dumps({"command": "render", "out": str(out)}, sort_keys=True))


COMMANDS = {
    "janet": cmd_janet,
    "nullspace": cmd_nullspace,
    "parametrize": cmd_parametrize,
    "intersect": cmd_intersect,
    "gp": cmd_gp,
    "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config with one section per stage")
    common.add_argument("--out", help="output directory (default: next to the config)")
    common.add_argument("--seed", type=int, default=0, help="seed for sampling")
    common.add_argument("--threads", type=int, default=1, help="workers for grid evaluation")
    common.add_argument("--lengthscale", type=float, default=None, help="override the kernel lengthscale")
    parser = argparse.ArgumentParser(prog="weylgp", description="Linear PDE constrained Gaussian processes.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("janet", parents=[common], help="Janet basis of a generator set")
    ns = sub.add_parser("nullspace", parents=[common], help="left or right kernel of a matrix")
    ns.add_argument("--side", choices=("left", "right"), default=None)
    sub.add_parser("parametrize", parents=[common], help="parametrization and controllability test")
    sub.add_parser("intersect", parents=[common], help="intersect two parametrizations")
    sub.add_parser("gp", parents=[common], help="condition the pushforward process and evaluate a grid")
    rd = sub.add_parser("render", parents=[common], help="SVG quiver plot of a grid CSV")
    rd.add_argument("--arrow-scale", type=float, default=None, help="arrow length relative to grid spacing")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("side", "arrow_scale"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        ctx = Context(Path(args.config), args)
        COMMANDS[args.command](ctx)
    except NumericalError as err:
        print(f"error: numeric stage failed: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except np.linalg.LinAlgError as err:
        print(f"error: numeric stage failed: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (AssumptionError, IncompleteBasisError) as err:
        print(f"error: algebra stage failed: {err}", file=sys.stderr)
        return EXIT_ALGEBRA
    except ArithmeticError as err:
        print(f"error: algebra stage failed: {err}", file=sys.stderr)
        return EXIT_ALGEBRA
    except ParseError as err:
        print(f"error: parse error at line {err.line}, column {err.column}: {err.message}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ValueError, KeyError, OSError) as err:
        print(f"error: invalid config: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
