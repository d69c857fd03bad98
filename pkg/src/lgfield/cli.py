"""``lgfield`` command-line front end.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.
"""

import argparse
import json
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import __version__
from .config import AxisSpec, load_config, parse_config
from .errors import ConfigError, LGFieldError
from .kernels import build_kernels
from .quasiprob import Engine
from .scanner import evaluate, find_min, scan_plane, violation_summary
from .verify import run_suite

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def recipe_names():
    return sorted(
        p.name[:-5] for p in resources.files("lgfield.recipes").iterdir() if p.name.endswith(".json")
    )


def _load(args):
    if args.recipe and args.config:
        raise ConfigError("--recipe", "give either --config or --recipe, not both")
    if args.recipe:
        if args.recipe not in recipe_names():
            raise ConfigError("--recipe", f"unknown recipe {args.recipe!r}; "
                              f"available: {', '.join(recipe_names())}")
        text = resources.files("lgfield.recipes").joinpath(args.recipe + ".json").read_text()
        cfg = parse_config(json.loads(text))
    elif args.config in (None, "-"):
        cfg = load_config(sys.stdin)
    else:
        cfg = load_config(args.config)
    if args.engine:
        cfg = replace(cfg, quadrature=replace(cfg.quadrature, engine=Engine(args.engine)))
    return cfg


def _dump_json(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_axis(flag, text):
    parts = text.split(":")
    if len(parts) != 4:
        raise ConfigError(flag, "expected parameter:min:max:n")
    try:
        return AxisSpec(parts[0], float(parts[1]), float(parts[2]), int(parts[3]))
    except ValueError as exc:
        raise ConfigError(flag, str(exc)) from None


def cmd_compute(args):
    cfg = _load(args)
    res = evaluate(cfg)
    _dump_json(res.as_dict(), args.out or cfg.output.path)
    return EXIT_OK


def cmd_kernels(args):
    cfg = _load(args)
    q = cfg.physical_query()
    _dump_json(build_kernels(cfg.model, cfg.state, q.t1, q.t2).as_dict(), args.out)
    return EXIT_OK


def _fmt(v):
    return "%.17g" % v


def grid_csv(grid):
    lines = ["x_value,y_value,q,est_error,robust_negative"]
    mask = grid.sign_mask
    for i, x in enumerate(grid.x_values):
        for j, y in enumerate(grid.y_values):
            lines.append(",".join([
                _fmt(x), _fmt(y), _fmt(grid.values[i, j]), _fmt(grid.errors[i, j]),
                "1" if mask[i, j] else "0",
            ]))
    return "\n".join(lines) + "\n"


def grid_sidecar(grid, cfg, refine=True):
    fraction, min_q, crossings = violation_summary(grid)
    return {
        "config": cfg.to_dict(),
        "axes": {"x": grid.x.parameter, "y": grid.y.parameter,
                 "shape": [grid.x.n, grid.y.n]},
        "min_point": list(grid.min_point),
        "refined_min": list(find_min(grid, refine=refine)),
        "fraction_neg": fraction,
        "min_q": min_q,
        "threshold_crossings": [{"parameter": p, "value": v} for p, v in crossings],
        "failed_cells": [{"i": i, "j": j, "error": msg} for i, j, msg in grid.failures],
        "version": __version__,
    }


def cmd_scan(args):
    cfg = _load(args)
    axes = list(cfg.scan) if cfg.scan else [None, None]
    if args.x:
        axes[0] = _parse_axis("--x", args.x)
    if args.y:
        axes[1] = _parse_axis("--y", args.y)
    if axes[0] is None or axes[1] is None:
        raise ConfigError("scan", "two axes are required (config 'scan' or --x/--y)")
    if axes[0].parameter == axes[1].parameter:
        raise ConfigError("scan.y.parameter", "axes must bind distinct parameters")
    cfg = replace(cfg, scan=tuple(axes))

    grid = scan_plane(cfg, axes[0], axes[1], threads=max(1, args.threads))
    if grid.failures and not args.allow_partial:
        i, j, msg = grid.failures[0]
        print(f"lgfield: {grid.n_failed} cell(s) failed; first at ({i}, {j}): {msg}",
              file=sys.stderr)
        return EXIT_NUMERIC
    csv_text = grid_csv(grid)
    out = args.out or cfg.output.path
    sidecar = grid_sidecar(grid, cfg)
    if out:
        out = Path(out)
        out.write_text(csv_text)
        _dump_json(sidecar, out.with_suffix(".json"))
    else:
        sys.stdout.write(csv_text)
    if grid.failures:
        print(f"lgfield: {grid.n_failed} cell(s) failed (NaN in output)", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    width = 44
    print(f"{'check':<{width}} {'worst':>10} {'tol':>8} {'time':>7}  result")

    def show(res):
        status = "PASS" if res.passed else "FAIL"
        line = f"{res.name:<{width}} {res.worst:>10.2e} {res.tol:>8.0e} {res.seconds:>6.2f}s  {status}"
        if res.detail:
            line += f"  ({res.detail})"
        print(line, flush=True)

    results = run_suite(args.level, seed=args.seed, report=show)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failed: " + "; ".join(failed))
        return EXIT_VERIFY
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="lgfield", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lgfield {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="JSON config ('-' for stdin)")
        sp.add_argument("--recipe", metavar="NAME", help="use a packaged figure recipe")
        sp.add_argument("--engine", choices=[e.value for e in Engine])
        sp.add_argument("--out", metavar="PATH")

    sp = sub.add_parser("compute", help="evaluate one quasi-probability")
    common(sp)
    sp.set_defaults(func=cmd_compute)

    sp = sub.add_parser("kernels", help="dump the kernel set for a config")
    common(sp)
    sp.set_defaults(func=cmd_kernels)

    sp = sub.add_parser("scan", help="sweep a 2D parameter plane to CSV + JSON sidecar")
    common(sp)
    sp.add_argument("--x", metavar="P:MIN:MAX:N")
    sp.add_argument("--y", metavar="P:MIN:MAX:N")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--allow-partial", action="store_true")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("verify", help="run the self-check suite")
    sp.add_argument("level", nargs="?", choices=["quick", "full"], default="quick")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("recipes", help="list packaged figure recipes")
    sp.set_defaults(func=lambda a: print("\n".join(recipe_names())) or EXIT_OK)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"lgfield: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LGFieldError as exc:
        engine = getattr(exc, "engine", None)
        tag = f" [{engine}]" if engine else ""
        print(f"lgfield: numeric failure{tag}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ArithmeticError as exc:
        print(f"lgfield: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
