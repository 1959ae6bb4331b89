"""Command-line surface: theory curves, edges, simulation, comparison, detection.

Curves and histograms stream as CSV (header row, %.12g, a leading manifest
comment); scalar reports stream as JSON with the manifest embedded.
Exit codes: 0 ok, 2 usage error, 3 solver failure, 4 resource limit.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .comparison import bin_averaged_theory, compare_histogram
from .core import AspectRatios, ProblemShape, to_ratios
from .detection import DEFAULT_MARGIN, detect_outliers
from .edges import EdgeEstimate, edges
from .ensemble import (
    DEFAULT_BLOCK_SIZE,
    EnsembleConfig,
    MemoryBudgetError,
    choose_block_size,
    run_ensemble,
    worker_count,
)
from .stieltjes import BranchSelectionError, default_eta, density_curve

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_RESOURCE = 4

_FMT = "%.12g"


def _fmt(value: float) -> str:
    return _FMT % value


class _CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _add_shape_flags(parser):
    parser.add_argument("--px", type=float, help="aspect ratio t/nx")
    parser.add_argument("--py", type=float, help="aspect ratio t/ny")
    parser.add_argument("--t", type=int, help="number of samples")
    parser.add_argument("--nx", type=int, help="first dataset dimension")
    parser.add_argument("--ny", type=int, help="second dataset dimension")
    parser.add_argument("--sigma-x", type=float, default=1.0, help="first noise scale")
    parser.add_argument("--sigma-y", type=float, default=1.0, help="second noise scale")


def _resolve_geometry(args, need_shape=False):
    """(ratios, shape or None) from either ratio flags or shape flags."""
    has_ratios = args.px is not None or args.py is not None
    has_shape = args.t is not None or args.nx is not None or args.ny is not None
    if has_ratios and has_shape:
        raise _CliError("give either --px/--py or --t/--nx/--ny, not both", EXIT_USAGE)
    if has_shape:
        if args.t is None or args.nx is None or args.ny is None:
            raise _CliError("shape input needs all of --t, --nx, --ny", EXIT_USAGE)
        shape = ProblemShape(args.t, args.nx, args.ny, args.sigma_x, args.sigma_y)
        return to_ratios(shape), shape
    if has_ratios:
        if need_shape:
            raise _CliError("this command needs --t/--nx/--ny (simulation sizes)", EXIT_USAGE)
        if args.px is None or args.py is None:
            raise _CliError("ratio input needs both --px and --py", EXIT_USAGE)
        return AspectRatios(args.px, args.py), None
    raise _CliError("no geometry given: use --px/--py or --t/--nx/--ny", EXIT_USAGE)


def _manifest(command, params, regime=None):
    manifest = {"command": command, "params": params, "version": __version__}
    if regime is not None:
        manifest["regime"] = regime
    return manifest


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(payload, path):
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", path)


def _emit_table(manifest, header, rows, path):
    lines = ["# manifest: " + json.dumps(manifest, sort_keys=True)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _emit("\n".join(lines) + "\n", path)


def _geometry_params(args, ratios, shape):
    if shape is not None:
        return {
            "t": shape.t,
            "nx": shape.nx,
            "ny": shape.ny,
            "sigma_x": shape.sigma_x,
            "sigma_y": shape.sigma_y,
        }
    return {"px": ratios.px, "py": ratios.py}


def cmd_density(args) -> int:
    ratios, shape = _resolve_geometry(args)
    eta = args.eta if args.eta is not None else default_eta(ratios)
    curve = density_curve(
        ratios,
        shape=shape,
        grid_points=args.grid_points,
        eta=eta,
        scaled=args.scaled,
    )
    params = _geometry_params(args, ratios, shape)
    params.update(grid_points=args.grid_points, eta=eta, scaled=args.scaled,
                  zero_mass=curve.zero_mass)
    manifest = _manifest("density", params)
    if args.format == "json":
        _emit_json(
            {
                "manifest": manifest,
                "curve": {
                    "gamma": curve.abscissa.tolist(),
                    "density": curve.density.tolist(),
                    "zero_mass": curve.zero_mass,
                    "variable": curve.variable,
                    "scaled": curve.scaled,
                },
            },
            args.output,
        )
    else:
        _emit_table(manifest, ("gamma", "density"),
                    zip(curve.abscissa, curve.density), args.output)
    return EXIT_OK


def _band_dict(estimate: EdgeEstimate) -> dict:
    return {
        "lower": estimate.band.lower,
        "upper": estimate.band.upper,
        "regime": estimate.regime,
    }


def cmd_edges(args) -> int:
    ratios, shape = _resolve_geometry(args)
    numeric = edges(ratios, "numeric")
    closed = edges(ratios, "auto_limit")
    report = {
        "numeric": _band_dict(numeric),
        "closed_form": _band_dict(closed),
    }
    if closed.regime != "numeric" and numeric.band.upper > 0:
        report["relative_gap"] = {
            "upper": abs(closed.band.upper - numeric.band.upper) / numeric.band.upper,
            "lower": (
                abs(closed.band.lower - numeric.band.lower) / numeric.band.lower
                if numeric.band.lower > 0
                else abs(closed.band.lower - numeric.band.lower)
            ),
        }
    if args.scaled:
        factor = float(np.sqrt(ratios.px * ratios.py))
        report["scaled_numeric"] = {
            "lower": numeric.band.lower * factor,
            "upper": numeric.band.upper * factor,
        }
    params = _geometry_params(args, ratios, shape)
    params.update(mode=args.mode, scaled=args.scaled)
    _emit_json({"manifest": _manifest("edges", params, regime=closed.regime), **report},
               args.output)
    return EXIT_OK


def _ensemble_config(args, shape) -> EnsembleConfig:
    block = choose_block_size(shape, args.block_size, args.max_mem)
    return EnsembleConfig(
        shape=shape,
        realizations=args.realizations,
        master_seed=args.seed,
        bins=args.bins,
        scale_by_sqrt_pxpy=args.scaled,
        block_size=block,
    )


def _ensemble_params(args, config: EnsembleConfig) -> dict:
    shape = config.shape
    return {
        "t": shape.t,
        "nx": shape.nx,
        "ny": shape.ny,
        "sigma_x": shape.sigma_x,
        "sigma_y": shape.sigma_y,
        "realizations": config.realizations,
        "seed": config.master_seed,
        "bins": config.bins,
        "scaled": config.scale_by_sqrt_pxpy,
        "block_size": config.block_size,
    }


def _result_summary(result) -> dict:
    return {
        "zero_modes_per_realization": result.zero_modes_per_realization,
        "realized": result.realized,
        "seed": result.seed,
        "empirical_min": result.empirical_min,
        "empirical_max": result.empirical_max,
        "zero_mass": result.histogram.zero_mass,
        "numerical_zeros_total": result.meta["numerical_zeros_total"],
        "theory_band": list(result.meta["theory_band"]),
    }


def cmd_simulate(args) -> int:
    _, shape = _resolve_geometry(args, need_shape=True)
    config = _ensemble_config(args, shape)
    result = run_ensemble(config, worker_count(args.workers))
    manifest = _manifest("simulate", _ensemble_params(args, config))
    hist = result.histogram
    if args.format == "json":
        _emit_json(
            {
                "manifest": manifest,
                "histogram": {
                    "gamma": hist.abscissa.tolist(),
                    "density": hist.density.tolist(),
                    "bin_edges": hist.meta["bin_edges"],
                    "counts": hist.meta["counts"],
                },
                "summary": _result_summary(result),
            },
            args.output,
        )
    else:
        edges_arr = np.asarray(hist.meta["bin_edges"])
        rows = zip(edges_arr[:-1], edges_arr[1:], hist.meta["bin_density"])
        _emit_table(manifest, ("gamma_lo", "gamma_hi", "density"), rows, args.output)
    return EXIT_OK


def cmd_compare(args) -> int:
    _, shape = _resolve_geometry(args, need_shape=True)
    config = _ensemble_config(args, shape)
    result = run_ensemble(config, worker_count(args.workers))
    ratios = to_ratios(shape)
    comparison = compare_histogram(result, ratios, tol=args.tol, edge_margin=args.margin)
    params = _ensemble_params(args, config)
    params.update(tol=args.tol, margin=args.margin)
    _emit_json(
        {
            "manifest": _manifest("compare", params),
            "comparison": comparison.to_dict(),
            "summary": _result_summary(result),
            "verdict": "pass" if comparison.passed else "fail",
        },
        args.output,
    )
    return EXIT_OK


def _read_values(path):
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            for token in body.replace(",", " ").split():
                try:
                    value = float(token)
                except ValueError:
                    raise _CliError(
                        f"{path}:{lineno}: not a number: {token!r}", EXIT_USAGE
                    ) from None
                if not np.isfinite(value) or value < 0:
                    raise _CliError(
                        f"{path}:{lineno}: values must be finite and nonnegative, "
                        f"got {token}",
                        EXIT_USAGE,
                    )
                values.append(value)
    return values


def cmd_detect(args) -> int:
    _, shape = _resolve_geometry(args, need_shape=True)
    values = _read_values(args.values)
    report = detect_outliers(values, shape, margin=args.margin, mode=args.mode,
                             scaled=args.scaled)
    params = _geometry_params(args, None, shape)
    params.update(margin=args.margin, mode=args.mode, scaled=args.scaled,
                  values=args.values)
    _emit_json(
        {
            "manifest": _manifest("detect", params, regime=report.regime),
            "report": report.to_dict(),
        },
        args.output,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crosscov",
        description="Noise singular-value spectra of large sample cross-covariance matrices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = dict(formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    p_density = sub.add_parser("density", help="theory density curve", **common)
    _add_shape_flags(p_density)
    p_density.add_argument("--grid-points", type=int, default=512)
    p_density.add_argument("--eta", type=float, default=None,
                           help="spectral regulator (default: 1e-9 of the band scale)")
    p_density.set_defaults(handler=cmd_density)

    p_edges = sub.add_parser("edges", help="spectral band endpoints", **common)
    _add_shape_flags(p_edges)
    p_edges.set_defaults(handler=cmd_edges)

    p_sim = sub.add_parser("simulate", help="Monte Carlo ensemble histogram", **common)
    _add_shape_flags(p_sim)
    p_sim.add_argument("--realizations", type=int, default=500)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--bins", type=int, default=80)
    p_sim.set_defaults(handler=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="theory vs simulation verdict", **common)
    _add_shape_flags(p_cmp)
    p_cmp.add_argument("--realizations", type=int, default=500)
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--bins", type=int, default=80)
    p_cmp.add_argument("--tol", type=float, default=0.05, help="L1 pass threshold")
    p_cmp.set_defaults(handler=cmd_compare)

    p_det = sub.add_parser("detect", help="flag values beyond the noise band", **common)
    _add_shape_flags(p_det)
    p_det.add_argument("values", help="file of newline- or comma-separated values")
    p_det.set_defaults(handler=cmd_detect)

    for p in (p_density, p_edges, p_sim, p_cmp, p_det):
        p.add_argument("--scaled", action="store_true",
                       help="apply the sqrt(px py) scaling convention")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--output", default=None, help="write here instead of stdout")
        p.add_argument("--mode", choices=("numeric", "auto_limit"), default="auto_limit")
        p.add_argument("--margin", type=float, default=DEFAULT_MARGIN,
                       help="relative edge allowance")
    for p in (p_sim, p_cmp):
        p.add_argument("--max-mem", type=int, default=None, help="peak budget in bytes")
        p.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE,
                       help="columns per Gram accumulation block")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel realizations (default: CROSSCOV_THREADS env var or 1)")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command in ("density", "simulate") else "json"
    try:
        return args.handler(args)
    except _CliError as err:
        print(f"crosscov {args.command}: {err}", file=sys.stderr)
        return err.code
    except BranchSelectionError as err:
        where = f" at z = {err.z}" if err.z is not None else ""
        print(f"crosscov {args.command}: solver failure{where}: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except MemoryBudgetError as err:
        print(f"crosscov {args.command}: {err}", file=sys.stderr)
        return EXIT_RESOURCE
    except ValueError as err:
        print(f"crosscov {args.command}: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
