"""Command-line interface: ``plateau fit|point|contour|synth``.

Exit codes are 0 on success, 2 for input errors and 3 when the method
degenerates on well-formed input. Errors are reported on stderr as a JSON
object; ``fit`` also records them in its result file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import datetime, timezone

import numpy as np
from scipy.special import expit

from .boundary import DEFAULT_HIDDEN, FAMILIES, QPParams, params_from_dict
from .exceptions import CorruptResultFile, InputError, MethodError, PlateauError, Unsupported
from .estimator import PlateauBoundary, materialize_seed
from .grid import (
    TRANSFORM_MODES,
    EvalGrid,
    SynthSpec,
    TransformSpec,
    generate_synthetic,
    lattice,
    load_grid,
    write_grid,
)
from .representative import RESTRICTIONS, representative_point

log = logging.getLogger(__name__)

SCHEMA = 1
EXIT_OK, EXIT_INPUT, EXIT_METHOD = 0, 2, 3
CONTOUR_MARGIN = 0.05
MARKERS = ("cog1", "cog2", "boundary_point", "nearest_point")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def error_object(exc: BaseException) -> dict:
    code = EXIT_METHOD if isinstance(exc, MethodError) else EXIT_INPUT
    return {
        "type": type(exc).__name__,
        "code": getattr(exc, "code", "input-error"),
        "message": str(exc),
        "exit_code": code,
    }


def _dump(obj, target=None) -> None:
    text = json.dumps(obj, indent=2, allow_nan=False) + "\n"
    if target is None:
        sys.stdout.write(text)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)


# -- argument parsing helpers -------------------------------------------------


def _resolution(text: str) -> tuple[int, int]:
    try:
        parts = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"resolution must look like 200x200, got {text!r}") from None
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or min(parts) < 2:
        raise argparse.ArgumentTypeError("resolution needs two sizes, each >= 2")
    return parts


def _shape(text: str) -> tuple[int, ...]:
    try:
        parts = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"shape must look like 20x20, got {text!r}") from None
    if min(parts) < 1:
        raise argparse.ArgumentTypeError("shape entries must be positive")
    return parts


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bounds(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for item in text.split(","):
        try:
            lo, hi = (float(v) for v in item.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bounds must look like -2:2,-2:2, got {text!r}") from None
        if not lo < hi:
            raise argparse.ArgumentTypeError(f"empty interval {item!r}")
        out.append((lo, hi))
    return tuple(out)


def _transform(text: str):
    items = [t.strip() for t in text.split(",")]
    allowed = TRANSFORM_MODES + ("passthrough",)
    for t in items:
        if t not in allowed:
            raise argparse.ArgumentTypeError(f"transform must be one of {allowed}, got {t!r}")
    return items[0] if len(items) == 1 and items[0] != "passthrough" else items


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(json.dumps({"error": {
            "type": "UsageError", "code": "usage", "message": message, "exit_code": EXIT_INPUT,
        }}) + "\n")
        sys.exit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plateau", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a boundary and pick a representative point")
    p.add_argument("--input", required=True, help="CSV grid with a header row")
    p.add_argument("--metric", required=True, help="name of the metric column")
    p.add_argument("--direction", choices=("min", "max"), default="min")
    p.add_argument("--boundary", choices=FAMILIES, default="qp")
    p.add_argument("--hidden", type=_positive, default=DEFAULT_HIDDEN)
    p.add_argument("--restarts", type=_positive, default=16)
    p.add_argument("--seed", type=_seed, default=None, help="drawn and recorded when omitted")
    p.add_argument("--optimizer", choices=("bfgs", "adam"), default=None)
    p.add_argument("--transform", type=_transform, default="log-std",
                   help="auto, log-std, none, or one of log-std/passthrough/auto per column")
    p.add_argument("--restrict", choices=RESTRICTIONS, default="all")
    p.add_argument("--ignore", action="append", default=[], help="column to leave out (repeatable)")
    p.add_argument("--jobs", type=_positive, default=1, help="threads for the restarts")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--output", help="result JSON; stdout when omitted")

    p = sub.add_parser("point", help="print the representative point of a fit")
    p.add_argument("--input", required=True, help="result JSON written by 'fit'")
    p.add_argument("--restrict", choices=RESTRICTIONS, default=None,
                   help="recompute the nearest point under this restriction")
    p.add_argument("--output")

    p = sub.add_parser("contour", help="export g and s on a lattice (2-D only)")
    p.add_argument("--input", required=True, help="result JSON written by 'fit'")
    p.add_argument("--resolution", type=_resolution, default=(200, 200))
    p.add_argument("--output", help="CSV; stdout when omitted")

    p = sub.add_parser("synth", help="generate a synthetic grid with a spherical boundary")
    p.add_argument("--shape", type=_shape, default=(20, 20))
    p.add_argument("--bounds", type=_bounds, default=None, help="lo:hi per axis, e.g. --bounds=-2:2,-2:2")
    p.add_argument("--center", type=_floats, default=None, help="e.g. --center=0,0")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--mu1", type=float, default=0.0)
    p.add_argument("--mu2", type=float, default=10.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--metric", default="z")
    p.add_argument("--names", default=None, help="comma-separated coordinate names")
    p.add_argument("--output", help="CSV; stdout when omitted (the echo then goes to stderr)")
    return parser


# -- subcommands --------------------------------------------------------------


def _fit_config(args) -> dict:
    return {
        "command": "fit",
        "input": args.input,
        "metric": args.metric,
        "direction": args.direction,
        "boundary": args.boundary,
        "hidden": args.hidden,
        "optimizer": args.optimizer,
        "restarts": args.restarts,
        "seed": args.seed,
        "transform": args.transform,
        "restrict": args.restrict,
        "ignore": list(args.ignore),
        "jobs": args.jobs,
        "max_iters": args.max_iters,
    }


def cmd_fit(args) -> int:
    args.seed = materialize_seed(args.seed)
    config = _fit_config(args)
    result = {"schema": SCHEMA, "created": _now(), "config": config}
    try:
        grid = load_grid(args.input, args.metric, args.direction, ignore=args.ignore)
        est = PlateauBoundary(
            boundary=args.boundary,
            hidden=args.hidden,
            optimizer=args.optimizer,
            restarts=args.restarts,
            max_iter=args.max_iters,
            transform=args.transform,
            direction=args.direction,
            restrict=args.restrict,
            n_jobs=args.jobs,
            random_state=args.seed,
        )
        est.fit(grid.points, grid.metrics, names=grid.names, metric_name=grid.metric_name)
    except MethodError as exc:
        result["error"] = error_object(exc)
        _dump(result, args.output)
        raise
    config["optimizer"] = est.fit_result_.optimizer
    tgrid = est.transformed_grid_
    rep = est.representative_
    result.update(
        grid={
            "names": list(grid.names),
            "metric": grid.metric_name,
            "direction": grid.direction.value,
            "n": grid.n,
            "points": grid.points.tolist(),
            "metrics": grid.metrics.tolist(),
            "transformed_points": tgrid.points.tolist(),
        },
        transform=est.transform_.to_dict(),
        fit=est.fit_result_.to_dict(),
        partition={"sizes": list(est.partition_.sizes), "sides": est.partition_.sides.tolist()},
        representative=None if rep is None else rep.to_dict(tgrid.points),
        error=None,
    )
    if rep is None:
        result["error"] = error_object(est.representative_error_)
    _dump(result, args.output)
    if rep is None:
        _report(est.representative_error_)
        return EXIT_METHOD
    return EXIT_OK


def load_result(path) -> dict:
    """Read and sanity-check a result file written by ``fit``."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"result file {path!r} not found") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptResultFile(f"result file {path!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict) or data.get("schema") != SCHEMA:
        raise CorruptResultFile(f"result file {path!r} lacks schema {SCHEMA}")
    return data


def _restore(data: dict):
    """Grid (transformed), boundary parameters and transform from a result."""
    try:
        g = data["grid"]
        params = params_from_dict(data["fit"]["params"])
        transform = TransformSpec.from_dict(data["transform"])
        grid = EvalGrid(
            np.asarray(g["transformed_points"], dtype=float),
            np.asarray(g["metrics"], dtype=float),
            names=tuple(g["names"]),
            metric_name=g["metric"],
            direction=g["direction"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptResultFile(f"result file is missing or has malformed fields: {exc}") from None
    return grid, params, transform


def _stored_error(data: dict) -> PlateauError:
    err = data.get("error") or {}
    exc = MethodError(err.get("message", "fit did not produce a representative point"))
    exc.code = err.get("code", MethodError.code)
    return exc


def cmd_point(args) -> int:
    data = load_result(args.input)
    if "grid" not in data:
        raise _stored_error(data)
    if args.restrict is None:
        rep = data.get("representative")
        if rep is None:
            raise _stored_error(data)
        try:
            names = data["grid"]["names"]
            out = {
                "names": names,
                "boundary_point": rep["boundary_point"],
                "nearest_point": rep["nearest_point"],
                "nearest_index": rep["nearest_index"],
                "restrict": rep["restrict"],
            }
        except (KeyError, TypeError) as exc:
            raise CorruptResultFile(f"representative entry is malformed: {exc}") from None
    else:
        grid, params, transform = _restore(data)
        r = representative_point(grid, params, transform, args.restrict)
        out = {
            "names": list(grid.names),
            "boundary_point": r.user("boundary_point").tolist(),
            "nearest_point": r.user("nearest_point").tolist(),
            "nearest_index": r.nearest_index,
            "restrict": r.restrict,
        }
    _dump(out, args.output)
    return EXIT_OK


def contour_rows(grid: EvalGrid, params, transform: TransformSpec, resolution, representative=None):
    """Lattice rows ``(kind, x, y, g, s)`` in user units.

    The lattice is uniform in transformed coordinates and spans the data
    range widened by 5% on each side.
    """
    if grid.dim != 2:
        raise Unsupported(f"contour export needs 2 dimensions, the fit has {grid.dim}")
    lo = grid.points.min(axis=0)
    hi = grid.points.max(axis=0)
    pad = CONTOUR_MARGIN * (hi - lo)
    pad = np.where(pad > 0, pad, CONTOUR_MARGIN)
    U = lattice(resolution, list(zip(lo - pad, hi + pad)))
    g = np.asarray(params.value(U), dtype=float)
    rows = [("lattice", *xy, gv, sv) for xy, gv, sv in zip(transform.inverse(U), g, expit(g))]
    if representative is not None:
        for name in MARKERS:
            u = np.asarray(representative["transformed"][name], dtype=float)
            gv = float(params.value(u))
            kind = "nearest" if name == "nearest_point" else name
            rows.append((kind, *transform.inverse(u), gv, float(expit(gv))))
        for side in (1, 2):
            u = grid.points[representative[f"nearest_side{side}_index"]]
            gv = float(params.value(u))
            rows.append((f"nearest_side{side}", *transform.inverse(u), gv, float(expit(gv))))
    return rows


def cmd_contour(args) -> int:
    data = load_result(args.input)
    if "grid" not in data:
        raise _stored_error(data)
    grid, params, transform = _restore(data)
    rows = contour_rows(grid, params, transform, args.resolution, data.get("representative"))
    own = args.output is not None
    fh = open(args.output, "w", newline="", encoding="utf-8") if own else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", *grid.names, "g", "s"])
        for kind, *vals in rows:
            writer.writerow([kind, *(repr(float(v)) for v in vals)])
    finally:
        if own:
            fh.close()
    return EXIT_OK


def cmd_synth(args) -> int:
    m = len(args.shape)
    center = args.center if args.center is not None else (0.0,) * m
    if len(center) != m:
        raise InputError(f"center has {len(center)} entries for a {m}-d shape")
    if not args.radius > 0:
        raise InputError("radius must be positive")
    names = tuple(n.strip() for n in args.names.split(",")) if args.names else ()
    seed = materialize_seed(args.seed)
    spec = SynthSpec(
        shape=args.shape,
        boundary=QPParams.circle(center, args.radius),
        mu1=args.mu1,
        mu2=args.mu2,
        noise_sd=args.noise,
        seed=seed,
        bounds=args.bounds or (),
        names=names,
        metric_name=args.metric,
    )
    grid, labels = generate_synthetic(spec)
    echo = {
        "command": "synth",
        "shape": list(spec.shape),
        "bounds": [list(b) for b in spec.bounds],
        "center": list(center),
        "radius": args.radius,
        "mu1": spec.mu1,
        "mu2": spec.mu2,
        "noise": spec.noise_sd,
        "seed": seed,
        "names": list(grid.names),
        "metric": grid.metric_name,
        "rows": grid.n,
        "output": args.output,
    }
    if args.output is None:
        write_grid(grid, sys.stdout, labels)
        sys.stderr.write(json.dumps(echo) + "\n")
    else:
        write_grid(grid, args.output, labels)
        _dump(echo)
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "point": cmd_point, "contour": cmd_contour, "synth": cmd_synth}


def _report(exc: BaseException) -> None:
    sys.stderr.write(json.dumps({"error": error_object(exc)}) + "\n")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except PlateauError as exc:
        _report(exc)
        return EXIT_METHOD if isinstance(exc, MethodError) else EXIT_INPUT
    except OSError as exc:
        _report(InputError(str(exc)))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
