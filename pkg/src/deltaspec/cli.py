"""Command-line front end.

Subcommands: classify, eigen, sample, invert, roundtrip, plotdata.
Numeric tables go to CSV, metadata and reports to JSON sidecars; all float
formatting uses shortest round-trip representation, so identical configs
produce byte-identical artifacts.

Every flag default can be overridden by an environment variable with the
DELTASPEC_ prefix (flag --eig-tol <-> DELTASPEC_EIG_TOL, etc.).

Exit codes: 0 success, 2 config/usage error, 3 no eigenvalue below the
essential-spectrum floor, 4 bracket failure, 5 inconsistent sample table,
6 empty reconstruction window, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from . import inverse
from .errors import ConfigError, DeltaspecError
from .model import Potential, SolverConfig, classify, parse_potential
from .spectrum import first_eigenvalue

_ENV_PREFIX = "DELTASPEC_"


def _env_default(name: str, cast, fallback):
    raw = os.environ.get(_ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return fallback
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r} for {_ENV_PREFIX}{name.upper()}: {exc}")


def _add_solver_args(p: argparse.ArgumentParser, need_tgrid: bool = False) -> None:
    p.add_argument("--potential", required=True,
                   help="potential as an inline expression in x or a path to "
                        "a CSV knot table with columns x,q")
    p.add_argument("--b", type=float, default=_env_default("b", float, 8.0),
                   help="truncation radius (default 8)")
    p.add_argument("--h", type=float, default=_env_default("h", float, 1e-3),
                   help="integration step (default 1e-3)")
    p.add_argument("--eig-tol", type=float,
                   default=_env_default("eig-tol", float, 1e-9),
                   help="eigenvalue tolerance (default 1e-9)")
    p.add_argument("--b-growth", type=float,
                   default=_env_default("b-growth", float, 2.0))
    p.add_argument("--b-max", type=float,
                   default=_env_default("b-max", float, 256.0))
    p.add_argument("--r-cap", type=float,
                   default=_env_default("r-cap", float, None))
    p.add_argument("--lambda-floor", type=float,
                   default=_env_default("lambda-floor", float, None))
    p.add_argument("--dl", type=float, default=_env_default("dl", float, None),
                   help="spectral finite-difference increment "
                        "(default max(1e-5, 10*eig-tol))")
    p.add_argument("--workers", type=int,
                   default=_env_default("workers", int, 1))
    p.add_argument("--interpolation", choices=("pchip", "linear"),
                   default=_env_default("interpolation", str, "pchip"),
                   help="interpolation rule for tabulated potentials")
    if need_tgrid:
        p.add_argument("--t-min", type=float,
                       default=_env_default("t-min", float, 0.1))
        p.add_argument("--t-max", type=float,
                       default=_env_default("t-max", float, 3.5))
        p.add_argument("--t-step", type=float,
                       default=_env_default("t-step", float, 0.05))
        p.add_argument("--r-ladder", type=str,
                       default=_env_default("r-ladder", str, "0.04,0.02,0.01"),
                       help="comma-separated decreasing couplings")


def _add_invert_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--smooth", action="store_true",
                   default=_env_default("smooth", bool, False),
                   help="fit a smoothing spline to phi0 before differentiating")
    p.add_argument("--phi-floor", type=float,
                   default=_env_default("phi-floor", float, 1e-3),
                   help="drop points with phi0 below this fraction of its max")
    p.add_argument("--slope-tol", type=float,
                   default=_env_default("slope-tol", float, 1e-6))


def _resolve_potential(spec: str, interpolation: str) -> Potential:
    if os.path.isfile(spec):
        with open(spec) as fh:
            text = fh.read()
        return parse_potential(text, interpolation=interpolation)
    return parse_potential(spec, interpolation=interpolation)


def _t_grid(args) -> tuple:
    if args.t_step <= 0:
        raise ConfigError("t-step must be positive")
    n = int(round((args.t_max - args.t_min) / args.t_step))
    if n < 0 or args.t_max < args.t_min:
        raise ConfigError("t-max must be >= t-min")
    return tuple(np.round(args.t_min + args.t_step * np.arange(n + 1), 12))


def _r_ladder(args) -> tuple:
    try:
        return tuple(float(v) for v in args.r_ladder.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad r-ladder {args.r_ladder!r}: {exc}")


def _build_config(args, need_tgrid: bool = False) -> SolverConfig:
    kw = dict(
        b=args.b, h=args.h, eig_tol=args.eig_tol, b_growth=args.b_growth,
        b_max=args.b_max, r_cap=args.r_cap, lambda_floor=args.lambda_floor,
        dl=args.dl, workers=args.workers,
    )
    if need_tgrid:
        kw["t_grid"] = _t_grid(args)
        kw["r_ladder"] = _r_ladder(args)
    if hasattr(args, "smooth"):
        kw["smooth"] = args.smooth
        kw["phi_floor_rel"] = args.phi_floor
        kw["slope_tol"] = args.slope_tol
    return SolverConfig(**kw)


def _outdir(args) -> Optional[str]:
    out = getattr(args, "out", None)
    if out:
        os.makedirs(out, exist_ok=True)
    return out


def _cmd_classify(args) -> int:
    q = _resolve_potential(args.potential, args.interpolation)
    cfg = _build_config(args)
    hyp = classify(q, cfg)
    print(f"variant = {hyp.variant}")
    if hyp.floor_q0 is not None:
        print(f"floor_q0 = {hyp.floor_q0!r}")
    print(f"notes: {hyp.notes}")
    return 0


def _cmd_eigen(args) -> int:
    q = _resolve_potential(args.potential, args.interpolation)
    cfg = _build_config(args)
    fe = first_eigenvalue(q, cfg)
    print(f"lambda_1 = {fe.lambda_1:.6f}")
    print(f"b_used = {fe.b_used:g}")
    print(f"converged = {fe.converged} (|delta| = {fe.b_delta:.3g}, "
          f"{fe.iterations} truncation rounds)")
    out = _outdir(args)
    if out:
        path = os.path.join(out, "eigenfunction.csv")
        fe.eigenfunction.to_csv(path)
        print(f"eigenfunction -> {path}")
    return 0


def _cmd_sample(args) -> int:
    q = _resolve_potential(args.potential, args.interpolation)
    cfg = _build_config(args, need_tgrid=True)
    table = inverse.sample(q, cfg)
    out = _outdir(args) or "."
    path = os.path.join(out, "table.csv")
    inverse.write_sample_table(table, path)
    print(f"lambda_1 = {table.lambda_1:.6f}")
    print(f"{len(table.entries())} entries -> {path}")
    return 0


def _cmd_invert(args) -> int:
    table = inverse.read_sample_table(args.table)
    cfg = SolverConfig(smooth=args.smooth, phi_floor_rel=args.phi_floor,
                       slope_tol=args.slope_tol)
    result = inverse.reconstruct(table, cfg)
    out = _outdir(args) or "."
    path = os.path.join(out, "reconstruction.csv")
    inverse.write_reconstruction(result, path)
    print(f"lambda_1 = {result.lambda_1:.6f}")
    print(f"window = [{result.window[0]:g}, {result.window[1]:g}] "
          f"({len(result.xs)} points) -> {path}")
    return 0


def _cmd_roundtrip(args) -> int:
    q = _resolve_potential(args.potential, args.interpolation)
    cfg = _build_config(args, need_tgrid=True)
    report = inverse.roundtrip(q, cfg)
    out = _outdir(args) or "."
    tpath = os.path.join(out, "table.csv")
    inverse.write_sample_table(report.table, tpath)
    rpath = os.path.join(out, "reconstruction.csv")
    inverse.write_reconstruction(
        report.result, rpath, q_true=report.q_true,
        extra_meta={
            "max_abs_err": report.max_abs_err,
            "mean_abs_err": report.mean_abs_err,
            "excluded_zones": [list(z) for z in report.excluded_zones],
            "flags": report.flags,
        },
    )
    print(f"lambda_1 = {report.result.lambda_1:.6f}")
    print(f"window = [{report.result.window[0]:g}, {report.result.window[1]:g}]")
    print(f"max |qhat - q| = {report.max_abs_err:.6g}")
    print(f"mean |qhat - q| = {report.mean_abs_err:.6g}")
    for flag in report.flags:
        print(f"note: {flag}")
    print(f"artifacts -> {tpath}, {rpath}")
    return 0


def _emit(stream, series: str, xs, ys) -> None:
    for x, y in zip(xs, ys):
        stream.write(f"{series},{float(x)!r},{float(y)!r}\n")


def _load_columns(path: str, n_cols: int) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line[0].isalpha():
                continue
            parts = line.split(",")
            if len(parts) != n_cols:
                raise ConfigError(f"bad row {line!r} in {path!r}")
            rows.append([float(v) for v in parts])
    if not rows:
        raise ConfigError(f"no data rows in {path!r}")
    return np.asarray(rows)


def emit_plotdata(path: str, stream) -> None:
    """Re-emit a result file as tidy long-format CSV (series,x,y)."""
    if not os.path.exists(path):
        raise ConfigError(f"result file {path!r} does not exist")
    with open(path) as fh:
        first = fh.readline().strip()
        while first.startswith("#"):
            first = fh.readline().strip()
    header = first.lower().replace(" ", "")
    stream.write("series,x,y\n")
    if header.startswith("t,r,lambda"):
        table = inverse.read_sample_table(path)
        for j, r in enumerate(table.rs):
            _emit(stream, f"r={float(r):g}", table.ts, table.lam[:, j])
        return
    if header.startswith("x,phi0,qhat"):
        data = _load_columns(path, 3)
        xs = data[:, 0]
        _emit(stream, "phi0", xs, data[:, 1])
        _emit(stream, "qhat", xs, data[:, 2])
        side = inverse.sidecar_path(path)
        if os.path.exists(side):
            with open(side) as fh:
                report = json.load(fh)
            if "q_true" in report and len(report["q_true"]) == len(xs):
                _emit(stream, "qtrue", xs, report["q_true"])
        return
    if header.startswith("x,y,dy"):
        data = _load_columns(path, 3)
        xs = data[:, 0]
        _emit(stream, "y", xs, data[:, 1])
        _emit(stream, "dy", xs, data[:, 2])
        return
    raise ConfigError(f"unknown result schema in {path!r} (header {first!r})")


def _cmd_plotdata(args) -> int:
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "plotdata.csv")
        with open(path, "w") as fh:
            emit_plotdata(args.input, fh)
        print(f"plot data -> {path}")
    else:
        emit_plotdata(args.input, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deltaspec",
        description="Point-interaction spectral solver and potential "
                    "reconstruction on the half line.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="report the hypothesis regime of a potential")
    _add_solver_args(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("eigen", help="first eigenvalue of the unperturbed problem")
    _add_solver_args(p)
    p.add_argument("--out", type=str, default=None,
                   help="directory for the eigenfunction CSV")
    p.set_defaults(func=_cmd_eigen)

    p = sub.add_parser("sample", help="tabulate the first eigenvalue function")
    _add_solver_args(p, need_tgrid=True)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("invert", help="reconstruct a potential from a sample table")
    p.add_argument("--table", required=True, help="path to a t,r,lambda CSV")
    _add_invert_args(p)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_invert)

    p = sub.add_parser("roundtrip", help="sample then invert a known potential")
    _add_solver_args(p, need_tgrid=True)
    _add_invert_args(p)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_roundtrip)

    p = sub.add_parser("plotdata", help="re-emit a result file as tidy series,x,y CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_plotdata)

    return parser


def _join_leading_dash_values(argv: List[str]) -> List[str]:
    """Merge `--potential -5*[x<1]` into `--potential=-5*[x<1]` so argparse
    does not mistake an expression starting with '-' for an option."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--potential" and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(tok + "=" + argv[i + 1])
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run_command(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_join_leading_dash_values(list(argv)))
    return args.func(args)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        return run_command(argv)
    except DeltaspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:  # pragma: no cover
        return 130


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
