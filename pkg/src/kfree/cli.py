"""Command-line surface tying the library together.

Subcommands: sieve, twins, density, gauss, singular, variance, identity,
arcs, report-all.  Results go to stdout (or --out) as JSON or CSV with the
same numeric values in either format; every real that carries a truncation
tail is serialized alongside it.  Exit codes: 0 success, 1 argument error,
2 capacity error, 3 identity-check failure.

Heavy imports happen inside the command handlers so that thread pinning
(and --help) run before numpy pulls in a BLAS.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from typing import Optional

from .errors import CapacityError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CAPACITY = 2
EXIT_IDENTITY = 3

_ARC_ROW_CAP = 200_000

_EPILOG = """\
exit codes:
  0 success; 1 argument error; 2 capacity exceeded; 3 identity-check failure

environment:
  KFREE_CACHE_DIR   default sieve-cache directory (--cache-dir overrides)
  KFREE_SIEVE_CAP   hard ceiling for sieve sizes (default 300000000)

config file (--config FILE):
  key=value lines setting flag defaults ('#' starts a comment); explicit
  flags always win.  Keys: k x Q modulus residue n trunc q_max method tau
  threads cache_dir format out out_dir grid.

CSV headers (fixed):
  sieve      k,x,kfree_count,twin_count,cache_path
  twins      k,x,count,rho_x,rho_x_tail,ratio
  density    q,a,k,g_closed,g_closed_tail,g_series,g_series_tail,consistent
  gauss      q,a,k,H_re,H_im            (per-residue mode)
  gauss      q,n,k,j_closed_exact,j_closed,j_def_re,j_def_im,abs_diff  (--n mode)
  singular   n,k,method,value,tail
  variance   x,Q,k,Y,S1,S2,S3,g_tail,decomp_residual
  identity   k,x,Q,lhs,rhs,match
  arcs       alpha,q,a,major
  scaling    x,Q,k,Y,S1,S2,S3,bound_new,bound_old,ratio_new,ratio_old
  l2         T,integral,bound_shape,ratio

sieve cache format:
  magic "KFSV", version byte (1), k byte, x as 8-byte little-endian, then
  the indicator bitmap of 1..x+1 packed LSB-first.
"""


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; the contract wants 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pin_blas_threads() -> None:
    """Keep BLAS reductions single-threaded so output bytes never depend
    on the machine's core count (only effective before numpy loads)."""
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, "1")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--format", choices=("json", "csv"), default="json", help="output format"
    )
    p.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
    p.add_argument(
        "--cache-dir",
        dest="cache_dir",
        metavar="DIR",
        help="sieve cache directory (default: $KFREE_CACHE_DIR)",
    )
    p.add_argument(
        "--threads",
        type=int,
        default=0,
        help="worker hint, 0 = auto (results are identical for any value)",
    )
    p.add_argument(
        "--config", metavar="FILE", help="key=value file supplying flag defaults"
    )


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(
        prog="kfree",
        description="Twin k-free numbers: sieves, local densities, Gauss-type "
        "sums, the singular series, variance decompositions, and circle-method "
        "diagnostics.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    from . import __version__

    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    commands: dict[str, argparse.ArgumentParser] = {}

    def cmd(name: str, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_, formatter_class=argparse.RawDescriptionHelpFormatter)
        commands[name] = p
        return p

    p = cmd("sieve", "build (and cache) the k-free indicator up to x")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--x", type=int, required=True)
    _add_common(p)

    p = cmd("twins", "count twin k-free pairs up to x against the density ϱ·x")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--x", type=int, required=True)
    _add_common(p)

    p = cmd("density", "local density g(q, a), closed form vs truncated series")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--modulus", type=int, required=True, metavar="Q")
    p.add_argument(
        "--residue", type=int, metavar="A", help="one residue (default: all a <= q)"
    )
    p.add_argument("--trunc", type=int, default=500, help="series truncation")
    _add_common(p)

    p = cmd("gauss", "Gauss-type sums H(q, a), or J(q; n) with --n")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--modulus", type=int, required=True, metavar="Q")
    p.add_argument(
        "--residue", type=int, metavar="A", help="one residue (default: all a <= q)"
    )
    p.add_argument("--n", type=int, help="shift: report J(q; n) closed vs definition")
    _add_common(p)

    p = cmd("singular", "singular series value S(n)")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q-max", dest="q_max", type=int, default=500)
    p.add_argument("--method", choices=("closed", "def", "both"), default="both")
    _add_common(p)

    p = cmd("variance", "variance Y(x, Q) over residue classes and its pieces")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--Q", type=int, required=True)
    _add_common(p)

    p = cmd("identity", "exact pair-count vs autocorrelation cross-check")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--Q", type=int, required=True)
    _add_common(p)

    p = cmd("arcs", "classify a grid of α over the window (1/R, 1 + 1/R]")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--grid", type=int, default=1000, help="number of sample points")
    _add_common(p)

    p = cmd(
        "report-all",
        "scaling, variance-sweep, and arc-defect tables with figures",
    )
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--x", type=int, default=4096, help="largest sieve size")
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--grid", type=int, default=64, help="quadrature nodes per arc")
    p.add_argument(
        "--out-dir", dest="out_dir", default="kfree-report", metavar="DIR"
    )
    _add_common(p)

    return parser, commands


_CONFIG_TYPES = {
    "k": int,
    "x": int,
    "Q": int,
    "modulus": int,
    "residue": int,
    "n": int,
    "trunc": int,
    "q_max": int,
    "threads": int,
    "grid": int,
    "tau": float,
    "method": str,
    "format": str,
    "out": str,
    "out_dir": str,
    "cache_dir": str,
}


def _read_config(path: str) -> dict:
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ValueError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_TYPES:
            raise ValueError(
                f"{path}:{lineno}: unknown config key {key!r} "
                f"(known: {' '.join(sorted(_CONFIG_TYPES))})"
            )
        try:
            out[key] = _CONFIG_TYPES[key](value)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def _apply_config(
    argv: list[str], commands: dict[str, argparse.ArgumentParser]
) -> None:
    """Pre-scan for --config and install its values as subcommand defaults
    (so explicit flags still override them)."""
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return
    defaults = _read_config(path)
    for tok in argv:
        if tok in commands:
            commands[tok].set_defaults(**defaults)
            for action in commands[tok]._actions:
                if action.dest in defaults:
                    action.required = False
            return


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _json_ready(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {key: _json_ready(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def _json_text(meta: dict, rows: list[dict]) -> str:
    payload = dict(meta)
    if len(rows) == 1:
        payload.update(rows[0])
    else:
        payload["rows"] = rows
    return json.dumps(_json_ready(payload), indent=2) + "\n"


def _csv_text(meta: dict, rows: list[dict]) -> str:
    buf = io.StringIO()
    for key, val in meta.items():
        buf.write(f"# {key} = {_fmt(val)}\n")
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(rows[0].keys())
        for row in rows:
            writer.writerow([_fmt(v) for v in row.values()])
    return buf.getvalue()


def _emit(meta: dict, rows: list[dict], args: argparse.Namespace) -> None:
    text = _json_text(meta, rows) if args.format == "json" else _csv_text(meta, rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cache_dir(args: argparse.Namespace) -> Optional[str]:
    return args.cache_dir or os.environ.get("KFREE_CACHE_DIR") or None


def _load_sieve(args: argparse.Namespace, write: bool = False):
    from . import kfree_core

    cache_dir = _cache_dir(args)
    return kfree_core.load_or_build(args.x, args.k, cache_dir, write=write)


def _cmd_sieve(args) -> tuple[dict, list[dict], int]:
    from . import kfree_core

    cache_dir = _cache_dir(args)
    table = kfree_core.load_or_build(args.x, args.k, cache_dir, write=cache_dir is not None)
    row = {
        "k": table.k,
        "x": table.x,
        "kfree_count": table.kfree_count,
        "twin_count": table.twin_count,
        "cache_path": kfree_core.cache_path(cache_dir, args.k, args.x) if cache_dir else "",
    }
    return {"command": "sieve"}, [row], EXIT_OK


def _cmd_twins(args) -> tuple[dict, list[dict], int]:
    from .local_densities import rho_cached

    table = _load_sieve(args)
    rho = rho_cached(args.k)
    count = table.twin_count
    rho_x = rho.value * args.x
    row = {
        "k": args.k,
        "x": args.x,
        "count": count,
        "rho_x": rho_x,
        "rho_x_tail": rho.tail * args.x,
        "ratio": count / rho_x,
    }
    return {"command": "twins"}, [row], EXIT_OK


def _cmd_density(args) -> tuple[dict, list[dict], int]:
    from .local_densities import g_density

    q = args.modulus
    residues = [args.residue] if args.residue is not None else range(1, q + 1)
    rows = []
    for a in residues:
        closed = g_density(q, a, args.k, mode="closed")
        series = g_density(q, a, args.k, mode="series", trunc=args.trunc)
        rows.append(
            {
                "q": q,
                "a": a,
                "k": args.k,
                "g_closed": closed.value,
                "g_closed_tail": closed.tail,
                "g_series": series.value,
                "g_series_tail": series.tail,
                "consistent": closed.intersects(series, slack=1e-9),
            }
        )
    return {"command": "density", "trunc": args.trunc}, rows, EXIT_OK


def _cmd_gauss(args) -> tuple[dict, list[dict], int]:
    from . import gauss_local

    q = args.modulus
    if args.n is not None:
        exact = gauss_local.j_value_exact(q, args.n, args.k)
        by_def = gauss_local.j_value(q, args.n, args.k, mode="def")
        row = {
            "q": q,
            "n": args.n,
            "k": args.k,
            "j_closed_exact": exact,
            "j_closed": float(exact),
            "j_def_re": by_def.real,
            "j_def_im": by_def.imag,
            "abs_diff": abs(by_def - float(exact)),
        }
        return {"command": "gauss"}, [row], EXIT_OK
    residues = [args.residue] if args.residue is not None else range(1, q + 1)
    rows = []
    for a in residues:
        h = gauss_local.gauss_H(q, a, args.k)
        rows.append({"q": q, "a": a, "k": args.k, "H_re": h.real, "H_im": h.imag})
    meta = {"command": "gauss", "h_norm": gauss_local.h_norm(q, args.k)}
    return meta, rows, EXIT_OK


def _cmd_singular(args) -> tuple[dict, list[dict], int]:
    from . import singular_series

    methods = ("closed", "def") if args.method == "both" else (args.method,)
    rows = []
    values = {}
    for method in methods:
        sv = singular_series.sing_value(args.n, args.k, method=method, q_max=args.q_max)
        values[method] = sv.value
        rows.append(
            {
                "n": args.n,
                "k": args.k,
                "method": method,
                "value": sv.value.value,
                "tail": sv.value.tail,
            }
        )
    meta = {"command": "singular", "q_max": args.q_max}
    if len(values) == 2:
        meta["consistent"] = values["closed"].intersects(values["def"], slack=1e-9)
    return meta, rows, EXIT_OK


def _cmd_variance(args) -> tuple[dict, list[dict], int]:
    from . import variance_lab

    table = _load_sieve(args)
    st = variance_lab.variance_stats(table, args.Q)
    row = {
        "x": st.x,
        "Q": st.Q,
        "k": st.k,
        "Y": st.Y,
        "S1": st.S1,
        "S2": st.S2,
        "S3": st.S3,
        "g_tail": st.g_tail,
        "decomp_residual": variance_lab.decomposition_residual(st),
    }
    return {"command": "variance"}, [row], EXIT_OK


def _cmd_identity(args) -> tuple[dict, list[dict], int]:
    from . import circle_method

    table = _load_sieve(args)
    lhs, rhs = circle_method.autocorr_identity(table, args.Q)
    match = lhs == rhs
    row = {"k": args.k, "x": args.x, "Q": args.Q, "lhs": lhs, "rhs": rhs, "match": match}
    return {"command": "identity"}, [row], EXIT_OK if match else EXIT_IDENTITY


def _cmd_arcs(args) -> tuple[dict, list[dict], int]:
    from .circle_method import ArcParams, arc_classify

    if not 1 <= args.grid <= _ARC_ROW_CAP:
        raise ValueError(f"--grid must be in 1..{_ARC_ROW_CAP}, got {args.grid}")
    params = ArcParams(x=args.x, tau=args.tau)
    inv_r = 1.0 / params.R
    rows = []
    major_count = 0
    for i in range(args.grid):
        alpha = inv_r + (i + 1) / args.grid
        major, q, a = arc_classify(alpha, params)
        major_count += 1 if major else 0
        rows.append({"alpha": alpha, "q": q, "a": a, "major": major})
    meta = {
        "command": "arcs",
        "x": args.x,
        "tau": args.tau,
        "R": params.R,
        "q_cap": params.q_cap,
        "grid": args.grid,
        "major_count": major_count,
    }
    return meta, rows, EXIT_OK


def _scaling_rows(report) -> list[dict]:
    return [
        {
            "x": r.x,
            "Q": r.Q,
            "k": r.k,
            "Y": r.Y,
            "S1": r.S1,
            "S2": r.S2,
            "S3": r.S3,
            "bound_new": r.bound_new,
            "bound_old": r.bound_old,
            "ratio_new": r.ratio_new,
            "ratio_old": r.ratio_old,
        }
        for r in report.rows
    ]


def _cmd_report_all(args) -> tuple[dict, list[dict], int]:
    from . import circle_method, figures, kfree_core, variance_lab

    os.makedirs(args.out_dir, exist_ok=True)
    written = []

    def table_path(stem: str) -> str:
        return os.path.join(args.out_dir, f"{stem}.{args.format}")

    def write_table(stem: str, meta: dict, rows: list[dict]) -> None:
        text = _json_text(meta, rows) if args.format == "json" else _csv_text(meta, rows)
        path = table_path(stem)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        written.append(path)

    # variance growth along a doubling x grid with Q = x^{3/4}
    x_grid = [2**e for e in range(10, 16) if 2**e <= args.x] or [args.x]
    report = variance_lab.scaling_report(args.k, x_grid, 0.75)
    write_table(
        "scaling",
        {
            "command": "report-all/scaling",
            "k": report.k,
            "q_rule": report.q_rule,
            "reference_only": report.reference_only,
        },
        _scaling_rows(report),
    )
    written.append(
        figures.fig_scaling(report, os.path.join(args.out_dir, "scaling.png"))
    )

    # decomposition sweep over Q at the largest x
    cache_dir = _cache_dir(args)
    xv = x_grid[-1]
    table = kfree_core.load_or_build(xv, args.k, cache_dir)
    sweep = []
    Q = 2
    while Q <= min(xv, 512):
        sweep.append(variance_lab.variance_stats(table, Q))
        Q *= 2
    write_table(
        "variance",
        {"command": "report-all/variance", "k": args.k, "x": xv},
        [
            {
                "x": s.x,
                "Q": s.Q,
                "k": s.k,
                "Y": s.Y,
                "S1": s.S1,
                "S2": s.S2,
                "S3": s.S3,
                "g_tail": s.g_tail,
            }
            for s in sweep
        ],
    )
    written.append(
        figures.fig_variance(sweep, os.path.join(args.out_dir, "variance.png"))
    )

    # major-arc defect mass per arc scale
    params = circle_method.ArcParams(x=xv, tau=args.tau)
    t_top = min(8.0, math.sqrt(xv) / 2.0, xv / params.R)
    T_list = [t for t in (1.0, 2.0, 4.0, 8.0) if t <= t_top] or [1.0]
    l2_rows = circle_method.l2_delta_report(
        table, params, T_list, grid_per_arc=args.grid
    )
    write_table(
        "l2",
        {"command": "report-all/l2", "k": args.k, "x": xv, "tau": args.tau},
        [
            {
                "T": r.T,
                "integral": r.integral,
                "bound_shape": r.bound_shape,
                "ratio": r.ratio,
            }
            for r in l2_rows
        ],
    )
    written.append(
        figures.fig_l2(l2_rows, xv, args.k, os.path.join(args.out_dir, "l2.png"))
    )

    meta = {"command": "report-all", "k": args.k, "out_dir": args.out_dir}
    rows = [{"file": path} for path in written]
    return meta, rows, EXIT_OK


_HANDLERS = {
    "sieve": _cmd_sieve,
    "twins": _cmd_twins,
    "density": _cmd_density,
    "gauss": _cmd_gauss,
    "singular": _cmd_singular,
    "variance": _cmd_variance,
    "identity": _cmd_identity,
    "arcs": _cmd_arcs,
    "report-all": _cmd_report_all,
}


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _pin_blas_threads()
    parser, commands = build_parser()
    try:
        _apply_config(argv, commands)
        args = parser.parse_args(argv)
        if args.threads < 0:
            raise ValueError(f"--threads must be >= 0, got {args.threads}")
        meta, rows, code = _HANDLERS[args.command](args)
        _emit(meta, rows, args)
        return code
    except ValueError as exc:
        print(f"kfree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"kfree: capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"kfree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
