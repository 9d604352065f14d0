"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime or I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from . import automaton
from .analysis import (DegenerateSeriesError, InsufficientDataError, RsCurve,
                       estimate_hurst, rs_curve)
from .automaton import ConfigurationError, SimParams
from .experiments import SweepSpec, fit_load_constant, sweep
from .frames import ascii_frame, ppm_frame
from .streams import make_stream

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_sim_flags(p, *, seed_required=True, cycles=10_000, burn_in=0):
    p.add_argument("--lambda", dest="lam", type=float, default=0.07, help="call rate per cycle")
    p.add_argument("--mu", type=float, default=0.03, help="conversation end rate per cycle")
    p.add_argument("--width", type=int, default=15)
    p.add_argument("--height", type=int, default=15)
    p.add_argument("--cycles", type=int, default=cycles)
    p.add_argument("--burn-in", type=int, default=burn_in)
    p.add_argument("--seed", type=int, required=seed_required, default=None)
    p.add_argument("--no-immediate-reuse", action="store_true",
                   help="lines freed in a cycle cannot be reached until the next one")
    p.add_argument("--backend", choices=automaton.available_backends(), default=None)


def _params(args) -> SimParams:
    try:
        return SimParams(lam=args.lam, mu=args.mu, width=args.width, height=args.height,
                         cycles=args.cycles, burn_in=args.burn_in, seed=args.seed,
                         immediate_reuse=not args.no_immediate_reuse)
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None


def _check_writable(path: str | None) -> None:
    if path in (None, "-"):
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write to {path}")


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_simulate(args) -> int:
    params = _params(args)
    _check_writable(args.output)
    series = automaton.run(params, backend=args.backend)
    buf = io.StringIO()
    buf.write("cycle,busy_count\n")
    for t, z in enumerate(series.tolist(), start=1):
        buf.write(f"{t},{z}\n")
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def _read_rows(path: str) -> list[list[str]]:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return [row for row in csv.reader(io.StringIO(text))
            if row and not row[0].lstrip().startswith("#")]


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _column(rows, preferred: str) -> tuple[np.ndarray, list[str] | None]:
    header = None
    if rows and not all(_is_number(c) for c in rows[0]):
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    col = header.index(preferred) if header and preferred in header else -1
    try:
        return np.array([float(r[col]) for r in rows]), header
    except (ValueError, IndexError) as exc:
        raise UsageError(f"malformed input: {exc}") from None


def read_series(path: str) -> np.ndarray:
    """Series from a CSV: the ``busy_count`` column if present, else the last column."""
    values, _ = _column(_read_rows(path), "busy_count")
    return values


def read_curve(path: str) -> RsCurve:
    rows = _read_rows(path)
    if rows and not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        if "n" not in header or "rs" not in header:
            raise UsageError("curve file needs 'n' and 'rs' columns")
        i, j = header.index("n"), header.index("rs")
        rows = rows[1:]
    else:
        i, j = 0, 1
    try:
        n = [int(float(r[i])) for r in rows]
        rs = [float(r[j]) for r in rows]
        return RsCurve(np.array(n), np.array(rs))
    except (ValueError, IndexError) as exc:
        raise UsageError(f"malformed curve file: {exc}") from None


def cmd_rs(args) -> int:
    if args.min_n < 8 or args.points_per_decade < 1:
        raise UsageError("--min-n must be >= 8 and --points-per-decade >= 1")
    if args.input is not None and args.curve is not None:
        raise UsageError("--input and --curve are mutually exclusive")
    _check_writable(args.output)
    if args.curve is not None:
        curve = read_curve(args.curve)
    else:
        if args.input is not None:
            series = read_series(args.input)
        else:
            if args.seed is None:
                raise UsageError("--seed is required when simulating")
            params = _params(args)
            series = automaton.run(params, backend=args.backend)[params.burn_in:]
        curve = rs_curve(series, args.min_n, args.points_per_decade)
    est = estimate_hurst(curve)
    buf = io.StringIO()
    buf.write("n,rs,log2_half_n,log2_rs\n")
    for n, rs in curve.points:
        buf.write(f"{n},{rs:.10g},{np.log2(n / 2):.10g},{np.log2(rs):.10g}\n")
    _emit(buf.getvalue(), args.output)
    print(f"H={est.H:.6f} intercept={est.intercept:.6f} r2={est.r_squared:.6f} points={est.n_points}")
    return EXIT_OK


_CONFIG_KEYS = ("lambdas", "mus", "realizations", "width", "height", "cycles", "burn_in",
                "seed_base", "workers", "min_n", "points_per_decade")


def read_config(path: str) -> dict[str, str]:
    """``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: expected one of {sorted(_CONFIG_KEYS)} as key=value")
        out[key] = value.strip()
    return out


def _float_list(text: str, name: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"{name} must be a comma-separated list of numbers") from None
    if not values:
        raise UsageError(f"{name} is empty")
    return values


_SWEEP_DEFAULTS = {
    "lambdas": "0.01,0.03,0.05,0.07,0.1,0.15", "mus": "0.01,0.03,0.05,0.07,0.1,0.15",
    "realizations": 40, "width": 15, "height": 15, "cycles": 10_000, "burn_in": 500,
    "seed_base": 0, "workers": 1, "min_n": 16, "points_per_decade": 10,
}


def cmd_sweep(args) -> int:
    settings = dict(_SWEEP_DEFAULTS)
    if args.config:
        try:
            settings.update(read_config(args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    try:
        ints = {k: int(settings[k]) for k in ("realizations", "width", "height", "cycles",
                                               "burn_in", "seed_base", "workers", "min_n",
                                               "points_per_decade")}
    except ValueError as exc:
        raise UsageError(f"invalid integer setting: {exc}") from None
    if ints["workers"] < 1:
        raise UsageError("workers must be >= 1")
    try:
        base = SimParams(lam=1.0, mu=1.0, width=ints["width"], height=ints["height"],
                         cycles=ints["cycles"], burn_in=ints["burn_in"])
        spec = SweepSpec(
            lambdas=_float_list(str(settings["lambdas"]), "lambdas"),
            mus=_float_list(str(settings["mus"]), "mus"),
            realizations=ints["realizations"], base_params=base, seed_base=ints["seed_base"],
            min_n=ints["min_n"], points_per_decade=ints["points_per_decade"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _check_writable(args.output)
    result = sweep(spec, workers=ints["workers"])
    fit = None
    if args.fit_c:
        fit = fit_load_constant(result, base.cells)
    _emit(result.to_csv(fit), args.output)
    return EXIT_OK


def cmd_render(args) -> int:
    params = _params(args)
    if args.frame_every < 1:
        raise UsageError("--frame-every must be >= 1")
    if args.cell_px < 1:
        raise UsageError("--cell-px must be >= 1")
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"cannot write to {out}")
    bitgen = make_stream(params.seed)
    grid = automaton.init_grid(params, bitgen)
    digits = max(6, len(str(params.cycles)))
    written = 0
    while True:
        if grid.cycle % args.frame_every == 0:
            stem = out / f"frame_{grid.cycle:0{digits}d}"
            if args.format == "ascii":
                stem.with_suffix(".txt").write_text(ascii_frame(grid))
            else:
                stem.with_suffix(".ppm").write_bytes(ppm_frame(grid, args.cell_px))
            written += 1
        if grid.cycle >= params.cycles:
            break
        grid = automaton.step(grid, params, bitgen, backend=args.backend)
    print(f"wrote {written} frames to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subscriber-ca", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="busy-count series as CSV")
    _add_sim_flags(p)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rs", help="R/S curve and Hurst estimate")
    _add_sim_flags(p, seed_required=False)
    p.add_argument("--input", help="series CSV ('-' for stdin)")
    p.add_argument("--curve", help="existing curve CSV with n,rs columns")
    p.add_argument("--min-n", type=int, default=16)
    p.add_argument("--points-per-decade", type=int, default=10)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_rs)

    p = sub.add_parser("sweep", help="(lambda, mu) sweep averaged over realizations")
    p.add_argument("--config", help="key=value settings file")
    p.add_argument("--lambdas")
    p.add_argument("--mus")
    p.add_argument("--realizations", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--cycles", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--seed-base", dest="seed_base", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--min-n", dest="min_n", type=int)
    p.add_argument("--points-per-decade", dest="points_per_decade", type=int)
    p.add_argument("--fit-c", action="store_true", help="append the fitted load constant")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", help="grid frames as ASCII counters or PPM images")
    _add_sim_flags(p, cycles=100)
    p.add_argument("--frame-every", type=int, default=10)
    p.add_argument("--format", choices=["ascii", "ppm"], default="ascii")
    p.add_argument("--cell-px", type=int, default=8)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"subscriber-ca {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InsufficientDataError, DegenerateSeriesError) as exc:
        print(f"subscriber-ca {args.command}: insufficient data: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"subscriber-ca {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
