"""Command-line driver: parameter sweeps, thermal scans, spectra, scaling.

Sweeps write one flat CSV schema for every pipeline:

    L,boundary,U,T,pair_i,pair_j,kind,mode,value,theta,alpha,beta,gamma,
    psi,phi,phi0,degenerate,gs_energy,seconds

with absent fields left empty and floats at 17 significant digits, so
files round-trip losslessly and identical (config, seed) pairs produce
byte-identical output at any worker count. The `seconds` column is only
populated with --timings, since wall-clock times would break that
determinism guarantee.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache

import numpy as np

from . import crit
from .discord import (
    OptimizerConfig,
    asymmetric_discord,
    global_discord,
    global_objective,
    symmetric_discord,
)
from .errors import ConvergenceError, ResourceLimitError
from .measure import real_basis_from_angles
from .model import build_hamiltonian, ground_state, low_spectrum, reduced_pair_state, thermal_state

CSV_COLUMNS = [
    "L", "boundary", "U", "T", "pair_i", "pair_j", "kind", "mode", "value",
    "theta", "alpha", "beta", "gamma", "psi", "phi", "phi0",
    "degenerate", "gs_energy", "seconds",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_NONCONVERGED = 4

WORKERS_ENV = "SPINONE_WORKERS"

# chains this long use the two known optimizing angle sets for the global
# discord instead of a full minimization; --full-opt overrides
GLOBAL_FIXED_ANGLE_SITES = 7


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _parse_float_axis(text: str) -> list[float]:
    """Parse 'min:max:step' or a comma list into grid values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid spec {text!r} must be min:max:step")
        lo, hi, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError(f"grid step must be positive in {text!r}")
        n = int(np.floor((hi - lo) / step + 1e-9))
        return [float(lo + i * step) for i in range(n + 1)]
    return [float(p) for p in text.split(",") if p]


def _parse_int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p]


def _parse_pair(text: str, L: int, boundary: str) -> tuple[int, int]:
    if text == "central":
        i = (L - 1) // 2
        return i, i + 1
    if text.startswith("offset:"):
        k = int(text.split(":", 1)[1])
        if k < 1:
            raise ConfigError(f"pair offset must be >= 1, got {k}")
        if boundary == "periodic":
            i = 0
        else:
            i = (L - 1 - k) // 2
        j = i + k
        if j >= L:
            raise ConfigError(f"pair offset {k} does not fit in L={L}")
        return i, j
    if ":" in text:
        i, j = (int(p) for p in text.split(":", 1))
        if not (0 <= i < j < L):
            raise ConfigError(f"pair {i}:{j} out of range for L={L}")
        return i, j
    raise ConfigError(f"cannot parse pair spec {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinone",
        description="discord and criticality sweeps for the anisotropic spin-1 chain",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    # let grid specs like "-2:2:0.01" pass as option values rather than
    # being mistaken for flags (argparse only whitelists plain negatives)
    grid_token = re.compile(r"^-\d+(\.\d*)?([:,].*)?$")
    parser._negative_number_matcher = grid_token

    def track(p):
        p._negative_number_matcher = grid_token
        return p

    def common(p):
        p.add_argument("--L", required=True, help="chain length or comma list, e.g. 8 or 8,10,12")
        p.add_argument("--boundary", choices=("open", "periodic"), default="open")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=None,
                       help=f"worker processes (default ${WORKERS_ENV} or 1)")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--config", default=None, help="JSON config file; flags override")
        p.add_argument("--resume", action="store_true",
                       help="continue an interrupted run from the last completed row")
        p.add_argument("--timings", action="store_true",
                       help="record wall-clock seconds per row (breaks byte determinism)")

    def discord_flags(p):
        p.add_argument("--kind", choices=("asym", "sym", "global"), default="sym")
        p.add_argument("--mode", choices=("full", "real"), default="real")
        p.add_argument("--pair", default="central", help="central | i:j | offset:k")
        p.add_argument("--grid-points", type=int, default=9, dest="grid_points")
        p.add_argument("--restarts", type=int, default=4)
        p.add_argument("--full-opt", action="store_true", dest="full_opt",
                       help="full global-discord minimization even for long chains")

    p = track(sub.add_parser("sweep", help="discord of ground states over a U grid"))
    common(p)
    discord_flags(p)
    p.add_argument("--U", required=True, help="U grid: min:max:step or comma list")

    p = track(sub.add_parser("thermal", help="discord of thermal states over a T grid"))
    common(p)
    discord_flags(p)
    p.add_argument("--U", required=True, help="U values: min:max:step or comma list")
    p.add_argument("--T", required=True, help="T grid: min:max:step or comma list")

    p = track(sub.add_parser("spectrum", help="lowest k levels over a U grid"))
    common(p)
    p.add_argument("--U", required=True)
    p.add_argument("--k", type=int, default=3)

    p = track(sub.add_parser("scaling", help="derivative peaks, crossing and collapse from sweep CSVs"))
    p.add_argument("inputs", nargs="+", help="sweep CSV files covering >= 3 sizes")
    p.add_argument("--values", choices=("raw", "d2"), default="raw",
                   help="'raw' discord curves or precomputed second derivatives")
    p.add_argument("--window", default="-0.4:-0.2", help="peak search window lo:hi")
    p.add_argument("--fit-window", default="0.93:1.00", dest="fit_window",
                   help="window for quadratic crossing fits and collapse")
    p.add_argument("--nu-range", default="1.0:2.5", dest="nu_range")
    p.add_argument("--drop-below", type=int, default=0, dest="drop_below",
                   help="ignore sizes below this L in the peak extrapolation")
    p.add_argument("--out", default=None, help="report JSON path (default stdout)")
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse args twice so --config supplies defaults that flags override."""
    args = parser.parse_args(argv)
    path = getattr(args, "config", None)
    if not path:
        return args
    try:
        with open(path) as fh:
            defaults = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(defaults, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    parser.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# task execution
# ---------------------------------------------------------------------------

# small caches: entries can hold multi-MB state vectors or dense
# eigendecompositions, and one sweep revisits only a handful of them
@lru_cache(maxsize=16)
def _cached_hamiltonian(L: int, U: float, boundary: str):
    return build_hamiltonian(L, U, boundary)


@lru_cache(maxsize=8)
def _cached_ground(L: int, U: float, boundary: str, seed: int):
    h = _cached_hamiltonian(L, U, boundary)
    return ground_state(h, seed=seed)


def _fixed_angle_global(state, sites: int):
    """Global discord evaluated at the two known optimizing angle sets."""
    values = []
    for theta in (0.0, np.pi / 2):
        bases = [real_basis_from_angles(theta, 0.0, 0.0)] * sites
        values.append((global_objective(state, bases), theta))
    values.sort()
    return values[0]


def _format_value(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "True" if x else "False"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


def _row_text(row: dict) -> str:
    return ",".join(_format_value(row.get(col)) for col in CSV_COLUMNS)


def _run_task(task: dict) -> list[dict]:
    """Compute the rows for one grid point; runs inside worker processes."""
    t0 = time.perf_counter()
    kind = task["kind"]
    L = task["L"]
    boundary = task["boundary"]
    U = task["U"]
    rows = []

    if kind == "spectrum":
        h = _cached_hamiltonian(L, U, boundary)
        slice_ = low_spectrum(h, task["k"], seed=task["seed"])
        elapsed = time.perf_counter() - t0
        for idx, (energy, flag) in enumerate(zip(slice_.energies, slice_.degeneracy_flags)):
            rows.append({
                "L": L, "boundary": boundary, "U": U, "kind": "spectrum",
                "mode": f"k{idx}", "value": float(energy), "degenerate": bool(flag),
                "gs_energy": float(slice_.energies[0]),
                "seconds": elapsed if task["timings"] else None,
            })
        return rows

    cfg = OptimizerConfig(
        coarse_grid=task["grid_points"], restarts=task["restarts"], seed=task["seed"]
    )
    T = task.get("T")
    if T is None:
        energy, state, degenerate = _cached_ground(L, U, boundary, task["seed"])
    else:
        h = _cached_hamiltonian(L, U, boundary)
        state = thermal_state(h, T)
        w, _ = h.dense_eig()
        energy = float(w[0])
        degenerate = bool(w[1] - w[0] < 1e-9) if w.size > 1 else False

    row = {
        "L": L, "boundary": boundary, "U": U, "T": T, "kind": kind,
        "degenerate": degenerate, "gs_energy": energy,
    }

    if kind == "global":
        row["mode"] = "real"
        if L >= GLOBAL_FIXED_ANGLE_SITES and not task["full_opt"]:
            value, theta = _fixed_angle_global(state, L)
            row["value"] = value
            row.update({"theta": theta, "alpha": 0.0, "beta": 0.0})
        else:
            res = global_discord(state, shared=True, mode="real", cfg=cfg)
            row["value"] = res.value
            a = res.angles[0]
            row.update({
                "theta": a.theta, "alpha": a.alpha, "beta": a.beta,
                "gamma": a.gamma, "psi": a.psi, "phi": a.phi, "phi0": a.phi0,
            })
    else:
        i, j = task["pair"]
        pair_state = reduced_pair_state(state, i, j)
        row.update({"pair_i": i, "pair_j": j, "mode": task["mode"]})
        if kind == "sym":
            res = symmetric_discord(pair_state, mode=task["mode"], cfg=cfg)
        else:
            res = asymmetric_discord(pair_state, cfg=cfg)
        row["value"] = res.value
        a = res.angles[0]
        row.update({
            "theta": a.theta, "alpha": a.alpha, "beta": a.beta,
            "gamma": a.gamma, "psi": a.psi, "phi": a.phi, "phi0": a.phi0,
        })

    row["seconds"] = (time.perf_counter() - t0) if task["timings"] else None
    return [row]


def _enumerate_tasks(args) -> list[dict]:
    sizes = _parse_int_list(args.L)
    us = _parse_float_axis(args.U)
    base = {
        "boundary": args.boundary,
        "seed": args.seed,
        "timings": args.timings,
    }
    tasks = []
    if args.command == "spectrum":
        for L in sizes:
            for U in us:
                tasks.append(dict(base, kind="spectrum", L=L, U=U, k=args.k))
        return tasks

    ts = _parse_float_axis(args.T) if args.command == "thermal" else [None]
    for L in sizes:
        boundary = args.boundary
        if args.kind == "global" and boundary == "periodic" and L == 2:
            # a two-site ring would double-count its only bond; fall back
            # to the open single-bond chain and record that in the row
            boundary = "open"
            print("note: L=2 ring replaced by the open single-bond chain", file=sys.stderr)
        pair = None
        if args.kind in ("sym", "asym"):
            pair = _parse_pair(args.pair, L, boundary)
        for U in us:
            for T in ts:
                task = dict(
                    base, kind=args.kind, L=L, U=U, boundary=boundary,
                    mode=args.mode, grid_points=args.grid_points,
                    restarts=args.restarts, full_opt=args.full_opt,
                )
                if pair is not None:
                    task["pair"] = pair
                if T is not None:
                    task["T"] = T
                tasks.append(task)
    return tasks


def _count_completed_rows(path: str) -> int:
    if not os.path.exists(path):
        return 0
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != ",".join(CSV_COLUMNS):
            raise ConfigError(f"{path} does not carry the expected CSV header")
        return sum(1 for _ in fh)


def _rows_per_task(task: dict) -> int:
    return task["k"] if task["kind"] == "spectrum" else 1


def _run_grid_command(args) -> int:
    tasks = _enumerate_tasks(args)
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")

    skip_tasks = 0
    if args.resume:
        done_rows = _count_completed_rows(args.out)
        acc = 0
        while skip_tasks < len(tasks) and acc + _rows_per_task(tasks[skip_tasks]) <= done_rows:
            acc += _rows_per_task(tasks[skip_tasks])
            skip_tasks += 1
        if acc != done_rows:
            raise ConfigError(
                f"{args.out} ends mid-task ({done_rows} rows); cannot resume cleanly"
            )
    pending = tasks[skip_tasks:]

    new_file = not (args.resume and skip_tasks > 0)
    mode = "w" if new_file else "a"
    status = EXIT_OK
    with open(args.out, mode) as fh:
        if new_file:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            fh.flush()
        try:
            if workers == 1:
                results = map(_run_task, pending)
                for rows in results:
                    for row in rows:
                        fh.write(_row_text(row) + "\n")
                    fh.flush()
            else:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    for rows in pool.map(_run_task, pending):
                        for row in rows:
                            fh.write(_row_text(row) + "\n")
                        fh.flush()
        except ConvergenceError as exc:
            print(f"error: {exc} (partial output kept in {args.out})", file=sys.stderr)
            status = EXIT_NONCONVERGED
    return status


# ---------------------------------------------------------------------------
# scaling analysis
# ---------------------------------------------------------------------------

def _read_sweep_curves(paths: list[str]) -> dict[int, crit.Curve]:
    """Group sweep rows by L into value-vs-U curves on a common grid."""
    by_size: dict[int, dict[float, float]] = {}
    for path in paths:
        with open(path) as fh:
            header = fh.readline().rstrip("\n").split(",")
            try:
                iL = header.index("L")
                iU = header.index("U")
                iv = header.index("value")
            except ValueError as exc:
                raise ConfigError(f"{path} lacks L/U/value columns") from exc
            for line in fh:
                parts = line.rstrip("\n").split(",")
                if len(parts) < len(header) or not parts[iv]:
                    continue
                L = int(parts[iL])
                by_size.setdefault(L, {})[float(parts[iU])] = float(parts[iv])
    if not by_size:
        raise ConfigError("no usable rows found in the input files")

    grids = {L: tuple(sorted(d)) for L, d in by_size.items()}
    reference = next(iter(grids.values()))
    for L, g in grids.items():
        if g != reference:
            raise ConfigError(
                f"size L={L} is sampled on a different U grid than the other files"
            )
    curves = {}
    for L, d in sorted(by_size.items()):
        us = np.array(sorted(d))
        curves[L] = crit.Curve(us, np.array([d[u] for u in us]), L)
    return curves


def _parse_window(text: str) -> tuple[float, float]:
    lo, hi = (float(p) for p in text.split(":", 1))
    if not lo < hi:
        raise ConfigError(f"window {text!r} is empty")
    return lo, hi


def _run_scaling(args) -> int:
    curves = _read_sweep_curves(args.inputs)
    window = _parse_window(args.window)
    fit_window = _parse_window(args.fit_window)
    nu_range = _parse_window(args.nu_range)

    report: dict = {
        "inputs": list(args.inputs),
        "sizes": sorted(curves),
        "values": args.values,
        "warnings": [],
    }
    if max(curves) <= 14:
        report["warnings"].append(
            f"largest chain is L={max(curves)}: intercepts extrapolated from such small"
            " sizes carry a systematic shift relative to results from chains"
            " hundreds of sites long"
        )

    if args.values == "raw":
        peaks = []
        for L, curve in sorted(curves.items()):
            d1 = crit.derivative(curve, 1)
            pk = crit.peak_location(d1, window=window)
            peaks.append({"L": L, "x_peak": pk.x, "y_peak": pk.y, "at_edge": pk.at_edge})
            if pk.at_edge:
                report["warnings"].append(f"L={L}: derivative peak sits on the window edge")
        report["peaks"] = peaks
        try:
            u_c, resid = crit.extrapolate_critical(
                [p["L"] for p in peaks], [p["x_peak"] for p in peaks], args.drop_below
            )
            report["u_c"] = u_c
            report["u_c_residual"] = resid
        except ValueError as exc:
            report["u_c"] = None
            report["warnings"].append(f"peak extrapolation failed: {exc}")
        d2_curves = [crit.derivative(c, 2) for _, c in sorted(curves.items())]
    else:
        report["peaks"] = []
        report["u_c"] = None
        d2_curves = [c for _, c in sorted(curves.items())]

    try:
        u_star, spread = crit.crossing_point(d2_curves, window=fit_window)
        report["u_star"] = u_star
        report["u_star_spread"] = spread
    except ValueError as exc:
        report["u_star"] = None
        report["warnings"].append(f"crossing detection failed: {exc}")

    if report.get("u_star") is not None and len(d2_curves) >= 3:
        fit = crit.fss_collapse(d2_curves, report["u_star"], nu_range=nu_range)
        report["nu"] = fit.nu
        report["nu_err"] = fit.nu_err
        report["collapse_residual"] = fit.residual
        report["collapse_reliable"] = fit.reliable
        if not fit.reliable:
            report["warnings"].append("collapse cost landscape is flat; nu is unreliable")
    else:
        report["nu"] = None

    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = _apply_config_file(parser, sys.argv[1:] if argv is None else list(argv))
        if args.command == "scaling":
            return _run_scaling(args)
        return _run_grid_command(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
