"""Command-line interface: ``dbar-disk {fundamental,cgo,iterate,sweep,selftest}``.

Every run writes its outputs under ``--out`` together with ``manifest.json``
(configuration, library versions, timings, SHA-256 of every output file).
Failures write ``error.json`` and exit with status 2.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .cgo import Gauge, solve_cgo
from .errors import ConvergenceError, DbarError
from .fundamental import solve_basis
from .parallel import WORKERS_ENV, default_workers
from .picard import solve_cgo_iterative
from .potential import autotune, characteristic, load_sampled, radial_profile, sample
from .reflection import Method, ResolutionPolicy, compare_asym, sweep
from .spectral import make_grid, write_coefficients
from .validation import bessel_fundamental_check, cross_method_check

log = logging.getLogger("dbar_disk")

EXIT_ERROR = 2


# --- argument types ---------------------------------------------------------


def parse_k(text: str) -> complex:
    """``"re,im"`` or a bare real ``"re"``."""
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"k must be 're,im' or 're', got {text!r}")


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
        return v

    return conv


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# --- parser -----------------------------------------------------------------


def _common(p: argparse.ArgumentParser, resolution=True):
    g = p.add_argument_group("potential")
    g.add_argument("--potential", choices=["characteristic", "radial", "file"], default="characteristic")
    g.add_argument("--amplitude", type=float, default=1.0, help="scale factor applied to q")
    g.add_argument("--profile", type=_floats, help="Chebyshev coefficients in 2r-1 for --potential radial")
    g.add_argument("--potential-file", type=Path, help="sampled potential for --potential file")
    if resolution:
        r = p.add_argument_group("resolution")
        r.add_argument("--nr", type=_positive(int), default=32)
        r.add_argument("--nphi", type=_positive(int), default=64)
        r.add_argument("--autotune", action="store_true", help="grow Nr, Nphi until q e^{conj(kz)-kz} is resolved")
    p.add_argument("--out", type=Path, default=Path("dbar-run"), help="run directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dbar-disk", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fundamental", help="fundamental basis, one coefficient CSV per column and component")
    _common(p)

    p = sub.add_parser("cgo", help="CGO solution and R(k) at one k")
    _common(p)
    p.add_argument("--k", type=parse_k, required=True, help="'re,im' (use --k=-1,0 for negative re)")
    p.add_argument("--method", choices=["auto", "fundamental", "picard"], default="auto",
                   help="auto: fundamental for |k| <= 1, picard otherwise")
    p.add_argument("--gauge", choices=["psi", "phi"], default="psi", help="gauge of the fundamental route")
    p.add_argument("--tol", type=_positive(float), default=1e-10)
    p.add_argument("--max-steps", type=_positive(int), default=100)

    p = sub.add_parser("iterate", help="Picard iteration at one k")
    _common(p)
    p.add_argument("--k", type=parse_k, required=True)
    p.add_argument("--tol", type=_positive(float), default=1e-10)
    p.add_argument("--max-steps", type=_positive(int), default=100)

    p = sub.add_parser("sweep", help="R(k) on a uniform real k grid")
    _common(p)
    p.add_argument("--kmin", type=_positive(float), required=True)
    p.add_argument("--kmax", type=_positive(float), required=True)
    p.add_argument("--n", type=_positive(int), required=True, help="number of k samples")
    p.add_argument("--method", choices=["fundamental", "picard"], default="fundamental")
    p.add_argument("--asym", action="store_true", help="add R_asym and write asym.csv")
    p.add_argument("--tol", type=_positive(float), default=1e-10)
    p.add_argument("--max-steps", type=_positive(int), default=100)
    p.add_argument("--workers", type=_positive(int), default=None,
                   help=f"worker processes (default ${WORKERS_ENV} or 1)")

    p = sub.add_parser("selftest", help="Bessel fundamental test and k=1 cross-method test")
    p.add_argument("--out", type=Path, default=Path("dbar-run"))
    p.add_argument("-v", "--verbose", action="store_true")
    return ap


# --- helpers ----------------------------------------------------------------


def _potential(args):
    if args.potential == "characteristic":
        return characteristic(args.amplitude)
    if args.potential == "radial":
        if not args.profile:
            raise ValueError("--potential radial needs --profile")
        return radial_profile(args.profile, args.amplitude)
    if args.potential_file is None:
        raise ValueError("--potential file needs --potential-file")
    p = load_sampled(args.potential_file)
    if args.amplitude != 1.0:
        p = type(p)(p.kind, args.amplitude, samples=p.samples)
    return p


def _grid_for(args, potential, k=0j):
    if args.potential == "file":
        g = potential.samples.grid
        return g
    if getattr(args, "autotune", False):
        return make_grid(*autotune(potential, k, args.nr, args.nphi))
    return make_grid(args.nr, args.nphi)


def _json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, default=_jsonable) + "\n")
    return path


def _jsonable(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _fmt(x) -> str:
    return "" if x is None else f"{x:.16e}"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# --- commands ---------------------------------------------------------------


def cmd_fundamental(args, out: Path) -> tuple[list, dict]:
    q = _potential(args)
    grid = _grid_for(args, q)
    basis = solve_basis(sample(q, grid))
    files = []
    for j in range(1, grid.n_phi + 1):
        s1, s2 = basis.column(j)
        files.append(write_coefficients(s1, out / f"psi1_j{j:04d}.csv"))
        files.append(write_coefficients(s2, out / f"psi2_j{j:04d}.csv"))
    info = {"resolution": [grid.n_r, grid.n_phi], "condition": basis.condition, "residual": basis.residual}
    files.append(_json(out / "basis.json", info))
    return files, info


def cmd_cgo(args, out: Path) -> tuple[list, dict]:
    q = _potential(args)
    k = args.k
    method = args.method
    if method == "auto":
        method = "fundamental" if abs(k) <= 1 else "picard"
    grid = _grid_for(args, q, k)
    if method == "fundamental":
        sol = solve_cgo(solve_basis(sample(q, grid)), k, Gauge(args.gauge))
        residuals = sol.diagnostics["conditions"]
    else:
        sol, trace = solve_cgo_iterative(q, k, grid, args.tol, args.max_steps)
        residuals = {"delta": trace.deltas[-1], "steps": trace.steps}
    files = [
        write_coefficients(sol.field1, out / "field1.csv"),
        write_coefficients(sol.field2, out / "field2.csv"),
    ]
    R = sol.reflection
    record = {
        "k": k,
        "R_re": None if R is None else R.real,
        "R_im": None if R is None else R.imag,
        "residuals": residuals,
        "gauge": sol.gauge.value,
        "method": method,
        "resolution": [grid.n_r, grid.n_phi],
    }
    files.append(_json(out / "cgo.json", record))
    return files, record


def cmd_iterate(args, out: Path) -> tuple[list, dict]:
    q = _potential(args)
    grid = _grid_for(args, q, args.k)
    try:
        sol, trace = solve_cgo_iterative(q, args.k, grid, args.tol, args.max_steps)
    except ConvergenceError as exc:
        if exc.trace is not None:
            _json(out / "trace.json", {**exc.trace.to_dict(), "R": None})
        raise
    files = [
        write_coefficients(sol.field1, out / "phi1.csv"),
        write_coefficients(sol.field2, out / "phi2.csv"),
    ]
    record = {**trace.to_dict(), "R": sol.reflection}
    files.append(_json(out / "trace.json", record))
    return files, {"steps": trace.steps, "R": sol.reflection}


def cmd_sweep(args, out: Path) -> tuple[list, dict]:
    if args.kmax < args.kmin or (args.kmax == args.kmin and args.n > 1):
        raise ValueError("need kmin < kmax (or n = 1 with kmin = kmax)")
    q = _potential(args)
    ks = np.linspace(args.kmin, args.kmax, args.n)
    if args.potential == "file":
        g = q.samples.grid
        policy = ResolutionPolicy(g.n_r, g.n_phi)
    else:
        policy = ResolutionPolicy(args.nr, args.nphi, auto=args.autotune)
    workers = args.workers or default_workers()
    s = sweep(q, ks, Method(args.method), policy, workers, args.tol, args.max_steps, with_asym=args.asym)
    lines = ["k_re,k_im,R_re,R_im,R_asym,residual,steps"]
    asym = s.asym or [None] * len(s.samples)
    for smp, ra in zip(s.samples, asym):
        R = smp.R
        lines.append(",".join([
            _fmt(smp.k.real), _fmt(smp.k.imag),
            _fmt(None if R is None else R.real), _fmt(None if R is None else R.imag),
            _fmt(ra), _fmt(smp.residual), "" if smp.steps is None else str(smp.steps),
        ]))
    path = out / "sweep.csv"
    path.write_text("\n".join(lines) + "\n")
    files = [path]
    if args.asym:
        rows = ["k,R_re,R_im,R_asym,scaled_residual"]
        rows += [
            ",".join([_fmt(r.k), _fmt(r.R.real), _fmt(r.R.imag), _fmt(r.R_asym), _fmt(r.scaled_residual)])
            for r in compare_asym(s)
        ]
        files.append(out / "asym.csv")
        files[-1].write_text("\n".join(rows) + "\n")
    failures = [{"k": f.k, **f.error} for f in s.failures]
    info = {"samples": len(s.samples), "failures": failures,
            "resolutions": sorted({tuple(x.resolution) for x in s.samples if x.resolution})}
    return files, info


def cmd_selftest(args, out: Path) -> tuple[list, dict]:
    bessel = bessel_fundamental_check(32, 64)
    cross = cross_method_check(1.0, 32, 64)
    results = {
        "bessel_fundamental": {
            "max_error": bessel.max_error(), "tolerance": 1e-12, "passed": bessel.max_error() <= 1e-12},
        "cross_method_fields": {
            "difference": cross.field_difference, "tolerance": 1e-11, "passed": cross.field_difference <= 1e-11},
        "cross_method_reflection": {
            "difference": cross.reflection_difference, "tolerance": 1e-10,
            "passed": cross.reflection_difference <= 1e-10},
    }
    for name, r in results.items():
        value = r.get("max_error", r.get("difference"))
        print(f"{'PASS' if r['passed'] else 'FAIL'} {name}: {value:.3e} (tol {r['tolerance']:.0e})")
    files = [_json(out / "selftest.json", results)]
    if not all(r["passed"] for r in results.values()):
        raise SelftestFailure(results)
    return files, results


class SelftestFailure(Exception):
    def __init__(self, results):
        super().__init__("selftest failed")
        self.results = results


COMMANDS = {
    "fundamental": cmd_fundamental,
    "cgo": cmd_cgo,
    "iterate": cmd_iterate,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("workers", "verbose")}
    return json.loads(json.dumps(cfg, default=_jsonable))


def run(args) -> int:
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": args.command,
        "config": _config(args),
        "versions": {
            "dbar_disk": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    t0 = time.perf_counter()
    status = 0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            files, info = COMMANDS[args.command](args, out)
            manifest["result"] = info
        except (DbarError, ValueError, OSError, SelftestFailure) as exc:
            status = EXIT_ERROR
            err = {"type": type(exc).__name__, "message": str(exc)}
            if isinstance(exc, SelftestFailure):
                err["results"] = exc.results
            if getattr(exc, "condition", None) is not None:
                err["condition"] = exc.condition
            files = [_json(out / "error.json", err)]
            if (out / "trace.json").exists():
                files.append(out / "trace.json")
            manifest["error"] = err
            print(f"error: {err['type']}: {err['message']}", file=sys.stderr)
    manifest["warnings"] = [str(w.message) for w in caught]
    manifest["timings"] = {"total_s": time.perf_counter() - t0}
    manifest["files"] = {p.name: _sha256(p) for p in files}
    _json(out / "manifest.json", manifest)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
