"""Command line interface: ``drumcorners <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import DrumError, ParseError, ValidationError
from .geometry import (
    BoundaryCondition,
    LocalityScenario,
    Model,
    Polygon,
    Rectangle,
    Sector,
    SmoothDomain,
    resolve_domain,
)
from .harness import DEFAULT_T_GRID, emit_plot_data, locality_study, run_experiment, versions
from .spectrum import Spectrum


def _bc(text):
    bc = BoundaryCondition.parse(text)
    if bc.kind == "robin" and bc.c < 0:
        # boundary-unstable Robin conditions are not exercised by the CLI
        raise ValidationError("the CLI accepts Robin conditions with alpha/beta >= 0 only")
    return bc


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParseError(f"expected comma-separated numbers, got {text!r}") from exc


def _write(out: Path, name: str, text: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def _manifest(out: Path, args, extra=None):
    m = {"command": args.cmd, "argv": sys.argv[1:], "tol": args.tol, "seed": args.seed,
         "threads": args.threads, "versions": versions()}
    if extra:
        m.update(extra)
    _write(out, "run.json", json.dumps(m, indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------------ subcommands


def cmd_eigs(args, out):
    from .eigensolve import eigs_disk, eigs_fem, eigs_rectangle, mesh_polygon
    from .harness import _as_rectangle

    dom = resolve_domain(args.domain)
    bc = _bc(args.bc)
    extra = {}
    if isinstance(dom, SmoothDomain):
        if dom.kind != "disk":
            raise ValidationError("FEM handles straight-edged polygons only; smooth spectra exist for disks")
        spec = eigs_disk(dom.radius, bc, count=args.count)
    elif args.h is None and _as_rectangle(dom) is not None:
        a, b = _as_rectangle(dom)
        spec = eigs_rectangle(a, b, bc, count=args.count)
    elif isinstance(dom, Polygon):
        res = eigs_fem(dom, bc, args.h or 1 / 32, args.count, report=args.report)
        spec = res.spectrum
        extra = {"h_used": res.h_used, "refinement_ratio_report": res.refinement_ratio_report}
        if args.emit_mesh:
            Path(args.emit_mesh).write_text(json.dumps(res.mesh.to_dict()), encoding="utf-8")
    else:
        raise ValidationError(f"no eigen-solver for {type(dom).__name__}")
    _write(out, "spectrum.csv", spec.to_csv())
    sys.stdout.write(spec.to_csv())
    return {"count": len(spec), "cutoff": spec.cutoff, "source": spec.source, **extra}


def cmd_trace_coeffs(args, out):
    from .trace import trace_coeffs

    dom = resolve_domain(args.domain)
    if isinstance(dom, Sector):
        raise ValidationError("trace coefficients need a bounded domain")
    te = trace_coeffs(dom, _bc(args.bc))
    text = json.dumps(te.to_dict(), indent=2) + "\n"
    _write(out, "trace_coeffs.json", text)
    sys.stdout.write(text)
    return te.to_dict()


def _read_spectrum(path):
    return Spectrum.from_csv(Path(path).read_text(encoding="utf-8"))


def cmd_fit_trace(args, out):
    from .trace import default_t_grid, fit_trace_expansion

    spec = _read_spectrum(args.spectrum)
    bc = _bc(args.bc)
    known = {"area": args.area, "perimeter": args.perimeter} if args.area is not None else None
    if args.tmin is not None:
        t_grid = np.geomspace(args.tmin, args.tmax, args.n)
    else:
        if args.area is None:
            raise ValidationError("give --tmin/--tmax or --area")
        t_grid = default_t_grid(spec, args.area)
    fit = fit_trace_expansion(spec, t_grid, known if not args.no_pin else None, bc,
                              sqrt_term=not args.no_sqrt_term)
    emit_plot_data(fit, out / "trace_fit.csv")
    text = json.dumps(fit.to_dict(), indent=2) + "\n"
    _write(out, "fit.json", text)
    sys.stdout.write(text)
    return fit.to_dict()


def cmd_classify(args, out):
    from .trace import classify_corners

    spec = _read_spectrum(args.spectrum)
    known = {"area": args.area, "perimeter": args.perimeter, "euler_char": 1}
    t_grid = np.geomspace(args.tmin, args.tmax, args.n) if args.tmin is not None else None
    v = classify_corners(spec, known, t_grid, _bc(args.bc), sqrt_term=not args.no_sqrt_term)
    d = {"verdict": v.verdict, "excess": v.excess, "ci": v.ci}
    text = json.dumps(d, indent=2) + "\n"
    _write(out, "verdict.json", text)
    sys.stdout.write(text)
    return d


def _sector_rows(args, fn, var):
    from .sector import SectorPoint

    sector = Sector(args.gamma, _bc(args.bc))
    p = SectorPoint(args.r, args.phi)
    p0 = SectorPoint(args.r0, args.phi0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([var, "r", "phi", "r0", "phi0", "value", "tail_bound"])
    for x in _floats(getattr(args, var)):
        val, tail = fn(x, sector, p, p0)
        w.writerow([repr(float(v)) for v in (x, p.r, p.phi, p0.r, p0.phi, val, tail)])
    return buf.getvalue()


def cmd_sector_green(args, out):
    from .sector import green_sector_detail
    from .specfun import QuadratureBudget

    budget = QuadratureBudget(rel_tol=args.tol or 1e-10)

    def fn(s, sector, p, p0):
        r = green_sector_detail(s, sector, p, p0, budget)
        return r.value, r.tail_bound

    text = _sector_rows(args, fn, "s")
    _write(out, "sector_green.csv", text)
    sys.stdout.write(text)
    return {}


def cmd_sector_heat(args, out):
    from .sector import heat_sector_detail

    def fn(t, sector, p, p0):
        r = heat_sector_detail(t, sector, p, p0, agree=args.tol or 1e-3)
        # the Stehfest/GWR spread is the reported error proxy
        return r.value, abs(r.stehfest - r.gwr)

    text = _sector_rows(args, fn, "t")
    _write(out, "sector_heat.csv", text)
    sys.stdout.write(text)
    return {}


def cmd_locality(args, out):
    bc = _bc(args.bc)
    model = Model(args.model, bc, math.pi / 2, args.anchor or "")
    omega0 = tuple(_floats(args.omega0))
    if len(omega0) != 4:
        raise ValidationError("--omega0 needs x0,x1,y0,y1")
    a, b = _floats(args.rect)
    scen = LocalityScenario(Rectangle(a, b), model, omega0, bc, strict=not args.no_strict)
    t_grid = np.geomspace(args.tmin, args.tmax, args.n) if args.tmin is not None else None
    rep = locality_study(scen, t_grid if t_grid is not None else DEFAULT_T_GRID, args.density)
    text = emit_plot_data(rep, out / "locality.csv")
    d = rep.to_dict()
    _write(out, "locality.json", json.dumps(d, indent=2) + "\n")
    sys.stdout.write(text)
    return {"A": rep.A, "c": rep.c, "r_squared": rep.r_squared}


# ------------------------------------------------------------------ parser


def build_parser():
    p = argparse.ArgumentParser(prog="drumcorners", allow_abbrev=False, description="Heat kernels, heat traces and spectra of planar drums.")
    p.add_argument("--out", default="drumcorners-out", help="output directory (default: %(default)s)")
    p.add_argument("--tol", type=float, default=None, help="relative tolerance override")
    p.add_argument("--threads", type=int, default=1, help="numba worker threads")
    p.add_argument("--seed", type=int, default=0, help="recorded in the manifest; runs are deterministic")
    sub = p.add_subparsers(dest="cmd", required=True)

    e = sub.add_parser("eigs", help="eigenvalues as CSV")
    e.add_argument("--domain", required=True, help="preset name, JSON literal or JSON file")
    e.add_argument("--bc", default="D")
    e.add_argument("--count", type=int, default=20)
    e.add_argument("--h", type=float, default=None, help="FEM mesh size (forces FEM for polygons)")
    e.add_argument("--report", action="store_true", help="also solve at h/2")
    e.add_argument("--emit-mesh", default=None)
    e.set_defaults(func=cmd_eigs)

    t = sub.add_parser("trace-coeffs", help="short-time heat trace coefficients")
    t.add_argument("--domain", required=True)
    t.add_argument("--bc", default="D")
    t.set_defaults(func=cmd_trace_coeffs)

    for name, func in (("fit-trace", cmd_fit_trace), ("classify", cmd_classify)):
        f = sub.add_parser(name)
        f.add_argument("--spectrum", required=True, help="CSV with a 'lambda' header")
        f.add_argument("--area", type=float, required=(name == "classify"))
        f.add_argument("--perimeter", type=float, required=(name == "classify"))
        f.add_argument("--bc", default="D")
        f.add_argument("--tmin", type=float)
        f.add_argument("--tmax", type=float, default=5e-3)
        f.add_argument("--n", type=int, default=20)
        f.add_argument("--no-sqrt-term", action="store_true")
        if name == "fit-trace":
            f.add_argument("--no-pin", action="store_true")
        f.set_defaults(func=func)

    for name, func, var in (("sector-green", cmd_sector_green, "s"), ("sector-heat", cmd_sector_heat, "t")):
        s = sub.add_parser(name)
        s.add_argument("--gamma", type=float, required=True)
        s.add_argument("--bc", default="D")
        s.add_argument(f"--{var}", required=True, help="comma-separated values")
        s.add_argument("--r", type=float, required=True)
        s.add_argument("--phi", type=float, required=True)
        s.add_argument("--r0", type=float, required=True)
        s.add_argument("--phi0", type=float, required=True)
        s.set_defaults(func=func)

    lo = sub.add_parser("locality", help="rectangle vs model kernel decay study")
    lo.add_argument("--rect", default="1,1")
    lo.add_argument("--bc", default="D")
    lo.add_argument("--model", choices=["free", "halfplane", "sector"], required=True)
    lo.add_argument("--anchor", default=None)
    lo.add_argument("--omega0", required=True, help="x0,x1,y0,y1")
    lo.add_argument("--density", type=int, default=21)
    lo.add_argument("--tmin", type=float)
    lo.add_argument("--tmax", type=float, default=2e-2)
    lo.add_argument("--n", type=int, default=7)
    lo.add_argument("--no-strict", action="store_true", help="allow mismatched patches (negative controls)")
    lo.set_defaults(func=cmd_locality)

    r = sub.add_parser("run", help="run a JSON experiment config")
    r.add_argument("config")
    r.set_defaults(func=None)
    return p


def _error(exc, code):
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads and args.threads > 1:
        try:
            import numba

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        except ImportError:  # pragma: no cover
            pass
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.cmd == "run":
        return run_experiment(args.config, args.out, seed=args.seed, tol=args.tol)
    try:
        info = args.func(args, out)
    except (ValidationError, ParseError) as exc:
        return _error(exc, 2)
    except DrumError as exc:
        return _error(exc, 1)
    _manifest(out, args, {"result": info})
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
