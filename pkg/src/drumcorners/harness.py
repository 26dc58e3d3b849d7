"""Locality studies, experiment runner and CSV emission.

A locality study compares the heat kernel of a rectangle with a model kernel
(free plane, half-plane, quarter-plane) on a patch where the two domains
coincide.  Both kernels factor into 1D kernels along the axes, so the
difference is assembled as ``(X - Xm) (x) Y + Xm (x) (Y - Ym)``.  The 1D
differences are far below double precision for small t, so they are formed in
mpmath arithmetic with a precision chosen from t.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import mpmath as mp
import numpy as np

from . import __version__
from .errors import DrumError, FitFailure, IoError, KernelUnavailable, ValidationError
from .geometry import (
    DIRICHLET,
    NEUMANN,
    ROBIN,
    BoundaryCondition,
    LocalityScenario,
    Model,
    Polygon,
    Rectangle,
    SmoothDomain,
    bc_from_dict,
    resolve_domain,
)

DEFAULT_T_GRID = tuple(2e-3 * math.sqrt(2) ** k for k in range(7))  # 2e-3 .. 1.6e-2


# ------------------------------------------------------------------ mp 1D kernels


def _robin_roots_mp(L, c, n):
    """Interval Robin wavenumbers refined to the working mp precision."""
    from .eigensolve.closed import robin_interval_roots

    seeds = robin_interval_roots(float(L), float(c), n)
    L = mp.mpf(L)
    c = mp.mpf(c)
    f = lambda k: (k * k - c * c) * mp.sin(k * L) - 2 * c * k * mp.cos(k * L)  # noqa: E731
    roots = []
    for j, s in enumerate(seeds):
        lo = mp.mpf(j) * mp.pi / L
        hi = mp.mpf(j + 1) * mp.pi / L
        if j == 0:
            lo = hi * mp.mpf("1e-6")
        # secant from the double seed, kept inside the bracket
        k = mp.findroot(f, (mp.mpf(s) * (1 - mp.mpf("1e-12")), mp.mpf(s) * (1 + mp.mpf("1e-12"))),
                        solver="secant", tol=mp.mpf(10) ** (-mp.mp.dps + 5))
        if not lo <= k <= hi:
            k = mp.findroot(f, (lo + (hi - lo) * mp.mpf("1e-9"), hi - (hi - lo) * mp.mpf("1e-9")),
                            solver="anderson")
        roots.append(k)
    return roots


def interval_kernel_mp(t, xs, L, bc: BoundaryCondition):
    """Matrix of the interval heat kernel ``[X(t, x_i, x_j)]`` via its eigen-expansion (mp)."""
    t = mp.mpf(t)
    L = mp.mpf(L)
    cut = mp.log(10) * mp.mp.dps + 10  # drop modes with lambda t beyond the working precision
    kmax = mp.sqrt(cut / t)
    nmax = int(kmax * L / mp.pi) + 2
    xs = [mp.mpf(x) for x in xs]
    if bc.kind == DIRICHLET:
        ks = [mp.mpf(n) * mp.pi / L for n in range(1, nmax + 1)]
        phis = [[mp.sqrt(2 / L) * mp.sin(k * x) for k in ks] for x in xs]
    elif bc.kind == NEUMANN or bc.c == 0:
        ks = [mp.mpf(n) * mp.pi / L for n in range(0, nmax + 1)]
        phis = [[(mp.sqrt(1 / L) if n == 0 else mp.sqrt(2 / L)) * mp.cos(k * x) for n, k in enumerate(ks)]
                for x in xs]
    else:
        c = mp.mpf(bc.c)
        ks = _robin_roots_mp(L, bc.c, nmax + 1)
        norms = []
        for k in ks:
            n2 = (k * k + c * c) * L / 2 + (k * k - c * c) * mp.sin(2 * k * L) / (4 * k) + c * mp.sin(k * L) ** 2
            norms.append(1 / mp.sqrt(n2))
        phis = [[(k * mp.cos(k * x) + c * mp.sin(k * x)) * nm for k, nm in zip(ks, norms)] for x in xs]
    w = [mp.exp(-k * k * t) for k in ks]
    n = len(xs)
    X = [[mp.mpf(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = mp.fsum(a * b * wk for a, b, wk in zip(phis[i], phis[j], w))
            X[i][j] = X[j][i] = v
    return X


def model_kernel_mp(t, xs, kind, L, bc: BoundaryCondition):
    """1D model kernels: ``line`` (free), ``lo`` (boundary at 0), ``hi`` (boundary at L)."""
    t = mp.mpf(t)
    g = 1 / mp.sqrt(4 * mp.pi * t)
    if kind == "lo":
        ys = [mp.mpf(x) for x in xs]
    elif kind == "hi":
        ys = [mp.mpf(L) - mp.mpf(x) for x in xs]
    elif kind == "line":
        ys = [mp.mpf(x) for x in xs]
    else:
        raise KernelUnavailable(f"unknown 1D model {kind!r}")
    n = len(ys)
    X = [[mp.mpf(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            d = g * mp.exp(-(ys[i] - ys[j]) ** 2 / (4 * t))
            if kind != "line":
                s = ys[i] + ys[j]
                im = g * mp.exp(-s * s / (4 * t))
                if bc.kind == DIRICHLET:
                    d -= im
                else:
                    d += im
                    c = mp.mpf(bc.c)
                    if c != 0:
                        d -= c * mp.exp(c * s + c * c * t) * mp.erfc(s / mp.sqrt(4 * t) + c * mp.sqrt(t))
            X[i][j] = X[j][i] = d
    return X


# ------------------------------------------------------------------ locality study


@dataclass
class LocalityReport:
    t_grid: np.ndarray
    sup_diff: np.ndarray
    log_sup_diff: np.ndarray
    A: float
    c: float
    r_squared: float
    meta: dict = field(default_factory=dict)

    def model(self, t):
        t = np.asarray(t, float)
        return self.A * np.exp(-self.c / t)

    @property
    def passed(self):
        return bool(self.c > 0 and self.r_squared > 0.99)

    def to_dict(self):
        return {"t": self.t_grid.tolist(), "sup_diff": self.sup_diff.tolist(),
                "log_sup_diff": self.log_sup_diff.tolist(), "A": self.A, "c": self.c,
                "r_squared": self.r_squared, "passed": self.passed, **self.meta}


def _dps_for(t, scale):
    # the differences can be as small as exp(-scale^2 / t); keep 30 digits beyond that
    return int(30 + scale * scale / (t * math.log(10)))


def _sup_log(dX, Y, Xm, dY):
    """log of max |dX (x) Y + Xm (x) dY| with dX, dY possibly tiny (mp input)."""
    sx = max(abs(v) for row in dX for v in row)
    sy = max(abs(v) for row in dY for v in row)
    S = max(sx, sy)
    if S == 0:
        return -math.inf
    f = lambda M, s: np.array([[float(v / s) if s != 0 else 0.0 for v in row] for row in M])  # noqa: E731
    rx = float(sx / S)
    ry = float(sy / S)
    dXn = f(dX, S) if rx else np.zeros((len(dX), len(dX)))
    dYn = f(dY, S) if ry else np.zeros((len(dY), len(dY)))
    Yf = np.array([[float(v) for v in row] for row in Y])
    Xmf = np.array([[float(v) for v in row] for row in Xm])
    T = np.einsum("ab,cd->acbd", dXn, Yf) + np.einsum("ab,cd->acbd", Xmf, dYn)
    m = float(np.max(np.abs(T)))
    if m == 0:
        return -math.inf
    return float(mp.log(S)) + math.log(m)


def locality_study(scenario: LocalityScenario, t_grid=DEFAULT_T_GRID, sample_density: int = 21,
                   model_factors=None) -> LocalityReport:
    """Sup of |H_rect - H_model| over pairs of points on an omega0 grid, per t.

    ``model_factors`` overrides the per-axis model kinds; ``"interval"`` uses
    the rectangle's own factor (the difference is then identically zero).
    """
    rect = scenario.big_domain
    bc = scenario.bc
    if bc.kind == ROBIN and bc.c < 0:
        raise KernelUnavailable("Robin studies need alpha/beta >= 0")
    x0, x1, y0, y1 = scenario.omega0
    xs = np.linspace(x0, x1, sample_density)
    ys = np.linspace(y0, y1, sample_density)
    kinds = model_factors or scenario.model.factor_kinds()
    scale = max(rect.a, rect.b)
    t_grid = np.asarray(sorted(t_grid), float)
    logs = []
    for t in t_grid:
        with mp.workdps(_dps_for(t, scale)):
            X = interval_kernel_mp(t, xs, rect.a, bc)
            Y = interval_kernel_mp(t, ys, rect.b, bc)
            Xm = X if kinds[0] == "interval" else model_kernel_mp(t, xs, kinds[0], rect.a, bc)
            Ym = Y if kinds[1] == "interval" else model_kernel_mp(t, ys, kinds[1], rect.b, bc)
            dX = [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(X, Xm)]
            dY = [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(Y, Ym)]
            logs.append(_sup_log(dX, Y, Xm, dY))
    logs = np.array(logs)
    sup = np.exp(logs)
    meta = {"omega0": list(scenario.omega0), "model": scenario.model.kind, "anchor": scenario.model.anchor,
            "bc": bc.to_dict(), "rectangle": [rect.a, rect.b], "sample_density": sample_density,
            "alpha_sep": scenario.alpha_sep, "factors": list(kinds)}
    if np.all(np.isneginf(logs)):
        return LocalityReport(t_grid, sup, logs, 0.0, math.inf, 1.0, meta)
    A, c, r2 = fit_decay(t_grid, logs)
    return LocalityReport(t_grid, sup, logs, A, c, r2, meta)


def fit_decay(t, log_sup):
    """Fit ``log sup = log A - c / t``; returns (A, c, r^2)."""
    t = np.asarray(t, float)
    y = np.asarray(log_sup, float)
    ok = np.isfinite(y)
    if ok.sum() < 3:
        raise FitFailure("need three finite samples for the decay fit")
    x = 1.0 / t[ok]
    y = y[ok]
    slope, icpt = np.polyfit(x, y, 1)
    pred = icpt + slope * x
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(math.exp(icpt)) if icpt < 700 else math.inf, float(-slope), r2


# ------------------------------------------------------------------ CSV emission


def emit_plot_data(report, path=None) -> str:
    """Flat CSV for plotting; returns the text and writes it when ``path`` is given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(report, LocalityReport):
        w.writerow(["t", "sup_diff", "model_fit"])
        fit = report.model(report.t_grid) if report.t_grid.size else []
        for t, s, m in zip(report.t_grid, report.sup_diff, fit):
            w.writerow([repr(float(t)), repr(float(s)), repr(float(m))])
    elif hasattr(report, "trace") and hasattr(report, "fitted"):
        w.writerow(["t", "trace", "fitted"])
        for t, y, f in zip(report.t_grid, report.trace, report.fitted):
            w.writerow([repr(float(t)), repr(float(y)), repr(float(f))])
    elif report is None or (isinstance(report, dict) and not report):
        w.writerow(["t", "value"])
    else:
        raise TypeError(f"cannot emit {type(report).__name__}")
    text = buf.getvalue()
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IoError(str(exc)) from exc
    return text


# ------------------------------------------------------------------ experiments


def config_schema():
    return json.loads(resources.files("drumcorners").joinpath("data/config.schema.json").read_text())


def validate_config(cfg: dict):
    import jsonschema

    try:
        jsonschema.validate(cfg, config_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ValidationError(f"config{'/' + path if path else ''}: {exc.message}") from exc


def versions():
    import numba
    import scipy

    return {"drumcorners": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "mpmath": mp.__version__, "numba": numba.__version__}


def _json_dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _domain_and_bc(cfg):
    dom = resolve_domain(cfg["domain"] if isinstance(cfg["domain"], str) else json.dumps(cfg["domain"]))
    bc = bc_from_dict(cfg.get("bc", "D"))
    return dom, bc


def _spectrum_for(dom, bc, spec_cfg):
    from .eigensolve import eigs_disk, eigs_fem, eigs_rectangle

    source = spec_cfg.get("source", "auto")
    if isinstance(dom, SmoothDomain):
        if dom.kind != "disk":
            raise KernelUnavailable("closed-form spectra exist only for disks among smooth domains")
        if "cutoff" in spec_cfg:
            return eigs_disk(dom.radius, bc, cutoff=spec_cfg["cutoff"])
        return eigs_disk(dom.radius, bc, count=spec_cfg.get("count", 5000))
    rect = _as_rectangle(dom)
    if rect is not None and source in ("auto", "closed_form"):
        if "cutoff" in spec_cfg:
            return eigs_rectangle(rect[0], rect[1], bc, cutoff=spec_cfg["cutoff"])
        return eigs_rectangle(rect[0], rect[1], bc, count=spec_cfg.get("count", 5000))
    return eigs_fem(dom, bc, spec_cfg.get("h", 1 / 32), spec_cfg.get("count")).spectrum


def _as_rectangle(dom):
    if not isinstance(dom, Polygon) or dom.n_vertices != 4:
        return None
    v = dom.vertices
    xs, ys = np.unique(np.round(v[:, 0], 12)), np.unique(np.round(v[:, 1], 12))
    if len(xs) == 2 and len(ys) == 2 and np.allclose(np.min(v, 0), 0):
        return float(xs[1] - xs[0]), float(ys[1] - ys[0])
    return None


def _exp_trace_constant(cfg, out: Path):
    from .trace import default_t_grid, fit_trace_expansion, trace_coeffs

    dom, bc = _domain_and_bc(cfg)
    spec = _spectrum_for(dom, bc, cfg.get("spectrum", {}))
    known = {"area": dom.area, "perimeter": dom.perimeter}
    tg = cfg.get("t_grid")
    if tg:
        t_grid = np.geomspace(tg["min"], tg["max"], tg.get("n", 20))
    else:
        t_grid = default_t_grid(spec, dom.area)
    fit = fit_trace_expansion(spec, t_grid, known if cfg.get("pin", True) else None, bc,
                              sqrt_term=cfg.get("sqrt_term", True))
    expected = trace_coeffs(dom, bc)
    res = {"experiment": "trace_constant", "n_eigenvalues": len(spec), "cutoff": spec.cutoff,
           "fitted": fit.to_dict(), "formula": expected.to_dict(), "c_0": fit.expansion.c_0}
    if "expect" in cfg:
        tol = cfg["expect"].get("tol", 0.01)
        target = cfg["expect"].get("c_0", expected.c_0)
        res["expect"] = {"c_0": target, "tol": tol}
        res["pass"] = bool(abs(fit.expansion.c_0 - target) <= tol)
    emit_plot_data(fit, out / "trace_fit.csv")
    (out / "spectrum.csv").write_text(spec.to_csv(), encoding="utf-8")
    return res


def _exp_isospectral(cfg, out: Path):
    from .eigensolve import fem_eigenvalues, mesh_polygon, refine

    bc = bc_from_dict(cfg.get("bc", "D"))
    names = cfg["domains"]
    if len(names) != 2:
        raise ValidationError("isospectral experiment compares exactly two domains")
    doms = [resolve_domain(n) if isinstance(n, str) else resolve_domain(json.dumps(n)) for n in names]
    count = cfg.get("count", 10)
    levels = cfg.get("levels", 2)
    table = []  # per level: (ev1, ev2)
    meshes = [mesh_polygon(d, cfg.get("h", 1 / 32)) for d in doms]
    for lev in range(levels + 1):
        evs = [fem_eigenvalues(m, bc, count) for m in meshes]
        table.append(evs)
        if lev < levels:
            meshes = [refine(m) for m in meshes]
    rows = []
    verdict_ok = True
    shrink = True
    for lev in range(levels):
        (a, b), (a2, b2) = table[lev], table[lev + 1]
        band = np.maximum(np.abs(a - a2), np.abs(b - b2))
        diff = np.abs(a - b)
        if not np.all(diff <= band):
            verdict_ok = False
        if lev > 0:
            prev = np.abs(table[lev - 1][0] - table[lev - 1][1])
            shrink = shrink and bool(np.max(diff) < np.max(prev))
        for k in range(count):
            rows.append([lev, k + 1, a[k], b[k], diff[k], band[k]])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "index", "lambda_1", "lambda_2", "abs_diff", "error_band"])
    for r in rows:
        w.writerow([r[0], r[1]] + [repr(float(v)) for v in r[2:]])
    (out / "eigen_table.csv").write_text(buf.getvalue(), encoding="utf-8")
    verdict = "isospectral within FEM error" if (verdict_ok and shrink) else "not isospectral within FEM error"
    res = {"experiment": "isospectral", "domains": names, "bc": bc.to_dict(), "verdict": verdict,
           "within_band": verdict_ok, "disagreement_shrinks": shrink,
           "h": [float(m.h) for m in meshes]}
    if cfg.get("classify", False):
        res["classification"] = []
        for d in doms:
            c = _classify_polygon_fem(d, bc, cfg.get("classify_h", 1 / 8))
            res["classification"].append(c.to_dict())
    return res


def _classify_polygon_fem(poly, bc, h):
    """Corner classification from a full FEM spectrum (dense solve)."""
    from .eigensolve import fem_eigenvalues, mesh_polygon
    from .spectrum import Spectrum
    from .trace import classify_corners

    ev = fem_eigenvalues(mesh_polygon(poly, h), bc, None)
    spec = Spectrum(ev, None, "fem")
    # same window per unit area that recovers c_0 on the equilateral triangle
    t_grid = poly.area * np.geomspace(0.0115, 0.069, 16)
    return classify_corners(spec, {"area": poly.area, "perimeter": poly.perimeter, "euler_char": 1}, t_grid, bc,
                            sqrt_term=False)


def _exp_locality(cfg, out: Path):
    sc = cfg["scenario"]
    rect = Rectangle(*sc.get("rectangle", [1.0, 1.0]))
    bc = bc_from_dict(sc.get("bc", "D"))
    m = sc["model"]
    model = Model(m["kind"], bc, m.get("gamma", math.pi / 2), m.get("anchor", ""))
    scen = LocalityScenario(rect, model, tuple(sc["omega0"]), bc, strict=sc.get("strict", True))
    tg = cfg.get("t_grid")
    t_grid = np.geomspace(tg["min"], tg["max"], tg.get("n", 7)) if tg else DEFAULT_T_GRID
    rep = locality_study(scen, t_grid, cfg.get("sample_density", 21))
    emit_plot_data(rep, out / "locality.csv")
    return {"experiment": "locality", **rep.to_dict()}


_EXPERIMENTS = {"trace_constant": _exp_trace_constant, "isospectral": _exp_isospectral,
                "locality": _exp_locality}


def run_experiment(config_path, out_dir=None, seed=0, tol=None) -> int:
    """Run a JSON-configured experiment; write ``result.json`` and ``run.json``.

    Returns 0 on success, 1 when the run failed its own expectation, 2 for a
    malformed config.  Errors are written as JSON to ``error.json`` and stderr.
    """
    path = Path(config_path)
    raw = path.read_bytes()
    out = Path(out_dir) if out_dir else Path("out") / path.stem
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"config": str(path), "inputs_sha256": hashlib.sha256(raw).hexdigest(),
                "seed": seed, "versions": versions()}
    try:
        cfg = json.loads(raw.decode("utf-8"))
        validate_config(cfg)
    except (json.JSONDecodeError, UnicodeDecodeError, ValidationError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": 2}
        _json_dump(err, out / "error.json")
        manifest["status"] = "invalid_config"
        _json_dump(manifest, out / "run.json")
        print(json.dumps(err), file=sys.stderr)
        return 2
    manifest["tolerances"] = {"tol": tol, **({"expect": cfg["expect"]} if "expect" in cfg else {})}
    try:
        res = _EXPERIMENTS[cfg["experiment"]](cfg, out)
    except DrumError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": 1}
        _json_dump(err, out / "error.json")
        manifest["status"] = "failed"
        _json_dump(manifest, out / "run.json")
        print(json.dumps(err), file=sys.stderr)
        return 1
    _json_dump(res, out / "result.json")
    manifest["status"] = "ok"
    manifest["outputs"] = sorted(p.name for p in out.iterdir() if p.name != "run.json")
    _json_dump(manifest, out / "run.json")
    return 0 if res.get("pass", True) else 1
