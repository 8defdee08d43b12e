"""Command line entry point: ``freebnd run|validate|report``.

A run reads a YAML config, executes one experiment, and writes

    <out>/report.json        checks with verdicts and their numeric backing
    <out>/tables/*.csv       exponent, residual and plot-data tables
    <out>/fields/*.grid      grid functions in the binary grid format

Exit codes: 0 all checks consistent or inconclusive, 1 some check violated,
2 invalid config, 3 computation failed (a partial report is still written).
The output directory may be overridden with FREEBND_OUTPUT_DIR.
"""
from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass, field
import json
import os
from pathlib import Path
import sys
import time
import traceback

import numpy as np
import yaml

from . import __version__
from .errors import ConfigInvalid, FreebndError
from .functions import (Grid, GridFunction, Polynomial, Product, RadialPower, Sum, closed_form_from_dict)
from .geometry import (Domain, PositivePower, RegularizedHalfLine, build_regularized_distance,
                       closed_form_distance, d_power)
from .io import save_grid_function
from .kernels import HomogeneousKernel, QuadratureScheme, assemble_operator_matrix, eval_operator

KINDS = {
    "solve-obstacle": ("kernel", "grid", "obstacle", "solver"),
    "verify-lds": ("kernel", "domain", "analysis"),
    "expansion-decay": ("kernel", "domain", "analysis"),
    "boundary-harnack": ("kernel", "domain", "grid", "analysis"),
    "extension-check": ("kernel", "grid", "analysis"),
    "liouville-fit": ("kernel", "analysis"),
    "holder-probe": ("analysis",),
}

EXIT_OK, EXIT_VIOLATED, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3


@dataclass
class ExperimentConfig:
    kind: str
    raw: dict
    kernel: HomogeneousKernel | None
    domain: Domain | None
    grid: Grid | None
    quadrature: QuadratureScheme
    solver: dict
    analysis: dict
    output: Path
    seed: int


@dataclass
class RunReport:
    config: dict
    kind: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    wall_time: float = 0.0
    version: str = __version__
    seed: int = 0
    status: str = "ok"
    error: str | None = None

    def add(self, name, verdict, value, tolerance=None, **extra):
        if verdict not in ("consistent", "inconclusive", "violated"):
            raise ValueError(verdict)
        rec = {"name": name, "verdict": verdict, "value": _num(value), "tolerance": _num(tolerance)}
        rec.update({k: _num(v) for k, v in extra.items()})
        self.checks.append(rec)

    @property
    def violated(self):
        return any(c["verdict"] == "violated" for c in self.checks)

    def to_dict(self):
        return {"config": self.config, "kind": self.kind, "checks": self.checks, "tables": self.tables,
                "wall_time": self.wall_time, "version": self.version, "seed": self.seed,
                "status": self.status, "error": self.error}


def _num(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


# ---------------------------------------------------------------------------
# config


def _grid_from(block, dim):
    try:
        if "shape" in block:
            return Grid(tuple(block["origin"]), float(block["spacing"]), tuple(block["shape"]))
        lo = np.atleast_1d(block["lower"]).astype(float)
        hi = np.atleast_1d(block["upper"]).astype(float)
        g = Grid.covering(lo, hi, float(block["h"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"grid block invalid: {exc}") from exc
    if dim is not None and g.dim != dim:
        raise ConfigInvalid("grid block dimension does not match the kernel")
    return g


def load_config(path):
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw, base=path.parent)


def parse_config(raw, base=Path(".")):
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a mapping")
    kind = raw.get("experiment")
    if kind not in KINDS:
        raise ConfigInvalid(f"experiment kind must be one of {sorted(KINDS)}, got {kind!r}")
    missing = [b for b in KINDS[kind] if b not in raw or raw[b] is None]
    if missing:
        raise ConfigInvalid(f"missing {', '.join(missing)} block(s) for experiment {kind!r}")
    kernel = domain = grid = None
    if "kernel" in raw:
        try:
            kernel = HomogeneousKernel.from_config(raw["kernel"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"kernel block invalid: {exc}") from exc
    if "domain" in raw:
        try:
            domain = Domain.from_config(raw["domain"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"domain block invalid: {exc}") from exc
    if "grid" in raw:
        grid = _grid_from(raw["grid"], kernel.dim if kernel else None)
    try:
        quad = QuadratureScheme.from_config(raw.get("quadrature"))
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"quadrature block invalid: {exc}") from exc
    solver = dict(raw.get("solver") or {})
    if solver:
        om = solver.get("omega", 1.5)
        if not 0 < om < 2:
            raise ConfigInvalid("solver block invalid: omega must lie in (0, 2)")
    analysis = dict(raw.get("analysis") or {})
    for key in ("obstacle",):
        if key in raw:
            _closed_form(raw[key], key)
    for key in ("u", "u1", "u2", "f", "eta", "factor", "distance"):
        if key in analysis and analysis[key] is not None:
            _closed_form(analysis[key], f"analysis.{key}")
    out = Path((raw.get("output") or {}).get("dir", f"runs/{kind}"))
    if "FREEBND_OUTPUT_DIR" in os.environ:
        out = Path(os.environ["FREEBND_OUTPUT_DIR"])
    elif not out.is_absolute():
        out = base / out
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigInvalid("seed must be an integer")
    return ExperimentConfig(kind, raw, kernel, domain, grid, quad, solver, analysis, out, seed)


def _closed_form(spec, where):
    try:
        return closed_form_from_dict(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{where} is not a valid closed form: {exc}") from exc


# ---------------------------------------------------------------------------
# output helpers


class Writer:
    def __init__(self, out, report):
        self.out = Path(out)
        self.report = report
        (self.out / "tables").mkdir(parents=True, exist_ok=True)
        (self.out / "fields").mkdir(parents=True, exist_ok=True)

    def table(self, name, header, rows):
        p = self.out / "tables" / f"{name}.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        self.report.tables[name] = str(p.relative_to(self.out))

    def field(self, name, gf):
        p = self.out / "fields" / f"{name}.grid"
        save_grid_function(p, gf)
        return p


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def _verdict(ok, conclusive=True):
    if not conclusive:
        return "inconclusive"
    return "consistent" if ok else "violated"


# ---------------------------------------------------------------------------
# experiments


def run_solve_obstacle(cfg, rep, out):
    from .obstacle import (ObstacleProblem, classify_point, extract_free_boundary, solve_obstacle)
    from .lcp import obstacle_oracle

    K, grid, a = cfg.kernel, cfg.grid, cfg.analysis
    phi_form = _closed_form(cfg.raw["obstacle"], "obstacle")
    prob = ObstacleProblem.from_form(K, phi_form, grid, cfg.quadrature)
    tol = float(cfg.solver.get("tol", 1e-10))
    A = assemble_operator_matrix(grid, K, cfg.quadrature, cap=int(cfg.solver.get("cap", 20000)))
    sol = solve_obstacle(prob, float(cfg.solver.get("omega", 1.5)), tol, int(cfg.solver.get("max_iter", 200000)),
                         A=A)
    out.field("v", sol.v)
    (out.out / "fields" / "residuals.json").write_text(json.dumps({**sol.residuals, "iterations": sol.iterations},
                                                                  sort_keys=True))
    rep.add("complementarity", _verdict(sol.residuals["complementarity"] <= tol),
            sol.residuals["complementarity"], tol)
    rep.add("feasibility", _verdict(sol.residuals["infeasibility"] <= tol), sol.residuals["infeasibility"], tol)
    rep.add("nonnegativity", _verdict(sol.v.values.min() >= -tol), float(sol.v.values.min()), tol)
    if a.get("oracle"):
        vo = obstacle_oracle(A, prob.obstacle.values.ravel(), a.get("oracle_method", "lemke"))
        diff = float(np.max(np.abs(vo - sol.v.values.ravel())))
        rep.add("oracle agreement", _verdict(diff <= 10 * tol), diff, 10 * tol)
    if np.all(prob.obstacle.values <= 0):
        vmax = float(np.max(np.abs(sol.v.values)))
        rep.add("v identically zero", _verdict(vmax <= tol), vmax, tol)
        out.table("free_boundary", ["index", "location", "classification"], [])
        return
    pts = extract_free_boundary(sol)
    h = grid.spacing
    radii = np.asarray(a.get("radii_cells", [4, 8, 16, 32]), float) * h
    s = K.s
    window = float(a.get("window", 0.15))
    rows, grows = [], []
    for i, p in enumerate(pts):
        try:
            p = classify_point(sol, None, p, radii, window=window)
        except FreebndError as exc:
            rep.add(f"growth at point {i}", "inconclusive", None, None, note=str(exc))
            continue
        ok = p.growth_exponent >= 1 + s - window
        rep.add(f"growth at point {i}", _verdict(ok, p.fit_r2 >= 0.98), p.growth_exponent, window,
                r2=p.fit_r2, target=1 + s, classification=p.classification)
        nu = [] if p.normal is None else list(p.normal)
        rows.append([i, *p.location, *(nu or [np.nan] * grid.dim), p.growth_exponent, p.fit_r2,
                     p.classification])
    dims = [f"x{k + 1}" for k in range(grid.dim)]
    out.table("free_boundary", ["index", *dims, *[f"nu{k + 1}" for k in range(grid.dim)], "exponent", "r2",
                                "classification"], rows)
    if grid.dim == 2 and a.get("radial_center") is not None:
        c = np.asarray(a["radial_center"], float)
        r = np.array([np.linalg.norm(p.location - c) for p in pts])
        spread = float(np.max(np.abs(r - r.mean())))
        rep.add("free boundary radial spread", _verdict(spread <= 2 * h), spread, 2 * h)
        dots = [float(p.normal @ (p.location - c) / np.linalg.norm(p.location - c)) for p in pts
                if p.normal is not None]
        rep.add("normals radial", _verdict(min(dots) >= 0.99), min(dots), 0.99)


def _lds_points(cfg):
    a = cfg.analysis
    if "distances" in a:
        return np.asarray(a["distances"], float)
    lo, hi = a.get("levels", [1, 7])
    return 2.0 ** -np.arange(lo, hi + 1)


def run_verify_lds(cfg, rep, out):
    from .regularity import cancellation_slope, verify_lds_decay

    K, D, a = cfg.kernel, cfg.domain, cfg.analysis
    q = cfg.quadrature
    j = int(a.get("j", 0))
    eta = _closed_form(a["eta"], "analysis.eta") if a.get("eta") else None
    t = _lds_points(cfg)
    if D.tag == "half_space" and j == 0 and eta is None:
        rng = np.random.default_rng(cfg.seed)
        lo, hi = np.asarray(D.box[0]), np.asarray(D.box[1])
        n = int(a.get("test_points", 10))
        pts = lo + (hi - lo) * rng.random((n, D.dim))
        e = np.asarray(D.params["normal"])
        tt = pts @ e - D.params["offset"]
        pts = pts + np.outer(np.maximum(0.05 - tt, 0.0) + np.where(tt < 0, -2 * tt, 0.0), e)
        f = PositivePower(closed_form_distance(D), K.s)
        vals = np.atleast_1d(eval_operator(f, K, pts, q))
        tol = float(a.get("tolerance", 1e-3))
        rep.add("L(d^s) vanishes on the half-space", _verdict(np.max(np.abs(vals)) <= tol),
                float(np.max(np.abs(vals))), tol)
        out.table("lds_points", [*(f"x{k + 1}" for k in range(D.dim)), "L"], [[*p, v] for p, v in zip(pts, vals)])
    elif a.get("decay", True):
        dist = _closed_form(a["distance"], "analysis.distance") if a.get("distance") else None
        res = verify_lds_decay(D, K, eta, j, t, q=q, d=dist, beta=a.get("beta"))
        if j == 0:
            rep.add("L(eta d^s) bounded and Hölder up to the boundary", res.verdict, res.fitted_exponent, 0.03,
                    r2=res.r2, target=0.5, saturated=res.holder.saturated, noise_floor=res.holder.noise_floor)
            out.table("lds_holder", ["step", "sup"], list(zip(res.holder.steps, res.holder.sups)))
        else:
            rep.add(f"decay of D^{j} L(eta d^s)", res.verdict, res.fitted_exponent, 0.15, r2=res.r2,
                    target=res.predicted_exponent)
        out.table("lds", ["distance", "value", "noise"], list(zip(res.distances, res.values, res.noise)))
    c = a.get("cancellation")
    if c:
        Kc = HomogeneousKernel(1, K.s) if K.dim != 1 else K
        d = RegularizedHalfLine(float(c.get("beta", 2.2)))
        psi = _closed_form(c.get("cutoff", {"tag": "bump", "dim": 1, "inner": 1.0, "outer": 2.0}), "cutoff")
        eta0 = Product([Polynomial(1, terms=[[[1], 1.0]]), psi])
        lo, hi = c.get("levels", [10, 18])
        r = cancellation_slope(Kc, eta0, psi, d, 2.0 ** -np.arange(lo, hi + 1), j=int(c.get("j", 2)), q=q)
        thr = float(c.get("min_slope", 0.8))
        rep.add("extra |x - z| factor when eta(z) = 0", _verdict(r["slope"] >= thr, r["r2"] >= 0.98), r["slope"],
                thr, r2=r["r2"])
        out.table("cancellation", ["distance", "ratio", "numerator", "denominator"],
                  list(zip(r["distances"], r["ratio"], r["numerator"], r["denominator"])))


def synthetic_expansion_input(dform, s, z, poly_terms, power):
    """u = d^s * P + |x - z|^power."""
    dim = dform.dim
    parts = [Product([PositivePower(dform, s), Polynomial(dim, terms=poly_terms)])]
    if power is not None:
        parts.append(RadialPower(dim, power=power, center=z))
    return Sum(parts) if len(parts) > 1 else parts[0]


def expansion_sequence(u, dform, s, z, radii, degree, per_radius=64):
    """Fits on grids of spacing r / per_radius centred at z (one per radius)."""
    from .regularity import fit_ds_expansion

    z = np.asarray(z, float)
    out = []
    for r in radii:
        g = Grid.covering(z - r, z + r, r / per_radius)
        out.append(fit_ds_expansion(u, dform, s, z, r, degree, grid=g))
    return out


def run_expansion_decay(cfg, rep, out):
    from .regularity import verify_expansion_decay

    K, D, a = cfg.kernel, cfg.domain, cfg.analysis
    s = K.s
    dform = closed_form_distance(D)
    if dform is None:
        raise ConfigInvalid("expansion-decay needs a domain with a closed-form distance")
    z = np.asarray(a["z"], float)
    lo, hi = a.get("levels", [2, 6])
    radii = 2.0 ** -np.arange(lo, hi + 1)
    degree = int(a.get("degree", 1))
    terms = a.get("poly", [[[0] * D.dim, 1.0]])
    if a.get("u"):
        u = _closed_form(a["u"], "analysis.u")
    else:
        u = synthetic_expansion_input(dform, s, z, terms, a.get("power", 2.3))
    exps = expansion_sequence(u, dform, s, z, radii, degree, int(a.get("points_per_radius", 64)))
    fit = verify_expansion_decay(exps)
    worst_orth = max(e.orthogonality for e in exps)
    rep.add("projection orthogonality", _verdict(worst_orth <= 1e-8), worst_orth, 1e-8)
    if "target" in a:
        win = float(a.get("window", 0.1))
        rep.add("residual decay exponent", _verdict(abs(fit.fitted_decay - a["target"]) <= win, fit.r2 >= 0.98),
                fit.fitted_decay, win, r2=fit.r2, target=a["target"])
        beta = a["target"] - s
        rep.add("coefficient stability", _verdict(fit.coefficients_stable(beta)), None, 0.25,
                exponents={",".join(map(str, k)): v for k, v in fit.coefficient_exponents.items()})
    else:
        rep.add("residual decay exponent", "inconclusive" if not fit.saturated else "consistent",
                fit.fitted_decay, None, r2=fit.r2)
    if a.get("exact_check", True):
        exact = synthetic_expansion_input(dform, s, z, terms, None)
        ex = expansion_sequence(exact, dform, s, z, radii[:1], degree, int(a.get("points_per_radius", 64)))[0]
        rel = ex.residual_sup / max(ex.scale, 1e-300)
        rep.add("exact model-class input reproduced", _verdict(rel <= 1e-8), rel, 1e-8)
    alphas = list(exps[0].coefficients)
    out.table("expansion", ["radius", "residual_sup", *[f"q{''.join(map(str, al))}" for al in alphas]],
              [[e.radius, e.residual_sup, *[e.coefficients[al] for al in alphas]] for e in exps])


def run_boundary_harnack(cfg, rep, out):
    from .regularity import quotient_regularity

    K, D, grid, a = cfg.kernel, cfg.domain, cfg.grid, cfg.analysis
    s = K.s
    d = build_regularized_distance(D, grid, tol=float(a.get("tol", 1e-10)))
    u2 = GridFunction.sample(_closed_form(a["u2"], "analysis.u2"), grid, exterior="zero") if a.get("u2") \
        else d_power(d, s)
    if a.get("factor"):
        fac = _closed_form(a["factor"], "analysis.factor")
        fv = fac(grid.nodes()).reshape(grid.shape)
        u1 = u2.with_values(u2.values * fv)
    elif a.get("u1"):
        u1 = GridFunction.sample(_closed_form(a["u1"], "analysis.u1"), grid, exterior="zero")
        fv = None
    else:
        u1, fv = u2, np.ones(grid.shape)
    region = a.get("region", [list(grid.origin), list(grid.upper)])
    k = int(a.get("k", 2))
    est = quotient_regularity(u1, u2, d, s, float(a.get("c1", 0.1)), region, k, int(a.get("levels", 4)))
    target = float(a.get("target", 1.0))
    rep.add("quotient Hölder probe", est.verdict(target), est.exponent, 0.03, r2=est.r2, target=target,
            saturated=est.saturated, constant=est.constant)
    if a.get("expect_saturated", False):
        rep.add("quotient probe saturated", _verdict(est.saturated), est.exponent, None)
    if fv is not None:
        qv = est.extras["quotient"]
        away = float(a.get("away", 0.05))
        m = np.isfinite(qv) & (d.field.values >= away)
        err = float(np.max(np.abs(qv[m] - fv[m]))) if np.any(m) else np.nan
        rep.add("quotient recovers the factor away from the boundary", _verdict(err <= 1e-6), err, 1e-6)
    out.table("quotient_probe", ["step", "sup"], list(zip(est.steps, est.sups)))


def run_extension_check(cfg, rep, out):
    from .extension import geometric_heights, neumann_trace, poisson_extend

    K, grid, a = cfg.kernel, cfg.grid, cfg.analysis
    if K.dim != 1 or not K.isotropic:
        raise ConfigInvalid("extension-check runs on the 1D fractional Laplacian")
    form = _closed_form(a.get("u", {"tag": "gaussian", "dim": 1}), "analysis.u")
    u = GridFunction.sample(form, grid, interpolation="cubic")
    nodes = grid.nodes()
    lo, hi = grid.origin[0], grid.upper[0]
    c, w = 0.5 * (lo + hi), 0.25 * (hi - lo) * float(a.get("central_fraction", 0.5)) * 2
    sel = np.abs(nodes[:, 0] - c) <= w + 1e-12
    stride = int(a.get("stride", 1))
    X = nodes[sel][::stride]
    fld = poisson_extend(u, geometric_heights(grid.spacing, int(a.get("heights", 8))), K.s, x=X)
    tr = np.asarray(neumann_trace(fld))
    L = np.atleast_1d(eval_operator(u, K, X, cfg.quadrature))
    rel = float(np.max(np.abs(tr - L)) / np.max(np.abs(L)))
    tol = float(a.get("tolerance", 1e-2))
    rep.add("Neumann trace matches the operator", _verdict(rel <= tol), rel, tol)
    out.table("trace", ["x", "trace", "operator"], [[x[0], t, l] for x, t, l in zip(X, tr, L)])


def run_liouville_fit(cfg, rep, out):
    from .extension import fit_halfline_profile

    K, a = cfg.kernel, cfg.analysis
    form = _closed_form(a["u"], "analysis.u")
    X = float(a.get("X", 1.0))
    n = int(a.get("samples", 200))
    x = X * np.arange(1, n + 1) / n
    fit = fit_halfline_profile(x, form(x[:, None]), K.s, int(a.get("degree", 2)))
    expect = a.get("expect", "liouville")
    if expect == "liouville":
        tol = float(a.get("tolerance", 1e-8))
        rep.add("profile of Liouville form", _verdict(fit.residual <= tol), fit.residual, tol)
        if "coefficients" in a:
            want = np.zeros(fit.degree + 1)
            want[:len(a["coefficients"])] = a["coefficients"]
            err = float(np.max(np.abs(fit.coefficients - want)))
            rep.add("polynomial recovered", _verdict(err <= tol), err, tol)
    else:
        thr = float(a.get("min_residual", 0.05))
        rep.add("non-Liouville profile rejected", _verdict(fit.residual >= thr), fit.residual, thr)
    out.table("liouville", ["degree", "coefficient"], list(enumerate(fit.coefficients)))


def run_holder_probe(cfg, rep, out):
    from .regularity import estimate_holder

    a = cfg.analysis
    f = _closed_form(a["f"], "analysis.f")
    est = estimate_holder(f, tuple(a.get("region", [[-1.0], [1.0]])), int(a.get("k", 1)), int(a.get("levels", 6)),
                          nodes_per_axis=a.get("nodes_per_axis"))
    if a.get("expect_saturated"):
        rep.add("probe saturated", _verdict(est.saturated), est.exponent, None, r2=est.r2)
    else:
        win = float(a.get("window", 0.03))
        target = float(a["expected"])
        rep.add("Hölder exponent", _verdict(abs(est.exponent - target) <= win, est.conclusive), est.exponent, win,
                r2=est.r2, target=target)
    out.table("holder", ["step", "sup"], list(zip(est.steps, est.sups)))


RUNNERS = {
    "solve-obstacle": run_solve_obstacle,
    "verify-lds": run_verify_lds,
    "expansion-decay": run_expansion_decay,
    "boundary-harnack": run_boundary_harnack,
    "extension-check": run_extension_check,
    "liouville-fit": run_liouville_fit,
    "holder-probe": run_holder_probe,
}


def run(config_path, out_dir=None):
    """Run one experiment; returns (exit code, RunReport)."""
    cfg = load_config(config_path)
    if out_dir is not None:
        cfg.output = Path(out_dir)
    rep = RunReport(config=cfg.raw, kind=cfg.kind, seed=cfg.seed)
    out = Writer(cfg.output, rep)
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        RUNNERS[cfg.kind](cfg, rep, out)
        if rep.violated:
            rep.status, code = "violated", EXIT_VIOLATED
    except ConfigInvalid:
        raise
    except Exception as exc:  # partial report, then exit 3
        rep.status = "compute-failure"
        rep.error = f"{type(exc).__name__}: {exc}"
        traceback.print_exc(file=sys.stderr)
        code = EXIT_COMPUTE
    rep.wall_time = time.perf_counter() - t0
    (cfg.output / "report.json").write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True, default=_num))
    return code, rep


def format_report(d):
    lines = [f"experiment: {d['kind']}   status: {d['status']}   wall time: {d['wall_time']:.2f}s   "
             f"version: {d['version']}"]
    if d.get("error"):
        lines.append(f"error: {d['error']}")
    width = max([len(c["name"]) for c in d["checks"]] + [5])
    for c in d["checks"]:
        val = c.get("value")
        val = f"{val:.6g}" if isinstance(val, (int, float)) else str(val)
        extra = ""
        if c.get("target") is not None:
            extra += f"  target={c['target']}"
        if c.get("r2") is not None:
            extra += f"  r2={c['r2']:.4f}"
        lines.append(f"  {c['name']:<{width}}  {c['verdict']:<12}  value={val}  tol={c.get('tolerance')}{extra}")
    for name, path in sorted(d.get("tables", {}).items()):
        lines.append(f"  table {name}: {path}")
    return "\n".join(lines)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="freebnd", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides the config)")
    p = sub.add_parser("validate", help="check a config without computing")
    p.add_argument("config")
    p = sub.add_parser("report", help="pretty-print the report of a run directory")
    p.add_argument("run_dir")
    args = ap.parse_args(argv)
    if args.cmd == "report":
        path = Path(args.run_dir) / "report.json"
        if not path.exists():
            print(f"no report.json in {args.run_dir}", file=sys.stderr)
            return EXIT_CONFIG
        print(format_report(json.loads(path.read_text())))
        return EXIT_OK
    try:
        if args.cmd == "validate":
            cfg = load_config(args.config)
            print(f"{args.config}: valid {cfg.kind} config")
            return EXIT_OK
        code, rep = run(args.config, args.out)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(format_report(rep.to_dict()))
    return code


if __name__ == "__main__":
    sys.exit(main())
