"""Empirical regularity probes.

* centred finite differences of order k and a dyadic Hölder-exponent
  estimator built on them;
* least-squares expansions u ~ Q d^s around boundary points and their decay
  under shrinking radii;
* the quotient u1/u2 of two functions vanishing like d^s;
* decay of L(eta d^s) and its derivatives toward the boundary.

Every exponent comes with the r^2 of its log-log fit.  Fits below
``MIN_R2`` are reported as inconclusive rather than as numbers to trust.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from itertools import product
import json
import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import comb

from .errors import (InsufficientLevels, InsufficientRadii, NondegeneracyViolated, QuadratureNoiseFloor,
                     SampleOutsideDomain, SingularGram)
from .functions import ClosedForm, Grid, GridFunction, Product, as_points
from .geometry import PositivePower, RegularizedDistance, closed_form_distance
from .kernels import QuadratureScheme, eval_operator

MIN_R2 = 0.98


def _loglog(x, y):
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, icpt = np.polyfit(lx, ly, 1)
    ss = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum((ly - slope * lx - icpt) ** 2) / ss if ss > 0 else 1.0
    return float(slope), float(icpt), float(min(max(r2, 0.0), 1.0))


# ---------------------------------------------------------------------------
# finite differences


@dataclass(frozen=True)
class FiniteDifferenceOp:
    """Delta_h^k f(x) = sum_i (-1)^i C(k, i) f(x + (k/2 - i) h)."""

    k: int
    h: tuple

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("order must be at least 1")
        object.__setattr__(self, "h", tuple(np.atleast_1d(np.asarray(self.h, float)).tolist()))

    @property
    def weights(self):
        i = np.arange(self.k + 1)
        return (-1.0) ** i * comb(self.k, i, exact=False)

    @property
    def offsets(self):
        return self.k / 2 - np.arange(self.k + 1)

    def points(self, x):
        x = np.asarray(x, float).reshape(-1)
        return x[None, :] + self.offsets[:, None] * np.asarray(self.h)[None, :]

    def __call__(self, f, x):
        pts = self.points(x)
        return float(self.weights @ _evaluate(f, pts))


def _evaluate(f, pts):
    if isinstance(f, GridFunction):
        if f.exterior is None and not np.all(f.grid.contains(pts)):
            raise SampleOutsideDomain("finite-difference stencil leaves the grid")
        return f(pts)
    if isinstance(f, ClosedForm):
        return f(pts)
    vals = np.asarray([f(p[0] if len(p) == 1 else p) for p in pts], float)
    return vals


def finite_difference(f, k, h, x):
    """Centred finite difference of order k with step vector h at x (no division by |h|^k)."""
    return FiniteDifferenceOp(k, h)(f, x)


# ---------------------------------------------------------------------------
# Hölder estimation


@dataclass
class HolderEstimate:
    exponent: float
    constant: float
    k_used: int
    steps: list
    sups: list
    r2: float
    saturated: bool
    noise_floor: float = 0.0
    dropped_levels: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def conclusive(self):
        return self.saturated or self.r2 >= MIN_R2

    def verdict(self, target):
        """``consistent`` when the exponent reaches ``target`` (minus 0.03)."""
        if not self.conclusive:
            return "inconclusive"
        return "consistent" if self.exponent >= target - 0.03 else "violated"

    def to_dict(self):
        d = asdict(self)
        d.pop("extras")
        return d


def _directions(dim):
    if dim == 1:
        return [(1,)]
    return [(1, 0), (0, 1), (1, 1), (1, -1)]


def _fd_sup(V, k, m, direction):
    """max |Delta^k| over lattice V (NaN = missing) for integer step m along direction."""
    w = (-1.0) ** np.arange(k + 1) * comb(k, np.arange(k + 1), exact=False)
    offs = [(k * m) // 2 - i * m for i in range(k + 1)]
    sl_base = []
    for ax, c in enumerate(direction):
        lo = -min(o * c for o in offs)
        hi = V.shape[ax] - max(o * c for o in offs)
        if hi <= lo:
            return np.nan
        sl_base.append((lo, hi))
    acc = 0.0
    for wi, o in zip(w, offs):
        sl = tuple(slice(lo + o * c, hi + o * c) for (lo, hi), c in zip(sl_base, direction))
        acc = acc + wi * V[sl]
    acc = np.abs(acc)
    if np.all(np.isnan(acc)):
        return np.nan
    return float(np.nanmax(acc))


def holder_on_lattice(V, h, k, levels, noise_floor=None, min_levels=4):
    """Dyadic Hölder estimate for lattice values V (NaN entries are skipped)."""
    V = np.asarray(V, float)
    if noise_floor is None:
        noise_floor = 1e-13 * max(1.0, float(np.nanmax(np.abs(V)))) * 2**k
    base = 2 if k % 2 else 1
    steps, sups = [], []
    for lev in range(levels):
        m = base * 2**lev
        vals = [_fd_sup(V, k, m, d) for d in _directions(V.ndim)]
        vals = [v for v in vals if np.isfinite(v)]
        if not vals:
            break
        steps.append(m * h)
        sups.append(max(vals))
    if len(steps) < min_levels:
        raise InsufficientLevels(f"only {len(steps)} dyadic levels fit inside the region")
    steps, sups = np.array(steps), np.array(sups)
    keep = sups > noise_floor
    if keep.sum() < 2:
        return HolderEstimate(float(k), float(sups.max()), k, steps.tolist(), sups.tolist(), 1.0, True,
                              float(noise_floor), int((~keep).sum()))
    slope, icpt, r2 = _loglog(steps[keep], sups[keep])
    saturated = slope >= k - 0.05
    exponent = min(slope, float(k)) if saturated else slope
    return HolderEstimate(exponent, math.exp(icpt), k, steps.tolist(), sups.tolist(), r2, bool(saturated),
                          float(noise_floor), int((~keep).sum()), {"raw_slope": slope})


def _region_box(region, dim):
    lo, hi = region
    return np.atleast_1d(np.asarray(lo, float)), np.atleast_1d(np.asarray(hi, float))


def estimate_holder(f, region, k, levels, nodes_per_axis=None, noise_floor=None, mask=None):
    """Hölder exponent of f on a box ``region = (lower, upper)``.

    Grid functions are probed on their own nodes inside the region; closed
    forms and callables are first sampled on a uniform lattice with
    ``nodes_per_axis`` nodes (default 1025 in 1D, 257 in 2D).  ``mask`` is an
    optional predicate on points; samples where it is false are ignored.
    """
    if isinstance(f, GridFunction):
        g = f.grid
        lo, hi = _region_box(region, g.dim)
        ax = g.axes()
        sel = [np.nonzero((a >= l - 1e-12 * g.spacing) & (a <= u + 1e-12 * g.spacing))[0] for a, l, u in
               zip(ax, lo, hi)]
        V = f.values[np.ix_(*sel)].astype(float).copy()
        h = g.spacing
        pts_axes = [a[s] for a, s in zip(ax, sel)]
    else:
        dim = f.dim if isinstance(f, ClosedForm) else len(np.atleast_1d(region[0]))
        lo, hi = _region_box(region, dim)
        n = nodes_per_axis or (1025 if dim == 1 else 257)
        if np.ptp(hi - lo) > 1e-12 * np.max(hi - lo):
            raise ValueError("callables are sampled on square regions only")
        pts_axes = [np.linspace(l, u, n) for l, u in zip(lo, hi)]
        h = (hi[0] - lo[0]) / (n - 1)
        mesh = np.stack([m.ravel() for m in np.meshgrid(*pts_axes, indexing="ij")], axis=1)
        if isinstance(f, ClosedForm):
            vals = f(mesh)
        else:
            vals = np.array([f(p[0] if dim == 1 else p) for p in mesh], float)
        V = vals.reshape([len(a) for a in pts_axes])
    if mask is not None:
        mesh = np.stack([m.ravel() for m in np.meshgrid(*pts_axes, indexing="ij")], axis=1)
        V = np.where(np.asarray(mask(mesh)).reshape(V.shape), V, np.nan)
    return holder_on_lattice(V, h, k, levels, noise_floor)


# ---------------------------------------------------------------------------
# d^s expansions


def multi_indices(dim, degree):
    out = [a for a in product(range(degree + 1), repeat=dim) if sum(a) <= degree]
    return sorted(out, key=lambda a: (sum(a), tuple(-x for x in a)))


def _values(obj, pts):
    if isinstance(obj, RegularizedDistance):
        return obj(pts)
    if isinstance(obj, (GridFunction, ClosedForm)):
        return obj(pts)
    return np.asarray(obj(pts), float)


@dataclass
class DsExpansion:
    """Least-squares fit u ~ Q d^s on B_r(z); Q is stored in powers of (x - z)."""

    z: np.ndarray
    degree: int
    radius: float
    s: float
    coefficients: dict
    residual_sup: float
    orthogonality: float
    n_nodes: int
    condition: float
    scale: float

    def Q(self, pts):
        X = as_points(pts, len(self.z)) - self.z
        out = np.zeros(len(X))
        for a, c in self.coefficients.items():
            out += c * np.prod(X ** np.asarray(a), axis=1)
        return out

    def absolute_coefficients(self):
        """Coefficients of Q in powers of x (re-expanded about the origin)."""
        out = {a: 0.0 for a in self.coefficients}
        for a, c in self.coefficients.items():
            # prod_i (x_i - z_i)^a_i expanded
            for b in product(*[range(ai + 1) for ai in a]):
                term = c
                for ai, bi, zi in zip(a, b, self.z):
                    term *= comb(ai, bi, exact=True) * (-zi) ** (ai - bi)
                out[tuple(b)] = out.get(tuple(b), 0.0) + term
        return out

    def to_dict(self):
        return {"z": np.asarray(self.z).tolist(), "degree": self.degree, "radius": self.radius, "s": self.s,
                "coefficients": {",".join(map(str, a)): c for a, c in self.coefficients.items()},
                "residual_sup": self.residual_sup, "orthogonality": self.orthogonality,
                "n_nodes": self.n_nodes, "condition": self.condition}


def fit_ds_expansion(u, d, s, z, r, degree, grid=None, min_nodes=20, max_condition=1e12):
    """L^2(B_r(z)) projection of u onto d^s * (polynomials of degree <= degree)."""
    if degree > 3:
        raise ValueError("degree is capped at 3")
    if grid is None:
        if not isinstance(u, GridFunction):
            raise ValueError("a grid is required for closed-form inputs")
        grid = u.grid
    z = np.atleast_1d(np.asarray(z, float))
    nodes = grid.nodes()
    near = np.linalg.norm(nodes - z, axis=1) <= r * (1 + 1e-12)
    P = nodes[near]
    dv = _values(d, P)
    inside = dv > 0
    P, dv = P[inside], dv[inside]
    if len(P) < min_nodes:
        raise SingularGram(f"only {len(P)} nodes of the domain in B_r(z)")
    uv = _values(u, P)
    ds = dv**s
    alphas = multi_indices(grid.dim, degree)
    Y = (P - z) / r
    B = np.stack([ds * np.prod(Y ** np.asarray(a), axis=1) for a in alphas], axis=1)
    G = B.T @ B
    ev = np.linalg.eigvalsh(G)
    cond = float(ev[-1] / ev[0]) if ev[0] > 0 else np.inf
    if not cond <= max_condition:
        raise SingularGram(f"Gram matrix condition number {cond:.3e}")
    rhs = B.T @ uv
    cf = cho_factor(G)
    c = cho_solve(cf, rhs)
    res = uv - B @ c
    c = c + cho_solve(cf, B.T @ res)  # one step of refinement
    res = uv - B @ c
    scale = max(np.linalg.norm(uv), np.finfo(float).tiny)
    orth = float(np.max(np.abs(B.T @ res)) / max(np.max(np.linalg.norm(B, axis=0)) * scale, 1e-300))
    coeffs = {a: float(ci / r ** sum(a)) for a, ci in zip(alphas, c)}
    return DsExpansion(z, degree, float(r), float(s), coeffs, float(np.max(np.abs(res))), orth, int(len(P)),
                       cond, float(np.max(np.abs(uv))))


@dataclass
class DecayFit:
    fitted_decay: float
    r2: float
    saturated: bool
    coefficient_exponents: dict
    coefficient_r2: dict
    radii: list
    residuals: list

    def __float__(self):
        return float(self.fitted_decay)

    def coefficients_stable(self, beta, slack=0.25):
        """|q_r - q_{r/2}| decays at least like r^(beta - |alpha|) (minus slack)."""
        ok = True
        for a, e in self.coefficient_exponents.items():
            if np.isfinite(e):
                ok &= e >= beta - sum(a) - slack
        return bool(ok)

    def to_dict(self):
        return {"fitted_decay": self.fitted_decay, "r2": self.r2, "saturated": self.saturated,
                "coefficient_exponents": {",".join(map(str, a)): e for a, e in self.coefficient_exponents.items()},
                "radii": self.radii, "residuals": self.residuals}


def verify_expansion_decay(expansions, noise_floor=1e-12):
    """Slope of log residual_sup against log r, plus coefficient stability."""
    if len(expansions) < 4:
        raise InsufficientRadii("need at least four radii")
    z0, deg = expansions[0].z, expansions[0].degree
    for e in expansions:
        if e.degree != deg or not np.allclose(e.z, z0):
            raise ValueError("expansions must share base point and degree")
    ex = sorted(expansions, key=lambda e: -e.radius)
    radii = np.array([e.radius for e in ex])
    res = np.array([e.residual_sup for e in ex])
    floor = noise_floor * max(e.scale for e in ex)
    keep = res > floor
    if keep.sum() < 2:
        slope, r2, sat = np.inf, 1.0, True
    else:
        slope, _, r2 = _loglog(radii[keep], res[keep])
        sat = False
    cexp, cr2 = {}, {}
    for a in ex[0].coefficients:
        q = np.array([e.coefficients[a] for e in ex])
        dq = np.abs(np.diff(q))
        # size of the change as seen on B_r; below the floor it is rounding noise
        ok = dq * radii[:-1] ** sum(a) > 100 * floor
        if ok.sum() >= 2:
            cexp[a], _, cr2[a] = _loglog(radii[:-1][ok], dq[ok])
        else:
            cexp[a], cr2[a] = np.inf, 1.0
    return DecayFit(float(slope), float(r2), sat, cexp, cr2, radii.tolist(), res.tolist())


# ---------------------------------------------------------------------------
# boundary Harnack quotient


def quotient_regularity(u1, u2, d, s, c1, region, k, levels=4, degree=1, noise_floor=None):
    """Hölder probe of u1/u2 on region ∩ closure(Omega).

    The ratio is taken directly at nodes whose whole stencil lies in Omega;
    at boundary-adjacent nodes it is the ratio of local d^s-projections.
    """
    g = u2.grid
    nodes = g.nodes()
    dv = _values(d, nodes).reshape(g.shape)
    lo, hi = _region_box(region, g.dim)
    in_region = np.all((nodes >= lo - 1e-12) & (nodes <= hi + 1e-12), axis=1).reshape(g.shape)
    omega = dv > 0
    u1v, u2v = u1.values, u2.values
    sel = omega & in_region
    ratio = np.where(sel, u2v / np.where(omega, dv, 1.0) ** s, np.inf)
    worst = np.unravel_index(np.argmin(ratio), g.shape)
    if ratio[worst] < c1:
        raise NondegeneracyViolated(f"u2 < c1 d^s at node {nodes.reshape(*g.shape, g.dim)[worst]}",
                                    worst_node=nodes.reshape(*g.shape, g.dim)[worst],
                                    worst_ratio=float(ratio[worst]))
    interior = omega.copy()
    for ax in range(g.dim):
        for sh in (1, -1):
            nb = np.roll(omega, sh, axis=ax)
            edge = [slice(None)] * g.dim
            edge[ax] = 0 if sh == 1 else -1
            nb[tuple(edge)] = False
            interior &= nb
    q = np.full(g.shape, np.nan)
    q[interior] = u1v[interior] / u2v[interior]
    adj = omega & ~interior & in_region
    pts = nodes.reshape(*g.shape, g.dim)
    n_nb = 24
    for idx in zip(*np.nonzero(adj)):
        x = pts[idx]
        rad = 4 * g.spacing
        while True:
            cnt = np.count_nonzero((np.linalg.norm(nodes - x, axis=1) <= rad) & (dv.ravel() > 0))
            if cnt >= n_nb or rad > 64 * g.spacing:
                break
            rad += g.spacing
        e1 = fit_ds_expansion(u1, d, s, x, rad, degree, grid=g)
        e2 = fit_ds_expansion(u2, d, s, x, rad, degree, grid=g)
        q[idx] = e1.Q(x[None])[0] / e2.Q(x[None])[0]
    q = np.where(in_region, q, np.nan)
    # restrict to the bounding box of the region for the probe
    sl = tuple(slice(int(np.min(ix)), int(np.max(ix)) + 1) for ix in np.nonzero(in_region))
    est = holder_on_lattice(q[sl], g.spacing, k, levels, noise_floor)
    est.extras["quotient"] = q
    est.extras["min_ratio"] = float(ratio[worst])
    return est


# ---------------------------------------------------------------------------
# decay of L(eta d^s)


@dataclass
class LdsResult:
    j: int
    points: list
    distances: list
    values: list
    noise: list
    fitted_exponent: float
    predicted_exponent: float
    r2: float
    verdict: str
    holder: HolderEstimate | None = None

    def to_dict(self):
        d = asdict(self)
        d["holder"] = None if self.holder is None else self.holder.to_dict()
        return d


def _lds_values(f, K, pts, q):
    v1 = np.atleast_1d(eval_operator(f, K, pts, q))
    v2 = np.atleast_1d(eval_operator(f, K, pts, q.refined()))
    return v2, np.abs(v2 - v1)


def lds_derivative(f, K, x, nu, j, delta, q):
    """j-th directional derivative of L f along nu at x by central differences.

    Returns the value and a noise estimate from one quadrature refinement.
    """
    stencils = {0: ([0.0], [1.0]), 1: ([-1.0, 1.0], [-0.5, 0.5]), 2: ([-1.0, 0.0, 1.0], [1.0, -2.0, 1.0])}
    if j not in stencils:
        raise ValueError("derivative order must be 0, 1 or 2")
    offs, w = stencils[j]
    w = np.asarray(w) / delta**j
    pts = np.array([x + o * delta * nu for o in offs])
    v, e = _lds_values(f, K, pts, q)
    return float(w @ v), float(np.abs(w) @ e)


def verify_lds_decay(domain, K, eta, j, distances, z=None, nu=None, q=None, d=None, beta=None,
                     holder_levels=4, slack=0.15):
    """Behaviour of D^j L(eta d^s) along the inward normal at a boundary point z.

    ``d`` defaults to the closed-form distance of ``domain``; ``beta`` to the
    domain's smoothness label.  For j = 0 the values are probed for Hölder
    continuity (a noise-floor-saturated probe counts as consistent).  For
    j >= 1 |D^j L| is fitted against the distance and compared with the
    predicted exponent beta - 1 - s - j.
    """
    s = K.s
    q = q or QuadratureScheme()
    dist_form = d if d is not None else closed_form_distance(domain)
    if dist_form is None:
        raise ValueError("verify_lds_decay needs a closed-form distance")
    f = PositivePower(dist_form, s) if eta is None else Product([eta, PositivePower(dist_form, s)])
    if z is None or nu is None:
        z, nu = _default_normal(domain)
    z, nu = np.atleast_1d(np.asarray(z, float)), np.atleast_1d(np.asarray(nu, float))
    beta = domain.beta if beta is None else beta
    t = np.sort(np.asarray(distances, float))
    pred = beta - 1 - s - j
    vals, noise = [], []
    for ti in t:
        x = z + ti * nu
        v, e = lds_derivative(f, K, x, nu, j, ti / 8, q)
        vals.append(v)
        noise.append(e)
    vals, noise = np.array(vals), np.array(noise)
    holder = None
    if j == 0:
        if not np.all(np.isfinite(vals)):
            verdict = "violated"
            slope, r2 = np.nan, 0.0
        else:
            floor = max(float(noise.max()), 1e-13 * max(1.0, np.abs(vals).max()))
            # uniform samples for the Hölder probe
            tt = t.min() + (t.max() - t.min()) * np.arange(2 ** (holder_levels + 1) + 1) / 2 ** (holder_levels + 1)
            pts = z + tt[:, None] * nu
            lv, le = _lds_values(f, K, pts, q)
            floor = max(floor, 2 * float(le.max()))
            holder = holder_on_lattice(lv, tt[1] - tt[0], 1, holder_levels, noise_floor=floor)
            slope, r2 = holder.exponent, holder.r2
            verdict = holder.verdict(0.5)
        return LdsResult(j, [list(z + ti * nu) for ti in t], t.tolist(), vals.tolist(), noise.tolist(),
                         float(slope), 0.5, float(r2), verdict, holder)
    a = np.abs(vals)
    good = a > 3 * noise
    if good.sum() < 3:
        raise QuadratureNoiseFloor("derivative values are below the quadrature noise")
    slope, _, r2 = _loglog(t[good], a[good])
    if r2 < MIN_R2:
        verdict = "inconclusive"
    else:
        verdict = "consistent" if slope >= pred - slack else "violated"
    return LdsResult(j, [list(z + ti * nu) for ti in t], t.tolist(), vals.tolist(), noise.tolist(), float(slope),
                     float(pred), float(r2), verdict)


def _default_normal(domain):
    p = domain.params
    if domain.tag == "interval":
        return np.array([p["a"]]), np.array([1.0])
    if domain.tag == "disk":
        c = np.asarray(p["center"])
        return c + np.array([p["radius"], 0.0]), np.array([-1.0, 0.0])
    if domain.tag == "half_space":
        e = np.asarray(p["normal"])
        return e * p["offset"], e
    raise ValueError("pass z and nu explicitly for graph domains")


def cancellation_slope(K, eta_zero, eta_ref, d, distances, j=2, q=None, z=0.0, nu=1.0):
    """Slope of log(|D^j L(eta_zero d^s)| / |D^j L(eta_ref d^s)|) against log distance.

    ``eta_zero`` vanishes at z while ``eta_ref(z) != 0``; the ratio then
    carries the extra factor |x - z|.
    """
    q = q or QuadratureScheme()
    s = K.s
    z = np.atleast_1d(np.asarray(z, float))
    nu = np.atleast_1d(np.asarray(nu, float))
    ds = PositivePower(d, s)
    t = np.sort(np.asarray(distances, float))
    num, den, noise = [], [], []
    for ti in t:
        x = z + ti * nu
        a, ea = lds_derivative(Product([eta_zero, ds]), K, x, nu, j, ti / 8, q)
        b, eb = lds_derivative(Product([eta_ref, ds]), K, x, nu, j, ti / 8, q)
        num.append(a)
        den.append(b)
        noise.append(max(ea / max(abs(a), 1e-300), eb / max(abs(b), 1e-300)))
    ratio = np.abs(np.array(num) / np.array(den))
    slope, _, r2 = _loglog(t, ratio)
    return {"slope": slope, "r2": r2, "distances": t.tolist(), "ratio": ratio.tolist(),
            "numerator": num, "denominator": den, "relative_noise": noise}


# ---------------------------------------------------------------------------
# reports


@dataclass
class RegularityReport:
    target: str
    inputs: dict
    exponents: dict
    constants: dict
    r2: dict
    verdict: str
    notes: str = ""

    def to_json(self, **kw):
        return json.dumps(asdict(self), default=_jsonable, sort_keys=True, **kw)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")
