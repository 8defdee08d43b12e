"""Domains and the regularized distance d.

d is taken to be the torsion function of the domain (-Laplace d = 1 in the
domain, d = 0 on the boundary).  For an interval and a disk this has a closed
form; otherwise it is computed on a grid with a Shortley-Weller stencil at cut
cells.  Half-spaces have no bounded torsion function and use d = dist.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .errors import NoConvergence, UnresolvedBoundary
from .functions import ClosedForm, Grid, GridFunction, as_points, register


@dataclass(frozen=True)
class Domain:
    """Computational domain.

    tag is one of ``interval``, ``disk``, ``half_space``, ``graph``.  ``graph``
    domains are periodic strips ``{profile(x1) < x2 < top}`` with period
    ``period`` in x1; ``beta`` is a smoothness label only.
    """

    tag: str
    params: dict
    box: tuple  # (lower, upper)

    def __post_init__(self):
        p = self.params
        if self.tag == "interval":
            if not p["a"] < p["b"]:
                raise ValueError("interval needs a < b")
        elif self.tag == "disk":
            if not p["radius"] > 0:
                raise ValueError("disk radius must be positive")
        elif self.tag == "half_space":
            if abs(np.linalg.norm(p["normal"]) - 1) > 1e-12:
                raise ValueError("half-space normal must be a unit vector")
        elif self.tag == "graph":
            if not np.all(np.isfinite(p["values"])):
                raise ValueError("profile values must be finite")
            if np.max(p["values"]) >= p["top"]:
                raise ValueError("profile must stay below the top of the strip")
        else:
            raise ValueError(f"unknown domain tag {self.tag!r}")

    # constructors -------------------------------------------------------
    @classmethod
    def interval(cls, a=0.0, b=1.0, margin=None):
        m = (b - a) if margin is None else margin
        return cls("interval", {"a": float(a), "b": float(b)}, ((a - m,), (b + m,)))

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius=1.0, margin=None):
        c = np.asarray(center, float)
        m = radius if margin is None else margin
        return cls("disk", {"center": tuple(c.tolist()), "radius": float(radius)},
                   (tuple((c - radius - m).tolist()), tuple((c + radius + m).tolist())))

    @classmethod
    def half_space(cls, normal=(0.0, 1.0), offset=0.0, box=None):
        e = np.asarray(normal, float)
        e = e / np.linalg.norm(e)
        if box is None:
            box = ((-1.0,) * len(e), (1.0,) * len(e))
        return cls("half_space", {"normal": tuple(e.tolist()), "offset": float(offset)},
                   (tuple(box[0]), tuple(box[1])))

    @classmethod
    def graph(cls, values, top=1.0, period=1.0, beta=np.inf, bottom=None):
        v = np.asarray(values, float)
        lo = v.min() - 0.25 * (top - v.min()) if bottom is None else bottom
        return cls("graph", {"values": tuple(v.tolist()), "top": float(top), "period": float(period),
                             "beta": float(beta)}, ((0.0, lo), (period, top)))

    @classmethod
    def from_config(cls, block):
        b = dict(block)
        tag = b.pop("tag")
        if tag == "interval":
            return cls.interval(b.get("a", 0.0), b.get("b", 1.0), b.get("margin"))
        if tag == "disk":
            return cls.disk(b.get("center", (0.0, 0.0)), b.get("radius", 1.0), b.get("margin"))
        if tag == "half_space":
            return cls.half_space(b.get("normal", (0.0, 1.0)), b.get("offset", 0.0), b.get("box"))
        if tag == "graph":
            if "values" in b:
                vals = b["values"]
            else:
                x = np.arange(int(b.get("samples", 256))) / b.get("samples", 256) * b.get("period", 1.0)
                vals = b.get("amplitude", 0.1) * np.sin(2 * np.pi * x / b.get("period", 1.0))
            return cls.graph(vals, b.get("top", 1.0), b.get("period", 1.0), b.get("beta", np.inf),
                             b.get("bottom"))
        raise ValueError(f"unknown domain tag {tag!r}")

    def to_config(self):
        out = {"tag": self.tag}
        for k, v in self.params.items():
            out[k] = list(v) if isinstance(v, tuple) else v
        return out

    @property
    def dim(self):
        return 1 if self.tag == "interval" else len(self.box[0])

    @property
    def beta(self):
        return self.params.get("beta", np.inf)

    # geometry -----------------------------------------------------------
    def _profile(self):
        p = self.params
        v = np.asarray(p["values"])
        x = np.arange(len(v) + 1) * p["period"] / len(v)
        return CubicSpline(x, np.append(v, v[0]), bc_type="periodic")

    def level(self, pts):
        """Function positive inside, zero on the boundary, negative outside.

        Equals the signed distance for interval, disk and half-space.
        """
        X = as_points(pts, self.dim)
        p = self.params
        if self.tag == "interval":
            return np.minimum(X[:, 0] - p["a"], p["b"] - X[:, 0])
        if self.tag == "disk":
            return p["radius"] - np.linalg.norm(X - np.asarray(p["center"]), axis=1)
        if self.tag == "half_space":
            return X @ np.asarray(p["normal"]) - p["offset"]
        prof = self._profile()
        x1 = np.mod(X[:, 0], p["period"])
        return np.minimum(X[:, 1] - prof(x1), p["top"] - X[:, 1])

    def inside(self, pts):
        return self.level(pts) > 0

    def boundary_samples(self, spacing):
        """Dense boundary point cloud for graph domains (three periods wide)."""
        p = self.params
        L = p["period"]
        m = max(64, int(np.ceil(3 * L / spacing)))
        x = np.linspace(-L, 2 * L, m, endpoint=False)
        prof = self._profile()
        lower = np.stack([x, prof(np.mod(x, L))], axis=1)
        upper = np.stack([x, np.full_like(x, p["top"])], axis=1)
        return np.concatenate([lower, upper])

    def thinnest(self):
        p = self.params
        if self.tag == "interval":
            return p["b"] - p["a"]
        if self.tag == "disk":
            return 2 * p["radius"]
        if self.tag == "half_space":
            return np.inf
        return p["top"] - max(p["values"])


def dist_to_boundary(domain, x, spacing=None):
    """Signed Euclidean distance to the boundary (negative outside)."""
    X = as_points(x, domain.dim)
    if domain.tag != "graph":
        out = domain.level(X)
    else:
        h = spacing or domain.params["period"] / 4096
        tree = cKDTree(domain.boundary_samples(h))
        dist, _ = tree.query(np.column_stack([np.mod(X[:, 0], domain.params["period"]), X[:, 1]]))
        out = np.where(domain.inside(X), dist, -dist)
    return out[0] if np.ndim(x) == 0 or (np.ndim(x) == 1 and domain.dim > 1) else out


# ---------------------------------------------------------------------------
# closed-form distance functions


@register
class IntervalTorsion(ClosedForm):
    """(x - a)(b - x)/2 on (a, b), zero elsewhere."""

    tag = "interval-torsion"
    dim = 1

    def __init__(self, a=0.0, b=1.0):
        self.a, self.b = float(a), float(b)

    def __call__(self, pts):
        x = as_points(pts, 1)[:, 0]
        return np.where((x > self.a) & (x < self.b), 0.5 * (x - self.a) * (self.b - x), 0.0)

    def gradient(self, pts):
        x = as_points(pts, 1)[:, 0]
        return np.where((x > self.a) & (x < self.b), 0.5 * (self.a + self.b) - x, 0.0)[:, None]

    def breakpoints(self, x, dirs):
        x0 = float(np.asarray(x).ravel()[0])
        b = np.array([abs(x0 - self.a), abs(x0 - self.b)])
        return [b[b > 0] for _ in range(len(dirs))]

    def params(self):
        return {"a": self.a, "b": self.b}


def _circle_hits(x, dirs, center, radius):
    z = np.asarray(x, float).ravel() - center
    out = []
    for th in np.atleast_2d(dirs):
        b = float(z @ th)
        c = float(z @ z) - radius**2
        disc = b * b - c
        if disc <= 0:
            out.append(np.empty(0))
            continue
        t = np.abs(np.array([-b - np.sqrt(disc), -b + np.sqrt(disc)]))
        out.append(t[t > 0])
    return out


@register
class DiskTorsion(ClosedForm):
    """(R^2 - |x - c|^2)/(2n) inside the ball, zero outside."""

    tag = "disk-torsion"

    def __init__(self, center=(0.0, 0.0), radius=1.0):
        self.center = np.asarray(center, float)
        self.dim = len(self.center)
        self.radius = float(radius)

    def __call__(self, pts):
        z = as_points(pts, self.dim) - self.center
        return np.maximum(self.radius**2 - np.sum(z * z, axis=1), 0.0) / (2 * self.dim)

    def gradient(self, pts):
        z = as_points(pts, self.dim) - self.center
        ins = np.sum(z * z, axis=1) < self.radius**2
        return np.where(ins[:, None], -z / self.dim, 0.0)

    def breakpoints(self, x, dirs):
        return _circle_hits(x, dirs, self.center, self.radius)

    def params(self):
        return {"center": self.center.tolist(), "radius": self.radius}


@register
class RegularizedHalfLine(ClosedForm):
    """1D regularized distance d = t + t^beta, t = x - offset > 0, zero for t <= 0.

    Comparable to dist near the boundary point and only C^beta there, which
    makes it a convenient model for the derivative blow-up of d.
    """

    tag = "regularized-halfline"
    dim = 1

    def __init__(self, beta=2.2, offset=0.0):
        self.beta = float(beta)
        self.offset = float(offset)

    def __call__(self, pts):
        t = as_points(pts, 1)[:, 0] - self.offset
        tp = np.maximum(t, 0.0)
        return tp + tp**self.beta

    def gradient(self, pts):
        t = as_points(pts, 1)[:, 0] - self.offset
        tp = np.maximum(t, 0.0)
        return np.where(t > 0, 1 + self.beta * tp ** (self.beta - 1), 0.0)[:, None]

    def breakpoints(self, x, dirs):
        t0 = abs(float(np.asarray(x).ravel()[0]) - self.offset)
        return [np.array([t0]) if t0 > 0 else np.empty(0) for _ in range(len(dirs))]

    def params(self):
        return {"beta": self.beta, "offset": self.offset}


@register
class PositivePower(ClosedForm):
    """``base_+ ** power`` for a closed-form base (used for d^s)."""

    tag = "positive-power"

    def __init__(self, base, power):
        from .functions import closed_form_from_dict

        self.base = closed_form_from_dict(base) if isinstance(base, dict) else base
        self.dim = self.base.dim
        self.power = float(power)

    def __call__(self, pts):
        b = self.base(pts)
        return np.where(b > 0, np.maximum(b, 0.0) ** self.power, 0.0)

    def gradient(self, pts):
        b = self.base(pts)
        pos = b > 0
        f = np.where(pos, self.power * np.where(pos, b, 1.0) ** (self.power - 1), 0.0)
        return self.base.gradient(pts) * f[:, None]

    def breakpoints(self, x, dirs):
        return self.base.breakpoints(x, dirs)

    def params(self):
        return {"base": self.base.to_dict(), "power": self.power}


def closed_form_distance(domain):
    """Closed-form regularized distance, or None when only a grid solve exists."""
    p = domain.params
    if domain.tag == "interval":
        return IntervalTorsion(p["a"], p["b"])
    if domain.tag == "disk":
        return DiskTorsion(p["center"], p["radius"])
    if domain.tag == "half_space":
        from .functions import HalfSpacePower

        return HalfSpacePower(domain.dim, p["normal"], p["offset"], power=1.0)
    return None


# ---------------------------------------------------------------------------
# torsion solve


@numba.njit(cache=True)
def _sor_torsion(u, cw, nbr, omega, tol, max_sweeps):
    # -sum_k cw[i,k] (u[nbr[i,k]] - u[i]) = 1 with u = 0 where nbr = -1
    n, m = cw.shape
    diag = np.zeros(n)
    for i in range(n):
        for k in range(m):
            diag[i] += cw[i, k]
    res = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        for i in range(n):
            acc = 1.0
            for k in range(m):
                j = nbr[i, k]
                if j >= 0:
                    acc += cw[i, k] * u[j]
            u[i] += omega * (acc / diag[i] - u[i])
        sweeps += 1
        if sweeps % 10 == 0:
            res = 0.0
            for i in range(n):
                acc = 1.0 - diag[i] * u[i]
                for k in range(m):
                    j = nbr[i, k]
                    if j >= 0:
                        acc += cw[i, k] * u[j]
                if abs(acc) > res:
                    res = abs(acc)
            if res <= tol:
                break
    return sweeps, res


def _crossing(domain, p, q):
    """Fraction t in (0, 1] with level(p + t (q - p)) = 0 (p inside, q outside)."""
    f = lambda t: float(domain.level(p + t * (q - p))[0])
    fq = f(1.0)
    if fq >= 0:  # should not happen; treat boundary as at q
        return 1.0
    return brentq(f, 0.0, 1.0, xtol=1e-15, rtol=1e-15)


def torsion_solve(domain, grid, tol=1e-10, omega=None, max_sweeps=200000):
    """Finite-difference torsion function on ``grid`` (periodic in x1 for graphs)."""
    if domain.thinnest() < 4 * grid.spacing:
        raise UnresolvedBoundary("boundary features thinner than four grid cells")
    h = grid.spacing
    nodes = grid.nodes()
    inside = domain.inside(nodes).reshape(grid.shape)
    idx = -np.ones(grid.shape, dtype=np.int64)
    idx[inside] = np.arange(inside.sum())
    periodic = domain.tag == "graph"
    if periodic and abs(grid.shape[0] * h - domain.params["period"]) > 1e-9 * h:
        raise ValueError("graph domains need a grid spanning exactly one period in x1")
    pts = nodes.reshape(*grid.shape, grid.dim)
    nin = int(inside.sum())
    m = 2 * grid.dim
    cw = np.zeros((nin, m))
    nbr = -np.ones((nin, m), dtype=np.int64)
    for multi in zip(*np.nonzero(inside)):
        i = idx[multi]
        p = pts[multi]
        for ax in range(grid.dim):
            dist = []
            ids = []
            for sgn in (-1, 1):
                nb = list(multi)
                nb[ax] += sgn
                if periodic and ax == 0:
                    nb[0] %= grid.shape[0]
                q = p.copy()
                q[ax] += sgn * h
                if 0 <= nb[ax] < grid.shape[ax] and inside[tuple(nb)]:
                    dist.append(h)
                    ids.append(idx[tuple(nb)])
                else:
                    dist.append(_crossing(domain, p[None], q[None]) * h)
                    ids.append(-1)
            hl, hr = dist
            # Shortley-Weller: -u'' ~ 2/(hl+hr) [(u - ul)/hl + (u - ur)/hr]
            cw[i, 2 * ax] = 2.0 / (hl * (hl + hr))
            cw[i, 2 * ax + 1] = 2.0 / (hr * (hl + hr))
            nbr[i, 2 * ax] = ids[0]
            nbr[i, 2 * ax + 1] = ids[1]
    if omega is None:
        nmax = max(grid.shape)
        omega = 2.0 / (1.0 + np.sin(np.pi / nmax))
    u = np.zeros(nin)
    sweeps, res = _sor_torsion(u, cw, nbr, float(omega), float(tol), int(max_sweeps))
    values = np.zeros(grid.shape)
    values[inside] = u
    if res > tol:
        raise NoConvergence(f"torsion solve stalled at residual {res:.3e}", best=values, residual=res)
    return values, {"sweeps": int(sweeps), "residual": float(res), "omega": float(omega)}


@dataclass(frozen=True)
class RegularizedDistance:
    domain: Domain
    field: GridFunction
    C_cmp: float
    mode: str
    closed_form: ClosedForm | None = None
    info: dict = field(default_factory=dict)

    def __call__(self, pts):
        if self.closed_form is not None:
            return self.closed_form(pts)
        return self.field(pts)


def comparability(domain, grid, values):
    nodes = grid.nodes()
    v = values.ravel()
    ins = domain.inside(nodes) & (v > 0)
    dist = dist_to_boundary(domain, nodes[ins], spacing=grid.spacing / 16)
    r = v[ins] / dist
    return float(max(r.max(), (1 / r).max())) if r.size else np.nan


def build_regularized_distance(domain, grid, tol=1e-10, mode="auto"):
    """Regularized distance on ``grid``.

    ``mode`` is ``closed-form``, ``torsion-solve`` or ``auto`` (closed form
    when the domain has one).
    """
    form = closed_form_distance(domain)
    if mode == "auto":
        mode = "closed-form" if form is not None else "torsion-solve"
    info = {}
    if mode == "closed-form":
        if form is None:
            raise ValueError(f"no closed-form distance for {domain.tag}")
        values = form(grid.nodes()).reshape(grid.shape)
        exterior = form
    elif mode == "torsion-solve":
        if domain.tag == "half_space":
            raise ValueError("half-spaces have no bounded torsion function")
        values, info = torsion_solve(domain, grid, tol)
        exterior = "zero"
        form = None if domain.tag == "graph" else form
    else:
        raise ValueError(f"unknown mode {mode!r}")
    values = np.where(domain.inside(grid.nodes()).reshape(grid.shape), values, 0.0)
    gf = GridFunction(grid, values, exterior=exterior, meta={"kind": "regularized-distance"})
    C = comparability(domain, grid, values)
    return RegularizedDistance(domain, gf, C, mode, form if mode == "closed-form" else None, info)


def d_power(d, s):
    """d^s as a grid function (zero outside the domain)."""
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    vals = np.where(d.field.values > 0, np.maximum(d.field.values, 0.0) ** s, 0.0)
    ext = d.field.exterior
    if isinstance(ext, ClosedForm):
        ext = PositivePower(ext, s)
    return d.field.with_values(vals, exterior=ext)


def d_power_form(d, s):
    """Closed form of d^s when the distance has one."""
    if d.closed_form is None:
        return None
    return PositivePower(d.closed_form, s)
