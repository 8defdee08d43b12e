"""Even homogeneous kernels and quadrature for the nonlocal operator

    L u(x) = 1/2 int (2u(x) - u(x+y) - u(x-y)) K(y) dy,   K(y) = a(y/|y|) |y|^{-n-2s}.

In polar coordinates, using evenness of the integrand in the direction,

    L u(x) = sum_{theta in half sphere} a(theta) dtheta
             int_0^inf (2u(x) - u(x + r theta) - u(x - r theta)) r^{-1-2s} dr.

The radial integral is split into an inner ball ``r < eps`` (second-order
Taylor term, evaluated with a second difference at distance eps), dyadic
Gauss-Legendre panels on ``[eps, R]``, and a tail ``r > R``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
import math

import numpy as np
from scipy import integrate
from scipy.special import gamma

from .errors import CapExceeded, NonFiniteQuadrature
from .functions import ClosedForm, Grid, GridFunction, as_points


def fractional_laplacian_constant(n, s):
    """c_{n,s} making the kernel c/|y|^{n+2s} the operator with Fourier symbol |xi|^{2s}."""
    return s * 4.0**s * gamma(n / 2 + s) / (math.pi ** (n / 2) * gamma(1 - s))


@dataclass(frozen=True)
class HomogeneousKernel:
    """K(y) = a(y/|y|) / |y|^{n+2s} with an even angular density a.

    ``form="frac-laplacian"`` uses the constant density ``constant`` (default
    c_{n,s}); ``form="table"`` interpolates ``values`` given at the uniformly
    spaced ``angles`` (2D: radians in [0, 2pi); 1D: one or two weights for the
    directions -1, +1).
    """

    dim: int
    s: float
    form: str = "frac-laplacian"
    angles: tuple = ()
    values: tuple = ()
    lam: float | None = None
    Lam: float | None = None
    constant: float | None = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if not 0 < self.s < 1:
            raise ValueError("s must lie in (0, 1)")
        if self.form == "frac-laplacian":
            c = fractional_laplacian_constant(self.dim, self.s) if self.constant is None else float(self.constant)
            object.__setattr__(self, "constant", c)
            vals = np.array([c])
        elif self.form == "table":
            vals = np.asarray(self.values, float)
            if vals.size == 0:
                raise ValueError("table kernel needs values")
            if self.dim == 1:
                if vals.size not in (1, 2) or abs(vals[0] - vals[-1]) > 1e-12 * abs(vals[0]):
                    raise ValueError("1D kernel must have a single weight (evenness)")
            else:
                if vals.size % 2:
                    raise ValueError("2D angular table needs an even number of angles")
                half = vals.size // 2
                if np.max(np.abs(vals[:half] - vals[half:])) > 1e-12 * np.max(np.abs(vals)):
                    raise ValueError("angular density is not even: a(theta) != a(theta + pi)")
                ang = np.asarray(self.angles, float) if len(self.angles) else \
                    2 * np.pi * np.arange(vals.size) / vals.size
                if ang.size != vals.size:
                    raise ValueError("angles and values differ in length")
                object.__setattr__(self, "angles", tuple(ang))
            object.__setattr__(self, "values", tuple(vals))
        else:
            raise ValueError(f"unknown kernel form {self.form!r}")
        lam = float(vals.min()) if self.lam is None else float(self.lam)
        Lam = float(vals.max()) if self.Lam is None else float(self.Lam)
        if not 0 < lam <= Lam:
            raise ValueError("need 0 < lambda <= Lambda")
        if vals.min() < lam * (1 - 1e-12) or vals.max() > Lam * (1 + 1e-12):
            raise ValueError("angular density violates lambda <= a <= Lambda")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "Lam", Lam)

    @classmethod
    def fractional_laplacian(cls, dim, s, constant=None):
        return cls(dim=dim, s=s, constant=constant)

    @classmethod
    def from_config(cls, block):
        block = dict(block)
        form = block.get("form", "frac-laplacian")
        return cls(dim=int(block["dim"]), s=float(block["s"]), form=form,
                   angles=tuple(block.get("angles", ())), values=tuple(block.get("values", ())),
                   lam=block.get("lambda"), Lam=block.get("Lambda"), constant=block.get("constant"))

    def to_config(self):
        out = {"dim": self.dim, "s": self.s, "form": self.form, "lambda": self.lam, "Lambda": self.Lam}
        if self.form == "table":
            out["angles"] = list(self.angles)
            out["values"] = list(self.values)
        else:
            out["constant"] = self.constant
        return out

    @property
    def isotropic(self):
        return self.form == "frac-laplacian"

    def density(self, theta):
        """Angular density a at angles ``theta`` (2D) or at directions +-1 (1D)."""
        theta = np.asarray(theta, float)
        if self.form == "frac-laplacian":
            return np.full(theta.shape, self.constant)
        if self.dim == 1:
            return np.full(theta.shape, self.values[0])
        ang = np.asarray(self.angles)
        vals = np.asarray(self.values)
        return np.interp(np.mod(theta, 2 * np.pi), np.append(ang, 2 * np.pi), np.append(vals, vals[0]),
                         period=2 * np.pi)

    def __call__(self, y):
        y = as_points(y, self.dim)
        r = np.linalg.norm(y, axis=1)
        theta = np.arctan2(y[:, 1], y[:, 0]) if self.dim == 2 else np.where(y[:, 0] > 0, 0.0, np.pi)
        return self.density(theta) * r ** (-self.dim - 2 * self.s)

    def half_sphere(self, angular_nodes):
        """Directions on half the unit sphere and their weights a(theta)*dtheta."""
        if self.dim == 1:
            return np.array([[1.0]]), np.array([self.density(0.0)])
        if angular_nodes % 2:
            raise ValueError("angular_nodes must be even")
        theta = 2 * np.pi * np.arange(angular_nodes // 2) / angular_nodes
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return dirs, self.density(theta) * (2 * np.pi / angular_nodes)

    def sphere_mass(self, angular_nodes=512):
        """Integral of a over the full unit sphere."""
        _, w = self.half_sphere(angular_nodes)
        return 2 * w.sum()


@dataclass(frozen=True)
class QuadratureScheme:
    """Quadrature parameters for :func:`eval_operator`.

    radial_levels      grading depth: number of geometric levels used when
                       refining panels toward a breakpoint of the integrand.
    angular_nodes      nodes of the trapezoid rule on the full circle (even).
    inner_cutoff       radius below which the Taylor term is used.  ``None``
                       means one grid spacing for grid functions and
                       ``inner_fraction`` times the nearest breakpoint for
                       closed forms.
    truncation_radius  start of the tail.  ``None`` means grid diameter plus
                       two cells (grid functions) or beyond every breakpoint.
    tail_policy        ``"analytic"`` integrates exterior closed forms
                       adaptively; ``"bound-and-drop"`` keeps only the
                       ``2u(x)`` part of the tail.
    radial_nodes       Gauss-Legendre nodes per radial panel.
    """

    radial_levels: int = 40
    angular_nodes: int = 64
    inner_cutoff: float | None = None
    truncation_radius: float | None = None
    tail_policy: str = "analytic"
    radial_nodes: int = 8
    inner_fraction: float = 1e-3

    def __post_init__(self):
        if self.angular_nodes % 2 or self.angular_nodes < 2:
            raise ValueError("angular_nodes must be a positive even number")
        if self.tail_policy not in ("analytic", "bound-and-drop"):
            raise ValueError(f"unknown tail policy {self.tail_policy!r}")
        if self.inner_cutoff is not None and self.truncation_radius is not None \
                and not self.inner_cutoff < self.truncation_radius:
            raise ValueError("inner_cutoff must be smaller than truncation_radius")
        if self.radial_nodes < 1 or self.radial_levels < 1:
            raise ValueError("radial_nodes and radial_levels must be positive")

    def refined(self):
        """Next scheme in a refinement sequence."""
        return replace(self, radial_nodes=2 * self.radial_nodes, angular_nodes=2 * self.angular_nodes,
                       inner_fraction=self.inner_fraction / 4,
                       inner_cutoff=None if self.inner_cutoff is None else self.inner_cutoff / 4)

    @classmethod
    def from_config(cls, block):
        return cls(**dict(block or {}))


@lru_cache(maxsize=64)
def _leggauss(m):
    x, w = np.polynomial.legendre.leggauss(m)
    return x, w


def _panels(edges, m):
    edges = np.asarray(edges, float)
    a, b = edges[:-1], edges[1:]
    x, w = _leggauss(m)
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * x
    weights = half[:, None] * w
    return nodes.ravel(), weights.ravel()


def _graded(a, b, left, right, depth):
    """Panel edges on [a, b], geometrically refined toward flagged ends."""
    if left and right:
        mid = 0.5 * (a + b)
        return np.concatenate([_graded(a, mid, True, False, depth)[:-1], _graded(mid, b, False, True, depth)])
    w = b - a
    tiny = 1e-15 * max(abs(a), abs(b))
    k = np.arange(1, depth + 1)
    steps = w * 0.5**k
    steps = steps[steps > tiny]
    if left:
        inner = a + steps[::-1]
    elif right:
        inner = b - steps
    else:
        inner = np.empty(0)
    return np.unique(np.concatenate([[a], inner, [b]]))


def radial_rule(eps, R, breaks, m, depth):
    """Nodes/weights for int_eps^R f(r) dr: dyadic shells, graded toward ``breaks``."""
    shells = eps * 2.0 ** np.arange(0, max(1, math.ceil(math.log2(R / eps))) + 1)
    shells = shells[shells < R]
    br = np.asarray([b for b in breaks if eps < b < R])
    pts = np.unique(np.concatenate([shells, [R], br]))
    edges = []
    brset = set(br.tolist())
    for a, b in zip(pts[:-1], pts[1:]):
        edges.append(_graded(a, b, a in brset, b in brset, depth)[:-1])
    edges.append([pts[-1]])
    return _panels(np.concatenate(edges), m)


# ---------------------------------------------------------------------------
# evaluation


def _sample(u, pts):
    return u(pts)


def _grid_rule(u, q, kernel):
    """Common radial rule for grid functions: returns eps, R, nodes, weights."""
    h = u.h
    eps = h if q.inner_cutoff is None else q.inner_cutoff
    R = u.grid.diameter + 2 * h if q.truncation_radius is None else q.truncation_radius
    if not eps < R:
        raise ValueError("inner_cutoff must be smaller than truncation radius")
    r, w = radial_rule(eps, R, (), q.radial_nodes, q.radial_levels)
    return eps, R, r, w


def _closed_rule(u, x, dirs, q):
    breaks = u.breakpoints(x, dirs)
    finite = [b[np.isfinite(b) & (b > 0) & (b < 1e12)] for b in breaks]
    nearest = min((b.min() for b in finite if b.size), default=1.0)
    eps = q.inner_fraction * nearest
    if q.inner_cutoff is not None:
        eps = min(eps, q.inner_cutoff)
    rules = []
    for b in finite:
        R = q.truncation_radius or max(1.0, 4.0 * (b.max() if b.size else 0.0))
        r, w = radial_rule(eps, R, b, q.radial_nodes, q.radial_levels)
        rules.append((R, r, w))
    return eps, rules


def _tail(u, x, dirs, Rs, s, ux, integrand="second-difference"):
    """Adaptive tail int_R^inf per ray.

    The second-difference tail uses r = R t^(-1/2s), which turns the weight
    r^(-1-2s) dr into a constant and leaves a bounded integrand; the gradient
    tail uses r = R/t.
    """
    Rs = np.asarray(Rs, float)

    def f(t):
        if t <= 0:
            if integrand == "second-difference":
                return Rs ** (-2 * s) / (2 * s) * 2 * ux
            return np.zeros(len(dirs))
        if integrand == "second-difference":
            r = Rs * t ** (-1 / (2 * s))
            g = 2 * ux - u(x + r[:, None] * dirs) - u(x - r[:, None] * dirs)
            return Rs ** (-2 * s) / (2 * s) * g
        r = Rs / t
        p = x + r[:, None] * dirs
        m = x - r[:, None] * dirs
        gp = np.sum(u.gradient(p) * dirs, axis=1)
        gm = np.sum(u.gradient(m) * dirs, axis=1)
        return Rs ** (1 - 2 * s) * (gp - gm) * t ** (2 * s - 2)

    val, _ = integrate.quad_vec(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=400)
    return val


def eval_operator(u, kernel, x, q=None, *, return_info=False):
    """Evaluate L u at the point(s) ``x`` with the second-difference form.

    ``u`` is a :class:`GridFunction` or a :class:`ClosedForm`.  Returns a float
    for a single point, otherwise an array.
    """
    q = q or QuadratureScheme()
    single = np.ndim(x) == 0 or (np.ndim(x) == 1 and kernel.dim > 1)
    X = as_points(x, kernel.dim)
    dirs, aw = kernel.half_sphere(q.angular_nodes)
    s = kernel.s
    out = np.empty(len(X))
    infos = []
    if isinstance(u, GridFunction):
        if not np.all(u.grid.contains(X)):
            raise ValueError("evaluation point outside the grid")
        eps, R, r, w = _grid_rule(u, q, kernel)
        W = w * r ** (-1 - 2 * s)
        ux = u(X)
        # samples: point x, direction j, node k
        disp = r[None, :, None] * dirs[:, None, :]  # (J, K, n)
        for i, xi in enumerate(X):
            plus = u((xi + disp).reshape(-1, kernel.dim)).reshape(len(dirs), len(r))
            minus = u((xi - disp).reshape(-1, kernel.dim)).reshape(len(dirs), len(r))
            outer = aw @ ((2 * ux[i] - plus - minus) @ W)
            ip = u(xi + eps * dirs)
            im = u(xi - eps * dirs)
            inner = aw @ (2 * ux[i] - ip - im) * eps ** (-2 * s) / (2 - 2 * s)
            tail = ux[i] * aw.sum() * R ** (-2 * s) / s
            if isinstance(u.exterior, ClosedForm):
                ext = u.exterior
                if q.tail_policy == "analytic":
                    tail = aw @ _tail(ext, xi, dirs, np.full(len(dirs), R), s, ux[i])
            out[i] = inner + outer + tail
            infos.append({"eps": eps, "R": R, "inner": inner, "outer": outer, "tail": tail})
    elif isinstance(u, ClosedForm):
        ux = u(X)
        for i, xi in enumerate(X):
            eps, rules = _closed_rule(u, xi, dirs, q)
            outer = 0.0
            for j, (R, r, w) in enumerate(rules):
                p = u(xi + r[:, None] * dirs[j])
                m = u(xi - r[:, None] * dirs[j])
                outer += aw[j] * np.sum(w * r ** (-1 - 2 * s) * (2 * ux[i] - p - m))
            ip = u(xi + eps * dirs)
            im = u(xi - eps * dirs)
            inner = aw @ (2 * ux[i] - ip - im) * eps ** (-2 * s) / (2 - 2 * s)
            Rs = np.array([rl[0] for rl in rules])
            if q.tail_policy == "analytic":
                tail = aw @ _tail(u, xi, dirs, Rs, s, ux[i])
            else:
                tail = aw @ (ux[i] * Rs ** (-2 * s) / s)
            out[i] = inner + outer + tail
            infos.append({"eps": eps, "R": Rs.max(), "inner": inner, "outer": outer, "tail": tail})
    else:
        raise TypeError("u must be a GridFunction or a ClosedForm")
    if not np.all(np.isfinite(out)):
        raise NonFiniteQuadrature("quadrature produced a non-finite value; inner_cutoff too large?")
    res = out[0] if single and len(out) == 1 else out
    if return_info:
        return res, (infos[0] if single and len(infos) == 1 else infos)
    return res


def eval_operator_gradient_form(u, kernel, x, q=None, grad=None):
    """Evaluate L u through its gradient representation

        L u(x) = -1/(2s) p.v. int grad u(x+y) . y K(y) dy,

    pairing antipodal directions.  For grid functions the gradient comes from
    central differences unless ``grad`` (list of grid functions) is supplied.
    """
    q = q or QuadratureScheme()
    single = np.ndim(x) == 0 or (np.ndim(x) == 1 and kernel.dim > 1)
    X = as_points(x, kernel.dim)
    dirs, aw = kernel.half_sphere(q.angular_nodes)
    s = kernel.s
    out = np.empty(len(X))

    if isinstance(u, GridFunction):
        g = grad if grad is not None else u.gradient()

        def dtheta(pts, d):
            return sum(d[i] * g[i](pts) for i in range(kernel.dim))

        eps, R, r, w = _grid_rule(u, q, kernel)
        rules = [(R, r, w)] * len(dirs)
        tail_form = u.exterior if isinstance(u.exterior, ClosedForm) else None
    elif isinstance(u, ClosedForm):
        def dtheta(pts, d):
            return u.gradient(pts) @ d

        tail_form = u
    else:
        raise TypeError("u must be a GridFunction or a ClosedForm")

    for i, xi in enumerate(X):
        if isinstance(u, ClosedForm):
            eps, rules = _closed_rule(u, xi, dirs, q)
        total = 0.0
        for j, (R, r, w) in enumerate(rules):
            d = dirs[j]
            gp = dtheta(xi + r[:, None] * d, d)
            gm = dtheta(xi - r[:, None] * d, d)
            outer = np.sum(w * r ** (-2 * s) * (gp - gm))
            inner = eps ** (1 - 2 * s) / (2 - 2 * s) * (dtheta((xi + eps * d)[None], d)[0]
                                                         - dtheta((xi - eps * d)[None], d)[0])
            total += aw[j] * (outer + inner)
        if tail_form is not None and q.tail_policy == "analytic":
            Rs = np.array([rl[0] for rl in rules])
            total += aw @ _tail(tail_form, xi, dirs, Rs, s, None, integrand="gradient")
        out[i] = -total / (2 * s)
    if not np.all(np.isfinite(out)):
        raise NonFiniteQuadrature("gradient-form quadrature produced a non-finite value")
    return out[0] if single and len(out) == 1 else out


# ---------------------------------------------------------------------------
# matrix assembly


@dataclass(frozen=True)
class OperatorStencil:
    """Translation-invariant part of the assembled operator on a grid."""

    grid: Grid
    diagonal: float
    stencil: np.ndarray  # weights by node offset, centre at index (N-1, ...)
    info: dict = field(default_factory=dict)


def operator_stencil(grid, kernel, q=None):
    q = q or QuadratureScheme()
    if grid.dim != kernel.dim:
        raise ValueError("grid and kernel dimensions differ")
    s = kernel.s
    probe = GridFunction(grid, np.zeros(grid.shape))
    eps, R, r, w = _grid_rule(probe, q, kernel)
    dirs, aw = kernel.half_sphere(q.angular_nodes)
    W = aw[:, None] * (w * r ** (-1 - 2 * s))[None, :]
    Win = aw * eps ** (-2 * s) / (2 - 2 * s)
    disp = np.concatenate([(r[None, :, None] * dirs[:, None, :]).reshape(-1, grid.dim), eps * dirs])
    weights = np.concatenate([W.ravel(), Win])
    disp = np.concatenate([disp, -disp])
    weights = np.concatenate([weights, weights])
    diag = weights.sum() + aw.sum() * R ** (-2 * s) / s

    N = np.asarray(grid.shape)
    size = 2 * N - 1
    st = np.zeros(tuple(size))
    o = disp / grid.spacing
    base = np.floor(o).astype(np.int64)
    frac = o - base
    for corner in np.ndindex(*(2,) * grid.dim):
        idx = base + np.asarray(corner)
        cw = np.prod(np.where(np.asarray(corner) == 1, frac, 1.0 - frac), axis=1) * weights
        ok = np.all(np.abs(idx) <= N - 1, axis=1) & (cw != 0)
        np.add.at(st, tuple((idx[ok] + N - 1).T), cw[ok])
    return OperatorStencil(grid, float(diag), st, {"eps": eps, "R": R, "samples": len(weights)})


def assemble_operator_matrix(grid, kernel, q=None, exterior="zero", cap=20000):
    """Dense matrix A with (A v)_i = L v(x_i) for grid functions vanishing outside the grid."""
    if exterior != "zero":
        raise ValueError("matrix assembly supports the zero exterior only")
    if grid.size > cap:
        raise CapExceeded(f"{grid.size} grid nodes exceed the cap of {cap}")
    op = operator_stencil(grid, kernel, q)
    N = grid.shape
    A = np.empty((grid.size, grid.size))
    st = op.stencil
    if grid.dim == 1:
        n = N[0]
        for i in range(n):
            A[i] = -st[n - 1 - i: 2 * n - 1 - i]
    else:
        n1, n2 = N
        row = 0
        for a in range(n1):
            for b in range(n2):
                A[row] = -st[n1 - 1 - a: 2 * n1 - 1 - a, n2 - 1 - b: 2 * n2 - 1 - b].ravel()
                row += 1
    A[np.diag_indices_from(A)] += op.diagonal
    return A
