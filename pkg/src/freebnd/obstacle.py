"""Discrete obstacle problem min(L v, v - phi) = 0 with v = 0 outside the grid.

The operator is assembled as a dense matrix and the complementarity problem is
solved with projected symmetric SOR (a forward sweep followed by a backward
sweep, which keeps symmetric problems symmetric).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DegenerateGradient, EmptyFreeBoundary, InsufficientRadii, NoConvergence
from .functions import ClosedForm, Grid, GridFunction, as_points
from .kernels import HomogeneousKernel, QuadratureScheme, assemble_operator_matrix


@dataclass(frozen=True)
class ObstacleProblem:
    kernel: HomogeneousKernel
    obstacle: GridFunction
    quadrature: QuadratureScheme = field(default_factory=QuadratureScheme)

    def __post_init__(self):
        phi = self.obstacle.values
        if not np.all(np.isfinite(phi)):
            raise ValueError("obstacle must be finite")
        if self.kernel.dim != self.obstacle.dim:
            raise ValueError("kernel and obstacle dimensions differ")
        pos = phi > 0
        if np.any(pos):
            # {phi > 0} must stay 10 cells away from the grid edge
            idx = np.argwhere(pos)
            lo = idx.min(axis=0)
            hi = np.asarray(self.grid.shape) - 1 - idx.max(axis=0)
            if min(lo.min(), hi.min()) < 10:
                raise ValueError("{phi > 0} must be at least 10 cells away from the grid edge")

    @property
    def grid(self):
        return self.obstacle.grid

    @classmethod
    def from_form(cls, kernel, form, grid, quadrature=None):
        phi = GridFunction.sample(form, grid, exterior="zero")
        return cls(kernel, phi, quadrature or QuadratureScheme())


@dataclass(frozen=True, eq=False)
class ObstacleSolution:
    v: GridFunction
    phi: GridFunction
    active_set: np.ndarray
    residuals: dict
    iterations: int
    Av: np.ndarray
    tol: float
    s: float

    @property
    def w(self):
        """v - phi as a grid function (zero exterior)."""
        return self.v.with_values(self.v.values - self.phi.values, exterior="zero")


@numba.njit(cache=True)
def _residual(A, v, phi):
    n = len(v)
    Av = A @ v
    comp = 0.0
    for i in range(n):
        m = min(v[i] - phi[i], Av[i])
        if abs(m) > comp:
            comp = abs(m)
    return comp, Av


@numba.njit(cache=True)
def _pssor(A, phi, v, omega, tol, max_iter, check_every):
    n = len(v)
    comp = np.inf
    it = 0
    while it < max_iter:
        for i in range(n):
            r = 0.0
            for j in range(n):
                r -= A[i, j] * v[j]
            v[i] = max(phi[i], v[i] + omega * r / A[i, i])
        for i in range(n - 1, -1, -1):
            r = 0.0
            for j in range(n):
                r -= A[i, j] * v[j]
            v[i] = max(phi[i], v[i] + omega * r / A[i, i])
        it += 1
        if it % check_every == 0 or it == max_iter:
            comp, _ = _residual(A, v, phi)
            if comp <= tol:
                break
    return it, comp


def residual_record(A, v, phi, tol):
    Av = A @ v
    gap = v - phi
    inactive = gap > 10 * tol
    return {
        "complementarity": float(np.max(np.abs(np.minimum(gap, Av)))),
        "negative_Lv_inactive": float(np.max(np.maximum(-Av[inactive], 0.0), initial=0.0)),
        "infeasibility": float(np.max(np.maximum(-gap, 0.0))),
        "abs_Lv_inactive": float(np.max(np.abs(Av[inactive]), initial=0.0)),
    }, Av


def solve_obstacle(problem, omega=1.5, tol=1e-10, max_iter=200000, A=None, v0=None, check_every=10):
    """Projected symmetric SOR for min(A v, v - phi) = 0."""
    if not 0 < omega < 2:
        raise ValueError("omega must lie in (0, 2)")
    if A is None:
        A = assemble_operator_matrix(problem.grid, problem.kernel, problem.quadrature)
    phi = np.ascontiguousarray(problem.obstacle.values.ravel())
    v = np.maximum(phi, 0.0) if v0 is None else np.maximum(np.asarray(v0, float).ravel(), phi)
    v = np.ascontiguousarray(v)
    if np.all(phi <= 0):
        iters, comp = 0, _residual(A, np.zeros_like(phi), phi)[0]
        v[:] = 0.0
    else:
        iters, comp = _pssor(np.ascontiguousarray(A), phi, v, float(omega), float(tol), int(max_iter),
                             int(check_every))
    res, Av = residual_record(A, v, phi, tol)
    res["omega"] = omega
    grid = problem.grid
    vg = problem.obstacle.with_values(v.reshape(grid.shape), exterior="zero", meta={"kind": "obstacle-solution"})
    sol = ObstacleSolution(vg, problem.obstacle, (v - phi <= 10 * tol).reshape(grid.shape), res, int(iters),
                           Av.reshape(grid.shape), tol, problem.kernel.s)
    if res["complementarity"] > tol:
        raise NoConvergence(f"PSOR stopped after {iters} sweeps at residual {comp:.3e}", best=sol,
                            residual=res["complementarity"])
    if np.min(v) < -tol:
        raise NoConvergence("solution went negative", best=sol, residual=float(-np.min(v)))
    return sol


# ---------------------------------------------------------------------------
# free boundary


@dataclass(frozen=True)
class FreeBoundaryPoint:
    location: np.ndarray
    normal: np.ndarray | None = None
    classification: str = "undetermined"
    growth_exponent: float = np.nan
    fit_r2: float = np.nan
    constant: float = np.nan

    def replace(self, **kw):
        d = dict(self.__dict__)
        d.update(kw)
        return FreeBoundaryPoint(**d)

    def to_dict(self):
        return {"location": np.asarray(self.location).tolist(),
                "normal": None if self.normal is None else np.asarray(self.normal).tolist(),
                "classification": self.classification, "growth_exponent": self.growth_exponent,
                "fit_r2": self.fit_r2}


def _w_of(sol, phi=None):
    if isinstance(sol, ObstacleSolution):
        return sol.w, sol.tol
    if phi is None:
        return sol, 0.0
    return sol.with_values(sol.values - phi.values), 0.0


def extract_free_boundary(sol, phi=None, threshold=None, normals=True):
    """Zero crossings of v - phi - threshold along grid edges."""
    w, tol = _w_of(sol, phi)
    phi_vals = sol.phi.values if isinstance(sol, ObstacleSolution) else (phi.values if phi is not None else None)
    if phi_vals is not None and np.all(phi_vals <= 0):
        raise EmptyFreeBoundary("obstacle is nonpositive; no contact set")
    thr = 10 * tol if threshold is None else threshold
    g = w.grid
    f = w.values - thr
    nodes = g.nodes().reshape(*g.shape, g.dim)
    pts = []
    for ax in range(g.dim):
        a = [slice(None)] * g.dim
        b = [slice(None)] * g.dim
        a[ax] = slice(0, -1)
        b[ax] = slice(1, None)
        fa, fb = f[tuple(a)], f[tuple(b)]
        cross = (fa <= 0) != (fb <= 0)
        if not np.any(cross):
            continue
        t = fa[cross] / (fa[cross] - fb[cross])
        pa = nodes[tuple(a)][cross]
        pts.append(pa + t[:, None] * g.spacing * np.eye(g.dim)[ax])
    if not pts:
        raise EmptyFreeBoundary("no sign change of v - phi found")
    P = np.concatenate(pts)
    P = P[np.lexsort(P.T[::-1])]
    out = []
    for p in P:
        nu = None
        if normals:
            try:
                nu = compute_normal(w, p, threshold=thr)
            except DegenerateGradient:
                nu = None
        out.append(FreeBoundaryPoint(location=p, normal=nu))
    return out


def compute_normal(w, x, eps_grad=1e-12, threshold=0.0):
    """Unit vector grad w / |grad w| at x.

    For grid functions the central-difference gradient is taken at the grid
    node nearest to x among those with w > threshold (the open side of the
    free boundary), so contact nodes never enter the interpolation.
    """
    X = as_points(x, w.dim)
    if not isinstance(w, GridFunction):
        g = w.gradient(X)[0]
    else:
        grid = w.grid
        comps = np.gradient(w.values, w.h, edge_order=2)
        comps = [comps] if w.dim == 1 else comps
        nodes = grid.nodes()
        dist = np.linalg.norm(nodes - X, axis=1)
        ok = (w.values.ravel() > threshold) & (dist <= 2 * w.h * np.sqrt(w.dim))
        if np.any(dist < 1e-12 * w.h):
            ok = dist < 1e-12 * w.h
        if not np.any(ok):
            raise DegenerateGradient(f"no node with w > threshold near {X[0]}")
        k = np.flatnonzero(ok)[np.argmin(dist[ok])]
        g = np.array([c.ravel()[k] for c in comps])
    nrm = np.linalg.norm(g)
    if not nrm > eps_grad:
        raise DegenerateGradient(f"|grad w| = {nrm:.3e} at {X[0]}")
    return g / nrm


def growth_fit(w, x0, radii):
    """Least-squares fit of log sup_{B_r(x0)} w against log r."""
    radii = np.asarray(radii, float)
    if len(radii) < 4:
        raise InsufficientRadii("need at least four radii")
    g = w.grid
    if not np.all(g.contains(as_points(x0, g.dim), pad=-radii.max())):
        raise InsufficientRadii("largest ball leaves the grid")
    nodes = g.nodes()
    dist = np.linalg.norm(nodes - as_points(x0, g.dim), axis=1)
    vals = w.values.ravel()
    sup = np.array([np.max(vals[dist <= r + 1e-12 * r]) for r in radii])
    if np.any(sup <= 0):
        return np.nan, np.nan, 0.0, sup
    lx, ly = np.log(radii), np.log(sup)
    slope, icpt = np.polyfit(lx, ly, 1)
    fit = slope * lx + icpt
    ss = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum((ly - fit) ** 2) / ss if ss > 0 else 1.0
    return float(slope), float(np.exp(icpt)), float(r2), sup


def classify_point(sol, phi, point, radii, s=None, window=0.15, degenerate_gap=0.25, min_r2=0.98):
    """Growth exponent of v - phi at a free boundary point and its class."""
    w, _ = _w_of(sol, phi)
    s = sol.s if s is None else s
    loc = point.location if isinstance(point, FreeBoundaryPoint) else np.asarray(point, float)
    slope, C, r2, _ = growth_fit(w, loc, radii)
    cls = "undetermined"
    if r2 >= min_r2:
        if abs(slope - (1 + s)) <= window:
            cls = "regular"
        elif slope >= 1 + s + degenerate_gap:
            cls = "degenerate"
    if isinstance(point, FreeBoundaryPoint):
        return point.replace(growth_exponent=slope, fit_r2=r2, classification=cls, constant=C)
    return FreeBoundaryPoint(np.atleast_1d(loc), None, cls, slope, r2, C)


def differentiate_solution(sol, i, phi=None, threshold=None):
    """Partial derivative along axis i of w = v - phi.

    Central differences in the open set {w > threshold}; zero on the contact
    set; one-sided second-order stencils pointing away from contact nodes and
    from the grid edge.
    """
    w, tol = _w_of(sol, phi)
    thr = 10 * tol if threshold is None else threshold
    W = np.moveaxis(w.values, i, 0)
    h = w.h
    contact = W <= thr
    n = W.shape[0]
    D = np.zeros_like(W)
    D[1:-1] = (W[2:] - W[:-2]) / (2 * h)
    # forward one-sided where the left neighbour is contact or missing
    left_bad = np.zeros_like(contact)
    left_bad[0] = True
    left_bad[1:] = contact[:-1]
    right_bad = np.zeros_like(contact)
    right_bad[-1] = True
    right_bad[:-1] = contact[1:]
    fwd = np.zeros_like(W)
    fwd[:-2] = (-3 * W[:-2] + 4 * W[1:-1] - W[2:]) / (2 * h)
    bwd = np.zeros_like(W)
    bwd[2:] = (3 * W[2:] - 4 * W[1:-1] + W[:-2]) / (2 * h)
    use_f = left_bad & ~right_bad
    use_b = right_bad & ~left_bad
    D = np.where(use_f, fwd, D)
    D = np.where(use_b, bwd, D)
    D = np.where(contact, 0.0, D)
    return w.with_values(np.moveaxis(D, 0, i), exterior="zero", meta={"kind": f"d{i}w"})
