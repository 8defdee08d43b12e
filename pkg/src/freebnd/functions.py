"""Sampled and closed-form scalar fields on R^n (n = 1, 2).

Two kinds of function feed the operator code:

* :class:`GridFunction` -- values on a uniform grid plus a policy for what
  happens outside the grid (zero, or a closed form).
* :class:`ClosedForm` subclasses -- analytic functions evaluable anywhere.  A
  closed form may report *ray breakpoints*: distances ``r > 0`` at which
  ``r -> u(x + r*theta)`` or ``r -> u(x - r*theta)`` stops being smooth.  The
  quadrature grades its panels toward those points.

Points are always passed as arrays of shape ``(m, n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .errors import NodeOutsideDomainWithoutExteriorPolicy

CLOSED_FORMS = {}


def register(cls):
    CLOSED_FORMS[cls.tag] = cls
    return cls


def as_points(x, dim):
    """Coerce ``x`` to a float array of shape (m, dim)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if dim == 1 else x.reshape(1, -1)
    if x.shape[-1] != dim:
        raise ValueError(f"points have dimension {x.shape[-1]}, expected {dim}")
    return x


def closed_form_from_dict(spec):
    spec = dict(spec)
    tag = spec.pop("tag")
    try:
        cls = CLOSED_FORMS[tag]
    except KeyError:
        raise ValueError(f"unknown closed form {tag!r}") from None
    return cls.from_dict(spec)


class ClosedForm:
    """Analytic function on R^dim."""

    tag = None
    dim = 1

    def __call__(self, pts):
        raise NotImplementedError

    def gradient(self, pts):
        # fourth-order central differences; subclasses override when cheap
        pts = as_points(pts, self.dim)
        g = np.empty_like(pts)
        step = 1e-4 * (1.0 + np.abs(pts).max(axis=1))
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            off = step[:, None] * e
            g[:, i] = (
                -self(pts + 2 * off) + 8 * self(pts + off) - 8 * self(pts - off) + self(pts - 2 * off)
            ) / (12 * step)
        return g

    def breakpoints(self, x, dirs):
        """Distances r > 0 where u(x +- r*theta) is non-smooth, one array per direction."""
        return [np.empty(0) for _ in range(len(dirs))]

    def params(self):
        raise NotImplementedError

    def to_dict(self):
        return {"tag": self.tag, **self.params()}

    @classmethod
    def from_dict(cls, spec):
        return cls(**spec)

    def __mul__(self, other):
        return Product([self, other])

    def __add__(self, other):
        return Sum([self, other])


@register
class Constant(ClosedForm):
    tag = "constant"

    def __init__(self, value=1.0, dim=1):
        self.value = float(value)
        self.dim = int(dim)

    def __call__(self, pts):
        pts = as_points(pts, self.dim)
        return np.full(len(pts), self.value)

    def gradient(self, pts):
        return np.zeros_like(as_points(pts, self.dim))

    def params(self):
        return {"value": self.value, "dim": self.dim}


@register
class Gaussian(ClosedForm):
    """``amplitude * exp(-|x - center|^2 / sigma^2)``."""

    tag = "gaussian"

    def __init__(self, dim=1, amplitude=1.0, sigma=1.0, center=None):
        self.dim = int(dim)
        self.amplitude = float(amplitude)
        self.sigma = float(sigma)
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, float).reshape(self.dim)

    def __call__(self, pts):
        z = as_points(pts, self.dim) - self.center
        return self.amplitude * np.exp(-np.sum(z * z, axis=1) / self.sigma**2)

    def gradient(self, pts):
        z = as_points(pts, self.dim) - self.center
        return (-2.0 / self.sigma**2) * z * self(pts)[:, None]

    def params(self):
        return {"dim": self.dim, "amplitude": self.amplitude, "sigma": self.sigma,
                "center": self.center.tolist()}


@register
class HalfSpacePower(ClosedForm):
    """``P(t) * t_+^power`` with ``t = x.e - offset`` and P a polynomial in t.

    ``coeffs`` are the coefficients of P in increasing degree.
    """

    tag = "halfspace-power"

    def __init__(self, dim=1, normal=None, offset=0.0, power=0.5, coeffs=(1.0,)):
        self.dim = int(dim)
        e = np.zeros(self.dim) if normal is None else np.asarray(normal, float).reshape(self.dim)
        if normal is None:
            e[-1] = 1.0
        self.normal = e / np.linalg.norm(e)
        self.offset = float(offset)
        self.power = float(power)
        self.coeffs = np.asarray(coeffs, float)

    def _t(self, pts):
        return as_points(pts, self.dim) @ self.normal - self.offset

    def __call__(self, pts):
        t = self._t(pts)
        tp = np.maximum(t, 0.0)
        return np.polynomial.polynomial.polyval(t, self.coeffs) * np.where(t > 0, tp**self.power, 0.0)

    def gradient(self, pts):
        t = self._t(pts)
        pos = t > 0
        tp = np.where(pos, t, 1.0)
        P = np.polynomial.polynomial.polyval(t, self.coeffs)
        dP = np.polynomial.polynomial.polyval(t, np.polynomial.polynomial.polyder(self.coeffs)) \
            if len(self.coeffs) > 1 else np.zeros_like(t)
        dt = np.where(pos, dP * tp**self.power + P * self.power * tp ** (self.power - 1), 0.0)
        return dt[:, None] * self.normal

    def breakpoints(self, x, dirs):
        t0 = float(np.asarray(x, float).reshape(self.dim) @ self.normal - self.offset)
        out = []
        for th in np.atleast_2d(dirs):
            c = abs(float(th @ self.normal))
            out.append(np.array([abs(t0) / c]) if c > 1e-300 and t0 != 0.0 else np.empty(0))
        return out

    def params(self):
        return {"dim": self.dim, "normal": self.normal.tolist(), "offset": self.offset,
                "power": self.power, "coeffs": self.coeffs.tolist()}


@register
class RadialPower(ClosedForm):
    """``amplitude * |x - center|^power``."""

    tag = "radial-power"

    def __init__(self, dim=1, power=0.5, amplitude=1.0, center=None):
        self.dim = int(dim)
        self.power = float(power)
        self.amplitude = float(amplitude)
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, float).reshape(self.dim)

    def __call__(self, pts):
        z = as_points(pts, self.dim) - self.center
        return self.amplitude * np.sqrt(np.sum(z * z, axis=1)) ** self.power

    def gradient(self, pts):
        z = as_points(pts, self.dim) - self.center
        r = np.sqrt(np.sum(z * z, axis=1))
        rr = np.where(r > 0, r, 1.0)
        g = self.amplitude * self.power * rr ** (self.power - 2)
        return np.where(r[:, None] > 0, g[:, None] * z, 0.0)

    def breakpoints(self, x, dirs):
        z = np.asarray(x, float).reshape(self.dim) - self.center
        out = []
        for th in np.atleast_2d(dirs):
            along = float(z @ th)
            perp = np.linalg.norm(z - along * th)
            out.append(np.array([abs(along)]) if perp <= 1e-12 * (1 + abs(along)) and along != 0 else np.empty(0))
        return out

    def params(self):
        return {"dim": self.dim, "power": self.power, "amplitude": self.amplitude,
                "center": self.center.tolist()}


@register
class Polynomial(ClosedForm):
    """``sum_alpha q_alpha (x - center)^alpha``; ``terms`` maps multi-index tuples to coefficients."""

    tag = "polynomial"

    def __init__(self, dim=1, terms=None, center=None):
        self.dim = int(dim)
        terms = terms or {(0,) * self.dim: 1.0}
        if isinstance(terms, list):  # serialized form: [[alpha, coeff], ...]
            terms = {tuple(a): c for a, c in terms}
        self.terms = {tuple(int(i) for i in a): float(c) for a, c in terms.items()}
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, float).reshape(self.dim)

    def __call__(self, pts):
        z = as_points(pts, self.dim) - self.center
        out = np.zeros(len(z))
        for a, c in self.terms.items():
            out += c * np.prod(z ** np.asarray(a), axis=1)
        return out

    def gradient(self, pts):
        z = as_points(pts, self.dim) - self.center
        g = np.zeros_like(z)
        for a, c in self.terms.items():
            for i in range(self.dim):
                if a[i] == 0:
                    continue
                b = np.asarray(a)
                b[i] -= 1
                g[:, i] += c * a[i] * np.prod(z**b, axis=1)
        return g

    def params(self):
        return {"dim": self.dim, "terms": [[list(a), c] for a, c in self.terms.items()],
                "center": self.center.tolist()}


def _smooth_step(t):
    # C-infinity step: 0 for t <= 0, 1 for t >= 1
    t = np.clip(t, 0.0, 1.0)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


@register
class Bump(ClosedForm):
    """Smooth cutoff: 1 on ``|x - center| <= inner``, 0 on ``|x - center| >= outer``."""

    tag = "bump"

    def __init__(self, dim=1, inner=1.0, outer=2.0, center=None):
        self.dim = int(dim)
        self.inner = float(inner)
        self.outer = float(outer)
        if not 0 < self.inner < self.outer:
            raise ValueError("need 0 < inner < outer")
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, float).reshape(self.dim)

    def __call__(self, pts):
        r = np.linalg.norm(as_points(pts, self.dim) - self.center, axis=1)
        return 1.0 - _smooth_step((r - self.inner) / (self.outer - self.inner))

    def params(self):
        return {"dim": self.dim, "inner": self.inner, "outer": self.outer,
                "center": self.center.tolist()}


@register
class Product(ClosedForm):
    tag = "product"

    def __init__(self, factors):
        self.factors = [closed_form_from_dict(f) if isinstance(f, dict) else f for f in factors]
        self.dim = self.factors[0].dim

    def __call__(self, pts):
        out = np.ones(len(as_points(pts, self.dim)))
        for f in self.factors:
            out = out * f(pts)
        return out

    def gradient(self, pts):
        vals = [f(pts) for f in self.factors]
        g = np.zeros_like(as_points(pts, self.dim))
        for i, f in enumerate(self.factors):
            others = np.ones_like(vals[0])
            for j, v in enumerate(vals):
                if j != i:
                    others = others * v
            g += f.gradient(pts) * others[:, None]
        return g

    def breakpoints(self, x, dirs):
        parts = [f.breakpoints(x, dirs) for f in self.factors]
        return [np.unique(np.concatenate([p[k] for p in parts])) for k in range(len(dirs))]

    def params(self):
        return {"factors": [f.to_dict() for f in self.factors]}


@register
class Sum(ClosedForm):
    tag = "sum"

    def __init__(self, terms):
        self.terms = [closed_form_from_dict(f) if isinstance(f, dict) else f for f in terms]
        self.dim = self.terms[0].dim

    def __call__(self, pts):
        return sum(f(pts) for f in self.terms)

    def gradient(self, pts):
        return sum(f.gradient(pts) for f in self.terms)

    def breakpoints(self, x, dirs):
        parts = [f.breakpoints(x, dirs) for f in self.terms]
        return [np.unique(np.concatenate([p[k] for p in parts])) for k in range(len(dirs))]

    def params(self):
        return {"terms": [f.to_dict() for f in self.terms]}


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``origin + h * index`` with ``shape`` nodes per axis (axis 0 is x_1)."""

    origin: tuple
    spacing: float
    shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(o) for o in np.atleast_1d(self.origin)))
        object.__setattr__(self, "shape", tuple(int(m) for m in np.atleast_1d(self.shape)))
        object.__setattr__(self, "spacing", float(self.spacing))
        if len(self.origin) != len(self.shape):
            raise ValueError("origin and shape dimensions differ")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if min(self.shape) < 2:
            raise ValueError("need at least two nodes per axis")

    @classmethod
    def covering(cls, lower, upper, h):
        """Grid with spacing ``h`` whose nodes run from ``lower`` to (at least) ``upper``."""
        lower = np.atleast_1d(np.asarray(lower, float))
        upper = np.atleast_1d(np.asarray(upper, float))
        shape = np.rint((upper - lower) / h).astype(int) + 1
        return cls(tuple(lower), h, tuple(shape))

    @property
    def dim(self):
        return len(self.shape)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def upper(self):
        return tuple(o + self.spacing * (m - 1) for o, m in zip(self.origin, self.shape))

    @property
    def diameter(self):
        return self.spacing * math.sqrt(sum((m - 1) ** 2 for m in self.shape))

    def axes(self):
        return [o + self.spacing * np.arange(m) for o, m in zip(self.origin, self.shape)]

    def nodes(self):
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def contains(self, pts, pad=0.0):
        pts = as_points(pts, self.dim)
        lo = np.asarray(self.origin) - pad
        hi = np.asarray(self.upper) + pad
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def to_dict(self):
        return {"origin": list(self.origin), "spacing": self.spacing, "shape": list(self.shape)}


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Scalar field sampled on a :class:`Grid`.

    ``exterior`` is ``"zero"``, a :class:`ClosedForm`, or ``None`` (sampling
    outside the grid is then an error).  With the zero policy the samples are
    treated as a lattice function extended by zeros, so linear interpolation
    tapers to zero over the first cell past the grid edge.  ``interpolation``
    is ``"linear"`` (monotone; required for matrix assembly) or ``"cubic"``.
    """

    grid: Grid
    values: np.ndarray
    exterior: object = "zero"
    interpolation: str = "linear"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.interpolation not in ("linear", "cubic"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        if not (self.exterior is None or self.exterior == "zero" or isinstance(self.exterior, ClosedForm)):
            raise ValueError("exterior must be 'zero', None or a ClosedForm")

    @classmethod
    def sample(cls, form, grid, exterior="same", interpolation="linear"):
        """Sample a closed form on ``grid``; ``exterior="same"`` keeps the form outside."""
        ext = form if exterior == "same" else exterior
        return cls(grid, form(grid.nodes()).reshape(grid.shape), ext, interpolation)

    @property
    def dim(self):
        return self.grid.dim

    @property
    def h(self):
        return self.grid.spacing

    def with_values(self, values, **changes):
        kw = {"exterior": self.exterior, "interpolation": self.interpolation}
        kw.update(changes)
        return GridFunction(self.grid, values, **kw)

    # -- evaluation -------------------------------------------------------
    def __call__(self, pts):
        return self.evaluate(pts)

    def evaluate(self, pts):
        pts = as_points(pts, self.dim)
        if self.exterior == "zero" and self.interpolation == "linear":
            return self._lattice_linear(pts)
        inside = self.grid.contains(pts)
        out = np.zeros(len(pts))
        if np.any(inside):
            p = pts[inside]
            out[inside] = self._lattice_linear(p) if self.interpolation == "linear" else self._cubic(p)
        if not np.all(inside):
            if self.exterior is None:
                raise NodeOutsideDomainWithoutExteriorPolicy(
                    f"{np.count_nonzero(~inside)} sample(s) outside the grid and no exterior policy")
            if isinstance(self.exterior, ClosedForm):
                out[~inside] = self.exterior(pts[~inside])
        return out

    def _lattice_linear(self, pts):
        g = self.grid
        s = (pts - np.asarray(g.origin)) / g.spacing
        base = np.floor(s).astype(np.int64)
        frac = s - base
        out = np.zeros(len(pts))
        for corner in np.ndindex(*(2,) * g.dim):
            idx = base + np.asarray(corner)
            w = np.prod(np.where(np.asarray(corner) == 1, frac, 1.0 - frac), axis=1)
            ok = np.all((idx >= 0) & (idx < np.asarray(g.shape)), axis=1)
            if np.any(ok):
                out[ok] += w[ok] * self.values[tuple(idx[ok].T)]
        return out

    @cached_property
    def _spline(self):
        ax = self.grid.axes()
        if self.dim == 1:
            return CubicSpline(ax[0], self.values)
        return RectBivariateSpline(ax[0], ax[1], self.values, kx=3, ky=3, s=0)

    def _cubic(self, pts):
        if self.dim == 1:
            return self._spline(pts[:, 0])
        return self._spline.ev(pts[:, 0], pts[:, 1])

    def gradient(self):
        """Central-difference gradient components as grid functions."""
        comps = np.gradient(self.values, self.h, edge_order=2)
        if self.dim == 1:
            comps = [comps]
        out = []
        for i, c in enumerate(comps):
            ext = "zero"
            if isinstance(self.exterior, ClosedForm):
                ext = GradientComponent(self.exterior, i)
            elif self.exterior is None:
                ext = None
            out.append(GridFunction(self.grid, c, ext, self.interpolation))
        return out


class GradientComponent(ClosedForm):
    """i-th partial derivative of a closed form, as a closed form."""

    tag = "gradient-component"

    def __init__(self, form, index):
        self.form = closed_form_from_dict(form) if isinstance(form, dict) else form
        self.index = int(index)
        self.dim = self.form.dim

    def __call__(self, pts):
        return self.form.gradient(pts)[:, self.index]

    def breakpoints(self, x, dirs):
        return self.form.breakpoints(x, dirs)

    def params(self):
        return {"form": self.form.to_dict(), "index": self.index}


register(GradientComponent)
