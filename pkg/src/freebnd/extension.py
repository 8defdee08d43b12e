"""Poisson-kernel extension for the fractional Laplacian and half-line profiles.

The extension of u to the upper half-space is

    U(x, y) = int P(z, y) u(x - z) dz,   P(z, y) = c_P y^{2s} / (|z|^2 + y^2)^{(n+2s)/2},

and (-Delta)^s u(x) = -a_{n,s} lim_{y->0} y^{1-2s} dU/dy(x, y).  Both U and the
weighted flux y^{1-2s} dU/dy are computed by direct quadrature with the
symmetric difference u(x+z) + u(x-z) - 2u(x), which keeps the integrands
bounded near z = 0.  This module does not use the kernels quadrature, so it
serves as an independent check of it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate
from scipy.special import gamma

from .errors import ExtrapolationUnstable, NonIntegrableTail, SingularFit
from .functions import ClosedForm, GridFunction, as_points


def poisson_constant(n, s):
    """Closed-form normalisation of the Poisson kernel (used only for checks)."""
    return gamma(n / 2 + s) / (math.pi ** (n / 2) * gamma(s))


def trace_constant(n, s):
    """a_{n,s} = c_{n,s} / (2 s c_P) = 2^{2s-1} Gamma(s) / Gamma(1-s)."""
    return 2 ** (2 * s - 1) * gamma(s) / gamma(1 - s)


def _profile(w, n, s):
    return (1 + w * w) ** (-(n + 2 * s) / 2)


def _flux_profile(w, n, s):
    q = 1 + w * w
    return 2 * s * q ** (-(n + 2 * s) / 2) - (n + 2 * s) * q ** (-(n + 2 * s) / 2 - 1)


def _sphere_area(n):
    return 2 * math.pi ** (n / 2) / gamma(n / 2)


def kernel_mass(n, s):
    """int (1 + |w|^2)^{-(n+2s)/2} dw, computed numerically."""
    val, _ = integrate.quad(lambda r: _profile(r, n, s) * r ** (n - 1), 0, np.inf, epsabs=1e-14, epsrel=1e-13)
    return _sphere_area(n) * val


@dataclass(frozen=True, eq=False)
class ExtensionField:
    x: np.ndarray  # (m, n) base points
    heights: np.ndarray
    values: np.ndarray  # (H, m): U(x, y)
    flux: np.ndarray  # (H, m): y^{1-2s} dU/dy
    s: float
    dim: int
    constants: dict = field(default_factory=dict)
    base_grid: object = None

    def __post_init__(self):
        if not (np.all(np.isfinite(self.values)) and np.all(np.isfinite(self.flux))):
            raise ValueError("extension values must be finite")


def _check_tail(u, x, s, dim):
    if isinstance(u, GridFunction):
        u = u.exterior if isinstance(u.exterior, ClosedForm) else None
    if u is None:
        return
    e = np.zeros(dim)
    e[0] = 1.0
    x0 = np.asarray(x, float).reshape(-1, dim)[0]
    for sign in (1, -1):
        vals = np.abs(u(np.array([x0 + sign * R * e for R in (1e3, 1e6)])))
        if vals[0] > 0 and vals[1] / vals[0] >= (1e3) ** (2 * s) * 0.999:
            raise NonIntegrableTail("data grow too fast for the Poisson kernel")


def _symmetric_integral(u, X, y, s, dim, prof, angular_nodes=64):
    """int prof(|w|) (u(x + y w) + u(x - y w) - 2 u(x)) dw over the half space of w."""
    ux = u(X)
    if dim == 1:
        def f(w):
            return prof(w, 1, s) * (u(X + y * w) + u(X - y * w) - 2 * ux)
        val, _ = integrate.quad_vec(f, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=2000)
        return val
    th = np.pi * (np.arange(angular_nodes // 2) + 0.5) / (angular_nodes // 2)
    dirs = np.stack([np.cos(th), np.sin(th)], axis=1)

    def f(r):
        acc = np.zeros(len(X))
        for d in dirs:
            acc += u(X + y * r * d) + u(X - y * r * d) - 2 * ux
        return prof(r, 2, s) * r * acc * (np.pi / len(dirs))
    val, _ = integrate.quad_vec(f, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=2000)
    return val


def poisson_extend(u, heights, s, x=None):
    """Extension U(x, y) and flux y^{1-2s} dU/dy at the given heights.

    ``x`` defaults to the nodes of ``u``'s grid.  The Poisson normalisation is
    computed numerically from the kernel profile.
    """
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    dim = u.dim
    if x is None:
        if not isinstance(u, GridFunction):
            raise ValueError("base points are required for closed-form inputs")
        X = u.grid.nodes()
    else:
        X = as_points(x, dim)
    _check_tail(u, X, s, dim)
    heights = np.asarray(heights, float)
    if np.any(heights <= 0):
        raise ValueError("heights must be positive")
    mass = kernel_mass(dim, s)
    cP = 1.0 / mass
    ux = u(X)
    vals, flux = [], []
    for y in heights:
        I = _symmetric_integral(u, X, y, s, dim, _profile)
        J = _symmetric_integral(u, X, y, s, dim, _flux_profile)
        # full-space integral = half-space integral of the symmetric difference
        vals.append(ux + cP * I)
        flux.append(cP * y ** (-2 * s) * J)
    return ExtensionField(X, heights, np.array(vals), np.array(flux), float(s), dim,
                          {"c_P": cP, "mass": mass, "a": trace_constant(dim, s)},
                          u.grid if isinstance(u, GridFunction) else None)


def geometric_heights(h, count=8, ratio=2 ** 0.25):
    """Heights y_min = 2h, y_min * ratio, ..."""
    return 2 * h * ratio ** np.arange(count)


def richardson(heights, values, s, terms=3):
    """Extrapolate values(y) to y = 0 assuming an expansion in 1, y^{2-2s}, y^2, y^{4-2s}, ...

    Uses the ``terms`` smallest heights; returns (limit, stability), where
    stability is the change when the next-larger window is used instead.
    """
    powers = [0.0]
    k = 0
    while len(powers) < terms:
        powers.append(2 * k + 2 - 2 * s)
        if len(powers) < terms:
            powers.append(2 * k + 2.0)
        k += 1
    order = np.argsort(heights)
    y = np.asarray(heights)[order]
    V = np.asarray(values)[order]
    if len(y) < terms:
        raise ExtrapolationUnstable(f"need at least {terms} heights")

    def fit(sl):
        M = np.stack([y[sl] ** p for p in powers], axis=1)
        return np.linalg.solve(M, V[sl])[0]

    lim = fit(slice(0, terms))
    alt = fit(slice(1, terms + 1)) if len(y) > terms else lim
    return lim, np.abs(lim - alt)


def neumann_trace(field, a=None, terms=3, rel_tol=1e-2):
    """-a_{n,s} times the y -> 0 limit of y^{1-2s} dU/dy, as a grid function (or array).

    ``a`` defaults to the closed-form a_{n,s}; see :func:`calibrate_trace_constant`.
    """
    a = field.constants.get("a", trace_constant(field.dim, field.s)) if a is None else a
    if len(field.heights) < 3:
        raise ExtrapolationUnstable("need at least three heights")
    lim, change = richardson(field.heights, field.flux, field.s, terms)
    # relative to the flux itself so that traces close to zero are not flagged
    scale = max(np.max(np.abs(lim)), np.max(np.abs(field.flux[np.argmin(field.heights)])), 1e-300)
    if np.max(change) > rel_tol * scale:
        raise ExtrapolationUnstable(f"extrapolated trace moves by {np.max(change):.3e} between windows")
    trace = -a * lim
    if field.base_grid is not None and len(trace) == field.base_grid.size:
        return GridFunction(field.base_grid, trace.reshape(field.base_grid.shape), exterior="zero",
                            meta={"kind": "neumann-trace"})
    return trace


def calibrate_trace_constant(n, s, h=1 / 32, points=None, q=None):
    """Ratio a = L u / (-lim y^{1-2s} dU/dy) on a reference Gaussian.

    L u is evaluated with the kernels module and the fractional-Laplacian
    constant c_{n,s}.  Returns (a, relative spread over the points).
    """
    from .functions import Gaussian
    from .kernels import HomogeneousKernel, eval_operator

    g = Gaussian(n)
    if points is None:
        t = np.linspace(-0.75, 0.75, 7)
        points = t[:, None] if n == 1 else np.stack([t, 0.5 * t], axis=1)
    K = HomogeneousKernel(n, s)
    Lu = np.atleast_1d(eval_operator(g, K, points, q))
    fld = poisson_extend(g, geometric_heights(h, 8), s, x=points)
    lim, _ = richardson(fld.heights, fld.flux, s)
    ratio = Lu / (-lim)
    return float(np.mean(ratio)), float(np.ptp(ratio) / abs(np.mean(ratio)))


def weighted_harmonic_residual(field, spacing):
    """max |div(y^{1-2s} grad U)| / y^{1-2s} over interior stencils (1D base only).

    Heights may be non-uniform; x must be a uniform grid with ``spacing``.
    """
    if field.dim != 1:
        raise ValueError("residual stencil implemented for a 1D base")
    U = field.values
    y = field.heights
    s = field.s
    w = lambda t: t ** (1 - 2 * s)
    yi = y[1:-1]
    dm, dp = yi - y[:-2], y[2:] - yi
    Fp = w(0.5 * (yi + y[2:]))[:, None] * (U[2:] - U[1:-1]) / dp[:, None]
    Fm = w(0.5 * (yi + y[:-2]))[:, None] * (U[1:-1] - U[:-2]) / dm[:, None]
    Ly = (Fp - Fm) / (0.5 * (dp + dm))[:, None]
    Lx = w(yi)[:, None] * (U[1:-1, 2:] - 2 * U[1:-1, 1:-1] + U[1:-1, :-2]) / spacing**2
    R = (Ly[:, 1:-1] + Lx) / w(yi)[:, None]
    return float(np.max(np.abs(R)))


# ---------------------------------------------------------------------------
# half-line profiles


@dataclass
class HalflineFit:
    coefficients: np.ndarray  # increasing degree
    residual: float  # max |g - p| / max |g| with g = u / x^s
    degree: int
    verdict: str

    def __call__(self, x):
        x = np.asarray(x, float)
        return np.polynomial.polynomial.polyval(x, self.coefficients) * np.maximum(x, 0.0) ** self.s_

    s_: float = 0.0


def fit_halfline_profile(x, u, s, k, tol=1e-6):
    """Least squares of u/x^s against 1, x, ..., x^k on samples with x > 0."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    if np.any(x <= 0):
        raise SingularFit("samples must exclude x <= 0")
    if len(np.unique(x)) < k + 1:
        raise SingularFit("fewer distinct samples than coefficients")
    g = u / x**s
    V = np.vander(x / x.max(), k + 1, increasing=True)
    c, *_ = np.linalg.lstsq(V, g, rcond=None)
    if np.linalg.matrix_rank(V) < k + 1:
        raise SingularFit("design matrix is rank deficient")
    coeffs = c / x.max() ** np.arange(k + 1)
    res = float(np.max(np.abs(g - V @ c)) / max(np.max(np.abs(g)), 1e-300))
    verdict = "Liouville form" if res <= tol else "not of Liouville form"
    return HalflineFit(coeffs, res, k, verdict, float(s))
