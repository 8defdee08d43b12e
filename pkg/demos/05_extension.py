"""The extension picture: the Neumann trace of the weighted harmonic extension
recovers the fractional Laplacian.  Heights approach zero geometrically and the
trace is Richardson-extrapolated.
"""
import numpy as np

from freebnd import (Gaussian, Grid, GridFunction, HomogeneousKernel, eval_operator, fit_halfline_profile,
                     geometric_heights, neumann_trace, poisson_extend)

g = Grid.covering([-4.0], [4.0], 1 / 16)
u = GridFunction.sample(Gaussian(1), g, interpolation="cubic")
X = g.nodes()[np.abs(g.nodes()[:, 0]) <= 2.0][::4]
field = poisson_extend(u, geometric_heights(g.spacing), 0.5, x=X)
tr = neumann_trace(field)
L = eval_operator(u, HomogeneousKernel(1, 0.5), X)
print(f"trace vs operator, relative: {np.max(np.abs(tr - L)) / np.max(np.abs(L)):.2e}")

# on a half-line, solutions vanishing outside are x^s times a polynomial
x = np.arange(1, 201) / 200
fit = fit_halfline_profile(x, (1 - 2 * x + 0.5 * x**2) * x**0.3, 0.3, 2)
print("recovered coefficients:", np.round(fit.coefficients, 12), "verdict:", fit.verdict)
print("x^0.6 rejected:", fit_halfline_profile(x, x**0.6, 0.3, 2).verdict)
