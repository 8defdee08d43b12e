"""Evaluating the nonlocal operator on a Gaussian.

For the fractional Laplacian the Gaussian has a hypergeometric closed form, so
we can watch the three evaluation paths (closed form, grid data with cubic
interpolation, and the assembled matrix) against it.
"""
import numpy as np
from scipy.special import gamma, hyp1f1

from freebnd import Gaussian, Grid, GridFunction, HomogeneousKernel, assemble_operator_matrix, eval_operator


def exact(x, s, n=1):
    return 4**s * gamma(n / 2 + s) / gamma(n / 2) * hyp1f1(n / 2 + s, n / 2, -x * x)


xs = np.array([0.0, 0.5, 1.0, 1.3, 2.0])
for s in (0.3, 0.5, 0.7):
    K = HomogeneousKernel(1, s)
    cf = eval_operator(Gaussian(1), K, xs)
    print(f"s={s}: closed-form path, max error {np.max(np.abs(cf - exact(xs, s))):.1e}")

# grid data: the exterior of the box is taken as zero, so the box must be wide
g = Grid.covering([-8.0], [8.0], 1 / 64)
u = GridFunction.sample(Gaussian(1), g, interpolation="cubic")
K = HomogeneousKernel(1, 0.5)
print("grid path, s=0.5:", np.round(eval_operator(u, K, xs), 5))
print("exact            :", np.round(exact(xs, 0.5), 5))

# The matrix reproduces the pointwise path on the nodes (same stencil)
g = Grid.covering([-3.0], [3.0], 1 / 16)
u = GridFunction.sample(Gaussian(1), g, exterior="zero")
A = assemble_operator_matrix(g, K)
print("matrix vs pointwise:", np.max(np.abs(A @ u.values.ravel() - eval_operator(u, K, g.nodes()))))
