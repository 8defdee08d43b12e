"""Solving a 1D obstacle problem and looking at the free boundary.

phi = 1/4 - x^2 with s = 1/2.  The solution touches phi on an interval and the
gap w = v - phi grows like r^{1+s} at both ends.
"""
import numpy as np

from freebnd import (Grid, HomogeneousKernel, ObstacleProblem, Polynomial, assemble_operator_matrix,
                     classify_point, extract_free_boundary, obstacle_oracle, solve_obstacle)

h = 1 / 256
g = Grid.covering([-2.0], [2.0], h)
K = HomogeneousKernel(1, 0.5)
phi = Polynomial(1, terms=[[[0], 0.25], [[2], -1.0]])
sol = solve_obstacle(ObstacleProblem.from_form(K, phi, g), tol=1e-10)
print("residuals:", sol.residuals)

x = g.axes()[0]
contact = x[sol.active_set]
print(f"contact set ~ [{contact.min():.4f}, {contact.max():.4f}]")

for p in extract_free_boundary(sol):
    q = classify_point(sol, None, p, h * np.array([4, 8, 16, 32]))
    print(f"free boundary at {p.location[0]:+.4f}: exponent {q.growth_exponent:.3f}, {q.classification}")

# small instance against the pivoting solver
gc = Grid.covering([-2.0], [2.0], 1 / 32)
A = assemble_operator_matrix(gc, K)
pc = ObstacleProblem.from_form(K, phi, gc)
v = obstacle_oracle(A, pc.obstacle.values.ravel(), "lemke")
print("PSOR vs Lemke:", np.max(np.abs(v - solve_obstacle(pc, tol=1e-12, A=A).v.values.ravel())))
