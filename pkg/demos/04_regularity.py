"""Regularity probes: Hölder exponents, d^s expansions and quotients."""
import numpy as np

from freebnd import (DiskTorsion, Domain, Grid, Polynomial, PositivePower, Product, RadialPower, Sum,
                     build_regularized_distance, d_power, estimate_holder, fit_ds_expansion,
                     quotient_regularity, verify_expansion_decay)

# Hölder exponent of |x|^g from dyadic differences
for gm in (0.3, 0.5, 0.8):
    e = estimate_holder(RadialPower(1, power=gm), ([-1.0], [1.0]), 1, 6)
    print(f"|x|^{gm}: estimated exponent {e.exponent:.4f}")

# d^s (1 + x1) plus a |x - z|^2.3 perturbation: the best degree 1 expansion at z
# should leave a residual shrinking like r^2.3
z = np.array([1.0, 0.0])
dform = DiskTorsion()
model = Product([PositivePower(dform, 0.5), Polynomial(2, terms=[[[0, 0], 1.0], [[1, 0], 1.0]])])
u = Sum([model, RadialPower(2, power=2.3, center=z)])
exps = []
for r in 2.0 ** -np.arange(2, 7):
    exps.append(fit_ds_expansion(u, dform, 0.5, z, r, 1, grid=Grid.covering(z - r, z + r, r / 64)))
fit = verify_expansion_decay(exps)
print(f"expansion residual decay {fit.fitted_decay:.3f} (r2 {fit.r2:.5f})")

# quotient of two functions comparable to d^s
g = Grid.covering([-1.1, -1.1], [1.1, 1.1], 1 / 32)
d = build_regularized_distance(Domain.disk(), g)
u2 = d_power(d, 0.5)
fac = np.exp(g.nodes()[:, 0].reshape(g.shape))
e = quotient_regularity(u2.with_values(u2.values * fac), u2, d, 0.5, 0.1, [[0.25, -0.5], [1.0, 0.5]], 2)
print("quotient exponent:", e.exponent, "saturated:", e.saturated)
