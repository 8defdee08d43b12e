"""Reference solvers for the linear complementarity problem

    find z >= 0 with w = M z + q >= 0 and z.w = 0.

Used as oracles for the projected SOR obstacle solver.  Both are plain
direct methods meant for small instances (a few hundred unknowns).
"""
from itertools import combinations

import numpy as np


class LCPFailure(RuntimeError):
    pass


def lemke(M, q, max_pivots=None, tol=1e-12):
    """Lemke's complementary pivoting with covering vector e.

    Terminates with a solution for P-matrices (our discretized operators are
    M-matrices).  Ties in the ratio test are broken by smallest index.
    """
    M = np.asarray(M, float)
    q = np.asarray(q, float)
    n = len(q)
    if np.all(q >= 0):
        return np.zeros(n)
    max_pivots = max_pivots or 50 * n
    # tableau columns: w (n), z (n), z0, rhs ; rows: w - M z - e z0 = q
    T = np.zeros((n, 2 * n + 2))
    T[:, :n] = np.eye(n)
    T[:, n:2 * n] = -M
    T[:, 2 * n] = -1.0
    T[:, -1] = q
    basis = list(range(n))  # w basic

    def pivot(r, c):
        T[r] /= T[r, c]
        for i in range(n):
            if i != r and T[i, c] != 0.0:
                T[i] -= T[i, c] * T[r]
        basis[r] = c

    r = int(np.argmin(q))
    pivot(r, 2 * n)
    leaving = r  # index of the w variable that left
    entering = n + leaving  # its complement z_r
    for _ in range(max_pivots):
        col = T[:, entering]
        pos = col > tol
        if not np.any(pos):
            raise LCPFailure("ray termination")
        ratios = np.full(n, np.inf)
        ratios[pos] = T[pos, -1] / col[pos]
        rmin = ratios.min()
        cand = np.nonzero(ratios <= rmin + tol * max(1.0, abs(rmin)))[0]
        # prefer z0 leaving to finish as early as possible
        z0_rows = [i for i in cand if basis[i] == 2 * n]
        r = z0_rows[0] if z0_rows else int(cand[0])
        out = basis[r]
        pivot(r, entering)
        if out == 2 * n:
            z = np.zeros(n)
            for i, b in enumerate(basis):
                if n <= b < 2 * n:
                    z[b - n] = T[i, -1]
            return np.maximum(z, 0.0)
        entering = out + n if out < n else out - n
    raise LCPFailure("pivot limit reached")


def enumerate_lcp(M, q, tol=1e-12):
    """Exhaustive search over active sets; only for n <= 16."""
    M = np.asarray(M, float)
    q = np.asarray(q, float)
    n = len(q)
    if n > 16:
        raise ValueError("enumeration is exponential; use n <= 16")
    idx = np.arange(n)
    for k in range(n + 1):
        for free in combinations(idx, k):
            free = list(free)
            z = np.zeros(n)
            if free:
                try:
                    z[free] = np.linalg.solve(M[np.ix_(free, free)], -q[free])
                except np.linalg.LinAlgError:
                    continue
            w = M @ z + q
            scale = tol * (1 + np.abs(q).max())
            if np.all(z >= -scale) and np.all(w >= -scale):
                return np.maximum(z, 0.0)
    raise LCPFailure("no complementary solution found")


def obstacle_oracle(A, phi, method="lemke"):
    """Solve min(A v, v - phi) = 0 through z = v - phi."""
    phi = np.asarray(phi, float).ravel()
    q = A @ phi
    z = lemke(A, q) if method == "lemke" else enumerate_lcp(A, q)
    return z + phi
