"""Independent reference implementations used as test oracles.

These deliberately avoid the package's production code paths: the basis
oracle uses the textbook divided-difference recursion, the regression
oracles use dense normal equations / pseudo-inverse projectors.
"""

import numpy as np


def naive_basis(knots, order, dim, t):
    """B-spline values at a point by the plain recursive definition.

    0/0 terms are treated as 0; the last nonempty interval is closed so the
    right endpoint evaluates to the final basis function.
    """
    last = knots[-1]

    def b(i, k):
        if k == 0:
            if knots[i] <= t < knots[i + 1]:
                return 1.0
            if t == last and knots[i] < knots[i + 1] == last:
                return 1.0
            return 0.0
        total = 0.0
        den = knots[i + k] - knots[i]
        if den > 0:
            total += (t - knots[i]) / den * b(i, k - 1)
        den = knots[i + k + 1] - knots[i + 1]
        if den > 0:
            total += (knots[i + k + 1] - t) / den * b(i + 1, k - 1)
        return total

    return np.array([b(i, order - 1) for i in range(dim)])


def dense_projector(w):
    """Orthogonal projector onto the column space of w, via pseudo-inverse."""
    return w @ np.linalg.pinv(w)


def normal_equations_sigma_sq(blocks, y):
    """RSS / n via an explicit normal-equations solve on the stacked design."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if not blocks:
        return float(y @ y) / n
    w = np.hstack([b.matrix for b in blocks])
    gram = w.T @ w
    gamma = np.linalg.solve(gram, w.T @ y)
    return float(y @ y - (w.T @ y) @ gamma) / n


def lstsq_sigma_sq(blocks, y):
    """RSS / n via dense lstsq (rank-tolerant reference)."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if not blocks:
        return float(y @ y) / n
    w = np.hstack([b.matrix for b in blocks])
    gamma, *_ = np.linalg.lstsq(w, y, rcond=None)
    resid = y - w @ gamma
    return float(resid @ resid) / n


def random_instance(rng, n=None, p=None, dim=None, order=None, n_initial=0):
    """One random small regression instance for oracle comparisons.

    Returns (dataset-like tuple (t, x, y), basis parameters, initial set).
    """
    n = n if n is not None else int(rng.integers(40, 101))
    p = p if p is not None else int(rng.integers(3, 16))
    order = order if order is not None else int(rng.integers(2, 5))
    dim = dim if dim is not None else int(rng.integers(order, 7))
    t = rng.random(n)
    x = np.column_stack([np.ones(n), rng.standard_normal((n, p))])
    support = rng.choice(np.arange(1, p + 1), size=min(2, p), replace=False)
    y = rng.standard_normal(n)
    for j in support:
        y = y + rng.normal(0.0, 2.0) * x[:, j] * (1.0 + t)
    initial = (0,) + tuple(
        int(v) for v in rng.choice(np.arange(1, p + 1), size=n_initial, replace=False)
    )
    return t, x, y, dim, order, initial
