"""Shared test utilities: finite-difference oracles and random generators.

Finite differences live here, and only here; the library itself differentiates
through jet arithmetic, so these provide an independent check of it.
"""

from __future__ import annotations

import numpy as np

from lkvol.charts import MetricJet
from lkvol.expr import BinOp, Call, Expr, Neg, Num, Pi, Var
from lkvol.jets import eval_values


def eval_scalar(e: Expr, point) -> float:
    return float(eval_values(e, np.asarray(point, dtype=float)[None, :])[0])


def fd_gradient(f, x, h=1e-4):
    """Central differences with one Richardson step (O(h^4))."""
    x = np.asarray(x, dtype=float)
    n = x.size

    def central(step):
        g = np.zeros(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = step
            g[i] = (f(x + e) - f(x - e)) / (2 * step)
        return g

    return (4.0 * central(h / 2) - central(h)) / 3.0


def fd_hessian(f, x, h=1e-3):
    x = np.asarray(x, dtype=float)
    n = x.size

    def central(step):
        hess = np.zeros((n, n))
        f0 = f(x)
        for i in range(n):
            ei = np.zeros(n)
            ei[i] = step
            hess[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / step**2
            for j in range(i):
                ej = np.zeros(n)
                ej[j] = step
                hess[i, j] = hess[j, i] = (
                    f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
                ) / (4 * step**2)
        return hess

    return (4.0 * central(h / 2) - central(h)) / 3.0


def fd_metric_jet(g_func, x, h=1e-3) -> MetricJet:
    """MetricJet via finite differences on a matrix-valued callable."""
    x = np.asarray(x, dtype=float)
    n = x.size
    g = g_func(x)
    dg = np.zeros((n, n, n))
    ddg = np.zeros((n, n, n, n))
    for p in range(n):
        for q in range(n):
            def entry(y, p=p, q=q):
                return g_func(y)[p, q]

            grad_pq = fd_gradient(entry, x, h)
            hess_pq = fd_hessian(entry, x, h)
            dg[:, p, q] = grad_pq
            ddg[:, :, p, q] = hess_pq
    return MetricJet(g, dg, ddg)


def random_expr(rng: np.random.Generator, dim: int, depth: int) -> Expr:
    """Random expression tree of depth at most ``depth``."""
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.45:
            return Var(int(rng.integers(dim)))
        if r < 0.9:
            return Num(round(float(rng.uniform(0.1, 2.5)), 3))
        return Pi()
    r = rng.random()
    if r < 0.55:
        op = rng.choice(["+", "-", "*", "/"])
        return BinOp(str(op), random_expr(rng, dim, depth - 1), random_expr(rng, dim, depth - 1))
    if r < 0.68:
        return BinOp("^", random_expr(rng, dim, depth - 1), Num(float(rng.integers(2, 4))))
    if r < 0.78:
        return Neg(random_expr(rng, dim, depth - 1))
    func = rng.choice(["sin", "cos", "tan", "exp", "log", "sqrt"])
    return Call(str(func), random_expr(rng, dim, depth - 1))


def random_spd(rng: np.random.Generator, n: int, eig_lo=0.5, eig_hi=2.0) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return (q * rng.uniform(eig_lo, eig_hi, size=n)) @ q.T


def random_metric_jet(rng: np.random.Generator, n: int, scale=0.3, batch=None) -> MetricJet:
    """Random positive-definite metric jet with all storage symmetries."""
    shape = () if batch is None else (batch,)
    g = np.empty(shape + (n, n))
    for idx in np.ndindex(shape or (1,)):
        m = random_spd(rng, n)
        if batch is None:
            g = m
        else:
            g[idx] = m
    dg = rng.normal(0.0, scale, size=shape + (n, n, n))
    dg = 0.5 * (dg + np.swapaxes(dg, -1, -2))
    ddg = rng.normal(0.0, scale, size=shape + (n, n, n, n))
    ddg = 0.5 * (ddg + np.swapaxes(ddg, -1, -2))
    ddg = 0.5 * (ddg + np.swapaxes(ddg, -3, -4))
    return MetricJet(g, dg, ddg)


def rel_diff(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-30)
    return float(np.max(np.abs(a - b))) / scale
