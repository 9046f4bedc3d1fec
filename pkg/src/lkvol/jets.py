"""Truncated second-order Taylor (2-jet) arithmetic.

A :class:`Taylor2` carries ``(a0, a1, a2)`` where, for a scalar field f
evaluated along the ray ``x + t v``,

    f(x + t v) = a0 + a1 t + a2 t^2 + O(t^3),

so ``a1`` is the directional derivative and ``2 a2`` the second directional
derivative.  Coefficients are numpy arrays (or scalars) and broadcast, which
makes evaluation over a whole batch of points one pass of array arithmetic.

Full gradients and Hessians are reconstructed from n(n+1)/2 directional
passes: the n unit directions give the gradient and the Hessian diagonal, and
the mixed directions ``e_c + e_d`` give the off-diagonal entries by
polarization.  Derivatives are exact to rounding; finite differences appear
only in test oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .expr import BinOp, Call, Expr, Neg, Num, Pi, Var, max_var, to_source


class Taylor2:
    __slots__ = ("a0", "a1", "a2")

    def __init__(self, a0, a1=0.0, a2=0.0):
        self.a0 = a0
        self.a1 = a1
        self.a2 = a2

    def __add__(self, other):
        if isinstance(other, Taylor2):
            return Taylor2(self.a0 + other.a0, self.a1 + other.a1, self.a2 + other.a2)
        return Taylor2(self.a0 + other, self.a1, self.a2)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Taylor2):
            return Taylor2(self.a0 - other.a0, self.a1 - other.a1, self.a2 - other.a2)
        return Taylor2(self.a0 - other, self.a1, self.a2)

    def __rsub__(self, other):
        return Taylor2(other - self.a0, -self.a1, -self.a2)

    def __neg__(self):
        return Taylor2(-self.a0, -self.a1, -self.a2)

    def __mul__(self, other):
        if isinstance(other, Taylor2):
            return Taylor2(
                self.a0 * other.a0,
                self.a0 * other.a1 + self.a1 * other.a0,
                self.a0 * other.a2 + self.a1 * other.a1 + self.a2 * other.a0,
            )
        return Taylor2(self.a0 * other, self.a1 * other, self.a2 * other)

    __rmul__ = __mul__

    def reciprocal(self):
        i0 = 1.0 / self.a0
        i1 = -self.a1 * i0 * i0
        i2 = (self.a1 * self.a1 * i0 - self.a2) * i0 * i0
        return Taylor2(i0, i1, i2)

    def __truediv__(self, other):
        if isinstance(other, Taylor2):
            return self * other.reciprocal()
        return Taylor2(self.a0 / other, self.a1 / other, self.a2 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other


def _chain(u: Taylor2, f0, f1, f2) -> Taylor2:
    """Compose an elementary function with value/first/second derivative arrays."""
    return Taylor2(f0, f1 * u.a1, f1 * u.a2 + 0.5 * f2 * u.a1 * u.a1)


def _guard(cond, expr: Expr, what: str) -> None:
    if np.any(cond):
        raise DomainError(f"{what} in {to_source(expr)!r}")


def _ipow(u: Taylor2, k: int, expr: Expr) -> Taylor2:
    if k == 0:
        return Taylor2(np.ones_like(np.asarray(u.a0, dtype=float)))
    if k < 0:
        _guard(np.asarray(u.a0) == 0.0, expr, "zero base with negative exponent")
        return _ipow(u.reciprocal(), -k, expr)
    result = u
    for _ in range(k - 1):
        result = result * u
    return result


def const_value(e: Expr) -> float | None:
    """Value of a variable-free subtree, or None if it references a variable."""
    if max_var(e) >= 0:
        return None
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Pi):
        return math.pi
    if isinstance(e, Neg):
        return -const_value(e.arg)
    if isinstance(e, Call):
        v = const_value(e.arg)
        return float(getattr(math, e.func)(v))
    if isinstance(e, BinOp):
        a, b = const_value(e.left), const_value(e.right)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return a / b
        return float(a**b)
    raise TypeError(f"not an expression node: {e!r}")


def eval_taylor2(e: Expr, coords: list[Taylor2]) -> Taylor2:
    """Evaluate ``e`` in 2-jet arithmetic; ``coords[i]`` seeds variable xi."""
    if isinstance(e, Num):
        return Taylor2(e.value)
    if isinstance(e, Pi):
        return Taylor2(math.pi)
    if isinstance(e, Var):
        return coords[e.index]
    if isinstance(e, Neg):
        return -eval_taylor2(e.arg, coords)
    if isinstance(e, BinOp):
        if e.op == "^":
            return _eval_pow(e, coords)
        a = eval_taylor2(e.left, coords)
        b = eval_taylor2(e.right, coords)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        _guard(np.asarray(b.a0) == 0.0, e, "division by zero")
        return a / b
    if isinstance(e, Call):
        u = eval_taylor2(e.arg, coords)
        v = np.asarray(u.a0, dtype=float)
        if e.func == "sin":
            s, c = np.sin(v), np.cos(v)
            return _chain(u, s, c, -s)
        if e.func == "cos":
            s, c = np.sin(v), np.cos(v)
            return _chain(u, c, -s, -c)
        if e.func == "tan":
            c = np.cos(v)
            _guard(np.abs(c) < 1e-12, e, "tangent pole")
            t = np.tan(v)
            sec2 = 1.0 + t * t
            return _chain(u, t, sec2, 2.0 * t * sec2)
        if e.func == "exp":
            w = np.exp(v)
            return _chain(u, w, w, w)
        if e.func == "log":
            _guard(v <= 0.0, e, "log of non-positive value")
            return _chain(u, np.log(v), 1.0 / v, -1.0 / (v * v))
        if e.func == "sqrt":
            _guard(v <= 0.0, e, "sqrt of non-positive value")
            w = np.sqrt(v)
            return _chain(u, w, 0.5 / w, -0.25 / (w * v))
    raise TypeError(f"not an expression node: {e!r}")


def _eval_pow(e: BinOp, coords: list[Taylor2]) -> Taylor2:
    base = eval_taylor2(e.left, coords)
    k = const_value(e.right)
    if k is not None and abs(k - round(k)) < 1e-12:
        return _ipow(base, int(round(k)), e)
    # Non-integer exponent: a^b = exp(b * log a) with a > 0.
    _guard(np.asarray(base.a0) <= 0.0, e, "non-integer power of non-positive base")
    expo = eval_taylor2(e.right, coords)
    v = np.asarray(base.a0, dtype=float)
    logs = _chain(base, np.log(v), 1.0 / v, -1.0 / (v * v))
    prod = expo * logs
    w = np.exp(np.asarray(prod.a0, dtype=float))
    return _chain(prod, w, w, w)


def eval_values(e: Expr, points: np.ndarray) -> np.ndarray:
    """Plain (derivative-free) evaluation over a batch of points (P, n)."""
    if isinstance(e, Num):
        return np.full(points.shape[0], e.value)
    if isinstance(e, Pi):
        return np.full(points.shape[0], math.pi)
    if isinstance(e, Var):
        return points[:, e.index]
    if isinstance(e, Neg):
        return -eval_values(e.arg, points)
    if isinstance(e, BinOp):
        a = eval_values(e.left, points)
        if e.op == "^":
            k = const_value(e.right)
            if k is not None and abs(k - round(k)) < 1e-12:
                ik = int(round(k))
                if ik < 0:
                    _guard(a == 0.0, e, "zero base with negative exponent")
                return a ** float(ik)
            _guard(a <= 0.0, e, "non-integer power of non-positive base")
            return a ** eval_values(e.right, points)
        b = eval_values(e.right, points)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        _guard(b == 0.0, e, "division by zero")
        return a / b
    if isinstance(e, Call):
        u = eval_values(e.arg, points)
        if e.func == "tan":
            _guard(np.abs(np.cos(u)) < 1e-12, e, "tangent pole")
        elif e.func == "log":
            _guard(u <= 0.0, e, "log of non-positive value")
        elif e.func == "sqrt":
            _guard(u < 0.0, e, "sqrt of negative value")
        return getattr(np, e.func)(u)
    raise TypeError(f"not an expression node: {e!r}")


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and (exactly symmetric) Hessian at one point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def directions(n: int) -> list[np.ndarray]:
    """The n unit directions followed by the n(n-1)/2 mixed ones ``e_c + e_d``."""
    out = [np.eye(n)[d] for d in range(n)]
    for d in range(n):
        for c in range(d):
            v = np.zeros(n)
            v[c] = 1.0
            v[d] = 1.0
            out.append(v)
    return out


def eval_jets_batch(exprs: list[Expr], dim: int, points: np.ndarray):
    """Evaluate several expressions with full jets over a point batch.

    Returns ``(values (E, P), grads (E, P, n), hessians (E, P, n, n))``.
    """
    points = np.asarray(points, dtype=float)
    n_pts = points.shape[0]
    n_exprs = len(exprs)
    values = np.zeros((n_exprs, n_pts))
    grads = np.zeros((n_exprs, n_pts, dim))
    hess = np.zeros((n_exprs, n_pts, dim, dim))

    def run(v: np.ndarray):
        coords = [Taylor2(points[:, i], float(v[i])) for i in range(dim)]
        return [eval_taylor2(e, coords) for e in exprs]

    for d in range(dim):
        v = np.zeros(dim)
        v[d] = 1.0
        for k, t in enumerate(run(v)):
            if d == 0:
                values[k] = np.broadcast_to(t.a0, (n_pts,))
            grads[k, :, d] = np.broadcast_to(t.a1, (n_pts,))
            hess[k, :, d, d] = 2.0 * np.broadcast_to(t.a2, (n_pts,))
    for d in range(dim):
        for c in range(d):
            v = np.zeros(dim)
            v[c] = 1.0
            v[d] = 1.0
            for k, t in enumerate(run(v)):
                a2 = np.broadcast_to(t.a2, (n_pts,))
                off = a2 - 0.5 * (hess[k, :, c, c] + hess[k, :, d, d])
                hess[k, :, c, d] = off
                hess[k, :, d, c] = off
    return values, grads, hess


def eval_jet2(e: Expr, point) -> Jet2:
    """Value, gradient and Hessian of one expression at one point."""
    point = np.asarray(point, dtype=float)
    values, grads, hess = eval_jets_batch([e], point.shape[0], point[None, :])
    return Jet2(float(values[0, 0]), grads[0, 0].copy(), hess[0, 0].copy())
