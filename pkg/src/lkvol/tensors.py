"""Christoffel symbols, the Riemann tensor and sectional curvatures.

All functions accept arrays with an optional leading batch axis, so the same
code serves single-point queries and whole quadrature grids.

Conventions (pinned by the calibration tests: the unit round sphere has
sectional curvature +1, and its top/bottom intrinsic volumes come out as
4*pi and 2):

    Gamma_pqr = (d_r g_pq + d_q g_pr - d_p g_qr) / 2
    Gamma^t_pq = g^ts Gamma_spq
    2 R_pqrs = d_q d_r g_ps + d_p d_s g_qr - d_q d_s g_pr - d_p d_r g_qs
               + 2 (Gamma_tqr Gamma^t_ps - Gamma_tqs Gamma^t_pr)
    R^pq_rs = g^pa g^qb R_abrs
    K_pq = R_pqpq / (g_pp g_qq - g_pq^2)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import MetricJet
from .errors import InputError
from .linalg import COND_LIMIT, SingularMatrixError, condition_estimate


@dataclass(frozen=True)
class CurvatureBundle:
    g_inv: np.ndarray          # (..., n, n)
    gamma_lower: np.ndarray    # (..., n, n, n)  Gamma_pqr
    gamma_upper: np.ndarray    # (..., n, n, n)  Gamma^t_pq
    riemann_lower: np.ndarray  # (..., n, n, n, n)  R_pqrs
    riemann_mixed: np.ndarray  # (..., n, n, n, n)  R^pq_rs

    @property
    def dim(self) -> int:
        return self.g_inv.shape[-1]


def inverse_metric(g: np.ndarray) -> np.ndarray:
    try:
        inv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"singular metric: {exc}") from exc
    cond = condition_estimate(g, inv)
    if np.any(~np.isfinite(cond)) or np.any(cond > COND_LIMIT):
        raise SingularMatrixError(
            f"metric condition estimate {float(np.max(cond)):.3g} exceeds {COND_LIMIT:.0e}"
        )
    return 0.5 * (inv + np.swapaxes(inv, -1, -2))


def christoffel(mj: MetricJet, g_inv: np.ndarray | None = None):
    """Both index positions of the Christoffel symbols."""
    dg = mj.dg
    gamma_lower = 0.5 * (
        np.einsum("...rpq->...pqr", dg)
        + np.einsum("...qpr->...pqr", dg)
        - dg
    )
    if g_inv is None:
        g_inv = inverse_metric(mj.g)
    gamma_upper = np.einsum("...ts,...spq->...tpq", g_inv, gamma_lower)
    return gamma_lower, gamma_upper


def riemann(mj: MetricJet) -> np.ndarray:
    """Fully lowered curvature tensor R_pqrs."""
    gamma_lower, gamma_upper = christoffel(mj)
    return _riemann_from_parts(mj.ddg, gamma_lower, gamma_upper)


def _riemann_from_parts(ddg, gamma_lower, gamma_upper):
    second = (
        np.einsum("...qrps->...pqrs", ddg)
        + np.einsum("...psqr->...pqrs", ddg)
        - np.einsum("...qspr->...pqrs", ddg)
        - np.einsum("...prqs->...pqrs", ddg)
    )
    gg = np.einsum("...tqr,...tps->...pqrs", gamma_lower, gamma_upper) - np.einsum(
        "...tqs,...tpr->...pqrs", gamma_lower, gamma_upper
    )
    return 0.5 * second + gg


def raise_indices(riemann_lower: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """R^pq_rs = g^pa g^qb R_abrs."""
    return np.einsum("...pa,...qb,...abrs->...pqrs", g_inv, g_inv, riemann_lower)


def curvature_bundle(mj: MetricJet) -> CurvatureBundle:
    g_inv = inverse_metric(mj.g)
    gamma_lower, gamma_upper = christoffel(mj, g_inv)
    r_lower = _riemann_from_parts(mj.ddg, gamma_lower, gamma_upper)
    r_mixed = raise_indices(r_lower, g_inv)
    return CurvatureBundle(
        g_inv=g_inv,
        gamma_lower=gamma_lower,
        gamma_upper=gamma_upper,
        riemann_lower=r_lower,
        riemann_mixed=r_mixed,
    )


def sectional(bundle: CurvatureBundle, g: np.ndarray, p: int, q: int) -> np.ndarray:
    """Sectional curvature of the coordinate (p, q) plane."""
    if p == q:
        raise InputError("sectional curvature needs two distinct coordinates")
    r = bundle.riemann_lower[..., p, q, p, q]
    denom = g[..., p, p] * g[..., q, q] - g[..., p, q] ** 2
    return r / denom


@dataclass(frozen=True)
class SymmetryReport:
    """Largest violations of the curvature tensor identities, relative to the
    largest tensor entry."""

    antisym_first_pair: float
    antisym_second_pair: float
    pair_exchange: float
    first_bianchi: float

    @property
    def max_violation(self) -> float:
        return max(
            self.antisym_first_pair,
            self.antisym_second_pair,
            self.pair_exchange,
            self.first_bianchi,
        )


def symmetry_report(riemann_lower: np.ndarray) -> SymmetryReport:
    r = riemann_lower
    scale = float(np.max(np.abs(r)))
    if scale == 0.0:
        return SymmetryReport(0.0, 0.0, 0.0, 0.0)

    def rel_max(a):
        return float(np.max(np.abs(a))) / scale

    return SymmetryReport(
        antisym_first_pair=rel_max(r + np.einsum("...qprs->...pqrs", r)),
        antisym_second_pair=rel_max(r + np.einsum("...pqsr->...pqrs", r)),
        pair_exchange=rel_max(r - np.einsum("...rspq->...pqrs", r)),
        first_bianchi=rel_max(
            r + np.einsum("...prsq->...pqrs", r) + np.einsum("...psqr->...pqrs", r)
        ),
    )
