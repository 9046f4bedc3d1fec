"""Small dense linear algebra: guarded inverses, the scaled block-inverse
expansion with its asymptotic-order harness, and compensated reductions.

Everything here targets matrices of size at most ~12; numpy's batched
routines do the heavy lifting behind the guarded entry points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, SingularMatrixError

COND_LIMIT = 1e12


def kahan_sum(values) -> float:
    """Compensated sum in the given (fixed) order."""
    total = 0.0
    comp = 0.0
    for v in values:
        y = float(v) - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def condition_estimate(m: np.ndarray, m_inv: np.ndarray) -> np.ndarray:
    """Cheap condition estimate ||m||_F * ||m^-1||_F (within a factor of n)."""
    return np.linalg.norm(m, axis=(-2, -1)) * np.linalg.norm(m_inv, axis=(-2, -1))


def invert(m: np.ndarray) -> np.ndarray:
    """Inverse of a well-conditioned symmetric matrix (batched).

    The output is symmetrized so downstream tensor symmetries hold exactly.
    Raises :class:`SingularMatrixError` when the condition estimate exceeds
    1e12.
    """
    m = np.asarray(m, dtype=float)
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"singular matrix: {exc}") from exc
    cond = condition_estimate(m, inv)
    if np.any(~np.isfinite(cond)) or np.any(cond > COND_LIMIT):
        raise SingularMatrixError(
            f"condition estimate {float(np.max(cond)):.3g} exceeds {COND_LIMIT:.0e}"
        )
    return 0.5 * (inv + np.swapaxes(inv, -1, -2))


def det(m: np.ndarray) -> np.ndarray:
    return np.linalg.det(np.asarray(m, dtype=float))


@dataclass(frozen=True)
class BlockInverse:
    full: np.ndarray          # exact inverse of [[eps*A, eps*B], [eps*C, D]]
    upper_left_leading: np.ndarray   # eps^-1 * A^-1
    lower_right_leading: np.ndarray  # D^-1


def lemma_block_inverse(A, B, C, D, eps: float) -> BlockInverse:
    """Exact inverse of ``[[eps*A, eps*B], [eps*C, D]]`` via its closed
    factorization, together with the predicted leading blocks.

    With X = A^-1 B and Y = D^-1 C the inverse is

        [[ eps^-1 K A^-1,  -K X D^-1          ],
         [ -Y K A^-1,      (I + eps Y K X) D^-1 ]],   K = (I - eps X Y)^-1.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    D = np.asarray(D, dtype=float)
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    ka, kd = A.shape[0], D.shape[0]
    if A.shape != (ka, ka) or D.shape != (kd, kd) or B.shape != (ka, kd) or C.shape != (kd, ka):
        raise InputError("inconsistent block shapes")
    try:
        Ainv = np.linalg.inv(A)
        Dinv = np.linalg.inv(D)
        X = Ainv @ B
        Y = Dinv @ C
        K = np.linalg.inv(np.eye(ka) - eps * (X @ Y))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"singular block: {exc}") from exc
    ul = (K @ Ainv) / eps
    ur = -K @ X @ Dinv
    ll = -Y @ K @ Ainv
    lr = (np.eye(kd) + eps * (Y @ (K @ X))) @ Dinv
    full = np.block([[ul, ur], [ll, lr]])
    return BlockInverse(full=full, upper_left_leading=Ainv / eps, lower_right_leading=Dinv)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise InputError("log-log slope needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass(frozen=True)
class BlockExpansionReport:
    """Empirical reading of the O(.) structure of the block-inverse expansion.

    Over a geometric eps grid the deviation of the upper-left block from
    eps^-1 A^-1 and both off-diagonal blocks stay bounded, while the deviation
    of the lower-right block from D^-1 decays with log-log slope ~1.
    """

    eps_grid: tuple[float, ...]
    upper_left_dev: tuple[float, ...]
    off_diag_max: tuple[float, ...]
    lower_right_dev: tuple[float, ...]
    lower_right_slope: float


DEFAULT_EPS_GRID = tuple(2.0**-k for k in range(3, 11))


def block_expansion_report(A, B, C, D, eps_grid=DEFAULT_EPS_GRID) -> BlockExpansionReport:
    ka = np.asarray(A).shape[0]
    ul_dev, od_max, lr_dev = [], [], []
    for eps in eps_grid:
        r = lemma_block_inverse(A, B, C, D, eps)
        ul = r.full[:ka, :ka]
        lr = r.full[ka:, ka:]
        ul_dev.append(float(np.max(np.abs(ul - r.upper_left_leading))))
        od_max.append(
            max(
                float(np.max(np.abs(r.full[:ka, ka:]))),
                float(np.max(np.abs(r.full[ka:, :ka]))),
            )
        )
        lr_dev.append(float(np.max(np.abs(lr - r.lower_right_leading))))
    # Decoupled blocks leave nothing to fit a slope on.
    slope = loglog_slope(eps_grid, lr_dev) if min(lr_dev) > 0.0 else float("nan")
    return BlockExpansionReport(
        eps_grid=tuple(eps_grid),
        upper_left_dev=tuple(ul_dev),
        off_diag_max=tuple(od_max),
        lower_right_dev=tuple(lr_dev),
        lower_right_slope=slope,
    )
