"""Riemannian submersions in product charts and their fiber-collapse behavior.

The total space is a single product chart whose coordinates split into fiber
and base indices; the projection drops the fiber coordinates.  The scaled
metric multiplies the metric by eps on vertical vectors (tangent to fibers),
keeps it on horizontal vectors (the g-orthogonal complement), and keeps the
two subspaces orthogonal.  Writing P for the pointwise vertical projector
this is

    g(eps) = g - (1 - eps) * P^T g P,

which in block form (A fiber-fiber, B fiber-base, D base-base) reads

    fiber-fiber: eps * A      fiber-base: eps * B
    base-base:   D - (1 - eps) * B^T A^-1 B.

Because the projector depends on position, the derivatives of g(eps) are
obtained by running the same construction inside truncated Taylor
arithmetic.  A "naive" variant that scales the coordinate blocks literally
(leaving the base-base block untouched) is kept purely for A/B comparison;
the two coincide whenever the mixed block vanishes.  The scaled volume form
satisfies det g(eps) = eps^N det g exactly, by the Schur complement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .charts import (
    Chart,
    MetricJet,
    assemble_jets,
    chart_from_dict,
    chart_to_dict,
    metric_jet,
    metric_series,
    metric_values,
    restrict_chart,
)
from .errors import ChartError, ConvergenceError, InputError, SubmersionInvalidError
from .linalg import loglog_slope
from .tensors import curvature_bundle
from .weyl import intrinsic_volume, lk_integrand, lk_spec

DEFAULT_EPS_SCHEDULE = tuple(2.0**-k for k in range(2, 10))
VALIDATION_TOLERANCE = 1e-8
SLOPE_FLOOR = 1e-10


@dataclass(frozen=True)
class BlockSplit:
    fiber_dims: tuple[int, ...]
    base_dims: tuple[int, ...]

    def __post_init__(self):
        f, b = set(self.fiber_dims), set(self.base_dims)
        n = len(self.fiber_dims) + len(self.base_dims)
        if not self.fiber_dims or not self.base_dims:
            raise ChartError("both fiber and base need at least one coordinate")
        if f & b or f | b != set(range(n)):
            raise ChartError("fiber and base coordinates must partition 0..n-1")


@dataclass(frozen=True)
class SubmersionChart:
    total: Chart
    base: Chart
    split: BlockSplit

    def __post_init__(self):
        fd, bd = self.split.fiber_dims, self.split.base_dims
        if self.total.dim != len(fd) + len(bd):
            raise ChartError("split does not cover the total chart dimension")
        if self.base.dim != len(bd):
            raise ChartError("base chart dimension must match the base coordinate count")
        for k, d in enumerate(bd):
            if self.total.domain[d] != self.base.domain[k] or (
                self.total.periodic[d] != self.base.periodic[k]
            ):
                raise ChartError(
                    f"total-chart coordinate x{d} and base coordinate x{k} "
                    "must share domain and periodicity"
                )

    @property
    def fiber_dims(self) -> tuple[int, ...]:
        return self.split.fiber_dims

    @property
    def base_dims(self) -> tuple[int, ...]:
        return self.split.base_dims

    @property
    def fiber_dim(self) -> int:
        return len(self.split.fiber_dims)

    def project(self, points: np.ndarray) -> np.ndarray:
        """Coordinates of the base point under the projection."""
        return np.asarray(points)[..., list(self.split.base_dims)]

    def fiber_chart(self, base_point) -> Chart:
        base_point = np.asarray(base_point, dtype=float)
        fixed = {d: float(base_point[k]) for k, d in enumerate(self.split.base_dims)}
        return restrict_chart(self.total, fixed, list(self.split.fiber_dims))


def submersion_from_dict(data: dict) -> SubmersionChart:
    try:
        total = chart_from_dict(data["total_chart"])
        base = chart_from_dict(data["base_chart"])
        split = BlockSplit(
            fiber_dims=tuple(int(i) for i in data["fiber_dims"]),
            base_dims=tuple(int(i) for i in data["base_dims"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ChartError(f"malformed submersion data: {exc}") from exc
    return SubmersionChart(total=total, base=base, split=split)


def submersion_to_dict(sc: SubmersionChart) -> dict:
    return {
        "total_chart": chart_to_dict(sc.total),
        "base_chart": chart_to_dict(sc.base),
        "fiber_dims": list(sc.fiber_dims),
        "base_dims": list(sc.base_dims),
    }


# ---------------------------------------------------------------------------
# Truncated-series matrix algebra: arrays of shape (3, ..., k, k) holding the
# coefficients of M0 + M1 t + M2 t^2.

def _series_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack(
        (
            a[0] @ b[0],
            a[0] @ b[1] + a[1] @ b[0],
            a[0] @ b[2] + a[1] @ b[1] + a[2] @ b[0],
        )
    )


def _series_inv(a: np.ndarray) -> np.ndarray:
    i0 = np.linalg.inv(a[0])
    i1 = -i0 @ a[1] @ i0
    i2 = -(i0 @ a[2] + i1 @ a[1]) @ i0
    return np.stack((i0, i1, i2))


def _series_transpose(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


def _scale_series(
    series: np.ndarray, eps: float, fiber: np.ndarray, base: np.ndarray, naive: bool
) -> np.ndarray:
    if eps == 1.0:
        return series
    A = series[:, :, fiber[:, None], fiber[None, :]]
    B = series[:, :, fiber[:, None], base[None, :]]
    D = series[:, :, base[:, None], base[None, :]]
    out = np.empty_like(series)
    out[:, :, fiber[:, None], fiber[None, :]] = eps * A
    out[:, :, fiber[:, None], base[None, :]] = eps * B
    out[:, :, base[:, None], fiber[None, :]] = eps * _series_transpose(B)
    if naive:
        out[:, :, base[:, None], base[None, :]] = D
    else:
        correction = _series_matmul(_series_matmul(_series_transpose(B), _series_inv(A)), B)
        out[:, :, base[:, None], base[None, :]] = D - (1.0 - eps) * correction
    return out


def scale_metric_batch(
    sc: SubmersionChart, points: np.ndarray, eps: float, naive: bool = False
) -> MetricJet:
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    points = np.asarray(points, dtype=float)
    fiber = np.array(sc.fiber_dims)
    base = np.array(sc.base_dims)

    def series_fn(direction):
        s = metric_series(sc.total, points, direction)
        return _scale_series(s, eps, fiber, base, naive)

    return assemble_jets(series_fn, sc.total.dim, points.shape[0])


def scale_metric(sc: SubmersionChart, point, eps: float) -> MetricJet:
    """Jet of the fiber-scaled metric at one point (intrinsic construction)."""
    point = np.asarray(point, dtype=float)
    mj = scale_metric_batch(sc, point[None, :], eps)
    return MetricJet(mj.g[0], mj.dg[0], mj.ddg[0])


def scale_metric_naive(sc: SubmersionChart, point, eps: float) -> MetricJet:
    """Literal block scaling (base-base block untouched); comparison only."""
    point = np.asarray(point, dtype=float)
    mj = scale_metric_batch(sc, point[None, :], eps, naive=True)
    return MetricJet(mj.g[0], mj.dg[0], mj.ddg[0])


# ---------------------------------------------------------------------------
# Horizontal lift and validation.

@dataclass(frozen=True)
class HorizontalLift:
    h: np.ndarray   # (N, b) coefficients of the fiber components
    xi: np.ndarray  # (n, b) lifted vectors in the chart basis


def horizontal_lift(sc: SubmersionChart, point) -> HorizontalLift:
    """The unique horizontal vectors projecting onto the base directions.

    In coordinates xi_alpha = d_alpha - g_{alpha j} gtilde^{ji} d_i, i.e. the
    fiber components are h = -(A^-1 B) for fiber block A and mixed block B.
    """
    point = np.asarray(point, dtype=float)
    g = metric_values(sc.total, point[None, :])[0]
    fiber = list(sc.fiber_dims)
    base = list(sc.base_dims)
    A = g[np.ix_(fiber, fiber)]
    B = g[np.ix_(fiber, base)]
    h = -np.linalg.solve(A, B)
    xi = np.zeros((sc.total.dim, len(base)))
    for col, d in enumerate(base):
        xi[d, col] = 1.0
    for row, d in enumerate(fiber):
        xi[d, :] = h[row, :]
    return HorizontalLift(h=h, xi=xi)


def sample_grid(chart: Chart, count: int, even_periodic: bool = False) -> np.ndarray:
    """Deterministic interior sample points: offset nodes on non-periodic axes
    (avoiding endpoint singularities), aligned nodes on periodic axes."""
    n = chart.dim
    per_axis = max(2, math.ceil(count ** (1.0 / n)))
    axes = []
    for (a, b), per in zip(chart.domain, chart.periodic):
        m = per_axis
        if per and even_periodic and m % 2:
            m += 1
        if per:
            axes.append(a + (b - a) * np.arange(m) / m)
        else:
            axes.append(a + (b - a) * (np.arange(m) + 0.5) / m)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=-1)


@dataclass(frozen=True)
class ValidationReport:
    max_residual: float
    tolerance: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def validate(sc: SubmersionChart, sample_count: int = 200) -> ValidationReport:
    """Check the projection is a Riemannian submersion onto the base chart.

    The inner products of the horizontal lifts must reproduce the base metric
    at the projected point; for the block metric this is the Schur complement
    D - B^T A^-1 B, so the check also exercises the statement that the base
    metric pulls back to the horizontal block.
    """
    pts = sample_grid(sc.total, sample_count)
    g = metric_values(sc.total, pts)
    fiber = list(sc.fiber_dims)
    base = list(sc.base_dims)
    A = g[:, fiber][:, :, fiber]
    B = g[:, fiber][:, :, base]
    D = g[:, base][:, :, base]
    schur = D - np.swapaxes(B, -1, -2) @ np.linalg.solve(A, B)
    g_base = metric_values(sc.base, sc.project(pts))
    residual = float(np.max(np.abs(schur - g_base)))
    return ValidationReport(
        max_residual=residual, tolerance=VALIDATION_TOLERANCE, samples=pts.shape[0]
    )


def ensure_valid(sc: SubmersionChart) -> None:
    report = validate(sc, sample_count=128)
    if not report.passed:
        raise SubmersionInvalidError(
            f"not a Riemannian submersion onto the declared base: residual "
            f"{report.max_residual:.3g} exceeds {report.tolerance:.0e}"
        )


def volume_scaling_check(sc: SubmersionChart, eps: float, sample_count: int = 200) -> float:
    """Max relative deviation of det g(eps) / det g from eps^N."""
    pts = sample_grid(sc.total, sample_count)
    g = metric_values(sc.total, pts)
    g_eps = scale_metric_batch(sc, pts, eps).g
    ratio = np.linalg.det(g_eps) / np.linalg.det(g)
    expected = eps**sc.fiber_dim
    return float(np.max(np.abs(ratio - expected) / expected))


# ---------------------------------------------------------------------------
# Fiber Euler characteristic and the collapse sweep.

def fiber_euler(sc: SubmersionChart, base_point=None, *, workers: int = 1) -> int:
    """Euler characteristic of one fiber (0 immediately in odd dimensions)."""
    if sc.fiber_dim % 2 != 0:
        return 0
    if base_point is None:
        base_point = [0.5 * (a + b) for a, b in sc.base.domain]
    chart = sc.fiber_chart(base_point)
    value, _ = intrinsic_volume(chart, 0, workers=workers)
    nearest = round(value)
    if abs(value - nearest) > 0.1:
        raise ConvergenceError(
            f"fiber Euler characteristic {value:.6f} is not close to an integer; "
            "atlas or quadrature defect"
        )
    return int(nearest)


def richardson_limit(eps_list, values) -> float:
    """First-order Richardson extrapolation from the last two sweep points."""
    e1, e2 = eps_list[-2], eps_list[-1]
    v1, v2 = values[-2], values[-1]
    return (e1 * v2 - e2 * v1) / (e1 - e2)


def difference_slope(eps_list, values, floor: float = SLOPE_FLOOR):
    """Log-log slope of successive differences, or None below the floor."""
    diffs = [abs(values[k] - values[k + 1]) for k in range(len(values) - 1)]
    xs = [eps_list[k] for k in range(len(diffs)) if diffs[k] > floor]
    ds = [d for d in diffs if d > floor]
    if len(ds) < 2:
        return None
    return loglog_slope(xs, ds)


@dataclass(frozen=True)
class SweepRecord:
    i: int
    eps_list: tuple[float, ...]
    values: tuple[float, ...]
    extrapolated_limit: float
    target: float
    slope: float | None
    fiber_chi: int
    base_volume_i: float

    @property
    def passed(self) -> bool:
        tol = max(1e-3, 1e-2 * abs(self.target))
        return abs(self.extrapolated_limit - self.target) <= tol


def _check_schedule(eps_schedule) -> tuple[float, ...]:
    eps = tuple(float(e) for e in (eps_schedule or DEFAULT_EPS_SCHEDULE))
    if len(eps) < 2:
        raise InputError("need at least two eps values")
    if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise InputError("eps schedule must be strictly decreasing")
    if any(e <= 0 for e in eps):
        raise InputError("eps values must be positive")
    return eps


def collapse_value(
    sc: SubmersionChart, i: int, eps: float, *, workers: int = 1, max_nodes=None
) -> float:
    """V_i of the collapsed metric, integrating against the unscaled volume
    form with the exact eps^(N/2) density factor."""
    n = sc.total.dim
    e = n - i
    if e % 2 != 0:
        return 0.0
    spec = lk_spec(n, e)
    factor = spec.normalization * eps ** (sc.fiber_dim / 2.0)

    def field(chart, points):
        bundle = curvature_bundle(scale_metric_batch(sc, points, eps))
        return factor * lk_integrand(bundle, spec)

    value, _ = quadrature.integrate(
        sc.total, field if e > 0 else None, workers=workers, max_nodes=max_nodes
    )
    if e == 0:
        value *= factor
    return value


def collapse_sweep(
    sc: SubmersionChart,
    i: int,
    eps_schedule=None,
    *,
    workers: int = 1,
    max_nodes=None,
) -> SweepRecord:
    """V_i(M(eps)) along a decreasing eps schedule, with the extrapolated
    limit and its predicted value chi(fiber) * V_i(base)."""
    ensure_valid(sc)
    eps_list = _check_schedule(eps_schedule)
    n = sc.total.dim
    if not 0 <= i <= n:
        raise InputError(f"index {i} out of range for dimension {n}")
    chi = fiber_euler(sc, workers=workers)
    base_vi, _ = intrinsic_volume(sc.base, i, workers=workers) if i <= sc.base.dim else (0.0, 0.0)
    target = chi * base_vi
    if (n - i) % 2 != 0:
        values = tuple(0.0 for _ in eps_list)
        return SweepRecord(
            i=i,
            eps_list=eps_list,
            values=values,
            extrapolated_limit=0.0,
            target=target,
            slope=None,
            fiber_chi=chi,
            base_volume_i=base_vi,
        )
    values = tuple(
        collapse_value(sc, i, eps, workers=workers, max_nodes=max_nodes) for eps in eps_list
    )
    return SweepRecord(
        i=i,
        eps_list=eps_list,
        values=values,
        extrapolated_limit=richardson_limit(eps_list, values),
        target=target,
        slope=difference_slope(eps_list, values),
        fiber_chi=chi,
        base_volume_i=base_vi,
    )


# ---------------------------------------------------------------------------
# Collapsed-curvature checks.

@dataclass(frozen=True)
class CurvatureLimitReport:
    point: tuple[float, ...]
    eps_list: tuple[float, ...]
    base_dev: tuple[float, ...]
    fiber_dev: tuple[float, ...]
    base_slope: float | None
    fiber_slope: float | None

    def slopes_ok(self, target: float = 1.0, tol: float = 0.2) -> bool:
        """Each deviation either sits below the noise floor or decays with
        the expected first-order slope."""
        for dev, slope in ((self.base_dev, self.base_slope), (self.fiber_dev, self.fiber_slope)):
            if max(dev) <= SLOPE_FLOOR:
                continue
            if slope is None or abs(slope - target) > tol:
                return False
        return True


def curvature_limit_check(
    sc: SubmersionChart, point, eps_schedule=None
) -> CurvatureLimitReport:
    """Deviation of the collapsed curvature from the base and fiber tensors.

    Tracks max |R^{ab}_{cd}(eps) - Rhat| over base indices and
    max |eps R^{mn}_{kl}(eps) - Rtilde| over fiber indices per eps, with
    fitted decay slopes.
    """
    ensure_valid(sc)
    eps_list = _check_schedule(eps_schedule)
    point = np.asarray(point, dtype=float)
    fiber = list(sc.fiber_dims)
    base = list(sc.base_dims)

    base_pt = point[base]
    base_bundle = curvature_bundle(metric_jet(sc.base, base_pt))
    r_base = base_bundle.riemann_mixed

    fiber_chart = sc.fiber_chart(base_pt)
    fiber_bundle = curvature_bundle(metric_jet(fiber_chart, point[fiber]))
    r_fiber = fiber_bundle.riemann_mixed

    base_dev = []
    fiber_dev = []
    for eps in eps_list:
        bundle = curvature_bundle(scale_metric_batch(sc, point[None, :], eps))
        rm = bundle.riemann_mixed[0]
        rb = rm[np.ix_(base, base, base, base)]
        rf = rm[np.ix_(fiber, fiber, fiber, fiber)]
        base_dev.append(float(np.max(np.abs(rb - r_base))))
        fiber_dev.append(float(np.max(np.abs(eps * rf - r_fiber))))
    return CurvatureLimitReport(
        point=tuple(point),
        eps_list=eps_list,
        base_dev=tuple(base_dev),
        fiber_dev=tuple(fiber_dev),
        base_slope=difference_slope_direct(eps_list, base_dev),
        fiber_slope=difference_slope_direct(eps_list, fiber_dev),
    )


def difference_slope_direct(eps_list, deviations, floor: float = SLOPE_FLOOR):
    """Log-log slope of deviations that are already decaying quantities."""
    xs = [e for e, d in zip(eps_list, deviations) if d > floor]
    ds = [d for d in deviations if d > floor]
    if len(ds) < 2:
        return None
    return loglog_slope(xs, ds)


def scaled_integrand_sup(
    sc: SubmersionChart, e: int, eps_schedule=None, sample_count: int = 200
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Sup over sample points of |eps^(N/2) * coupling sum of g(eps)| per eps;
    boundedness of this quantity is what makes the collapse limits finite."""
    ensure_valid(sc)
    eps_list = _check_schedule(eps_schedule)
    spec = lk_spec(sc.total.dim, e)
    pts = sample_grid(sc.total, sample_count)
    sups = []
    for eps in eps_list:
        bundle = curvature_bundle(scale_metric_batch(sc, pts, eps))
        vals = eps ** (sc.fiber_dim / 2.0) * lk_integrand(bundle, spec)
        sups.append(float(np.max(np.abs(vals))))
    return eps_list, tuple(sups)


# ---------------------------------------------------------------------------
# Sectional-curvature sweep.

CLASS_NAMES = ("base_base", "base_fiber", "fiber_fiber")


@dataclass(frozen=True)
class SectionalSweepReport:
    eps_list: tuple[float, ...]
    minima: dict  # class name -> tuple of per-eps minima (or None if empty)
    scaled_fiber_min: tuple[float, ...]  # eps * min over fiber-fiber planes
    fiber_min_estimate: float | None

    def overall_min(self) -> float:
        vals = [
            v
            for mins in self.minima.values()
            if mins is not None
            for v in mins
        ]
        return min(vals)


def sectional_sweep(
    sc: SubmersionChart, eps_schedule=None, sample_count: int = 200
) -> SectionalSweepReport:
    """Minima of the coordinate-plane sectional curvatures of g(eps), split
    by plane class, plus the extrapolated minimum fiber curvature from
    eps * min K over fiber planes."""
    ensure_valid(sc)
    eps_list = _check_schedule(eps_schedule)
    n = sc.total.dim
    fiber = set(sc.fiber_dims)
    pts = sample_grid(sc.total, sample_count, even_periodic=True)
    pairs = {name: [] for name in CLASS_NAMES}
    for p in range(n):
        for q in range(p + 1, n):
            both_fiber = p in fiber and q in fiber
            both_base = p not in fiber and q not in fiber
            name = "fiber_fiber" if both_fiber else ("base_base" if both_base else "base_fiber")
            pairs[name].append((p, q))
    minima = {name: ([] if pairs[name] else None) for name in CLASS_NAMES}
    for eps in eps_list:
        mj = scale_metric_batch(sc, pts, eps)
        r = curvature_bundle(mj).riemann_lower
        g = mj.g
        for name in CLASS_NAMES:
            if minima[name] is None:
                continue
            vals = []
            for p, q in pairs[name]:
                denom = g[:, p, p] * g[:, q, q] - g[:, p, q] ** 2
                vals.append(np.min(r[:, p, q, p, q] / denom))
            minima[name].append(float(min(vals)))
    scaled = tuple(
        e * m for e, m in zip(eps_list, minima["fiber_fiber"] or [float("nan")] * len(eps_list))
    )
    estimate = None
    if minima["fiber_fiber"] is not None:
        estimate = richardson_limit(eps_list, scaled)
    return SectionalSweepReport(
        eps_list=eps_list,
        minima={k: (tuple(v) if v is not None else None) for k, v in minima.items()},
        scaled_fiber_min=scaled,
        fiber_min_estimate=estimate,
    )
