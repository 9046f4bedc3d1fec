"""Deterministic quadrature over chart atlases with the metric volume element.

Per coordinate the rule is open Gauss-Legendre on non-periodic intervals
(nodes never touch the endpoints, which sidesteps coordinate singularities
such as sphere poles) and the uniform trapezoid rule on periodic ones, where
it is spectrally accurate.  Convergence is judged by doubling every axis
order until the change drops below tolerance; the last change is reported as
the error estimate.

Results are bitwise independent of the worker count: nodes are split into
fixed-size chunks whatever the pool size, each chunk is reduced by numpy's
deterministic pairwise sum, and the chunk partials are combined in index
order with compensated summation.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .charts import Atlas, Chart, as_atlas, metric_values, weight_values
from .errors import ConvergenceError, PositivityError
from .linalg import kahan_sum

ABS_TOL = 1e-8
REL_TOL = 1e-7
MAX_NODES = 2**21
CHUNK = 16384
ENV_MAX_NODES = "LK_MAX_NODES"


def axis_rule(a: float, b: float, periodic: bool, order: int):
    if periodic:
        nodes = a + (b - a) * np.arange(order) / order
        weights = np.full(order, (b - a) / order)
    else:
        x, w = np.polynomial.legendre.leggauss(order)
        nodes = 0.5 * (a + b) + 0.5 * (b - a) * x
        weights = 0.5 * (b - a) * w
    return nodes, weights


def grid(chart: Chart, order: int):
    """Tensor-product nodes (P, n) and weights (P,) at one per-axis order."""
    axis_nodes = []
    axis_weights = []
    for (a, b), per in zip(chart.domain, chart.periodic):
        nodes, weights = axis_rule(a, b, per, order)
        axis_nodes.append(nodes)
        axis_weights.append(weights)
    mesh = np.meshgrid(*axis_nodes, indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    w = axis_weights[0]
    for aw in axis_weights[1:]:
        w = np.multiply.outer(w, aw)
    return points, w.reshape(-1)


def sqrt_det_metric(chart: Chart, points: np.ndarray) -> np.ndarray:
    g = metric_values(chart, points)
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        for k in range(g.shape[0]):
            try:
                np.linalg.cholesky(g[k])
            except np.linalg.LinAlgError:
                raise PositivityError(
                    f"metric not positive definite at quadrature node {points[k].tolist()}"
                ) from None
        raise
    diag = np.einsum("...ii->...i", chol)
    return np.prod(diag, axis=-1)


def _chart_sum(chart: Chart, field, order: int, workers: int) -> float:
    points, weights = grid(chart, order)
    n_pts = points.shape[0]
    starts = range(0, n_pts, CHUNK)

    def chunk_sum(start: int) -> float:
        pts = points[start : start + CHUNK]
        w = weights[start : start + CHUNK]
        vals = w * weight_values(chart, pts) * sqrt_det_metric(chart, pts)
        if field is not None:
            vals = vals * field(chart, pts)
        return float(np.sum(vals))

    if workers > 1 and n_pts > CHUNK:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(chunk_sum, starts))
    else:
        partials = [chunk_sum(s) for s in starts]
    return kahan_sum(partials)


def _max_nodes(max_nodes: int | None) -> int:
    cap = MAX_NODES if max_nodes is None else max_nodes
    env = os.environ.get(ENV_MAX_NODES)
    if env:
        cap = min(cap, int(env))
    return cap


def integrate(
    manifold,
    field=None,
    *,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
    start_order: int = 8,
    max_nodes: int | None = None,
    workers: int = 1,
) -> tuple[float, float]:
    """Integral of ``field`` against the metric volume element over an atlas.

    ``field(chart, points) -> (P,)`` is evaluated in chunks; pass ``None`` to
    integrate the constant 1.  Returns ``(value, error_estimate)`` where the
    estimate is the change at the last grid doubling.
    """
    atlas: Atlas = as_atlas(manifold)
    cap = _max_nodes(max_nodes)
    err = 0.0
    chart_values = []
    for chart in atlas:
        order = start_order
        if order**chart.dim > cap:
            raise ConvergenceError(f"start order {order} already exceeds the node cap {cap}")
        prev = _chart_sum(chart, field, order, workers)
        delta = float("inf")
        while True:
            order *= 2
            if order**chart.dim > cap:
                raise ConvergenceError(
                    f"grid doubling exceeded the node cap {cap} at order {order} "
                    f"(last delta {delta:.3g})"
                )
            cur = _chart_sum(chart, field, order, workers)
            delta = abs(cur - prev)
            prev = cur
            if delta <= max(abs_tol, rel_tol * abs(cur)):
                break
        chart_values.append(prev)
        err += delta
    return kahan_sum(chart_values), err


def volume(manifold, **kwargs) -> float:
    """Riemannian volume of the atlas."""
    value, _ = integrate(manifold, None, **kwargs)
    return value
