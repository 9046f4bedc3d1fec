"""Coordinate charts with expression-valued metric components.

A chart stores the upper triangle of a symmetric metric ``g_pq`` as parsed
expressions over its own coordinates, the per-coordinate domains, periodicity
flags, and an optional scalar weight used for partitions of unity.

``metric_jet`` evaluates the metric together with exact first and second
derivatives.  Conventions for the derivative arrays:

    dg[p, q, r]     = d_p g_qr
    ddg[p, q, r, s] = d_p d_q g_rs

Both are exactly symmetric in the slots the notation suggests because the
symmetric entries are filled from one computation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ChartError, PositivityError
from .expr import Expr, max_var, parse_expr, substitute, to_source
from .jets import Taylor2, directions, eval_taylor2, eval_values


@dataclass(frozen=True)
class Chart:
    dim: int
    domain: tuple[tuple[float, float], ...]
    periodic: tuple[bool, ...]
    components: tuple[tuple[Expr, ...], ...]  # row p holds g_pq for q = p..n-1
    weight: Expr | None = None

    def __post_init__(self):
        n = self.dim
        if len(self.domain) != n or len(self.periodic) != n:
            raise ChartError("domain/periodic length must equal dim")
        for a, b in self.domain:
            if not b > a:
                raise ChartError(f"empty domain interval [{a}, {b}]")
        if len(self.components) != n:
            raise ChartError("metric must have one row per coordinate")
        for p, row in enumerate(self.components):
            if len(row) != n - p:
                raise ChartError(f"metric row {p} must have {n - p} entries")
            for e in row:
                if max_var(e) >= n:
                    raise ChartError(
                        f"metric entry {to_source(e)!r} references x{max_var(e)} "
                        f"in dimension {n}"
                    )
        if self.weight is not None and max_var(self.weight) >= n:
            raise ChartError("weight references a variable beyond the chart dimension")

    def component(self, p: int, q: int) -> Expr:
        if p > q:
            p, q = q, p
        return self.components[p][q - p]

    @property
    def upper_triangle(self) -> list[tuple[int, int, Expr]]:
        return [
            (p, p + j, e)
            for p, row in enumerate(self.components)
            for j, e in enumerate(row)
        ]


Atlas = tuple[Chart, ...]


def as_atlas(manifold) -> Atlas:
    if isinstance(manifold, Chart):
        return (manifold,)
    return tuple(manifold)


@dataclass(frozen=True)
class MetricJet:
    """Metric with exact first and second derivatives at one or more points.

    Arrays carry an optional leading batch axis: ``g`` is ``(..., n, n)``,
    ``dg`` is ``(..., n, n, n)`` and ``ddg`` is ``(..., n, n, n, n)``.
    """

    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray

    @property
    def dim(self) -> int:
        return self.g.shape[-1]


def metric_series(chart: Chart, points: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Metric entries as 2-jets along one direction.

    Returns an array of shape ``(3, P, n, n)`` holding the Taylor coefficients
    of every ``g_pq`` along ``x + t * direction``; symmetric entries share the
    same numbers.
    """
    n = chart.dim
    n_pts = points.shape[0]
    coords = [Taylor2(points[:, i], float(direction[i])) for i in range(n)]
    out = np.zeros((3, n_pts, n, n))
    for p, q, e in chart.upper_triangle:
        t = eval_taylor2(e, coords)
        for k, a in enumerate((t.a0, t.a1, t.a2)):
            arr = np.broadcast_to(a, (n_pts,))
            out[k, :, p, q] = arr
            out[k, :, q, p] = arr
    return out


def assemble_jets(series_fn, n: int, n_pts: int) -> MetricJet:
    """Build a batched MetricJet from directional series passes.

    ``series_fn(direction) -> (3, P, n, n)`` supplies the jets of the metric
    along each direction; unit passes fill the gradient and Hessian diagonal,
    mixed passes fill the off-diagonal second derivatives by polarization.
    """
    g = np.zeros((n_pts, n, n))
    dg = np.zeros((n_pts, n, n, n))
    ddg = np.zeros((n_pts, n, n, n, n))
    dirs = directions(n)
    for d in range(n):
        s = series_fn(dirs[d])
        if d == 0:
            g[:] = s[0]
        dg[:, d] = s[1]
        ddg[:, d, d] = 2.0 * s[2]
    k = n
    for d in range(n):
        for c in range(d):
            s = series_fn(dirs[k])
            k += 1
            off = s[2] - 0.5 * (ddg[:, c, c] + ddg[:, d, d])
            ddg[:, c, d] = off
            ddg[:, d, c] = off
    return MetricJet(g, dg, ddg)


def check_positive_definite(g: np.ndarray, where: str = "metric") -> np.ndarray:
    """Cholesky factor of a batch of symmetric matrices, or raise."""
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        flat = g.reshape(-1, g.shape[-1], g.shape[-1])
        for idx in range(flat.shape[0]):
            try:
                np.linalg.cholesky(flat[idx])
            except np.linalg.LinAlgError:
                raise PositivityError(
                    f"{where} is not positive definite (batch index {idx}): "
                    f"{flat[idx].tolist()}"
                ) from None
        raise


def metric_jet_batch(chart: Chart, points: np.ndarray, check_pd: bool = True) -> MetricJet:
    points = np.asarray(points, dtype=float)
    mj = assemble_jets(
        lambda v: metric_series(chart, points, v), chart.dim, points.shape[0]
    )
    if check_pd:
        check_positive_definite(mj.g)
    return mj


def metric_jet(chart: Chart, point) -> MetricJet:
    """Metric jet at a single point (arrays without the batch axis)."""
    point = np.asarray(point, dtype=float)
    mj = metric_jet_batch(chart, point[None, :])
    return MetricJet(mj.g[0], mj.dg[0], mj.ddg[0])


def metric_values(chart: Chart, points: np.ndarray) -> np.ndarray:
    """Metric entries without derivatives, shape (P, n, n)."""
    n = chart.dim
    points = np.asarray(points, dtype=float)
    out = np.zeros((points.shape[0], n, n))
    for p, q, e in chart.upper_triangle:
        vals = eval_values(e, points)
        out[:, p, q] = vals
        out[:, q, p] = vals
    return out


def weight_values(chart: Chart, points: np.ndarray) -> np.ndarray:
    if chart.weight is None:
        return np.ones(points.shape[0])
    return eval_values(chart.weight, np.asarray(points, dtype=float))


def restrict_chart(chart: Chart, fixed: dict[int, float], keep: list[int]) -> Chart:
    """Chart induced on the slice where the ``fixed`` coordinates are frozen.

    Keeps the metric block over ``keep`` (in the given order) with the frozen
    coordinates substituted as constants.
    """
    if set(fixed) & set(keep):
        raise ChartError("fixed and kept coordinates must be disjoint")
    remap = {old: new for new, old in enumerate(keep)}
    rows = []
    for i, p in enumerate(keep):
        row = []
        for q in keep[i:]:
            row.append(substitute(chart.component(p, q), fixed, remap))
        rows.append(tuple(row))
    return Chart(
        dim=len(keep),
        domain=tuple(chart.domain[p] for p in keep),
        periodic=tuple(chart.periodic[p] for p in keep),
        components=tuple(rows),
        weight=None,
    )


def chart_to_dict(chart: Chart) -> dict:
    d = {
        "dim": chart.dim,
        "domain": [list(iv) for iv in chart.domain],
        "periodic": list(chart.periodic),
        "metric": [[to_source(e) for e in row] for row in chart.components],
    }
    if chart.weight is not None:
        d["weight"] = to_source(chart.weight)
    return d


def chart_from_dict(data: dict) -> Chart:
    try:
        dim = int(data["dim"])
        domain = tuple((float(a), float(b)) for a, b in data["domain"])
        periodic = tuple(bool(p) for p in data["periodic"])
        rows = tuple(
            tuple(parse_expr(src, dim) for src in row) for row in data["metric"]
        )
        weight = parse_expr(data["weight"], dim) if "weight" in data else None
    except (KeyError, TypeError, ValueError) as exc:
        raise ChartError(f"malformed chart data: {exc}") from exc
    return Chart(dim=dim, domain=domain, periodic=periodic, components=rows, weight=weight)


def load_chart(path) -> Chart:
    with open(path, "r", encoding="utf-8") as f:
        return chart_from_dict(json.load(f))


def save_chart(chart: Chart, path) -> None:
    Path(path).write_text(json.dumps(chart_to_dict(chart), indent=2) + "\n", encoding="utf-8")
