"""Built-in manifolds, submersions and embedded surfaces with reference data.

Every entry records where its reference values come from (closed form or a
reduced integral), and submersion entries are validated at construction.
Entries are addressed by ``zoo:<name>?param=value`` URIs on the command line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from urllib.parse import parse_qsl, urlparse

from .charts import Chart, chart_from_dict
from .errors import InputError
from .submersion import BlockSplit, SubmersionChart, validate
from .tube import Embedding, embedding_from_parts


@dataclass(frozen=True)
class ZooEntry:
    name: str
    params: dict
    kind: str  # "manifold" | "submersion" | "embedding"
    atlas: tuple[Chart, ...] | None = None
    submersion: SubmersionChart | None = None
    embedding: Embedding | None = None
    reference: dict = field(default_factory=dict)


def _chart(dim, domain, periodic, rows, weight=None):
    data = {"dim": dim, "domain": domain, "periodic": periodic, "metric": rows}
    if weight is not None:
        data["weight"] = weight
    return chart_from_dict(data)


def _ref(value, provenance):
    return {"value": value, "provenance": provenance}


def _positive(params, key):
    v = params[key]
    if not v > 0:
        raise InputError(f"parameter {key} must be positive, got {v}")
    return v


def _sphere_chart(r):
    return _chart(
        2,
        [[0.0, math.pi], [0.0, 2 * math.pi]],
        [False, True],
        [[repr(r * r), "0"], [f"{r * r!r}*sin(x0)^2"]],
    )


def _ring_torus_chart(R, r):
    return _chart(
        2,
        [[0.0, 2 * math.pi], [0.0, 2 * math.pi]],
        [True, True],
        [[repr(r * r), "0"], [f"({R!r} + {r!r}*cos(x0))^2"]],
    )


def _circle_chart(length, scale=1.0):
    return _chart(1, [[0.0, length]], [True], [[repr(scale)]])


def make_sphere(params):
    r = _positive(params, "r")
    return ZooEntry(
        name="sphere",
        params=params,
        kind="manifold",
        atlas=(_sphere_chart(r),),
        reference={
            "volume": _ref(4 * math.pi * r * r, "closed form 4 pi r^2"),
            "chi": _ref(2, "sphere topology"),
            "intrinsic": {0: 2.0, 1: 0.0, 2: 4 * math.pi * r * r},
        },
    )


def make_flat_torus(params):
    l0, l1 = _positive(params, "l0"), _positive(params, "l1")
    chart = _chart(2, [[0.0, l0], [0.0, l1]], [True, True], [["1", "0"], ["1"]])
    return ZooEntry(
        name="flat_torus",
        params=params,
        kind="manifold",
        atlas=(chart,),
        reference={
            "volume": _ref(l0 * l1, "product of periods"),
            "chi": _ref(0, "torus topology"),
            "intrinsic": {0: 0.0, 1: 0.0, 2: l0 * l1},
        },
    )


def make_ring_torus(params):
    R, r = _positive(params, "R"), _positive(params, "r")
    if not R > r:
        raise InputError(f"ring torus needs R > r, got R={R}, r={r}")
    return ZooEntry(
        name="ring_torus",
        params=params,
        kind="manifold",
        atlas=(_ring_torus_chart(R, r),),
        reference={
            "volume": _ref(4 * math.pi**2 * R * r, "closed form 4 pi^2 R r"),
            "chi": _ref(0, "torus topology"),
            "intrinsic": {0: 0.0, 1: 0.0, 2: 4 * math.pi**2 * R * r},
            "min_sectional": _ref(
                -1.0 / (r * (R - r)), "inner equator cos(theta)/(r (R + r cos theta))"
            ),
        },
    )


def _submersion(total, base, fiber_dims, base_dims) -> SubmersionChart:
    sc = SubmersionChart(
        total=total, base=base, split=BlockSplit(tuple(fiber_dims), tuple(base_dims))
    )
    report = validate(sc, sample_count=64)
    if not report.passed:
        raise InputError(
            f"zoo submersion failed validation with residual {report.max_residual:.3g}"
        )
    return sc


def make_product_s2_s1(params):
    r, L = _positive(params, "r"), _positive(params, "L")
    total = _chart(
        3,
        [[0.0, math.pi], [0.0, 2 * math.pi], [0.0, L]],
        [False, True, True],
        [[repr(r * r), "0", "0"], [f"{r * r!r}*sin(x0)^2", "0"], ["1"]],
    )
    sc = _submersion(total, _circle_chart(L), (0, 1), (2,))
    return ZooEntry(
        name="product_s2_s1",
        params=params,
        kind="submersion",
        atlas=(total,),
        submersion=sc,
        reference={
            "volume": _ref(4 * math.pi * r * r * L, "product volume"),
            "fiber_chi": _ref(2, "sphere fiber"),
            "collapse_target_i1": _ref(2 * L, "chi(fiber) times circle length"),
        },
    )


def make_warped_s2_over_s1(params):
    a = params["a"]
    if not 0 <= a < 1:
        raise InputError(f"warping amplitude must satisfy 0 <= a < 1, got {a}")
    L = 2 * math.pi
    f2 = f"(1 + {a!r}*sin(x2))^2"
    total = _chart(
        3,
        [[0.0, math.pi], [0.0, 2 * math.pi], [0.0, L]],
        [False, True, True],
        [[f2, "0", "0"], [f"{f2}*sin(x0)^2", "0"], ["1"]],
    )
    sc = _submersion(total, _circle_chart(L), (0, 1), (2,))
    return ZooEntry(
        name="warped_s2_over_s1",
        params=params,
        kind="submersion",
        atlas=(total,),
        submersion=sc,
        reference={
            "volume": _ref(
                4 * math.pi * (2 * math.pi + math.pi * a * a),
                "reduced integral of 4 pi f(b)^2 over the circle",
            ),
            "fiber_chi": _ref(2, "sphere fiber"),
            "collapse_target_i1": _ref(4 * math.pi, "chi(fiber) times circle length"),
        },
    )


def make_flat_t2_over_s1(params):
    l0, l1 = _positive(params, "l0"), _positive(params, "l1")
    total = _chart(2, [[0.0, l0], [0.0, l1]], [True, True], [["1", "0"], ["1"]])
    sc = _submersion(total, _circle_chart(l1), (0,), (1,))
    return ZooEntry(
        name="flat_t2_over_s1",
        params=params,
        kind="submersion",
        atlas=(total,),
        submersion=sc,
        reference={
            "volume": _ref(l0 * l1, "product of periods"),
            "fiber_chi": _ref(0, "odd-dimensional fiber"),
            "collapse_target_i1": _ref(0.0, "chi(fiber) = 0"),
        },
    )


def make_torus_fiber_bundle(params):
    R, r, L = _positive(params, "R"), _positive(params, "r"), _positive(params, "L")
    if not R > r:
        raise InputError(f"ring torus fiber needs R > r, got R={R}, r={r}")
    total = _chart(
        3,
        [[0.0, 2 * math.pi], [0.0, 2 * math.pi], [0.0, L]],
        [True, True, True],
        [[repr(r * r), "0", "0"], [f"({R!r} + {r!r}*cos(x0))^2", "0"], ["1"]],
    )
    sc = _submersion(total, _circle_chart(L), (0, 1), (2,))
    return ZooEntry(
        name="torus_fiber_bundle",
        params=params,
        kind="submersion",
        atlas=(total,),
        submersion=sc,
        reference={
            "volume": _ref(4 * math.pi**2 * R * r * L, "product volume"),
            "fiber_chi": _ref(0, "torus fiber"),
            "fiber_min_sectional": _ref(-1.0 / (r * (R - r)), "inner equator"),
        },
    )


def make_coupled_t2_over_s1(params):
    c = params["c"]
    l0, l1 = _positive(params, "l0"), _positive(params, "l1")
    if not abs(c) < 1:
        raise InputError(f"coupling must satisfy |c| < 1, got {c}")
    total = _chart(2, [[0.0, l0], [0.0, l1]], [True, True], [["1", repr(c)], ["1"]])
    base = _circle_chart(l1, scale=1.0 - c * c)
    sc = _submersion(total, base, (0,), (1,))
    return ZooEntry(
        name="coupled_t2_over_s1",
        params=params,
        kind="submersion",
        atlas=(total,),
        submersion=sc,
        reference={
            "volume": _ref(math.sqrt(1 - c * c) * l0 * l1, "sqrt(det g) times periods"),
            "fiber_chi": _ref(0, "odd-dimensional fiber"),
        },
    )


def make_sphere2_embedded(params):
    r = _positive(params, "r")
    emb = embedding_from_parts(
        ambient=3,
        domain=[[0.0, math.pi], [0.0, 2 * math.pi]],
        periodic=[False, True],
        funcs=[
            f"{r!r}*sin(x0)*cos(x1)",
            f"{r!r}*sin(x0)*sin(x1)",
            f"{r!r}*cos(x0)",
        ],
        reach=r,
        surface_box=[[-r, r], [-r, r], [-r, r]],
    )
    return ZooEntry(
        name="sphere2_embedded",
        params=params,
        kind="embedding",
        embedding=emb,
        reference={
            "intrinsic": {0: 2.0, 1: 0.0, 2: 4 * math.pi * r * r},
            "tube_closed_form": _ref(
                "4/3 pi ((r+eps)^3 - (r-eps)^3)", "spherical shell volume"
            ),
        },
    )


def make_ring_torus_embedded(params):
    R, r = _positive(params, "R"), _positive(params, "r")
    if not R > r:
        raise InputError(f"ring torus needs R > r, got R={R}, r={r}")
    emb = embedding_from_parts(
        ambient=3,
        domain=[[0.0, 2 * math.pi], [0.0, 2 * math.pi]],
        periodic=[True, True],
        funcs=[
            f"({R!r} + {r!r}*cos(x0))*cos(x1)",
            f"({R!r} + {r!r}*cos(x0))*sin(x1)",
            f"{r!r}*sin(x0)",
        ],
        reach=min(r, R - r),
        surface_box=[[-(R + r), R + r], [-(R + r), R + r], [-r, r]],
    )
    return ZooEntry(
        name="ring_torus_embedded",
        params=params,
        kind="embedding",
        embedding=emb,
        reference={
            "intrinsic": {0: 0.0, 1: 0.0, 2: 4 * math.pi**2 * R * r},
        },
    )


_CATALOGUE = {
    "sphere": (make_sphere, {"r": 1.0}),
    "flat_torus": (make_flat_torus, {"l0": 2 * math.pi, "l1": 2 * math.pi}),
    "ring_torus": (make_ring_torus, {"R": 2.0, "r": 1.0}),
    "product_s2_s1": (make_product_s2_s1, {"r": 1.0, "L": 2 * math.pi}),
    "warped_s2_over_s1": (make_warped_s2_over_s1, {"a": 0.3}),
    "flat_t2_over_s1": (make_flat_t2_over_s1, {"l0": 2 * math.pi, "l1": 2 * math.pi}),
    "torus_fiber_bundle": (make_torus_fiber_bundle, {"R": 2.0, "r": 1.0, "L": 2 * math.pi}),
    "coupled_t2_over_s1": (
        make_coupled_t2_over_s1,
        {"c": 0.3, "l0": 2 * math.pi, "l1": 2 * math.pi},
    ),
    "sphere2_embedded": (make_sphere2_embedded, {"r": 1.0}),
    "ring_torus_embedded": (make_ring_torus_embedded, {"R": 2.0, "r": 1.0}),
}


def names() -> tuple[str, ...]:
    return tuple(_CATALOGUE)


def make(name: str, **params) -> ZooEntry:
    """Construct a named entry; unknown keys and bad ranges are input errors."""
    if name not in _CATALOGUE:
        raise InputError(f"unknown zoo entry {name!r}; known: {', '.join(names())}")
    builder, defaults = _CATALOGUE[name]
    unknown = set(params) - set(defaults)
    if unknown:
        raise InputError(f"unknown parameter(s) {sorted(unknown)} for {name!r}")
    merged = {**defaults, **params}
    return builder(merged)


def from_uri(uri: str) -> ZooEntry:
    """Parse ``zoo:name?k=v&...`` into a constructed entry."""
    parsed = urlparse(uri)
    if parsed.scheme != "zoo":
        raise InputError(f"not a zoo URI: {uri!r}")
    name = parsed.path
    try:
        params = {k: float(v) for k, v in parse_qsl(parsed.query, strict_parsing=False)}
    except ValueError as exc:
        raise InputError(f"malformed zoo parameters in {uri!r}: {exc}") from exc
    return make(name, **params)
