"""Monte-Carlo volumes of tubular neighborhoods of embedded surfaces.

The estimator throws uniform points into a box around the surface and counts
the fraction within distance eps of a dense surface point cloud held in a
k-d tree.  Using a cloud whose covering radius is a small fraction of eps
keeps the (one-sided) distance overestimate far below the binomial noise:
for a query at distance d from the surface, a cloud point at tangential
offset s from the true foot point overestimates the distance by about
s^2 / (2 d), so the misclassified band is quadratically small in the cloud
spacing.

Randomness comes from a counter-based SplitMix64 stream so that runs are
bitwise reproducible at any batch size or worker count, and so that any
implementation can reproduce the streams exactly:

    state(k) = seed + (k + 1) * 0x9E3779B97F4A7C15   (mod 2^64)
    z = state(k)
    z = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9       (mod 2^64)
    z = (z XOR (z >> 27)) * 0x94D049BB133111EB       (mod 2^64)
    output(k) = z XOR (z >> 31)

Sample number k uses outputs 3k, 3k+1, 3k+2 for its three coordinates, each
mapped to a double in [0, 1) as (output >> 11) * 2^-53.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError
from .expr import Expr, parse_expr
from .jets import Taylor2, eval_taylor2, eval_values

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, start: int, count: int) -> np.ndarray:
    """Outputs ``start .. start+count-1`` of the SplitMix64 stream for seed."""
    with np.errstate(over="ignore"):
        idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def uniform01(seed: int, start: int, count: int) -> np.ndarray:
    """Doubles in [0, 1) from the SplitMix64 stream (53-bit mantissas)."""
    return (splitmix64(seed, start, count) >> np.uint64(11)) * 2.0**-53


@dataclass(frozen=True)
class Embedding:
    """Explicitly parametrized surface in Euclidean space."""

    ambient: int
    domain: tuple[tuple[float, float], ...]
    periodic: tuple[bool, ...]
    funcs: tuple[Expr, ...]
    reach: float
    surface_box: tuple[tuple[float, float], ...]

    @property
    def param_dim(self) -> int:
        return len(self.domain)

    def points(self, params: np.ndarray) -> np.ndarray:
        return np.stack([eval_values(f, params) for f in self.funcs], axis=-1)

    def jacobians(self, params: np.ndarray) -> np.ndarray:
        """d F / d u of shape (P, ambient, param_dim)."""
        d = self.param_dim
        out = np.zeros((params.shape[0], self.ambient, d))
        for k in range(d):
            direction = np.zeros(d)
            direction[k] = 1.0
            coords = [Taylor2(params[:, i], float(direction[i])) for i in range(d)]
            for ell, f in enumerate(self.funcs):
                t = eval_taylor2(f, coords)
                out[:, ell, k] = np.broadcast_to(t.a1, (params.shape[0],))
        return out


def embedding_from_parts(ambient, domain, periodic, funcs, reach, surface_box) -> Embedding:
    dim = len(domain)
    return Embedding(
        ambient=int(ambient),
        domain=tuple((float(a), float(b)) for a, b in domain),
        periodic=tuple(bool(p) for p in periodic),
        funcs=tuple(parse_expr(src, dim) for src in funcs),
        reach=float(reach),
        surface_box=tuple((float(a), float(b)) for a, b in surface_box),
    )


def _param_grid(emb: Embedding, counts: list[int]) -> np.ndarray:
    axes = []
    for (a, b), per, m in zip(emb.domain, emb.periodic, counts):
        if per:
            axes.append(a + (b - a) * np.arange(m) / m)
        else:
            axes.append(np.linspace(a, b, m))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=-1)


def check_immersion(emb: Embedding, grid_per_axis: int = 32) -> float:
    """Smallest Jacobian singular value on a coarse interior grid."""
    axes = [
        a + (b - a) * (np.arange(grid_per_axis) + 0.5) / grid_per_axis
        for a, b in emb.domain
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    params = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    jac = emb.jacobians(params)
    smin = float(np.min(np.linalg.svd(jac, compute_uv=False)))
    if smin < 1e-8:
        raise InputError(f"degenerate Jacobian detected (min singular value {smin:.3g})")
    return smin


def surface_cloud(emb: Embedding, spacing: float) -> np.ndarray:
    """Surface samples whose Euclidean neighbor spacing is at most ``spacing``.

    Per-axis counts come from the largest Jacobian column norm, so the grid is
    conservative wherever the parametrization stretches.
    """
    probe = _param_grid(emb, [48] * emb.param_dim)
    jac = emb.jacobians(probe)
    col_norms = np.linalg.norm(jac, axis=1)  # (P, d)
    max_norm = np.max(col_norms, axis=0)
    per_axis_step = spacing / math.sqrt(emb.param_dim)
    counts = []
    for (a, b), norm in zip(emb.domain, max_norm):
        length = (b - a) * max(norm, 1e-12)
        counts.append(max(2, int(math.ceil(1.05 * length / per_axis_step))))
    return emb.points(_param_grid(emb, counts))


@dataclass(frozen=True)
class TubeEstimate:
    estimate: float
    sigma: float
    eps: float
    samples: int
    seed: int
    inside: int
    box_volume: float


def tube_volume_mc(
    emb: Embedding,
    eps: float,
    samples: int,
    seed: int,
    *,
    workers: int = 1,
    cloud: np.ndarray | None = None,
    cloud_spacing: float | None = None,
    batch: int = 1 << 20,
) -> TubeEstimate:
    """Volume of the eps-neighborhood of the surface, with binomial error.

    Seeded runs are bitwise reproducible for any worker count or batch size.
    A prebuilt ``cloud`` may be passed to amortize construction across calls.
    """
    if eps < 0:
        raise InputError(f"eps must be non-negative, got {eps}")
    if eps > emb.reach:
        raise InputError(f"eps {eps} above the declared reach {emb.reach}")
    if samples < 1:
        raise InputError("need at least one sample")
    if eps == 0.0:
        return TubeEstimate(0.0, 0.0, eps, samples, seed, 0, 0.0)
    check_immersion(emb)
    if cloud is None:
        spacing = eps / 30.0 if cloud_spacing is None else cloud_spacing
        cloud = surface_cloud(emb, spacing)
    tree = cKDTree(cloud)
    lo = np.array([a - eps for a, _ in emb.surface_box])
    hi = np.array([b + eps for _, b in emb.surface_box])
    box_volume = float(np.prod(hi - lo))
    dim = emb.ambient
    inside = 0
    for start in range(0, samples, batch):
        count = min(batch, samples - start)
        u = uniform01(seed, dim * start, dim * count).reshape(count, dim)
        pts = lo + u * (hi - lo)
        dist, _ = tree.query(pts, k=1, distance_upper_bound=eps * (1 + 1e-12), workers=workers)
        inside += int(np.count_nonzero(dist <= eps))
    p = inside / samples
    estimate = box_volume * p
    sigma = box_volume * math.sqrt(max(p * (1.0 - p), 0.0) / samples)
    return TubeEstimate(
        estimate=estimate,
        sigma=sigma,
        eps=eps,
        samples=samples,
        seed=seed,
        inside=inside,
        box_volume=box_volume,
    )


def ball_volume(j: int) -> float:
    """Volume of the unit j-ball (1, 2, pi, 4 pi/3, ...)."""
    return math.pi ** (j / 2.0) / math.gamma(j / 2.0 + 1.0)


def steiner_eval(vols, eps: float, ambient: int) -> float:
    """Tube-volume polynomial sum_i kappa_{L-i} V_i eps^{L-i}."""
    n = len(vols) - 1
    if ambient < n:
        raise InputError(f"ambient dimension {ambient} below surface dimension {n}")
    terms = [ball_volume(ambient - i) * vols[i] * eps ** (ambient - i) for i in range(n + 1)]
    return math.fsum(terms)


def steiner_coefficients(vols, ambient: int) -> list[float]:
    """Coefficient of eps^(L-i) per i; the polynomial identity behind
    ``steiner_eval``."""
    return [ball_volume(ambient - i) * vols[i] for i in range(len(vols))]


def fit_steiner_coefficients(eps_list, estimates, sigmas, n: int, ambient: int):
    """Weighted least-squares fit of the tube polynomial to MC estimates.

    Only the parity-allowed terms are fitted (V_i with n - i even; the others
    vanish for closed surfaces).  Returns ``(indices, coefficients, stderr)``.
    """
    idx = [i for i in range(n + 1) if (n - i) % 2 == 0]
    eps_arr = np.asarray(eps_list, dtype=float)
    design = np.stack([eps_arr ** (ambient - i) for i in idx], axis=-1)
    w = 1.0 / np.asarray(sigmas, dtype=float)
    a = design * w[:, None]
    b = np.asarray(estimates, dtype=float) * w
    coef, *_ = np.linalg.lstsq(a, b, rcond=None)
    cov = np.linalg.inv(a.T @ a)
    stderr = np.sqrt(np.diag(cov))
    return idx, coef, stderr
