import math

import numpy as np
import pytest

from lkvol import zoo
from lkvol.charts import metric_jet, metric_jet_batch, metric_values
from lkvol.errors import ChartError, InputError, SubmersionInvalidError
from lkvol.submersion import (
    BlockSplit,
    SubmersionChart,
    collapse_sweep,
    collapse_value,
    curvature_limit_check,
    fiber_euler,
    horizontal_lift,
    scale_metric,
    scale_metric_batch,
    scale_metric_naive,
    scaled_integrand_sup,
    sectional_sweep,
    submersion_from_dict,
    submersion_to_dict,
    sample_grid,
    validate,
    volume_scaling_check,
)


@pytest.fixture(scope="module")
def product_sc():
    return zoo.make("product_s2_s1").submersion


@pytest.fixture(scope="module")
def warped_sc():
    return zoo.make("warped_s2_over_s1", a=0.3).submersion


@pytest.fixture(scope="module")
def coupled_sc():
    return zoo.make("coupled_t2_over_s1", c=0.1).submersion


def test_block_split_validation():
    with pytest.raises(ChartError):
        BlockSplit(fiber_dims=(0, 1), base_dims=(1,))
    with pytest.raises(ChartError):
        BlockSplit(fiber_dims=(), base_dims=(0,))


def test_domain_mismatch_rejected(product_sc):
    bad_base = zoo.make("product_s2_s1", L=4.0).submersion.base
    with pytest.raises(ChartError):
        SubmersionChart(total=product_sc.total, base=bad_base, split=product_sc.split)


def test_horizontal_lift_product_is_coordinate_basis(product_sc):
    lift = horizontal_lift(product_sc, (0.7, 1.1, 2.0))
    assert np.array_equal(lift.h, np.zeros((2, 1)))
    assert np.array_equal(lift.xi[:, 0], [0.0, 0.0, 1.0])


def test_horizontal_lift_constant_coupling(coupled_sc):
    # h = -g_{alpha j} gtilde^{ji}: fiber block is 1, mixed entry is 0.1.
    lift = horizontal_lift(coupled_sc, (0.3, 0.4))
    assert lift.h[0, 0] == pytest.approx(-0.1, abs=1e-15)
    assert np.allclose(lift.xi[:, 0], [-0.1, 1.0])


def test_horizontal_lift_orthogonality_on_zoo():
    for name in ("product_s2_s1", "warped_s2_over_s1", "coupled_t2_over_s1",
                 "torus_fiber_bundle", "flat_t2_over_s1"):
        sc = zoo.make(name).submersion
        pts = sample_grid(sc.total, 100)
        for k in range(0, pts.shape[0], 7):
            point = pts[k]
            lift = horizontal_lift(sc, point)
            g = metric_values(sc.total, point[None, :])[0]
            for i in sc.fiber_dims:
                res = abs(g[i] @ lift.xi[:, 0])
                assert res <= 1e-12


def test_validate_passes_on_zoo(product_sc, warped_sc, coupled_sc):
    for sc in (product_sc, warped_sc, coupled_sc):
        report = validate(sc)
        assert report.passed
        assert report.max_residual <= 1e-10


def test_validate_fails_on_scaled_base(product_sc):
    from lkvol.charts import chart_from_dict

    wrong_base = chart_from_dict(
        {
            "dim": 1,
            "domain": [[0.0, 2 * math.pi]],
            "periodic": [True],
            "metric": [["1.1"]],
        }
    )
    sc = SubmersionChart(total=product_sc.total, base=wrong_base, split=product_sc.split)
    report = validate(sc)
    assert not report.passed
    assert report.max_residual == pytest.approx(0.1, rel=1e-10)
    with pytest.raises(SubmersionInvalidError):
        collapse_sweep(sc, 1)


def test_scale_metric_identity_at_eps_one(warped_sc):
    point = (0.9, 1.3, 2.2)
    mj = metric_jet(warped_sc.total, point)
    mj_one = scale_metric(warped_sc, point, 1.0)
    assert np.array_equal(mj.g, mj_one.g)
    assert np.array_equal(mj.dg, mj_one.dg)
    assert np.array_equal(mj.ddg, mj_one.ddg)


def test_scale_metric_block_diagonal_case(product_sc):
    point = (0.8, 0.5, 1.0)
    eps = 0.3
    mj = metric_jet(product_sc.total, point)
    scaled = scale_metric(product_sc, point, eps)
    f = [0, 1]
    assert np.allclose(scaled.g[np.ix_(f, f)], eps * mj.g[np.ix_(f, f)], rtol=0, atol=1e-15)
    assert scaled.g[2, 2] == mj.g[2, 2]
    assert np.all(scaled.g[np.ix_(f, [2])] == 0.0)


def test_scale_metric_coupled_blocks(coupled_sc):
    # Mixed block scales by eps; the base block picks up the projector term
    # g_bb - (1 - eps) * g_bi gtilde^ij g_jb.
    point = (0.2, 0.7)
    eps = 0.25
    c = 0.1
    scaled = scale_metric(coupled_sc, point, eps)
    assert scaled.g[0, 0] == pytest.approx(eps, rel=1e-14)
    assert scaled.g[0, 1] == pytest.approx(eps * c, rel=1e-14)
    assert scaled.g[1, 1] == pytest.approx(1.0 - (1 - eps) * c * c, rel=1e-14)
    naive = scale_metric_naive(coupled_sc, point, eps)
    assert naive.g[1, 1] == 1.0
    # A/B difference is exactly (1 - eps) c^2 on the base entry.
    assert naive.g[1, 1] - scaled.g[1, 1] == pytest.approx((1 - eps) * c * c, rel=1e-12)


def test_scale_metric_positive_definite(warped_sc):
    pts = sample_grid(warped_sc.total, 50)
    for eps in (0.5, 0.1, 2.0**-9):
        g = scale_metric_batch(warped_sc, pts, eps).g
        np.linalg.cholesky(g)  # raises if not SPD


def test_scale_metric_rejects_bad_eps(warped_sc):
    with pytest.raises(InputError):
        scale_metric(warped_sc, (0.5, 0.5, 0.5), 0.0)


@pytest.mark.parametrize("eps", [0.5, 0.1, 0.01])
def test_volume_scaling_all_zoo(eps):
    for name in ("product_s2_s1", "warped_s2_over_s1", "coupled_t2_over_s1",
                 "torus_fiber_bundle", "flat_t2_over_s1"):
        sc = zoo.make(name).submersion
        assert volume_scaling_check(sc, eps) <= 1e-10


def test_volume_ratio_trivial_case(product_sc):
    # N = 2 fiber: the volume-form ratio eps^(N/2) equals eps itself.
    eps = 0.25
    pts = sample_grid(product_sc.total, 20)
    g = metric_values(product_sc.total, pts)
    g_eps = scale_metric_batch(product_sc, pts, eps).g
    ratio = np.sqrt(np.linalg.det(g_eps) / np.linalg.det(g))
    assert np.allclose(ratio, eps, rtol=1e-12)


def test_fiber_euler_characteristics():
    assert fiber_euler(zoo.make("product_s2_s1").submersion) == 2
    assert fiber_euler(zoo.make("warped_s2_over_s1").submersion) == 2
    assert fiber_euler(zoo.make("torus_fiber_bundle").submersion) == 0
    assert fiber_euler(zoo.make("flat_t2_over_s1").submersion) == 0  # odd dim
    assert fiber_euler(zoo.make("coupled_t2_over_s1").submersion) == 0


def test_collapse_value_product_constant(product_sc):
    for eps in (1.0, 0.1, 0.01):
        v = collapse_value(product_sc, 1, eps)
        assert v == pytest.approx(4 * math.pi, abs=1e-6)


def test_collapse_sweep_product(product_sc):
    record = collapse_sweep(product_sc, 1, [0.5, 0.25, 0.125, 0.0625])
    assert record.target == pytest.approx(4 * math.pi, rel=1e-9)
    assert record.fiber_chi == 2
    for v in record.values:
        assert v == pytest.approx(4 * math.pi, abs=1e-6)
    assert record.passed


def test_collapse_sweep_flat_is_zero():
    sc = zoo.make("flat_t2_over_s1").submersion
    record = collapse_sweep(sc, 1, [0.5, 0.25, 0.125, 0.0625])
    assert record.values == (0.0, 0.0, 0.0, 0.0)
    assert record.target == 0.0
    assert record.passed


def test_collapse_sweep_odd_codimension_is_exact_zero(warped_sc):
    record = collapse_sweep(warped_sc, 0, [0.5, 0.25, 0.125, 0.0625])
    assert record.values == (0.0, 0.0, 0.0, 0.0)
    assert record.extrapolated_limit == 0.0


def test_collapse_sweep_schedule_validation(warped_sc):
    with pytest.raises(InputError):
        collapse_sweep(warped_sc, 1, [0.1, 0.2])
    with pytest.raises(InputError):
        collapse_sweep(warped_sc, 1, [0.1])


def test_curvature_limit_product_exact(product_sc):
    report = curvature_limit_check(
        product_sc, (0.9, 0.4, 1.7), [0.5, 0.25, 0.125]
    )
    assert max(report.base_dev) <= 1e-10
    assert max(report.fiber_dev) <= 1e-10
    assert report.slopes_ok()


def test_curvature_limit_warped_slope(warped_sc):
    report = curvature_limit_check(warped_sc, (1.1, 0.8, 0.9))
    assert max(report.base_dev) <= 1e-10  # 1-dim base has no curvature
    assert report.fiber_dev[-1] < report.fiber_dev[0]
    assert report.fiber_slope == pytest.approx(1.0, abs=0.2)
    assert report.slopes_ok()


def test_scaled_integrand_bounded(warped_sc):
    eps_list, sups = scaled_integrand_sup(warped_sc, 2, sample_count=100)
    mid = sups[len(sups) // 2]
    assert sups[-1] <= 2.0 * mid


def test_sectional_sweep_torus_fiber():
    sc = zoo.make("torus_fiber_bundle", R=2.0, r=1.0).submersion
    report = sectional_sweep(sc, sample_count=200)
    assert report.fiber_min_estimate == pytest.approx(-1.0, rel=0.05)
    # Product structure: eps * min K over fiber planes is constant in eps.
    assert report.scaled_fiber_min[0] == pytest.approx(report.scaled_fiber_min[-1], rel=1e-6)


def test_sectional_sweep_warped_bounded_below(warped_sc):
    report = sectional_sweep(warped_sc, sample_count=150)
    assert report.overall_min() >= -1.0
    assert report.minima["base_base"] is None  # 1-dim base has no planes
    mixed = report.minima["base_fiber"]
    assert max(abs(v) for v in mixed) <= 1.0  # stays O(1) across the schedule


def test_json_roundtrip(warped_sc):
    data = submersion_to_dict(warped_sc)
    again = submersion_from_dict(data)
    assert again.total == warped_sc.total
    assert again.base == warped_sc.base
    assert again.split == warped_sc.split
