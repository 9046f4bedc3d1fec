import math

import numpy as np
import pytest

from lkvol.errors import DomainError
from lkvol.expr import parse_expr
from lkvol.jets import Taylor2, eval_jet2, eval_taylor2, eval_values
from helpers import eval_scalar, fd_gradient, fd_hessian, random_expr


def test_bilinear_jet():
    j = eval_jet2(parse_expr("x0*x1", 2), (2.0, 3.0))
    assert j.value == 6.0
    assert np.allclose(j.gradient, [3.0, 2.0])
    assert np.allclose(j.hessian, [[0.0, 1.0], [1.0, 0.0]])


def test_sin_squared_jet_at_quarter_pi():
    j = eval_jet2(parse_expr("sin(x0)^2", 1), (math.pi / 4,))
    assert abs(j.value - 0.5) < 1e-15
    assert abs(j.gradient[0] - 1.0) < 1e-15
    assert abs(j.hessian[0, 0]) < 1e-15


def test_constant_jet():
    j = eval_jet2(parse_expr("3", 2), (0.7, -1.2))
    assert j.value == 3.0
    assert np.all(j.gradient == 0.0)
    assert np.all(j.hessian == 0.0)


def test_hessian_exactly_symmetric():
    j = eval_jet2(parse_expr("exp(x0*x1)*sin(x0+2*x1)", 2), (0.3, 0.4))
    assert np.array_equal(j.hessian, j.hessian.T)


def test_division_jet():
    j = eval_jet2(parse_expr("1/x0", 1), (2.0,))
    assert j.value == 0.5
    assert abs(j.gradient[0] + 0.25) < 1e-15
    assert abs(j.hessian[0, 0] - 0.25) < 1e-15


def test_integer_power_negative_base_ok():
    j = eval_jet2(parse_expr("x0^3", 1), (-2.0,))
    assert j.value == -8.0
    assert j.gradient[0] == 12.0
    assert j.hessian[0, 0] == -12.0


def test_noninteger_power_needs_positive_base():
    e = parse_expr("x0^2.5", 1)
    j = eval_jet2(e, (4.0,))
    assert abs(j.value - 32.0) < 1e-12
    with pytest.raises(DomainError):
        eval_jet2(e, (-4.0,))


def test_log_domain_error_names_subexpression():
    with pytest.raises(DomainError, match="log"):
        eval_jet2(parse_expr("1 + log(x0 - 2)", 1), (1.0,))


def test_division_by_zero_reported():
    with pytest.raises(DomainError, match="division"):
        eval_jet2(parse_expr("1/(x0-1)", 1), (1.0,))


def test_taylor2_broadcasts_over_batches():
    e = parse_expr("sin(x0)*x1", 2)
    pts = np.array([[0.2, 1.0], [0.7, -2.0], [1.1, 0.5]])
    coords = [Taylor2(pts[:, 0], 1.0), Taylor2(pts[:, 1], 0.0)]
    t = eval_taylor2(e, coords)
    assert np.allclose(t.a0, np.sin(pts[:, 0]) * pts[:, 1])
    assert np.allclose(t.a1, np.cos(pts[:, 0]) * pts[:, 1])


def test_eval_values_matches_jets():
    e = parse_expr("exp(x0)*cos(x1) + x0/x1", 2)
    pts = np.array([[0.3, 0.9], [1.2, 2.0]])
    vals = eval_values(e, pts)
    for k in range(2):
        assert abs(vals[k] - eval_jet2(e, pts[k]).value) < 1e-14


def _acceptable(e, x, dim):
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            j = eval_jet2(e, x)
    except DomainError:
        return None
    mags = [abs(j.value), float(np.max(np.abs(j.gradient))), float(np.max(np.abs(j.hessian)))]
    if not all(np.isfinite(mags)) or max(mags) > 1e6:
        return None
    # Finite differences need a margin of domain validity around x.
    try:
        for delta in (-2e-3, 2e-3):
            for i in range(dim):
                y = np.array(x)
                y[i] += delta
                eval_scalar(e, y)
    except DomainError:
        return None
    return j


def test_jets_match_finite_differences_on_random_expressions():
    rng = np.random.default_rng(42)
    dim = 3
    checked = 0
    while checked < 1000:
        e = random_expr(rng, dim, depth=6)
        x = rng.uniform(0.3, 1.2, size=dim)
        j = _acceptable(e, x, dim)
        if j is None:
            continue
        checked += 1
        f = lambda y: eval_scalar(e, y)
        fd_g = fd_gradient(f, x)
        fd_h = fd_hessian(f, x)
        gtol = 1e-6 * (1.0 + float(np.max(np.abs(j.gradient))))
        assert np.max(np.abs(j.gradient - fd_g)) <= gtol
        htol = 1e-4 * (1.0 + float(np.max(np.abs(j.hessian))))
        assert np.max(np.abs(j.hessian - fd_h)) <= htol
