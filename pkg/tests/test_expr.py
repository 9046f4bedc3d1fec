import numpy as np
import pytest

from lkvol.errors import ParseError
from lkvol.expr import (
    BinOp,
    Call,
    Neg,
    Num,
    Pi,
    Var,
    parse_expr,
    substitute,
    to_source,
)
from helpers import random_expr


def test_parse_power_of_function():
    assert parse_expr("sin(x0)^2", 2) == BinOp("^", Call("sin", Var(0)), Num(2.0))


def test_parse_precedence_div_add():
    assert parse_expr("1/(2+x1)", 2) == BinOp("/", Num(1.0), BinOp("+", Num(2.0), Var(1)))


def test_parse_var_out_of_range():
    with pytest.raises(ParseError, match="out of range"):
        parse_expr("x2", 2)


def test_parse_unknown_identifier():
    with pytest.raises(ParseError, match="unknown identifier"):
        parse_expr("foo + 1", 2)


def test_parse_syntax_error_reports_offset():
    with pytest.raises(ParseError) as exc:
        parse_expr("1 + * 2", 1)
    assert exc.value.offset == 4


def test_parse_empty():
    with pytest.raises(ParseError):
        parse_expr("   ", 1)


def test_unary_minus_binds_looser_than_power():
    # -x0^2 is -(x0^2)
    assert parse_expr("-x0^2", 1) == Neg(BinOp("^", Var(0), Num(2.0)))


def test_power_right_associative():
    assert parse_expr("2^x0^2", 1) == BinOp("^", Num(2.0), BinOp("^", Var(0), Num(2.0)))


def test_negative_exponent_parses():
    assert parse_expr("x0^-1", 1) == BinOp("^", Var(0), Neg(Num(1.0)))


def test_whitespace_insensitive():
    assert parse_expr(" sin( x0 ) ^ 2 ", 1) == parse_expr("sin(x0)^2", 1)


def test_scientific_literals():
    assert parse_expr("1e-05 + 2.5E3", 1) == BinOp("+", Num(1e-05), Num(2500.0))


def test_pi_constant():
    assert parse_expr("pi/2", 1) == BinOp("/", Pi(), Num(2.0))


def test_print_parenthesizes_only_when_needed():
    e = parse_expr("(x0+1)*x1", 2)
    assert to_source(e) == "(x0+1.0)*x1"
    e = parse_expr("x0-(x1-1)", 2)
    assert to_source(e) == "x0-(x1-1.0)"


def test_roundtrip_random_asts():
    rng = np.random.default_rng(7)
    for _ in range(400):
        e = random_expr(rng, dim=3, depth=6)
        assert parse_expr(to_source(e), 3) == e


def test_substitute_freezes_and_remaps():
    e = parse_expr("x0*sin(x2) + x1", 3)
    out = substitute(e, {2: 0.5}, {0: 0, 1: 1})
    assert out == BinOp(
        "+", BinOp("*", Var(0), Call("sin", Num(0.5))), Var(1)
    )
