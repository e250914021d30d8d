import math

import numpy as np
import pytest

from slconv import errors, expr


def test_parse_evaluate_basic():
    ast = expr.parse("2*x^2 + 3*x - 1")
    assert expr.evaluate(ast, 2.0) == pytest.approx(13.0)
    xs = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(expr.evaluate(ast, xs),
                               [-1.0, 4.0, 13.0])


def test_precedence_and_unary_minus():
    assert expr.evaluate(expr.parse("-x^2"), 3.0) == pytest.approx(-9.0)
    assert expr.evaluate(expr.parse("2 + 3*4^2"), 0.0) == pytest.approx(50.0)
    assert expr.evaluate(expr.parse("(2 + 3)*4"), 0.0) == pytest.approx(20.0)


def test_power_right_associative():
    # 2^(3^2) = 512, not (2^3)^2 = 64
    assert expr.evaluate(expr.parse("2^3^2"), 0.0) == pytest.approx(512.0)


def test_functions():
    assert expr.evaluate(expr.parse("exp(log(x))"), 2.5) \
        == pytest.approx(2.5)
    assert expr.evaluate(expr.parse("sqrt(x^2)"), 3.0) == pytest.approx(3.0)
    assert expr.evaluate(expr.parse("cosh(x)^2 - sinh(x)^2"), 1.3) \
        == pytest.approx(1.0)


def test_unparse_round_trip():
    for src in ("x^2 + 1", "exp(-x/2)", "(1 + x)^(-1)", "x*sqrt(1 + x)"):
        ast = expr.parse(src)
        again = expr.parse(expr.unparse(ast))
        xs = np.linspace(0.1, 2.0, 7)
        np.testing.assert_array_equal(
            np.asarray(expr.evaluate(ast, xs), dtype=float),
            np.asarray(expr.evaluate(again, xs), dtype=float))


def test_diff_chain_and_product():
    ast = expr.parse("x^2*exp(-x)")
    d = expr.diff(ast)
    x = 1.7
    want = 2 * x * math.exp(-x) - x * x * math.exp(-x)
    assert expr.evaluate(d, x) == pytest.approx(want, rel=1e-12)


def test_syntax_errors():
    for bad in ("", "x +", "(x", "x**2", "foo(x)", "1..2"):
        with pytest.raises(errors.ValidationError):
            expr.parse(bad)


def test_domain_error_on_nonfinite():
    with pytest.raises(errors.DomainError):
        expr.evaluate(expr.parse("1/x"), 0.0)
    with pytest.raises(errors.DomainError):
        expr.evaluate(expr.parse("log(x - 5)"), 1.0)


def test_non_ascii_rejected():
    with pytest.raises(errors.ValidationError):
        expr.parse("x²")
