import math

import numpy as np
import pytest

from slconv import errors, families, kernel


def test_cosine_kernel_closed_form():
    prob = families.make_family("cosine").problem
    xs = np.linspace(0.2, 3.0, 15)
    for lam in (0.5, 4.0, 25.0):
        w, w1, err = kernel.eval_kernel_many_full(prob, lam, xs)
        want = np.cos(math.sqrt(lam) * xs)
        np.testing.assert_allclose(w, want, atol=1e-10)
        np.testing.assert_allclose(w1, -math.sqrt(lam)
                                   * np.sin(math.sqrt(lam) * xs),
                                   atol=1e-9)
        assert np.all(err < 1e-8)


def test_kernel_value_at_left_endpoint():
    prob = families.make_family("cosine").problem
    kv = kernel.eval_kernel(prob, 7.0, prob.a)
    assert kv.w == 1.0
    assert kv.w1 == 0.0


def test_kernel_lambda_zero_is_one():
    for name, params in (("hankel", {"alpha": 0.5}),
                         ("squared_weight", {})):
        prob = families.make_family(name, params).problem
        w = kernel.eval_kernel_many(prob, 0.0, np.linspace(0.3, 2.0, 7))
        np.testing.assert_allclose(w, 1.0, atol=1e-10)


def test_kernel_rejects_negative_lambda():
    prob = families.make_family("cosine").problem
    with pytest.raises(errors.ValidationError):
        kernel.eval_kernel(prob, -1.0, 1.0)


def test_kernel_rejects_x_outside_interval():
    prob = families.make_family("cosine").problem
    with pytest.raises(errors.ValidationError):
        kernel.eval_kernel(prob, 1.0, -0.5)


def test_truncated_kernel_requires_interior_cut():
    prob = families.make_family("hankel", {"alpha": 0.0}).problem
    with pytest.raises(errors.ValidationError):
        kernel.eval_kernel_truncated(prob, 1.0, 1.0, 2.0)


def test_eta_sequence_cosine():
    # cosine: eta_j(x) = x^(2j) / (2j)!
    prob = families.make_family("cosine").problem
    xs = np.linspace(0.2, 2.0, 8)
    tab = kernel.eta_sequence(prob, xs, 3)
    for j in (1, 2, 3):
        want = xs ** (2 * j) / math.factorial(2 * j)
        np.testing.assert_allclose(tab.values[j], want, rtol=1e-9)


def test_moment_functions_cosine():
    prob = families.make_family("cosine").problem
    mf = kernel.moment_functions(prob)
    assert mf.kappa == pytest.approx(0.0, abs=1e-6)
    # phi2 = 2 eta_1 = x^2
    for x in (0.5, 1.0, 2.0):
        assert mf.phi2(x) == pytest.approx(x * x, rel=1e-6)
        assert mf.phi1(x) == pytest.approx(0.0, abs=1e-6)


def test_moment_functions_hankel():
    # hankel alpha: phi2(x) = x^2 / (2 alpha + 2)
    prob = families.make_family("hankel", {"alpha": 0.5}).problem
    mf = kernel.moment_functions(prob)
    for x in (0.5, 1.5):
        assert mf.phi2(x) == pytest.approx(x * x / 3.0, rel=1e-5)


def test_kernel_derivative_consistent_with_fd():
    prob = families.make_family("squared_weight").problem
    lam = 3.0
    x = 1.2
    eps = 1e-5
    w, w1, _ = kernel.eval_kernel_many_full(
        prob, lam, np.array([x - eps, x, x + eps]))
    fd = (w[2] - w[0]) / (2 * eps)
    # w1 is the p-weighted derivative p w'; here p = (1+x)^2
    assert w1[1] / prob.p_val(x) == pytest.approx(fd, rel=1e-6)
