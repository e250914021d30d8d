import numpy as np
import pytest

from slconv import errors, families, slmodel


def test_classify_boundary_oracles():
    cosine = families.make_family("cosine").problem
    assert slmodel.classify_boundary(cosine, "left").kind == "regular"
    assert slmodel.classify_boundary(cosine, "right").kind == "natural"
    bessel = families.make_family("hankel", {"alpha": 0.0}).problem
    assert slmodel.classify_boundary(bessel, "left").kind == "entrance"


def test_validate_left_endpoint_accepts_builtin():
    for name, params in (("cosine", {}), ("hankel", {"alpha": 0.5})):
        prob = families.make_family(name, params).problem
        slmodel.validate_left_endpoint(prob)   # must not raise


def test_custom_problem_from_dict_and_eval():
    prob = slmodel.custom_problem_from_dict(
        {"p": "1", "r": "(1 + x)^2", "a": 0.0, "b": "inf", "c": 1.0})
    xs = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(prob.r_val(xs), (1 + xs) ** 2)
    assert prob.p_val(1.5) == pytest.approx(1.0)


def test_custom_problem_missing_key():
    with pytest.raises(errors.ValidationError):
        slmodel.custom_problem_from_dict({"p": "1", "a": 0.0})


def test_to_standard_form_cosine_identity():
    prob = families.make_family("cosine").problem
    sf = slmodel.to_standard_form(prob)
    xs = np.linspace(0.1, 2.0, 9)
    np.testing.assert_allclose(sf.A(xs), np.ones_like(xs), rtol=1e-12)


def test_check_mp_assumption_builtin():
    # hankel alpha=1/2: the standard coordinate is xi = x - 1 (gamma is
    # anchored at c = 1), so A = (xi + 1)^2 and eta = A'/A = 2/(xi + 1)
    prob = families.make_family("hankel", {"alpha": 0.5}).problem
    rep = slmodel.check_mp_assumption(prob, "2/(x+1)")
    assert rep.admissible
    assert not rep.violations


def test_graded_grid_endpoints():
    g = slmodel.graded_grid(0.0, 1.0, 50)
    assert g[0] == pytest.approx(0.0, abs=1e-7)
    assert g[-1] == pytest.approx(1.0)
    assert np.all(np.diff(g) > 0)
