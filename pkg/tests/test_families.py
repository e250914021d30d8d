import math

import numpy as np
import pytest

from slconv import errors, families, measures


def test_make_family_unknown_name():
    with pytest.raises(errors.ValidationError):
        families.make_family("nope")


def test_family_cache_returns_same_object():
    f1 = families.make_family("hankel", {"alpha": 0.5})
    f2 = families.make_family("hankel", alpha=0.5)
    assert f1 is f2


def test_cosine_closed_kernel():
    fam = families.make_family("cosine")
    xs = np.linspace(0.0, 3.0, 10)
    np.testing.assert_allclose(np.real(fam.closed_kernel(4.0, xs)),
                               np.cos(2.0 * xs), rtol=1e-13)


def test_hankel_half_closed_kernel_is_sinc():
    fam = families.make_family("hankel", {"alpha": 0.5})
    xs = np.linspace(0.1, 3.0, 10)
    np.testing.assert_allclose(np.real(fam.closed_kernel(9.0, xs)),
                               np.sin(3.0 * xs) / (3.0 * xs), rtol=1e-12)


def test_conv_sampled_is_probability_measure():
    cases = [("cosine", {}), ("squared_weight", {}),
             ("hankel", {"alpha": 0.5}), ("hankel", {"alpha": 0.0}),
             ("jacobi", {"alpha": 1.0, "beta": 0.0}),
             ("whittaker", {"alpha": 0.0})]
    for name, params in cases:
        fam = families.make_family(name, params)
        a = fam.problem.a
        nu = fam.conv_sampled(a + 0.8, a + 1.3)
        assert measures.total_mass(nu) == pytest.approx(1.0, abs=1e-8), name


def test_cosine_convolution_atoms():
    fam = families.make_family("cosine")
    nu = fam.conv_sampled(1.0, 2.0)
    assert dict(nu.atoms) == {1.0: 0.5, 3.0: 0.5}


def test_hankel_convolution_support():
    # Kingman convolution is supported on [|x-y|, x+y]
    fam = families.make_family("hankel", {"alpha": 0.5})
    nu = fam.conv_sampled(1.0, 2.0)
    lo = min(seg.l for seg in nu.segments)
    hi = max(seg.u for seg in nu.segments)
    assert lo >= 1.0 - 1e-12
    assert hi <= 3.0 + 1e-12


def test_convolution_with_identity_atom():
    # delta_a is the unit: nu_{a,y} = delta_y
    for name, params in (("hankel", {"alpha": 0.5}),
                         ("whittaker", {"alpha": 0.0})):
        fam = families.make_family(name, params)
        a = fam.problem.a
        nu = families.family_convolution_measure(fam, a, a + 1.2)
        assert dict(nu.atoms) == {a + 1.2: 1.0}
        assert not nu.segments


def test_spectral_density_positive():
    for name, params in (("jacobi", {"alpha": 1.0, "beta": 0.0}),
                         ("whittaker", {"alpha": 0.0})):
        fam = families.make_family(name, params)
        taus = np.linspace(0.1, 8.0, 25)
        dens = np.asarray(fam.spectral.tau_density(taus), dtype=float)
        assert np.all(dens > 0), name


def test_load_family_round_trip():
    fam = families.load_family({"family": "hankel",
                                "params": {"alpha": 0.5}})
    assert fam.id == "hankel"
    assert fam.param("alpha") == 0.5


def test_eval_special_dispatch():
    val = families.eval_special("bessel_j_normalized", [0.5], 1.0)
    assert val == pytest.approx(math.sin(1.0), rel=1e-12)
    with pytest.raises(errors.ValidationError):
        families.eval_special("nope", [], 1.0)
