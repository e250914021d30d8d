import math

import numpy as np
import pytest

from conftest import smooth_bump
from slconv import errors, families, measures, spectral


def test_forward_transform_cosine_gaussian():
    # integral of exp(-x^2) cos(sqrt(lam) x) dx = sqrt(pi)/2 exp(-lam/4)
    prob = families.make_family("cosine").problem
    for lam in (0.0, 1.0, 4.0, 10.0):
        got = spectral.forward_transform(
            prob, lambda x: np.exp(-np.asarray(x, dtype=float) ** 2), lam)
        want = 0.5 * math.sqrt(math.pi) * math.exp(-lam / 4.0)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_forward_transform_x_support_window():
    prob = families.make_family("cosine").problem
    h = smooth_bump
    full = spectral.forward_transform(prob, h, 2.0)
    windowed = spectral.forward_transform(prob, h, 2.0,
                                          x_support=(0.0, 2.0))
    assert windowed == pytest.approx(full, rel=1e-10)


def test_forward_transform_closed_kernel_agrees():
    fam = families.make_family("hankel", {"alpha": 0.5})
    v1 = spectral.forward_transform(fam.problem, smooth_bump, 3.0,
                                    x_support=(0.0, 2.0))
    v2 = spectral.forward_transform(fam.problem, smooth_bump, 3.0,
                                    x_support=(0.0, 2.0),
                                    closed_kernel=fam.closed_kernel)
    assert v1 == pytest.approx(v2, rel=1e-8)


def test_forward_transform_tail_not_decaying():
    prob = families.make_family("cosine").problem
    with pytest.raises(errors.TailNotDecaying):
        spectral.forward_transform(prob, lambda x: np.ones_like(
            np.asarray(x, dtype=float)), 0.0)


def test_measure_transform_atoms():
    fam = families.make_family("cosine")
    mu = measures.MeasureRepr(atoms=((1.0, 0.5), (2.0, 0.5)))
    got = spectral.measure_transform(fam.problem, mu, 4.0,
                                     closed_kernel=fam.closed_kernel)
    want = 0.5 * math.cos(2.0) + 0.5 * math.cos(4.0)
    assert got == pytest.approx(want, rel=1e-12)


def test_measure_transform_at_zero_is_mass():
    fam = families.make_family("hankel", {"alpha": 0.5})
    g = np.linspace(0.5, 1.5, 21)
    mu = measures.MeasureRepr(
        atoms=((0.3, 0.25),),
        segments=(measures.Segment(0.5, 1.5, g, np.full(21, 0.75)),))
    got = spectral.measure_transform(fam.problem, mu, 0.0)
    assert got == pytest.approx(measures.total_mass(mu), rel=1e-12)


def test_inverse_transform_round_trip_cosine():
    # phi(lam) = exp(-t lam) inverts to the folded heat kernel
    fam = families.make_family("cosine")
    t = 0.4
    for x in (0.0, 0.7, 1.5):
        got = spectral.inverse_transform(fam,
                                         lambda lam: math.exp(-t * lam), x)
        want = ((math.exp(-x * x / (4 * t)) + math.exp(-x * x / (4 * t)))
                / math.sqrt(4 * math.pi * t))
        assert got == pytest.approx(want, rel=1e-7, abs=1e-10)


def test_spectral_measure_density_conversion():
    fam = families.make_family("cosine")
    lam = 4.0
    tau = 2.0
    want = fam.spectral.tau_density(np.array([tau]))[0] / (2 * tau)
    got = fam.spectral.density(np.array([lam]))[0]
    assert got == pytest.approx(want, rel=1e-13)
