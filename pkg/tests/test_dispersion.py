"""Dispersion relation, spatial roots, essential curves."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from triggerfront import ModelParams, essential_curve, spatial_roots
from triggerfront.dispersion import (dispersion_dnu, eval_dispersion,
                                     order_roots)
from triggerfront.errors import ValidationError

speeds = st.floats(min_value=0.1, max_value=4.0)
chis = st.sampled_from([1.0, -1.0, 0.5, 2.0])
lams = st.complex_numbers(min_magnitude=0.0, max_magnitude=8.0,
                          allow_nan=False, allow_infinity=False)


def test_dispersion_at_root_is_zero():
    # d(lambda(ik), ik) = 0 for the essential curve by construction
    for chi in (1.0, -1.0):
        for k in (0.3, 1.0, 2.5):
            lam = -k ** 4 + chi * k ** 2 + 1j * 1.5 * k
            assert abs(eval_dispersion(chi, 1.5, lam, 1j * k)) < 1e-12


def test_quartic_vieta():
    # the four roots must reproduce the quartic's coefficients:
    # nu^4 + chi nu^2 - c nu + lam = 0
    chi, c, lam = 1.0, 1.6, 0.3 + 1.1j
    nu = spatial_roots(chi, c, lam).nu
    assert abs(np.sum(nu)) < 1e-12                       # e1 = 0
    e2 = sum(nu[i] * nu[j] for i in range(4) for j in range(i + 1, 4))
    assert abs(e2 - chi) < 1e-12
    assert abs(np.prod(nu) - lam) < 1e-10


def test_residuals_reported():
    rs = spatial_roots(-1.0, 1.5, 2.0 - 0.7j)
    assert rs.residuals.shape == (4,)
    assert np.all(rs.residuals < 1e-10)


def test_root_ordering_descending_real():
    rs = spatial_roots(1.0, 1.5, 0.5 + 1.0j)
    re = rs.nu.real
    assert np.all(np.diff(re) <= 1e-9 * np.maximum(1.0, np.abs(re[:-1])))


def test_order_roots_tie_broken_by_imag():
    z = np.array([1.0 + 1.0j, 1.0 - 1.0j, -2.0 + 0.0j, 0.5 + 0.0j])
    out = order_roots(z)
    assert out[0] == 1.0 + 1.0j and out[1] == 1.0 - 1.0j


@settings(deadline=None, max_examples=60)
@given(chis, speeds, lams)
def test_roots_deterministic(chi, c, lam):
    a = spatial_roots(chi, c, lam, order=True).nu
    b = spatial_roots(chi, c, lam, order=True).nu
    assert all(x == y for x, y in zip(a, b))


@settings(deadline=None, max_examples=60)
@given(chis, speeds, lams)
def test_conjugation_equivariance(chi, c, lam):
    # d(conj lam, conj nu) = conj d(lam, nu): the root sets are conjugate.
    # Compared as sets (sorting ties break on ulp-level real-part noise);
    # tolerance is sqrt(eps)-ish because lambda may land near a branch
    # point, where individual roots are conditioned like sqrt of the
    # data error even though the set identity is exact.
    a = spatial_roots(chi, c, lam).nu
    b = np.conj(spatial_roots(chi, c, np.conj(lam)).nu)
    dist = np.abs(a[:, None] - b[None, :])
    gap = max(dist.min(axis=1).max(), dist.min(axis=0).max())
    assert gap < 2e-7 * max(1.0, np.max(np.abs(a)))


@settings(deadline=None, max_examples=40)
@given(chis, speeds, st.floats(min_value=0.5, max_value=6.0),
       st.floats(min_value=-5.0, max_value=5.0))
def test_morse_index_two_right_of_spectrum(chi, c, re_off, im):
    # far right of the essential spectrum the splitting is hyperbolic 2+2
    lam = complex(chi ** 2 / 4 + 1.0 + re_off + c ** 2, im)
    rs = spatial_roots(chi, c, lam)
    assert rs.morse_index == 2


def test_essential_curve_matches_formula():
    k = np.linspace(-2.0, 2.0, 41)
    cur = essential_curve("plus", 1.5, 0.0, k, chi=1.0)
    expect = -k ** 4 + k ** 2 + 1j * 1.5 * k
    assert np.max(np.abs(cur.lam - expect)) < 1e-12


def test_essential_curve_weighted_shift():
    # eta > 0 evaluates the symbol at ik - eta; at k = 0 that is the
    # real point lambda(-eta), strictly to one side of the unweighted 0
    cur0 = essential_curve("minus", 1.5, 0.0, np.array([0.0]))
    cur = essential_curve("minus", 1.5, 0.3, np.array([0.0]))
    assert abs(cur0.lam[0]) < 1e-14
    assert cur.lam[0] != cur0.lam[0]


def test_model_params_collects_all_problems():
    with pytest.raises(ValidationError) as err:
        ModelParams(c=-1.0, ell=-2.0, beta=0.0)
    msg = str(err.value)
    assert "ell must be positive" in msg
    assert "c must be positive" in msg
    assert "beta must be positive" in msg


def test_chi_at_midpoint_convention():
    p = ModelParams(c=1.5, ell=20.0)
    assert p.chi_at(0.0) == 1.0
    assert p.chi_at(25.0) == -1.0
    assert p.chi_at(20.0) == 0.0
    assert p.chi_at(-20.0) == 0.0


def test_dispersion_dnu_is_derivative():
    chi, c, nu = 1.0, 1.6, -0.3 + 0.8j
    h = 1e-6
    fd = (eval_dispersion(chi, c, 0.0, nu + h)
          - eval_dispersion(chi, c, 0.0, nu - h)) / (2 * h)
    assert abs(dispersion_dnu(chi, c, nu) - fd) < 1e-6
