"""Double roots, closed-form spreading constants, pinching."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from triggerfront import (all_double_roots, closed_form_spreading,
                          find_double_root, find_spreading_speed,
                          pinching_check)
from triggerfront.dispersion import dispersion_dnu, eval_dispersion
from triggerfront.errors import ValidationError

# frozen against an mpmath (60 dps) evaluation of the closed forms,
# residual-checked in the dispersion relation
C_LIN_1 = 1.6220759259174334
MU_LIN_1 = -0.26186441395187308
KAPPA_LIN_1 = 0.84007077909130599
LAM_LIN_1 = 1.2419785823678706


def test_closed_form_alpha_one():
    sp = closed_form_spreading(1.0)
    assert sp.c_lin == pytest.approx(C_LIN_1, rel=1e-14)
    assert sp.mu_lin == pytest.approx(MU_LIN_1, rel=1e-14)
    assert sp.kappa_lin == pytest.approx(KAPPA_LIN_1, rel=1e-14)
    assert sp.lam_lin.real == 0.0
    assert sp.lam_lin.imag == pytest.approx(LAM_LIN_1, rel=1e-14)


def test_closed_form_satisfies_dispersion():
    for alpha in (0.5, 1.0, 2.0, 3.7):
        sp = closed_form_spreading(alpha)
        d = eval_dispersion(alpha, sp.c_lin, sp.lam_lin, sp.nu_lin)
        dn = dispersion_dnu(alpha, sp.c_lin, sp.nu_lin)
        assert abs(d) < 1e-10 * max(1.0, alpha ** 2)
        assert abs(dn) < 1e-10 * max(1.0, alpha ** 1.5)


@settings(deadline=None, max_examples=40)
@given(st.floats(min_value=0.05, max_value=8.0))
def test_closed_form_scaling_laws(alpha):
    # the whole family is a rescaling of alpha = 1:
    # c ~ alpha^{3/2}, nu ~ alpha^{1/2}, lambda ~ alpha^2
    sp = closed_form_spreading(alpha)
    one = closed_form_spreading(1.0)
    assert sp.c_lin == pytest.approx(one.c_lin * alpha ** 1.5, rel=1e-12)
    assert sp.mu_lin == pytest.approx(one.mu_lin * alpha ** 0.5, rel=1e-12)
    assert sp.lam_lin.imag == pytest.approx(
        one.lam_lin.imag * alpha ** 2, rel=1e-12)


def test_closed_form_rejects_nonpositive():
    with pytest.raises(ValidationError):
        closed_form_spreading(0.0)
    with pytest.raises(ValidationError):
        closed_form_spreading(-1.0)


def test_newton_double_root_matches_closed_form():
    sp = closed_form_spreading(1.0)
    bp = find_double_root(1.0, sp.c_lin,
                          (sp.lam_lin * 1.001, sp.nu_lin * 0.999))
    assert abs(bp.lam - sp.lam_lin) < 1e-10
    assert abs(bp.nu - sp.nu_lin) < 1e-10
    assert bp.residual_d < 1e-12 and bp.residual_dnu < 1e-12
    assert abs(bp.d_nunu) > 0.1  # simple double root, not a triple


def test_spreading_speed_bisection():
    for alpha in (0.5, 2.0):
        sp = closed_form_spreading(alpha)
        bp = find_spreading_speed(alpha, alpha)
        assert bp.c == pytest.approx(sp.c_lin, rel=1e-8)
        assert bp.pinched is True


def test_all_double_roots_come_in_conjugate_pairs():
    bps = all_double_roots(1.0, 1.6220759259174334)
    lams = sorted((bp.lam for bp in bps), key=lambda z: (z.imag, z.real))
    ups = [z for z in lams if z.imag > 1e-9]
    downs = [z for z in lams if z.imag < -1e-9]
    assert len(ups) == len(downs)
    for z in ups:
        assert min(abs(np.conj(z) - w) for w in downs) < 1e-8


def test_pinching_tail_signs():
    bp = find_spreading_speed(1.0, 1.0)
    pr = pinching_check(bp)
    assert pr.pinched
    re0, re1 = pr.re_tail
    assert (re0 > 0) != (re1 > 0)
    assert pr.t_final >= 100.0


def test_pinching_step_count_insensitive():
    # the verdict must not depend on the march resolution once the
    # quadratic spacing resolves the sqrt(t) splitting
    bp = find_spreading_speed(1.0, 1.0)
    a = pinching_check(bp, n_steps=300)
    b = pinching_check(bp, n_steps=2000)
    assert a.pinched == b.pinched == True  # noqa: E712
    assert np.allclose(sorted(a.re_tail), sorted(b.re_tail), rtol=1e-6)
