"""Normal-form coefficients: gauges, linearity in the cubic term, guards."""

import cmath
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triggerfront.branch_point import closed_form_spreading
from triggerfront.discrete_operator import build_operator, leading_pair
from triggerfront.dispersion import ModelParams
from triggerfront.errors import ResonantSolve, ValidationError
from triggerfront.evans import determinant_root
from triggerfront.hopf import (branch_prediction, hopf_analysis,
                               hopf_coefficient, leading_order_theta,
                               solve_quadratic_modes)

# reference coefficient at ell = 20, h = 0.04375, paper_AB gauge
THETA_20 = -0.22309318660175823 - 0.15976042042257305j


@pytest.fixture(scope="module")
def full20():
    return hopf_analysis(ModelParams(c=1.5, ell=20.0, gamma=1.0), h=0.04375)


@pytest.fixture(scope="module")
def pieces20(crossing_ell20):
    """Crossing, operator and normalized eigenpair shared by gauge tests."""
    cr = crossing_ell20
    params = ModelParams(c=cr.c_star, ell=20.0, gamma=1.0)
    op = build_operator(params, h=0.04375)
    pair = leading_pair(params, cr.lambda_star, op=op)
    modes = solve_quadratic_modes(op, pair, cr.lambda_star.imag)
    return cr, params, op, pair, modes


def test_reference_coefficient(full20):
    r = full20
    assert r.theta_plus == pytest.approx(THETA_20, rel=1e-10)
    assert r.theta_minus == pytest.approx(np.conj(r.theta_plus), rel=0,
                                          abs=1e-300)
    assert r.direction == "subcritical"          # gamma = +1
    assert r.c_star == pytest.approx(1.5638234676765133, rel=1e-10)
    assert r.omega_star == pytest.approx(1.17965221917849, rel=1e-10)
    assert r.mu_prime == pytest.approx(0.25946538281744796, rel=1e-8)
    assert r.upsilon_c == pytest.approx(r.theta_plus.real / r.mu_prime)
    assert r.upsilon_omega == r.theta_plus.imag
    assert r.sbp_gap < 1e-12
    assert r.fit_r2_p > 0.99 and r.fit_r2_psi > 0.97


def test_amplitude_gauge_is_enforced(full20):
    mu = closed_form_spreading(1.0).mu_lin
    assert full20.A ** 3 * full20.B == pytest.approx(
        math.exp(2.0 * mu * 20.0), rel=1e-10)
    # and the fitted amplitudes agree with the exact-profile construction
    assert full20.A == pytest.approx(0.023773871015571286, rel=1e-3)
    assert full20.B == pytest.approx(2.102081229382219, rel=1e-3)


def test_linearity_in_the_cubic_coefficient(pieces20):
    cr, params, op, pair, modes = pieces20
    base = hopf_coefficient(pair, modes, params, crossing=cr)
    flipped = hopf_coefficient(
        pair, modes, dataclasses.replace(params, gamma=-0.3), crossing=cr)
    assert flipped.theta_plus == pytest.approx(-0.3 * base.theta_plus,
                                               rel=1e-12)
    assert base.direction == "subcritical"
    assert flipped.direction == "supercritical"
    assert flipped.upsilon_c == pytest.approx(-0.3 * base.upsilon_c,
                                              rel=1e-12)


@settings(deadline=None, max_examples=25)
@given(gamma=st.floats(-5.0, 5.0).filter(lambda g: abs(g) > 1e-3))
def test_theta_scales_exactly_with_gamma(pieces20, gamma):
    cr, params, op, pair, modes = pieces20
    scaled = hopf_coefficient(
        pair, modes, dataclasses.replace(params, gamma=gamma), crossing=cr)
    assert scaled.theta_plus == pytest.approx(gamma * THETA_20, rel=1e-9)


def test_gauge_freedom(pieces20):
    # v -> s v, w -> w / conj(s) preserves <w, v> = 1; the paper_AB gauge
    # must erase the rescaling while the raw inner-product value picks up
    # exactly |s|^2
    cr, params, op, pair, modes = pieces20
    s = 2.0 * cmath.exp(0.7j)
    rescaled = dataclasses.replace(pair, v=s * pair.v,
                                   w=pair.w / np.conj(s))
    base_ab = hopf_coefficient(pair, modes, params, crossing=cr)
    resc_ab = hopf_coefficient(rescaled, modes, params, crossing=cr)
    assert resc_ab.theta_plus == pytest.approx(base_ab.theta_plus, rel=1e-9)
    base_ip = hopf_coefficient(pair, modes, params,
                               normalization="inner_product", crossing=cr)
    resc_ip = hopf_coefficient(rescaled, modes, params,
                               normalization="inner_product", crossing=cr)
    assert resc_ip.theta_plus == pytest.approx(abs(s) ** 2
                                               * base_ip.theta_plus, rel=1e-9)
    # the verdict is gauge-independent even though the magnitude is not
    assert base_ip.direction == base_ab.direction == resc_ip.direction


def test_coefficient_input_validation(pieces20):
    cr, params, op, pair, modes = pieces20
    with pytest.raises(ValidationError, match="normalization"):
        hopf_coefficient(pair, modes, params, normalization="l2",
                         crossing=cr)
    doubled = dataclasses.replace(pair, v=2.0 * pair.v)
    with pytest.raises(ValidationError, match="not normalized"):
        hopf_coefficient(doubled, modes, params, crossing=cr)
    bad_cross = dataclasses.replace(cr, dRe_dc=0.25)
    with pytest.raises(ValidationError, match="destabilizing"):
        hopf_coefficient(pair, modes, params, crossing=bad_cross)


def test_quadratic_modes_zero_shortcut(pieces20):
    cr, params, op, pair, modes = pieces20
    assert not np.any(modes.phi_plus)
    assert not np.any(modes.phi_zero)
    assert not np.any(modes.phi_minus)
    assert modes.residual_plus == 0.0 and modes.residual_zero == 0.0
    explicit = solve_quadratic_modes(op, pair, cr.lambda_star.imag,
                                     np.zeros(op.n))
    assert not np.any(explicit.phi_plus)
    with pytest.raises(ValidationError, match="fpp_profile"):
        solve_quadratic_modes(op, pair, cr.lambda_star.imag, np.ones(7))


def test_quadratic_modes_synthetic_interaction(pieces20):
    cr, params, op, pair, _ = pieces20
    omega = cr.lambda_star.imag
    fpp = np.exp(-op.x ** 2)
    m = solve_quadratic_modes(op, pair, omega, fpp)
    d2 = op.derivative(2)
    rhs_p = d2 @ (fpp * pair.v ** 2)
    rhs_0 = d2 @ (fpp * np.abs(pair.v) ** 2)
    lhs_p = 2j * omega * m.phi_plus - op.matrix @ m.phi_plus
    assert np.linalg.norm(lhs_p - rhs_p) < 1e-8 * np.linalg.norm(rhs_p)
    assert np.linalg.norm(op.matrix @ m.phi_zero + rhs_0) \
        < 1e-8 * np.linalg.norm(rhs_0)
    assert np.array_equal(m.phi_minus, np.conj(m.phi_plus))
    # real right-hand side, real operator: the zero mode stays real
    assert np.max(np.abs(m.phi_zero.imag)) < 1e-12 * np.max(np.abs(m.phi_zero))
    # quadratic homogeneity in the eigenfunction amplitude
    doubled = dataclasses.replace(pair, v=2.0 * pair.v)
    m2 = solve_quadratic_modes(op, doubled, omega, fpp)
    assert np.allclose(m2.phi_plus, 4.0 * m.phi_plus, rtol=1e-12, atol=0)
    assert np.allclose(m2.phi_zero, 4.0 * m.phi_zero, rtol=1e-12, atol=0)


def test_resonant_frequency_is_refused(crossing_ell20):
    # polish c until the crossing eigenvalue sits on the imaginary axis to
    # machine precision, then ask for modes at half that frequency: the
    # phi_+ shift 2 i omega lands exactly on the eigenvalue
    cr = crossing_ell20
    lam0 = determinant_root(ModelParams(c=cr.c_star, ell=20.0),
                            cr.lambda_star)
    c2 = cr.c_star - lam0.real / cr.dRe_dc
    params = ModelParams(c=c2, ell=20.0)
    lam = determinant_root(params, lam0)
    assert abs(lam.real) < 1e-12
    op = build_operator(params, h=0.0875)
    pair = leading_pair(params, lam, op=op)
    with pytest.raises(ResonantSolve, match="ill-posed"):
        solve_quadratic_modes(op, pair, lam.imag / 2.0, np.exp(-op.x ** 2))


def test_leading_order_coefficient():
    lead = leading_order_theta(1.0, 1.0)
    assert lead == pytest.approx(-1.1414201982564327 - 17.011433276598947j,
                                 rel=1e-12)
    for alpha in (0.5, 1.0, 2.0):
        one = leading_order_theta(alpha, 1.0)
        assert leading_order_theta(alpha, -2.5) == pytest.approx(-2.5 * one,
                                                                 rel=1e-14)
        assert one.real < 0                      # Re[(2nu+nubar)^2] < 0
        sp = closed_form_spreading(alpha)
        mu, kappa = sp.nu_lin.real, sp.nu_lin.imag
        assert (2 * sp.nu_lin + np.conj(sp.nu_lin)) ** 2 == pytest.approx(
            9 * mu ** 2 - kappa ** 2 + 6j * mu * kappa, rel=1e-14)
    with pytest.raises(ValidationError):
        leading_order_theta(-1.0, 1.0)


def test_branch_prediction_geometry(full20, pieces20):
    rows = branch_prediction(full20, [0.0, 0.1, 0.2])
    assert rows[0] == (0.0, full20.c_star, full20.omega_star)
    for r, c, om in rows:
        assert c == pytest.approx(full20.c_star - full20.upsilon_c * r ** 2)
        assert om == pytest.approx(full20.omega_star
                                   + full20.upsilon_omega * r ** 2)
    # gamma > 0 is subcritical: the branch bends toward *larger* c, into
    # the region where the front is still spectrally stable
    assert rows[1][1] > full20.c_star and rows[2][1] > rows[1][1]
    cr, params, op, pair, modes = pieces20
    sup = hopf_coefficient(pair, modes,
                           dataclasses.replace(params, gamma=-1.0),
                           crossing=cr)
    assert sup.direction == "supercritical"
    assert branch_prediction(sup, [0.1])[0][1] < sup.c_star
    with pytest.raises(ValidationError):
        branch_prediction(full20, [-0.1])
