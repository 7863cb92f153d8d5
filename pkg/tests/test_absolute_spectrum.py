"""Absolute-spectrum tracing from the pinched branch point."""

import numpy as np
import pytest

from triggerfront import (closed_form_spreading, find_double_root,
                          genericity_check, rightmost_absolute,
                          trace_absolute)
from triggerfront.dispersion import eval_dispersion


@pytest.fixture(scope="module")
def curve_alpha1():
    sp = closed_form_spreading(1.0)
    bp = find_double_root(1.0, sp.c_lin, (sp.lam_lin, sp.nu_lin))
    return trace_absolute(bp, arclength_max=5.0)


def test_curve_starts_at_branch_point(curve_alpha1):
    p0 = curve_alpha1.points[0]
    assert p0.gamma_sep == 0.0
    assert abs(p0.lam - curve_alpha1.origin.lam) < 1e-10


def test_gamma_strictly_increasing(curve_alpha1):
    g = curve_alpha1.gamma
    assert np.all(np.diff(g) > 0)


def test_points_satisfy_both_dispersion_relations(curve_alpha1):
    # lambda on the curve is hit by both nu and nu + i*gamma
    chi, c = curve_alpha1.chi, curve_alpha1.c
    for p in curve_alpha1.points[:: max(1, len(curve_alpha1.points) // 17)]:
        nu2, nu3 = p.nu_pair
        assert abs(nu2.real - nu3.real) < 1e-9
        assert abs(eval_dispersion(chi, c, p.lam, nu2)) < 1e-8
        assert abs(eval_dispersion(chi, c, p.lam, nu3)) < 1e-8


def test_curve_moves_left(curve_alpha1):
    # the branch point is the rightmost point of this absolute spectrum
    re = curve_alpha1.lam.real
    assert re[0] == max(re)
    assert re[-1] < re[0] - 0.1


def test_genericity_along_curve(curve_alpha1):
    assert genericity_check(curve_alpha1)


def test_rightmost_is_branch_point():
    sp = closed_form_spreading(1.0)
    lam = rightmost_absolute(1.0, sp.c_lin)
    assert lam.imag > 0
    assert abs(lam - sp.lam_lin) < 1e-8


def test_rightmost_moves_left_for_larger_speed():
    # faster frames are more convectively stable: Re lambda_br decreases
    sp = closed_form_spreading(1.0)
    a = rightmost_absolute(1.0, sp.c_lin).real
    b = rightmost_absolute(1.0, sp.c_lin + 0.2).real
    assert b < a < 1e-10
