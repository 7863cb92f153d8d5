"""Stencils, quadrature weights, grid assembly, and the dense/sparse solvers."""

import numpy as np
import pytest
import scipy.sparse as sparse
from hypothesis import given, settings
from hypothesis import strategies as st

from triggerfront.discrete_operator import (DENSE_LIMIT, build_operator,
                                            derivative_matrix, gregory_weights,
                                            leading_pair, spectrum)
from triggerfront.dispersion import ModelParams
from triggerfront.errors import (EigensolverFailure, GeometryMismatch,
                                 NoEigenvalueNearSeed, ValidationError)


def _grid(L, h):
    n = int(round(2 * L / h)) - 1
    return n, -L + h * np.arange(1, n + 1)


@pytest.mark.parametrize("order,degmax", [(1, 4), (2, 5)])
def test_interior_rows_exact_on_polynomials(order, degmax):
    # the 4th-order central stencils have error terms proportional to
    # u^(order+4) (odd orders) or u^(order+4) with the odd part cancelled,
    # so they reproduce polynomial derivatives exactly up to degmax
    n, h = 101, 0.01
    x = -0.5 + h * np.arange(1, n + 1)
    D = derivative_matrix(n, h, order)
    for deg in range(degmax + 1):
        u = x ** deg
        if deg >= order:
            du = np.prod(np.arange(deg, deg - order, -1.0)) * x ** (deg - order)
        else:
            du = np.zeros_like(x)
        err = np.max(np.abs((D @ u - du)[4:-4]))
        assert err < 1e-10, f"order {order}, degree {deg}: {err:.3e}"


@pytest.mark.parametrize("order", [1, 2, 4])
def test_fourth_order_convergence_including_folded_rows(order):
    # u = cos^2(pi x / 2) on [-1, 1] has every odd derivative equal to zero
    # at the boundary, so the even-reflection ghost fold is *exact* for it
    # and the max-norm error must show the interior stencil's O(h^4) rate
    # on all rows, the folded ones included
    k = np.pi
    dfac = {1: -k / 2, 2: -k ** 2 / 2, 4: k ** 4 / 2}[order]
    dfun = {1: np.sin, 2: np.cos, 4: np.cos}[order]
    errs = []
    for h in (0.05, 0.025, 0.0125):
        n, x = _grid(1.0, h)
        u = 0.5 * (1.0 + np.cos(k * x))
        err = derivative_matrix(n, h, order) @ u - dfac * dfun(k * x)
        errs.append(np.max(np.abs(err)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.5), f"rates {rates} for order {order}"


def test_gregory_weights_constants_and_order():
    n, h = 40, 0.25
    w = gregory_weights(n, h)
    assert w[:3] == pytest.approx([3 * h / 8, 7 * h / 6, 23 * h / 24], abs=0)
    assert np.array_equal(w, w[::-1])
    assert np.all(w[3:-3] == h)
    assert w.sum() == pytest.approx((n - 1) * h, rel=1e-14)
    # exact on cubics ...
    for deg in range(4):
        x = np.arange(n) * h
        width = (n - 1) * h
        assert w @ x ** deg == pytest.approx(
            width ** (deg + 1) / (deg + 1), rel=1e-12)
    # ... and fourth-order on smooth integrands
    errs = []
    for m in (41, 81, 161):
        hh = 1.0 / (m - 1)
        x = np.arange(m) * hh
        errs.append(abs(gregory_weights(m, hh) @ np.sin(3 * x)
                        - (1 - np.cos(3.0)) / 3.0))
    rate = np.log2(errs[0] / errs[1])
    assert 3.5 < rate < 4.5
    with pytest.raises(ValidationError):
        gregory_weights(7, 0.1)


def test_assembly_matches_stated_formula():
    params = ModelParams(c=1.3, ell=4.0)
    op = build_operator(params, L_half=8.0, h=0.1)
    d1 = derivative_matrix(op.n, op.h, 1)
    d2 = derivative_matrix(op.n, op.h, 2)
    d4 = derivative_matrix(op.n, op.h, 4)
    expected = (-d4 - d2 @ sparse.diags(op.chi) + params.c * d1).tocsr()
    diff = abs(op.matrix - expected).max()
    assert diff == 0.0
    u = np.sin(op.x)
    assert np.array_equal(op.apply(u), op.matrix @ u)
    assert abs(op.derivative(2) - d2).max() == 0.0


def test_trigger_sampling_midpoint_rule():
    params = ModelParams(c=1.3, ell=4.0)
    op = build_operator(params, L_half=8.0, h=0.1)
    j = int(np.argmin(np.abs(op.x - params.ell)))
    assert op.x[j] == pytest.approx(4.0, abs=1e-12)
    assert op.chi[j] == pytest.approx(0.0, abs=0)      # (chi_+ + chi_-)/2
    assert op.chi[j - 1] == 1.0 and op.chi[j + 1] == -1.0
    assert np.all(op.chi[np.abs(op.x) < params.ell - op.h] == 1.0)
    assert np.all(op.chi[np.abs(op.x) > params.ell + op.h] == -1.0)
    # interface off the grid: the nearest node still takes the midpoint
    off = build_operator(ModelParams(c=1.3, ell=4.03), L_half=8.0, h=0.1)
    jj = int(np.argmin(np.abs(off.x - 4.03)))
    assert off.chi[jj] == pytest.approx(0.0, abs=0)


def test_default_length_snaps_to_step():
    # the awkward step 0.04375 does not divide ell + 15 for ell = 40;
    # the default must round the half-length up rather than error out
    op = build_operator(ModelParams(c=1.6, ell=40.0), h=0.04375)
    assert op.L_half == pytest.approx(55.0375, abs=1e-12)
    assert op.L_half >= 55.0
    assert np.isclose(op.x, 0.0, atol=1e-12).any()
    # the workhorse geometry is unchanged by the snapping
    op20 = build_operator(ModelParams(c=1.5, ell=20.0), h=0.05)
    assert op20.L_half == 35.0


def test_geometry_errors():
    params = ModelParams(c=1.5, ell=4.0)
    with pytest.raises(GeometryMismatch, match="contain the plateau"):
        build_operator(params, L_half=3.0, h=0.1)
    with pytest.raises(GeometryMismatch, match="tile"):
        build_operator(params, L_half=10.0, h=0.3)
    with pytest.raises(GeometryMismatch, match="coarse"):
        build_operator(ModelParams(c=1.5, ell=0.5), L_half=1.0, h=0.25)
    with pytest.raises(ValidationError, match="eta"):
        build_operator(params, L_half=8.0, h=0.1, eta=-0.1)


@settings(deadline=None, max_examples=40)
@given(ell=st.floats(1.0, 6.0), h=st.floats(0.05, 0.2))
def test_default_geometry_always_tiles(ell, h):
    op = build_operator(ModelParams(c=1.0, ell=ell), h=h)
    steps = 2.0 * op.L_half / op.h
    assert abs(steps - round(steps)) < 1e-9
    assert np.isclose(op.x, 0.0, atol=1e-9).any()
    assert np.max(np.abs(op.x + op.x[::-1])) < 1e-9
    assert op.chi[0] == -1.0 and op.chi[-1] == -1.0


def test_spectrum_ordering_residuals_and_region():
    op = build_operator(ModelParams(c=1.2, ell=4.0), L_half=8.0, h=0.1)
    pairs = spectrum(op)
    assert len(pairs) == op.n
    res = np.array([p.lam.real for p in pairs])
    assert np.all(np.diff(res) <= 1e-12)
    assert all(p.residual < 1e-8 for p in pairs)
    for p in pairs[:20]:
        if p.normalized:
            assert op.h * np.vdot(p.w, p.v) == pytest.approx(1.0, abs=1e-8)
    # real matrix: non-real eigenvalues come in conjugate pairs
    lams = np.array([p.lam for p in pairs])
    offaxis = lams[np.abs(lams.imag) > 1e-8]
    dist = np.abs(offaxis[:, None] - np.conj(offaxis)[None, :])
    assert dist.min(axis=1).max() < 1e-6
    box = (-5.0, 1.0, -2.0, 2.0)
    inside = spectrum(op, region=box)
    assert all(box[0] <= p.lam.real <= box[1]
               and box[2] <= p.lam.imag <= box[3] for p in inside)
    assert len(inside) == int(np.sum(
        (lams.real >= box[0]) & (lams.real <= box[1])
        & (lams.imag >= box[2]) & (lams.imag <= box[3])))


def test_dense_limit_guard():
    op = build_operator(ModelParams(c=1.5, ell=20.0), h=0.0125)
    assert op.n > DENSE_LIMIT
    with pytest.raises(EigensolverFailure, match="dense limit"):
        spectrum(op)


def test_weighted_operator_is_a_similarity_transform(crossing_ell20):
    # W M W^{-1} has exactly the spectrum of M, so switching on the
    # exponential weight may move the *essential* spectrum of the
    # underlying problem but must leave the discrete eigenvalues alone
    params = ModelParams(c=1.2, ell=4.0)
    op = build_operator(params, L_half=8.0, h=0.1)
    opw = build_operator(params, L_half=8.0, h=0.1, eta=0.2)
    wgt = np.exp(0.2 * np.sqrt(1.0 + op.x ** 2))
    lhs = opw.matrix.toarray()
    rhs = (np.diag(wgt) @ op.matrix.toarray()) @ np.diag(1.0 / wgt)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-9 * np.abs(rhs).max())
    cr = crossing_ell20
    seed = 1j * cr.lambda_star.imag
    p20 = ModelParams(c=cr.c_star, ell=20.0)
    plain = leading_pair(p20, seed, h=0.05)
    weighted = leading_pair(p20, seed, h=0.05, eta=0.2)
    assert abs(plain.lam - weighted.lam) < 1e-6 * (1 + abs(plain.lam))


def test_leading_pair_at_the_crossing(crossing_ell20):
    cr = crossing_ell20
    pair = leading_pair(ModelParams(c=cr.c_star, ell=20.0),
                        1j * cr.lambda_star.imag, h=0.05)
    assert abs(pair.lam.imag - cr.lambda_star.imag) < 1e-3
    assert abs(pair.lam.real) < 1e-3
    assert pair.residual < 1e-8 and pair.residual_adjoint < 1e-8
    assert pair.normalized
    assert pair.h * np.vdot(pair.w, pair.v) == pytest.approx(1.0, abs=1e-10)
    # the eigenfunction is concentrated on the plateau, not at the walls
    amp = np.abs(pair.v)
    assert amp[0] < 1e-3 * amp.max() and amp[-1] < 1e-3 * amp.max()


def test_leading_pair_rejects_distant_seed():
    params = ModelParams(c=1.2, ell=4.0)
    with pytest.raises(NoEigenvalueNearSeed) as info:
        leading_pair(params, 30.0 + 0.0j, L_half=8.0, h=0.1)
    assert info.value.seed == 30.0 + 0.0j
    assert abs(info.value.found - info.value.seed) > 0.25 * 31.0
