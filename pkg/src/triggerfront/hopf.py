"""Lyapunov-Schmidt data for the oscillatory instability: the cubic
normal-form coefficients theta_+/-, the branch expansion in the
amplitude r, and the branching-direction verdict.

For the quintic-stabilized model with f(x,u) = chi(x) u + gamma u^3
- beta u^5 linearized about u == 0, the quadratic interaction terms
vanish identically (f'' = 0 at the rest state), so the whole
coefficient reduces to one weighted quadrature,

    theta_+ = < (3 f''' p^2 pbar)_xx , psi >,     f''' = 6 gamma,

with p, psi the eigenfunction/adjoint pair at the crossing, normalized
by <psi, p> = 1 plus a gauge for the overall scale of p.  The sign of
Re theta_+ (supercritical vs subcritical) is gauge-independent; the
magnitude is not, which is why two normalizations ship.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as sparse_linalg

from .branch_point import closed_form_spreading
from .dispersion import ModelParams, spatial_roots
from .discrete_operator import build_operator, gregory_weights, leading_pair
from .errors import (EigensolverFailure, NormalizationFitFailure,
                     ResonantSolve, ValidationError)
from .evans import find_hopf_crossing, plateau_determinant

__all__ = [
    "QuadraticModes", "HopfResult", "solve_quadratic_modes",
    "hopf_coefficient", "leading_order_theta", "branch_prediction",
    "hopf_analysis",
]

FIT_R2_MIN = 0.99
SBP_TOL = 1e-6


@dataclass(frozen=True)
class QuadraticModes:
    """Solutions of the three quadratic-interaction solves.

    phi_plus solves (2 i omega - L) phi = (f'' p^2)_xx, phi_zero solves
    (-L) phi = (f'' p pbar)_xx, and phi_minus is the conjugate of
    phi_plus.  For the model at hand f'' = 0 and all three are zero
    vectors; they are carried anyway so synthetic nonlinearities can be
    pushed through the same pipeline.
    """

    phi_plus: np.ndarray = field(repr=False)
    phi_zero: np.ndarray = field(repr=False)
    phi_minus: np.ndarray = field(repr=False)
    residual_plus: float = 0.0
    residual_zero: float = 0.0


@dataclass(frozen=True)
class HopfResult:
    """Normal-form data at the first crossing.

    mu_prime is d(Re lambda)/d(-c) at c_*: the crossing derivative with
    respect to the *destabilizing* direction (decreasing speed), made
    positive so that Theorem-style supercritical/subcritical readings
    apply verbatim.  The raw signed derivative d(Re lambda)/dc is
    -mu_prime.  direction == "supercritical" iff Re theta_+ > 0.
    """

    theta_plus: complex
    theta_minus: complex
    mu_prime: float
    upsilon_c: float
    upsilon_omega: float
    direction: str
    ell: float
    normalization: str
    c_star: float
    omega_star: float
    gamma: float
    A: float = math.nan
    B: float = math.nan
    fit_r2_p: float = math.nan
    fit_r2_psi: float = math.nan
    sbp_gap: float = math.nan


def _resonance_guard(op, omega):
    """Refuse the quadratic solves when 2*i*omega or 0 sits on spectrum.

    2*i*omega is checked against the analytic matching determinant
    (cheap, and independent of the discretization).  lambda = 0 lies on
    the essential spectrum of the exterior state, where the determinant
    is not defined; there the guard is deferred to the solve itself,
    which bounds the amplification ||phi|| / ||rhs||.
    """
    lam2 = 2j * omega
    det = plateau_determinant(op.params, lam2)
    if abs(det.normalized) < 1e-8 * (1.0 + abs(lam2)):
        raise ResonantSolve(
            f"2 i omega = {lam2:.6g} is numerically an eigenvalue; "
            "the phi_+ solve is ill-posed")


def _guarded_solve(mat, rhs, label):
    lu = sparse_linalg.splu(mat.tocsc())
    phi = lu.solve(rhs)
    amp = np.linalg.norm(phi) / max(np.linalg.norm(rhs), 1e-300)
    if not np.all(np.isfinite(phi)) or amp > 1e12:
        raise ResonantSolve(
            f"{label} solve amplified the right-hand side by {amp:.2e}; "
            "the shift sits numerically on spectrum")
    res = np.linalg.norm(mat @ phi - rhs) / max(np.linalg.norm(rhs), 1e-300)
    return phi, float(res)


def solve_quadratic_modes(op, pair, omega, fpp_profile=None):
    """Quadratic-interaction modes for a (possibly synthetic) f''.

    With fpp_profile None or identically zero this returns exact zero
    vectors without touching a factorization -- the inhomogeneous
    problems need not be solved for the quintic example.
    """
    if fpp_profile is None:
        fpp = np.zeros(op.n)
    else:
        fpp = np.asarray(fpp_profile, dtype=float)
        if fpp.shape != (op.n,):
            raise ValidationError(
                f"fpp_profile has shape {fpp.shape}, expected ({op.n},)")
    if not np.any(fpp):
        z = np.zeros(op.n, dtype=complex)
        return QuadraticModes(phi_plus=z, phi_zero=z.copy(),
                              phi_minus=z.copy())
    _resonance_guard(op, omega)
    d2 = op.derivative(2)
    v = pair.v
    eye = sparse.identity(op.n, format="csc", dtype=complex)
    rhs_plus = d2 @ (fpp * v ** 2)
    rhs_zero = d2 @ (fpp * (v * np.conj(v)))
    phi_plus, res_p = _guarded_solve(2j * omega * eye - op.matrix,
                                     rhs_plus, "(2 i omega - L)")
    phi_zero, res_0 = _guarded_solve(-op.matrix.astype(complex),
                                     rhs_zero, "(-L)")
    if max(res_p, res_0) > 1e-8:
        raise ResonantSolve(
            f"quadratic-mode residuals ({res_p:.2e}, {res_0:.2e}) "
            "exceed 1e-8")
    return QuadraticModes(phi_plus=phi_plus, phi_zero=phi_zero,
                          phi_minus=np.conj(phi_plus),
                          residual_plus=res_p, residual_zero=res_0)


def _plateau_fits(pair, params):
    """Demodulated least-squares amplitudes of v and w on the plateau.

    Same convention as the exact-profile fits in `evans`: the carrier
    exp((nu_lin + alpha_ell) x) is divided out first, so the residual is
    measured relative to the local amplitude rather than being swamped
    by the exponential ramp across the plateau.
    """
    sp = closed_form_spreading(params.chi_plus)
    nu_p = spatial_roots(params.chi_plus, params.c, pair.lam).nu
    center = sorted(range(4), key=lambda i: abs(nu_p[i] - sp.nu_lin))[:2]
    rate = 0.5 * (nu_p[center[0]] + nu_p[center[1]])
    mask = np.abs(pair.x) <= params.ell
    xf = pair.x[mask]
    env = np.sin(math.pi * (xf - params.ell) / (2.0 * params.ell)
                 ).astype(complex)
    ee = np.vdot(env, env)
    dem_v = pair.v[mask] * np.exp(-rate * xf)
    dem_w = pair.w[mask] * np.exp(np.conj(rate) * xf)
    A_hat = np.vdot(env, dem_v) / ee
    B_hat = np.vdot(env, dem_w) / ee
    r2_p = 1.0 - np.linalg.norm(dem_v - A_hat * env) ** 2 \
        / np.linalg.norm(dem_v) ** 2
    r2_psi = 1.0 - np.linalg.norm(dem_w - B_hat * env) ** 2 \
        / np.linalg.norm(dem_w) ** 2
    return complex(A_hat), complex(B_hat), float(r2_p), float(r2_psi), sp


def hopf_coefficient(pair, modes, params, normalization="paper_AB",
                     crossing=None):
    """Cubic coefficients and branch data from a discrete eigenpair.

    pair must be normalized to <w, v> = 1 in the h-weighted pairing.
    Under normalization="paper_AB" the eigenvector is rescaled so the
    fitted plateau amplitudes satisfy A^3 B = exp(2 mu_lin ell) before
    the quadrature; under "inner_product" it is used as is, which fixes
    the sign and direction but not a reference magnitude.

    The second derivative on the integrand uses the same fourth-order
    stencil as the operator assembly, with a Gregory-4 quadrature whose
    uniform interior weights keep the summation-by-parts transposition
    check meaningful: moving the stencil onto the adjoint must reproduce
    theta_+ to SBP_TOL, or the discretization is inconsistent.
    """
    if normalization not in ("paper_AB", "inner_product"):
        raise ValidationError(
            f"unknown normalization {normalization!r}; expected "
            "'paper_AB' or 'inner_product'")
    ip = pair.h * np.vdot(pair.w, pair.v)
    if abs(ip - 1.0) > 1e-6:
        raise ValidationError(
            f"pair is not normalized: <w, v> = {ip:.8g}")
    if crossing is None:
        crossing = find_hopf_crossing(params)
    v, w = pair.v, pair.w
    A_hat, B_hat, r2_p, r2_psi, sp = _plateau_fits(pair, params)
    A0, B0 = abs(A_hat), abs(B_hat)
    if normalization == "paper_AB":
        if r2_p < FIT_R2_MIN:
            raise NormalizationFitFailure(
                f"plateau envelope fit R^2 = {r2_p:.4f} below {FIT_R2_MIN}; "
                "the A^3 B gauge is meaningless here")
        phase = cmath.exp(-1j * cmath.phase(A_hat))
        s = math.sqrt(math.exp(2.0 * sp.mu_lin * params.ell)
                      / (A0 ** 3 * B0))
        v = v * (phase * s)
        w = w * (phase / s)
        A0, B0 = A0 * s, B0 / s

    gamma = params.gamma
    fppp = 6.0 * gamma
    g = 3.0 * fppp * v ** 2 * np.conj(v) \
        + np.conj(v) * modes.phi_plus + v * modes.phi_zero
    d2 = _derivative_for(pair)
    wq = gregory_weights(len(pair.x), pair.h)
    theta = complex(np.sum(wq * (d2 @ g) * np.conj(w)))
    theta_sbp = complex(np.sum(wq * g * (d2.T @ np.conj(w))))
    gap = abs(theta - theta_sbp)
    if gap > SBP_TOL * max(1.0, abs(theta)):
        raise EigensolverFailure(
            f"summation-by-parts cross-check failed: |direct - moved| = "
            f"{gap:.3e} for theta = {theta:.6g}")

    mu_prime = -crossing.dRe_dc
    if mu_prime <= 0:
        raise ValidationError(
            f"crossing derivative dRe/dc = {crossing.dRe_dc:.6g} is not "
            "negative; the destabilizing-direction convention breaks")
    direction = "supercritical" if theta.real > 0 else "subcritical"
    return HopfResult(
        theta_plus=theta, theta_minus=np.conj(theta),
        mu_prime=float(mu_prime),
        upsilon_c=float(theta.real / mu_prime),
        upsilon_omega=float(theta.imag),
        direction=direction, ell=params.ell, normalization=normalization,
        c_star=float(crossing.c_star),
        omega_star=float(crossing.lambda_star.imag), gamma=float(gamma),
        A=float(A0), B=float(B0), fit_r2_p=r2_p, fit_r2_psi=r2_psi,
        sbp_gap=float(gap))


def _derivative_for(pair):
    from .discrete_operator import derivative_matrix
    return derivative_matrix(len(pair.x), pair.h, 2)


def leading_order_theta(alpha, gamma):
    """Closed-form leading value -27 gamma (2 nu + nubar)^2 / (8 mu).

    Uses the exact spreading-point constants; note Re[(2 nu + nubar)^2]
    = 9 mu^2 - kappa^2, which is negative here, so the real part has
    the opposite sign of gamma for every alpha > 0.
    """
    if alpha <= 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    sp = closed_form_spreading(alpha)
    two_nu_plus_bar = 2.0 * sp.nu_lin + np.conj(sp.nu_lin)
    return complex(-27.0 * gamma * two_nu_plus_bar ** 2 / (8.0 * sp.mu_lin))


def branch_prediction(result, r_grid):
    """Leading-order branch (r, c(r), omega(r)).

    The amplitude parameterizes the branch into the *destabilizing*
    direction: c(r) = c_* - (Re theta_+ / mu') r^2, so a supercritical
    branch (Re theta_+ > 0) lives at speeds below c_*, where the front
    is unstable.  omega(r) = omega_* + (Im theta_+) r^2.
    """
    rows = []
    for r in np.asarray(r_grid, dtype=float):
        if r < 0:
            raise ValidationError(f"amplitude r must be >= 0, got {r}")
        rows.append((float(r),
                     result.c_star - result.upsilon_c * r ** 2,
                     result.omega_star + result.upsilon_omega * r ** 2))
    return rows


def hopf_analysis(params, normalization="paper_AB", h=0.04375,
                  L_half=None, fpp_profile=None):
    """End-to-end pipeline: crossing, eigenpair, modes, coefficient."""
    crossing = find_hopf_crossing(params)
    at_star = params.with_c(crossing.c_star)
    op = build_operator(at_star, L_half=L_half, h=h)
    pair = leading_pair(at_star, crossing.lambda_star, op=op)
    omega = crossing.lambda_star.imag
    modes = solve_quadratic_modes(op, pair, omega, fpp_profile)
    return hopf_coefficient(pair, modes, at_star,
                            normalization=normalization, crossing=crossing)
