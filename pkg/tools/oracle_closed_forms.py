#!/usr/bin/env python3
"""Extended-precision oracle for the closed-form constants frozen into the tests.

Everything here is computed with mpmath at 60 digits, independently of the
package code: the linear spreading constants for the triggered quintic
Cahn-Hilliard model, the finite-ell crossing expansion, and the leading-order
cubic normal-form coefficient. Run this script and paste the printed values
into the regression tests; do not import triggerfront from here.

The spreading constants solve the plateau double-root/pinching problem
    d(lam, nu) = -nu^4 - a*nu^2 + c*nu - lam = 0,
    d_nu(lam, nu) = 0,       Re lam = 0,
for instability strength a > 0, and have the closed forms (s7 = sqrt 7):
    c    = (2/(3 sqrt 6)) (2+s7) sqrt(s7-1) a^{3/2}
    mu   = -sqrt((s7-1)/24) a^{1/2}
    kappa=  sqrt((s7+3)/8)  a^{1/2}
    lam  = i (3+s7) sqrt((2+s7)/96) a^2
The script verifies the dispersion residuals of each closed form before
printing, so a transcription error here would be caught immediately.
"""

from mpmath import mp, mpf, mpc, sqrt, pi, quad, exp, sin, mpmathify

mp.dps = 60


def spreading_constants(alpha):
    s7 = sqrt(mpf(7))
    a = mpmathify(alpha)
    c = mpf(2) / (3 * sqrt(mpf(6))) * (2 + s7) * sqrt(s7 - 1) * a ** mpf("1.5")
    mu = -sqrt((s7 - 1) / 24) * sqrt(a)
    kappa = sqrt((s7 + 3) / 8) * sqrt(a)
    lam = mpc(0, 1) * (3 + s7) * sqrt((2 + s7) / 96) * a ** 2
    nu = mpc(mu, kappa)

    # residual check against the dispersion relation with coefficient a
    d = -(nu ** 4) - a * nu ** 2 + c * nu - lam
    d_nu = -4 * nu ** 3 - 2 * a * nu + c
    assert abs(d) < mpf("1e-50"), d
    assert abs(d_nu) < mpf("1e-50"), d_nu
    return c, mu, kappa, lam, nu


def crossing_expansion(ell, alpha=1):
    """Finite-ell first-crossing expansion (leading 1/ell^2 terms).

    Derived here independently of the package via the central-pair
    quantization: the first plateau eigenvalue sits at
        lam = lam_br(c) - pi^2 d_nunu(nu_br) / (8 ell^2) + O(ell^-3),
    and imposing Re lam = 0 with dlam_br/dc = nu_br gives
        c_hat   = -Re(lam_tilde) / mu,
        lam_hat = i (kappa c_hat + Im(lam_tilde)),
    with lam_tilde = -pi^2 d_nunu / (8 ell^2) and d_nunu = -12 nu^2 - 2
    at nu = mu + i kappa.  Simplified: both brackets below.  (The kappa
    factor in lam_hat is essential; dropping it leaves an O(ell^-2)
    error that tracked determinant roots and finite-difference
    eigenvalues of the full operator both rule out.)
    """
    _, mu, kappa, lam, nu = spreading_constants(alpha)
    pref = pi ** 2 / (4 * mu * ell ** 2)
    lam_hat = mpc(0, 1) * pref * kappa * (-1 + 6 * (mu ** 2 + kappa ** 2))
    c_hat = -pref * (1 + 6 * (mu ** 2 - kappa ** 2))
    return lam_hat, c_hat


def leading_theta(alpha=1, gamma=1):
    """Leading-order cubic coefficient -27*gamma*(2 nu + conj nu)^2 / (8 mu)."""
    _, mu, kappa, lam, nu = spreading_constants(alpha)
    z = 2 * nu + nu.conjugate()          # = 3 mu + i kappa
    return -27 * gamma * z ** 2 / (8 * mu)


def weighted_quartic_sine_integral(ell, alpha=1):
    """exp(2 mu ell) * \\int_{-ell}^{ell} e^{2 mu x} sin^4(pi (x-ell)/(2 ell)) dx.

    This is the integral behind the leading theta evaluation, with the
    A^3 B = e^{2 mu ell} normalisation factored in; printed so the numerics
    can be compared against both the claimed closed form -3/(16 mu) e^{...}
    (DC term only) and the exact value.
    """
    _, mu, kappa, lam, nu = spreading_constants(alpha)
    f = lambda x: exp(2 * mu * x) * sin(pi * (x - ell) / (2 * ell)) ** 4
    val = quad(f, [-ell, 0, ell])
    return exp(2 * mu * ell) * val, -3 / (16 * mu)


def main():
    for alpha in (mpf("0.5"), mpf(1), mpf(2)):
        c, mu, kappa, lam, nu = spreading_constants(alpha)
        print(f"alpha = {alpha}")
        print(f"  c_lin     = {mp.nstr(c, 25)}")
        print(f"  mu_lin    = {mp.nstr(mu, 25)}")
        print(f"  kappa_lin = {mp.nstr(kappa, 25)}")
        print(f"  lam_lin   = {mp.nstr(lam, 25)}")

    for ell in (10, 20, 40):
        lam_hat, c_hat = crossing_expansion(ell)
        print(f"ell = {ell} (alpha = 1)")
        print(f"  lam_hat = {mp.nstr(lam_hat, 25)}")
        print(f"  c_hat   = {mp.nstr(c_hat, 25)}")

    th = leading_theta()
    print(f"leading theta (alpha=1, gamma=1) = {mp.nstr(th, 25)}")
    print(f"  Re part / formula -27(9mu^2-kappa^2)/(8mu) check:")
    _, mu, kappa, _, _ = spreading_constants(1)
    print(f"  {mp.nstr(-27 * (9 * mu ** 2 - kappa ** 2) / (8 * mu), 25)}")

    for ell in (10, 20, 40):
        exact, dc_claim = weighted_quartic_sine_integral(ell)
        print(f"ell = {ell}: normalised sin^4 integral exact = {mp.nstr(exact, 12)},"
              f" DC-term-only claim = {mp.nstr(dc_claim, 12)}")


if __name__ == "__main__":
    main()
