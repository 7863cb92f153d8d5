"""Dispersion relation of the linearized trigger-front operator.

The linearization of

    u_t = -(u_xx + chi(x) u)_xx + c u_x

about the zero state, on either constant-coefficient side chi = chi_pm,
has exponential solutions e^{nu x + lambda t} exactly when

    d(lambda, nu) = -nu^4 - chi nu^2 + c nu - lambda = 0.

This module evaluates d, solves it for the four spatial roots nu at fixed
lambda (with a deterministic ordering every other module relies on), and
traces the essential-spectrum curves lambda = d(0, ik - s*eta) + lambda,
i.e. the temporal eigenvalues of the Fourier symbol in an exponentially
weighted space.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import OnEssentialSpectrum, RootSolveFailure, ValidationError

# Residual tolerance for accepted spatial roots, relative to
# max(1, |lambda|, |nu|^4).
TOL_ROOT = 1e-11

# Two roots are an ordering "tie" when their real parts agree to this
# relative tolerance; ties are broken by descending imaginary part.
TIE_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the piecewise-constant trigger model.

    chi(x) = chi_plus on |x| < ell and chi_minus outside; c is the frame
    speed, eta >= 0 an exponential weight rate, gamma/beta the cubic and
    quintic coefficients of the nonlinearity (linear theory only sees
    chi and c, but the parameters travel together).
    """

    c: float
    ell: float = 20.0
    chi_plus: float = 1.0
    chi_minus: float = -1.0
    gamma: float = 1.0
    beta: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        problems = []
        if not self.beta > 0:
            problems.append(f"beta must be positive, got {self.beta}")
        if not self.ell > 0:
            problems.append(f"ell must be positive, got {self.ell}")
        if not self.c > 0:
            problems.append(f"c must be positive, got {self.c}")
        if self.eta < 0:
            problems.append(f"eta must be nonnegative, got {self.eta}")
        if problems:
            raise ValidationError(problems)

    def chi_at(self, x):
        """chi(x); exactly 0 at the matching points x = +-ell (midpoint
        convention, so grid values at the jump never favor a side)."""
        x = np.asarray(x, dtype=float)
        out = np.where(np.abs(x) < self.ell, self.chi_plus, self.chi_minus)
        out = np.where(np.abs(np.abs(x) - self.ell) == 0.0,
                       0.5 * (self.chi_plus + self.chi_minus), out)
        return out if out.ndim else float(out)

    def with_c(self, c):
        return replace(self, c=float(c))


def eval_dispersion(chi, c, lam, nu):
    """d(lambda, nu) = -nu^4 - chi nu^2 + c nu - lambda.  Vectorized in nu."""
    nu = np.asarray(nu, dtype=complex)
    nu2 = nu * nu
    val = -nu2 * nu2 - chi * nu2 + c * nu - lam
    return complex(val) if val.ndim == 0 else val


def dispersion_dnu(chi, c, nu):
    """d_nu = -4 nu^3 - 2 chi nu + c."""
    nu = np.asarray(nu, dtype=complex)
    val = -4.0 * nu ** 3 - 2.0 * chi * nu + c
    return complex(val) if val.ndim == 0 else val


def dispersion_dnunu(chi, nu):
    """d_nunu = -12 nu^2 - 2 chi."""
    nu = np.asarray(nu, dtype=complex)
    val = -12.0 * nu * nu - 2.0 * chi
    return complex(val) if val.ndim == 0 else val


def order_roots(nu, tie_tol=TIE_TOL):
    """Sort roots by decreasing real part; near-ties by decreasing
    imaginary part.

    "Near-tie" is relative: |Re a - Re b| <= tie_tol * max(1, |a|, |b|).
    The result is deterministic and idempotent, which is what downstream
    labeling (nu_1 >= ... >= nu_4) needs.
    """
    nu = np.asarray(nu, dtype=complex)
    idx = np.lexsort((-nu.imag, -nu.real))
    out = nu[idx].copy()
    # a single bubble pass fixes tol-level ties that lexsort ordered by
    # floating-point noise in the real parts
    for _ in range(len(out)):
        swapped = False
        for i in range(len(out) - 1):
            a, b = out[i], out[i + 1]
            scale = max(1.0, abs(a), abs(b))
            if abs(a.real - b.real) <= tie_tol * scale and a.imag < b.imag:
                out[i], out[i + 1] = b, a
                swapped = True
        if not swapped:
            break
    return out


@dataclass(frozen=True)
class SpatialRootSet:
    """The four spatial roots of d(lambda, .) = 0 for one side chi.

    Roots are ordered by decreasing real part (ties by decreasing
    imaginary part); morse_index counts roots with Re nu > 0.
    """

    chi: float
    c: float
    lam: complex
    nu: np.ndarray
    residuals: np.ndarray
    morse_index: int

    def __iter__(self):
        return iter(self.nu)


def spatial_roots(chi, c, lam, tol=TOL_ROOT, order=True):
    """Solve d(lambda, nu) = 0 for the four spatial roots.

    Companion-matrix eigenvalues (via numpy.roots on the monic quartic
    nu^4 + chi nu^2 - c nu + lambda) followed by one Newton polish per
    root.  Raises RootSolveFailure if any polished residual exceeds
    tol * max(1, |lambda|, |nu|^4).
    """
    lam = complex(lam)
    coeffs = [1.0, 0.0, chi, -c, lam]
    nu = np.roots(coeffs)
    if len(nu) != 4:
        raise RootSolveFailure(f"expected 4 roots, got {len(nu)}")
    # polish on the monic form p = -d, same roots, better scaling
    for _ in range(2):
        p = nu ** 4 + chi * nu ** 2 - c * nu + lam
        dp = 4.0 * nu ** 3 + 2.0 * chi * nu - c
        step = np.where(np.abs(dp) > 0, p / np.where(dp == 0, 1, dp), 0.0)
        nu = nu - step
    res = np.abs(eval_dispersion(chi, c, lam, nu))
    scale = np.maximum(1.0, np.maximum(abs(lam), np.abs(nu) ** 4))
    if np.any(res > tol * scale):
        raise RootSolveFailure(
            f"spatial root residual {np.max(res / scale):.3e} exceeds {tol:.1e} "
            f"(chi={chi}, c={c}, lambda={lam})")
    if order:
        nu = order_roots(nu)
        res = np.abs(eval_dispersion(chi, c, lam, nu))
    return SpatialRootSet(
        chi=float(chi), c=float(c), lam=lam, nu=nu, residuals=res,
        morse_index=int(np.sum(nu.real > 0)))


@dataclass(frozen=True)
class SpectrumCurve:
    """A sampled essential-spectrum curve lambda(k) for one side."""

    side: str
    chi: float
    c: float
    eta: float
    k: np.ndarray
    lam: np.ndarray

    def distance_to(self, z):
        """min_k |z - lambda(k)| over the sampled grid."""
        return float(np.min(np.abs(self.lam - complex(z))))


_SIDE_SIGN = {"plus": +1.0, "minus": -1.0}


def essential_curve(side, c, eta, k_grid, chi=None):
    """Essential-spectrum curve of one constant-coefficient side.

    In the weighted space with rate eta the relevant exponents are
    nu = ik - s*eta where s = +1 on the plus side (weight grows to the
    right) and s = -1 on the minus side, and

        lambda(k) = -nu^4 - chi nu^2 + c nu.

    At eta = 0 this is the familiar Fourier curve
    lambda = -k^4 + chi k^2 + i c k.
    """
    if side not in _SIDE_SIGN:
        raise ValidationError(f"side must be 'plus' or 'minus', got {side!r}")
    s = _SIDE_SIGN[side]
    if chi is None:
        chi = s  # default model: chi_pm = +-1
    if eta < 0:
        raise ValidationError(f"eta must be nonnegative, got {eta}")
    k = np.asarray(k_grid, dtype=float)
    nu = 1j * k - s * eta
    lam = -nu ** 4 - chi * nu ** 2 + c * nu
    return SpectrumCurve(side=side, chi=float(chi), c=float(c),
                         eta=float(eta), k=k, lam=lam)


@dataclass(frozen=True)
class ResonanceEntry:
    k: int
    lam: complex
    dist_plus: float
    dist_minus: float
    det_modulus: float
    resonant: bool


@dataclass(frozen=True)
class ResonanceReport:
    omega: float
    entries: tuple
    passed: bool

    def worst(self):
        return min(self.entries,
                   key=lambda e: min(e.dist_plus, e.dist_minus, e.det_modulus))


def check_no_resonance(params, omega, k_max=5, dist_tol=0.05, det_tol=1e-4,
                       n_curve=4001):
    """Check that the harmonics i k omega, 2 <= |k| <= k_max, stay away
    from the essential spectrum of both sides and from point spectrum.

    Distances are measured to the essential curves in the weighted space
    the solves actually happen in (weight rate params.eta); det_modulus
    is the modulus of the *scaled* plateau matching determinant at the
    harmonic, a proxy for distance to point spectrum.  A harmonic is
    flagged resonant when either distance falls below dist_tol or the
    determinant modulus below det_tol.  |k| = 1 is exempt (that is the
    Hopf eigenvalue itself), k = 0 likewise (the mean mode is handled by
    the weighted solve directly).
    """
    if omega == 0:
        raise ValidationError("omega must be nonzero")
    if k_max < 2:
        raise ValidationError(f"k_max must be >= 2, got {k_max}")
    kw = about_k_window(params, omega, k_max)
    kk = np.linspace(-kw, kw, n_curve)
    curve_p = essential_curve("plus", params.c, params.eta, kk,
                              chi=params.chi_plus)
    curve_m = essential_curve("minus", params.c, params.eta, kk,
                              chi=params.chi_minus)

    from .evans import plateau_determinant  # deferred: evans imports us

    entries = []
    for k in [s * j for j in range(2, k_max + 1) for s in (+1, -1)]:
        lam = 1j * k * omega
        dp = curve_p.distance_to(lam)
        dm = curve_m.distance_to(lam)
        try:
            det = abs(plateau_determinant(params, lam).value)
        except OnEssentialSpectrum:
            det = 0.0
        entries.append(ResonanceEntry(
            k=k, lam=lam, dist_plus=dp, dist_minus=dm, det_modulus=det,
            resonant=(min(dp, dm) < dist_tol or det < det_tol)))
    entries = tuple(entries)
    return ResonanceReport(omega=float(omega), entries=entries,
                           passed=not any(e.resonant for e in entries))


def about_k_window(params, omega, k_max):
    # wavenumber window wide enough that the curve minimum near each
    # harmonic is interior: |Im lambda| on the curve is ~ c*k for small k
    # and the harmonics reach k_max*omega
    return max(4.0, 2.0 * k_max * abs(omega) / max(params.c, 1e-6))
