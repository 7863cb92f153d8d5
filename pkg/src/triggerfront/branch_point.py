"""Branch points of the dispersion relation and the linear spreading speed.

A branch point is a (lambda, nu) where d and d_nu vanish simultaneously:
two spatial roots collide.  Since d is linear in lambda, the double roots
are exactly the critical points of P(nu) = -nu^4 - chi nu^2 + c nu
(lambda = P(nu) there), so all of them come from one cubic.

The linear spreading speed of the unstable side chi = alpha > 0 is the
unique c > 0 at which the *pinched* branch point in the upper half
lambda-plane touches the imaginary axis, Re lambda_br(c_lin) = 0.  For
this quartic dispersion everything has a closed form:

    c_lin     = (2 / (3 sqrt 6)) (2 + sqrt 7) sqrt(sqrt 7 - 1) alpha^{3/2}
    nu_lin    = mu + i kappa,
    mu        = -sqrt((sqrt 7 - 1) / 24) alpha^{1/2}
    kappa     =  sqrt((sqrt 7 + 3) / 8)  alpha^{1/2}
    lambda_lin = i (3 + sqrt 7) sqrt((2 + sqrt 7) / 96) alpha^2

which this module both provides directly and recovers numerically
(Newton on (d, d_nu) plus bisection in c) as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dispersion import (eval_dispersion, dispersion_dnu, dispersion_dnunu,
                         spatial_roots)
from .errors import DegenerateDoubleRoot, NoConvergence, ValidationError

TOL_BP = 1e-12          # Newton residual target, relative
DEGENERACY_FLOOR = 1e-8  # |d_nunu| below this => not a simple double root


@dataclass(frozen=True)
class BranchPoint:
    """A simple double spatial root: d = d_nu = 0, d_nunu != 0."""

    chi: float
    c: float
    lam: complex
    nu: complex
    d_nunu: complex
    residual_d: float
    residual_dnu: float
    pinched: bool | None = None  # set by pinching_check


def find_double_root(chi, c, seed, max_iter=60, tol=TOL_BP):
    """Newton's method on F(lambda, nu) = (d, d_nu) from seed = (lam0, nu0).

    The Jacobian is triangular in these variables
    (dd/dlambda = -1, d(d_nu)/dlambda = 0), so each step is explicit:
    delta_nu = -d_nu / d_nunu, delta_lambda = d + d_nu * delta_nu.
    """
    lam, nu = complex(seed[0]), complex(seed[1])
    for _ in range(max_iter):
        f1 = eval_dispersion(chi, c, lam, nu)
        f2 = dispersion_dnu(chi, c, nu)
        scale = max(1.0, abs(lam), abs(nu) ** 4)
        if abs(f1) < tol * scale and abs(f2) < tol * max(1.0, abs(nu) ** 3):
            break
        d2 = dispersion_dnunu(chi, nu)
        if abs(d2) < DEGENERACY_FLOOR:
            raise DegenerateDoubleRoot(
                f"d_nunu = {d2:.3e} at nu = {nu}; double root is degenerate")
        dnu = -f2 / d2
        dlam = f1 + f2 * dnu
        nu += dnu
        lam += dlam
    else:
        raise NoConvergence(
            f"double-root Newton stalled at (lambda, nu) = ({lam}, {nu})",
            last_iterate=(lam, nu), residual=abs(f1) + abs(f2))
    d2 = dispersion_dnunu(chi, nu)
    if abs(d2) < DEGENERACY_FLOOR:
        raise DegenerateDoubleRoot(
            f"d_nunu = {d2:.3e} at converged nu = {nu}")
    return BranchPoint(
        chi=float(chi), c=float(c), lam=lam, nu=nu, d_nunu=d2,
        residual_d=abs(eval_dispersion(chi, c, lam, nu)),
        residual_dnu=abs(dispersion_dnu(chi, c, nu)))


def all_double_roots(chi, c):
    """All branch points at fixed (chi, c): the three critical points of
    P(nu) = -nu^4 - chi nu^2 + c nu, with lambda = P(nu)."""
    crit = np.roots([-4.0, 0.0, -2.0 * chi, c])
    out = []
    for nu in crit:
        lam = complex(-nu ** 4 - chi * nu ** 2 + c * nu)
        out.append(find_double_root(chi, c, (lam, complex(nu))))
    # descending Im(lambda), so the upper-half-plane point comes first
    out.sort(key=lambda bp: -bp.lam.imag)
    return out


@dataclass(frozen=True)
class LinearSpreading:
    """Closed-form spreading data for plateau strength alpha."""

    alpha: float
    c_lin: float
    mu_lin: float
    kappa_lin: float
    nu_lin: complex
    lam_lin: complex

    @property
    def branch(self):
        return find_double_root(self.alpha, self.c_lin,
                                (self.lam_lin, self.nu_lin))


def closed_form_spreading(alpha):
    """Exact spreading constants for the side chi = alpha > 0."""
    if not alpha > 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    s7 = math.sqrt(7.0)
    c_lin = (2.0 / (3.0 * math.sqrt(6.0))) * (2.0 + s7) \
        * math.sqrt(s7 - 1.0) * alpha ** 1.5
    mu = -math.sqrt((s7 - 1.0) / 24.0) * math.sqrt(alpha)
    kappa = math.sqrt((s7 + 3.0) / 8.0) * math.sqrt(alpha)
    lam = 1j * (3.0 + s7) * math.sqrt((2.0 + s7) / 96.0) * alpha ** 2
    return LinearSpreading(alpha=float(alpha), c_lin=c_lin, mu_lin=mu,
                           kappa_lin=kappa, nu_lin=complex(mu, kappa),
                           lam_lin=lam)


def _upper_branch_point(chi, c):
    """The branch point with Im lambda > 0 whose nu lies in the second
    quadrant (Re nu < 0 < Im nu) — the one that controls spreading."""
    for bp in all_double_roots(chi, c):
        if bp.lam.imag > 0 and bp.nu.real < 0 < bp.nu.imag:
            return bp
    raise NoConvergence(
        f"no upper-half-plane branch point found at chi={chi}, c={c}")


def find_spreading_speed(chi, alpha, tol=1e-12, max_iter=200):
    """Numerically locate the linear spreading speed for side strength
    alpha: the root of g(c) = Re lambda_br(c) for the upper branch point.

    chi is the plateau coefficient the caller believes they are solving
    for and must equal alpha (> 0); it is kept as a separate argument so
    misuse fails loudly rather than silently reinterpreting.

    Bisection in c (the relevant Re lambda_br is increasing in c),
    bracketed around a power-law guess, each evaluation a fresh Newton
    solve seeded by cubic critical points — independent of the closed
    form, which it reproduces to ~1e-12 relative.
    """
    if not alpha > 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    if chi != alpha:
        raise ValidationError(
            f"chi ({chi}) must equal the plateau strength alpha ({alpha})")
    # bracket from pure scaling: c_lin(alpha) = c_lin(1) * alpha^{3/2},
    # and c_lin(1) is O(1); take a generous [0.5, 3] * alpha^{3/2} window
    lo, hi = 0.5 * alpha ** 1.5, 3.0 * alpha ** 1.5

    def g(c):
        return _upper_branch_point(alpha, c).lam.real

    glo, ghi = g(lo), g(hi)
    if glo * ghi >= 0:
        raise NoConvergence(
            f"bracket [{lo}, {hi}] does not straddle Re lambda_br = 0 "
            f"(g = {glo:.3e}, {ghi:.3e})")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0 or hi - lo < tol * max(1.0, mid):
            break
        if (gm > 0) == (glo > 0):
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    bp = _upper_branch_point(alpha, c)
    return replace(bp, pinched=pinching_check(bp).pinched)


@dataclass(frozen=True)
class PinchingResult:
    pinched: bool
    re_tail: tuple          # Re nu of the two tracked roots at t = T
    t_final: float


def pinching_check(bp, n_steps=600, t_factor=100.0):
    """Decide whether a branch point is pinched.

    March lambda = lambda_br + t for t in [0, T], T = t_factor *
    max(1, |lambda_br|), tracking the two spatial roots that emanate from
    the double root by nearest-neighbor continuation.  Pinched means they
    part ways: one ends with Re nu > 0, the other with Re nu < 0.

    The steps are quadratically spaced — the pair separates like
    sqrt(t), so resolution is needed near t = 0, not at the far end —
    and all root sets along the ray come from one stacked companion
    eigenvalue call.  Swapping the two *tracked* roots while they are
    still close is harmless (they are interchangeable until they
    separate); what the spacing guards against is handing one of them
    off to a bystander root, which stays O(1) away.
    """
    T = t_factor * max(1.0, abs(bp.lam))
    ts = T * (np.arange(1, n_steps + 1) / n_steps) ** 2
    comp = np.zeros((n_steps, 4, 4), dtype=complex)
    comp[:, 1, 0] = comp[:, 2, 1] = comp[:, 3, 2] = 1.0
    # monic quartic nu^4 + chi nu^2 - c nu + (lam + t) = 0
    comp[:, 0, 1] = -bp.chi
    comp[:, 0, 2] = bp.c
    comp[:, 0, 3] = -(bp.lam + ts)
    all_roots = np.linalg.eigvals(comp)
    tracked = np.array([bp.nu, bp.nu], dtype=complex)
    for roots in all_roots:
        new = np.empty(2, dtype=complex)
        dist = np.abs(tracked[:, None] - roots[None, :])
        for _ in range(2):
            i, j = np.unravel_index(np.argmin(dist), dist.shape)
            new[i] = roots[j]
            dist[i, :] = np.inf
            dist[:, j] = np.inf
        tracked = new
    re0, re1 = tracked[0].real, tracked[1].real
    return PinchingResult(pinched=bool((re0 > 0) != (re1 > 0)),
                          re_tail=(re0, re1), t_final=float(T))
