"""Absolute spectrum: curves where the middle spatial roots share a real part.

For the constant-coefficient side chi, the absolute spectrum relevant to
large bounded domains is

    Sigma_abs = { lambda : Re nu_2(lambda) = Re nu_3(lambda) }

with the roots in the standard decreasing-Re order (Morse index 2 to the
right of everything).  Writing the equal-Re pair as (nu, nu + i gamma)
with gamma real, the two dispersion equations d(lambda, nu) = 0 and
d(lambda, nu + i gamma) = 0 subtract to a *cubic* in nu,

    H(nu; gamma) = [P(nu + i gamma) - P(nu)] / (i gamma)
                 = -4 nu^3 - 6 i gamma nu^2 + (4 gamma^2 - 2 chi) nu
                   + i gamma^3 - i chi gamma + c,

with P(nu) = -nu^4 - chi nu^2 + c nu and lambda = P(nu).  At gamma = 0
this degenerates to P'(nu) = 0, the branch-point condition, so each curve
emanates from a branch point and is traced here by marching gamma and
following the relevant cubic root — each step is an exact solve, the
"corrector" is a one-root Newton polish.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .branch_point import BranchPoint, all_double_roots
from .dispersion import eval_dispersion, spatial_roots
from .errors import ContinuationStall, NoConvergence, ValidationError

TOL_ABS = 1e-9    # equal-real-part defect tolerance
TOL_RES = 1e-10   # dispersion residual tolerance for accepted points


def _P(nu, chi, c):
    return -nu ** 4 - chi * nu ** 2 + c * nu


def _H(nu, gamma, chi, c):
    return (-4.0 * nu ** 3 - 6j * gamma * nu ** 2
            + (4.0 * gamma ** 2 - 2.0 * chi) * nu
            + 1j * gamma ** 3 - 1j * chi * gamma + c)


def _H_roots(gamma, chi, c):
    return np.roots([-4.0, -6j * gamma, 4.0 * gamma ** 2 - 2.0 * chi,
                     1j * gamma ** 3 - 1j * chi * gamma + c])


def _dH(nu, gamma, chi, c):
    return -12.0 * nu ** 2 - 12j * gamma * nu + 4.0 * gamma ** 2 - 2.0 * chi


@dataclass(frozen=True)
class AbsSpecPoint:
    lam: complex
    nu_pair: tuple        # (nu_2, nu_3): equal Re, Im descending
    gamma_sep: float


@dataclass(frozen=True)
class AbsSpecCurve:
    chi: float
    c: float
    origin: BranchPoint
    points: tuple         # AbsSpecPoint, first entry is the branch point
    folds: tuple          # gamma values where d(Re lambda)/d(gamma) flips sign
    truncated_reason: str | None = None

    @property
    def lam(self):
        return np.array([p.lam for p in self.points])

    @property
    def gamma(self):
        return np.array([p.gamma_sep for p in self.points])


def trace_absolute(bp, arclength_max=5.0, step=1e-3, tol_abs=TOL_ABS):
    """Trace the absolute-spectrum curve rooted at branch point bp.

    March the separation gamma from 0 in the given step, at each gamma
    solving the cubic H(.; gamma) = 0 and following (nearest-neighbor
    from the previous step, Newton-polished) the root that continues
    bp.nu.  Tracing stops when the accumulated arclength in lambda
    exceeds arclength_max, or when the pair (nu, nu + i gamma) stops
    being the 2nd/3rd roots of the full ordered root set — the part of
    the level set beyond that is not absolute spectrum for this model.
    """
    if bp.pinched is False:
        raise ValidationError("branch point is marked unpinched; its level "
                              "set is not absolute spectrum")
    chi, c = bp.chi, bp.c
    pts = [AbsSpecPoint(lam=bp.lam, nu_pair=(bp.nu, bp.nu), gamma_sep=0.0)]
    folds = []
    truncated = None
    nu_prev, lam_prev = bp.nu, bp.lam
    re_slope_prev = None
    arclength = 0.0
    gamma = 0.0
    while arclength < arclength_max:
        gamma += step
        roots = _H_roots(gamma, chi, c)
        nu = roots[np.argmin(np.abs(roots - nu_prev))]
        # polish; the cubic solve is already good, two steps are plenty
        for _ in range(8):
            h = _H(nu, gamma, chi, c)
            if abs(h) < 1e-13 * max(1.0, abs(nu) ** 3):
                break
            dh = _dH(nu, gamma, chi, c)
            if dh == 0:
                raise ContinuationStall(
                    f"H'(nu) = 0 at gamma = {gamma} (triple collision?)")
            nu -= h / dh
        else:
            raise ContinuationStall(
                f"corrector failed at gamma = {gamma}, nu = {nu}")
        lam = 0.5 * (_P(nu, chi, c) + _P(nu + 1j * gamma, chi, c))
        pair = (nu + 1j * gamma, nu) if gamma > 0 else (nu, nu + 1j * gamma)
        res = max(abs(eval_dispersion(chi, c, lam, pair[0])),
                  abs(eval_dispersion(chi, c, lam, pair[1])))
        defect = abs(pair[0].real - pair[1].real)
        if res > TOL_RES * max(1.0, abs(lam)) or defect > tol_abs:
            raise ContinuationStall(
                f"accepted-point residual {res:.2e} / defect {defect:.2e} "
                f"out of tolerance at gamma = {gamma}")
        # pin the pair to positions 2 and 3 of the full ordered root set
        full = spatial_roots(chi, c, lam).nu
        idx = sorted(int(np.argmin(np.abs(full - p))) for p in pair)
        if idx != [1, 2]:
            truncated = (f"pair left positions (2,3) at gamma = {gamma:.4g} "
                         f"(now {tuple(i + 1 for i in idx)})")
            break
        arclength += abs(lam - lam_prev)
        re_slope = lam.real - lam_prev.real
        if re_slope_prev is not None and re_slope * re_slope_prev < 0:
            folds.append(gamma)
        if abs(re_slope) > 0:
            re_slope_prev = re_slope
        pts.append(AbsSpecPoint(lam=lam, nu_pair=pair, gamma_sep=gamma))
        nu_prev, lam_prev = nu, lam
    return AbsSpecCurve(chi=chi, c=c, origin=bp, points=tuple(pts),
                        folds=tuple(folds), truncated_reason=truncated)


def rightmost_absolute(chi, c, arclength_max=5.0, step=1e-3):
    """Rightmost point of the absolute spectrum of side chi.

    Traces the curves from the conjugate pair of pinched branch points
    and maximizes Re over curve points and branch points.  For this
    dispersion the maximum sits *at* the branch point (curves leave it
    leftward); that is asserted, not assumed.  Returns the upper-half
    plane representative (the conjugate is equally rightmost).
    """
    bps = [bp for bp in all_double_roots(chi, c)
           if bp.nu.real < 0 < bp.nu.imag and bp.lam.imag > 0]
    if not bps:
        raise NoConvergence(f"no upper branch point at chi={chi}, c={c}")
    bp = bps[0]
    curve = trace_absolute(bp, arclength_max=arclength_max, step=step)
    re_max = max(p.lam.real for p in curve.points)
    if re_max > bp.lam.real + TOL_ABS:
        raise AssertionError(
            f"absolute spectrum extends right of its branch point by "
            f"{re_max - bp.lam.real:.3e}; rightmost-point assumption broken")
    return bp.lam


def genericity_check(curve, tol_gen=1e-6):
    """Reducibility along the curve: away from the branch point the two
    middle roots stay distinct (gamma_sep > 0) and their difference moves
    with lambda (finite-difference |d(nu_2 - nu_3)/d lambda| > tol_gen)."""
    pts = curve.points
    if len(pts) < 2:
        warnings.warn("curve has no points beyond the branch point; "
                      "genericity holds vacuously", stacklevel=2)
        return True
    for p in pts[1:]:
        if not p.gamma_sep > 0:
            return False
    for a, b in zip(pts[1:], pts[2:]):
        dlam = b.lam - a.lam
        if dlam == 0:
            return False
        dsep = ((b.nu_pair[0] - b.nu_pair[1])
                - (a.nu_pair[0] - a.nu_pair[1]))
        if abs(dsep / dlam) <= tol_gen:
            return False
    return True
