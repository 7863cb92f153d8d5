"""Evans functions and the finite-plateau matching determinant.

Everything here works in the variables (u, u_x, theta, theta_x) with
theta = u_xx + chi(x) u, which are continuous across the trigger
interfaces even though u_xx itself jumps.  The constant-coefficient
eigenvectors in these variables are

    e(nu, chi) = (1, nu, nu^2 + chi, nu (nu^2 + chi)),

and a pleasant classical fact (row reduction using the dispersion
relation itself) turns every mixed-family 4-column determinant of such
eigenvectors, at a common (lambda, c), into the plain Vandermonde
product of the four rates.  The semi-infinite front/back Evans functions
are exactly such products; the finite-plateau matching determinant

    D(lambda) = det[ exp(2 ell M_+) e_1^-, exp(2 ell M_+) e_2^-,
                     e_3^-, e_4^- ]

is evaluated by expanding the propagated pair in the plus-family
eigenbasis, which reduces D to the exponential pair sum

    D = sum_{i<j} m_ij w_ij exp(2 ell (nu_i^+ + nu_j^+)),

m_ij the 2x2 minors of the basis-change coefficients and w_ij again
Vandermonde products.  The dominant exponent is factored into log_scale,
so values stay finite for ell well beyond anything asked of them, and
small root differences never meet a dense matrix exponential.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg

from .branch_point import closed_form_spreading
from .dispersion import dispersion_dnu, spatial_roots
from .errors import (ContourTooCoarse, EigenbasisIllConditioned,
                     NoConvergence, NormalizationFitFailure, NotSimple,
                     NullVectorDegenerate, OnEssentialSpectrum,
                     ValidationError)

TOL_ESS = 1e-9     # |Re nu| below this => lambda is on essential spectrum
TOL_ABS_TIE = 1e-9  # Re-tie between nu_2 and nu_3 => on absolute spectrum
TOL_DBL = 1e-8     # within-family root collision => derivative limit
TOL_CROSS = 1e-9   # |Re lambda| at an accepted Hopf crossing


def _e_theta(nu, chi):
    return np.array([1.0, nu, nu * nu + chi, nu * (nu * nu + chi)],
                    dtype=complex)


def _e_theta_dnu(nu, chi):
    return np.array([0.0, 1.0, 2.0 * nu, 3.0 * nu * nu + chi], dtype=complex)


def _vprod(z, skip=()):
    """prod_{a<b} (z[b] - z[a]), optionally skipping listed index pairs."""
    out = 1.0 + 0.0j
    for a, b in combinations(range(len(z)), 2):
        if (a, b) in skip:
            continue
        out *= z[b] - z[a]
    return out


def _assert_off_essential(rootset, what):
    m = np.min(np.abs(rootset.nu.real))
    if m < TOL_ESS * max(1.0, np.max(np.abs(rootset.nu))):
        raise OnEssentialSpectrum(
            f"lambda = {rootset.lam} lies on the {what} essential spectrum "
            f"(min |Re nu| = {m:.2e})")


def _abs_tie(rootset):
    nu = rootset.nu
    return abs(nu[1].real - nu[2].real) <= TOL_ABS_TIE * max(
        1.0, abs(nu[1]), abs(nu[2]))


@dataclass(frozen=True)
class EvansValue:
    """A determinant evaluation; the true determinant is
    value * exp(log_scale).  For plateau evaluations, `normalized` holds
    value / ((nu_2^- - nu_1^-)(nu_4^- - nu_3^-)) — same zeros, but
    analytic through the spurious collisions of the minus-family basis
    columns, which is what root finding and winding counts use."""

    lam: complex
    value: complex
    log_scale: float
    kind: str
    degenerate: bool = False
    on_absolute: bool = False
    normalized: complex | None = None


def _semi_infinite(c, lam, tuple_roots, kind):
    """Shared body of evans_front / evans_back."""
    (rs_a, ia, ja), (rs_b, ib, jb) = tuple_roots
    _assert_off_essential(rs_a, "minus" if rs_a.chi < rs_b.chi else "plus")
    _assert_off_essential(rs_b, "plus" if rs_a.chi < rs_b.chi else "minus")
    z = [rs_a.nu[ia], rs_a.nu[ja], rs_b.nu[ib], rs_b.nu[jb]]
    scale = max(1.0, *[abs(w) for w in z])
    skip = []
    if abs(z[0] - z[1]) < TOL_DBL * scale:
        skip.append((0, 1))
    if abs(z[2] - z[3]) < TOL_DBL * scale:
        skip.append((2, 3))
    value = _vprod(z, skip=tuple(skip))
    return EvansValue(
        lam=complex(lam), value=complex(value), log_scale=0.0, kind=kind,
        degenerate=bool(skip),
        on_absolute=_abs_tie(rs_a) or _abs_tie(rs_b))


def evans_front(c, lam, chi_plus=1.0, chi_minus=-1.0):
    """Evans function of the semi-infinite interface with the stable
    medium on the left: Vandermonde of (nu_1^-, nu_2^-, nu_3^+, nu_4^+).

    Zero would require an unstable-left rate to coincide with a
    stable-right rate, which the two dispersion relations only allow at
    nu = 0, i.e. lambda = 0 — and there the selected positions dodge the
    common root, so the function never vanishes off the plus-side
    absolute spectrum.  Within-family collisions return the
    derivative-determinant limit (vanishing factor dropped) with
    degenerate=True.
    """
    rm = spatial_roots(chi_minus, c, lam)
    rp = spatial_roots(chi_plus, c, lam)
    return _semi_infinite(c, lam, ((rm, 0, 1), (rp, 2, 3)), "front")


def evans_back(c, lam, chi_plus=1.0, chi_minus=-1.0):
    """Mirror image of evans_front: Vandermonde of
    (nu_1^+, nu_2^+, nu_3^-, nu_4^-)."""
    rm = spatial_roots(chi_minus, c, lam)
    rp = spatial_roots(chi_plus, c, lam)
    return _semi_infinite(c, lam, ((rp, 0, 1), (rm, 2, 3)), "back")


# ---------------------------------------------------------------------------
# plateau matching determinant
# ---------------------------------------------------------------------------

_PAIRS = list(combinations(range(4), 2))
# complementary-pair signs: det[a,b,c,d] = sum_k SIGN[k] (a^b)_{P[k]} (c^d)_{P[5-k]}
_WEDGE_SIGNS = (1.0, -1.0, 1.0, 1.0, -1.0, 1.0)


def _system_matrix(chi, c, lam):
    """First-order system in the continuous (u, u_x, theta, theta_x)
    variables."""
    return np.array([[0.0, 1.0, 0.0, 0.0],
                     [-chi, 0.0, 1.0, 0.0],
                     [0.0, 0.0, 0.0, 1.0],
                     [-lam, c, 0.0, 0.0]], dtype=complex)


def _compound2(A):
    """Second additive compound: the generator of t -> Lambda^2(e^{tA})."""
    idx = {p: k for k, p in enumerate(_PAIRS)}

    def windex(a, b):
        if a == b:
            return None, 0.0
        return (idx[(a, b)], 1.0) if a < b else (idx[(b, a)], -1.0)

    G = np.zeros((6, 6), dtype=complex)
    for r, (i, j) in enumerate(_PAIRS):
        for mcol in range(4):
            k1, s1 = windex(mcol, j)
            if k1 is not None:
                G[r, k1] += A[i, mcol] * s1
            k2, s2 = windex(i, mcol)
            if k2 is not None:
                G[r, k2] += A[j, mcol] * s2
    return G


def _wedge(u, v):
    return np.array([u[i] * v[j] - u[j] * v[i] for i, j in _PAIRS])


def _plateau_compound(params, lam, nu_m, nu_p):
    """Fallback evaluation of the scaled plateau determinant through the
    6x6 exterior-power propagator — no eigenbasis inversion, so it stays
    accurate when plus-family roots (nearly) collide.  Shares the
    log_scale convention of the primary path."""
    chi_m, chi_p, c, ell = (params.chi_minus, params.chi_plus, params.c,
                            params.ell)
    G = _compound2(_system_matrix(chi_p, c, lam))
    sigma = max((nu_p[i] + nu_p[j]).real for i, j in _PAIRS) * 2.0 * ell
    y0 = _wedge(_e_theta(nu_m[0], chi_m), _e_theta(nu_m[1], chi_m))
    Y = scipy.linalg.expm(2.0 * ell * G
                          - sigma * np.eye(6, dtype=complex)) @ y0
    s34 = _wedge(_e_theta(nu_m[2], chi_m), _e_theta(nu_m[3], chi_m))
    acc = sum(_WEDGE_SIGNS[k] * Y[k] * s34[5 - k] for k in range(6))
    return acc, sigma


def _plateau_terms(params, lam, nu_m=None, nu_p=None):
    """Per-pair data (m_ij, w_ij, E_ij) of the plateau determinant.

    nu_m / nu_p may be supplied (already ordered or contour-tracked);
    otherwise roots are solved and sorted here.  When a minus-family
    pair has collided, its vanishing column is replaced by the
    nu-derivative eigenvector, i.e. the determinant limit with the
    Vandermonde factor of that pair divided out.
    """
    c, ell = params.c, params.ell
    if nu_m is None:
        rm = spatial_roots(params.chi_minus, c, lam)
        _assert_off_essential(rm, "minus")
        nu_m = rm.nu
    if nu_p is None:
        nu_p = spatial_roots(params.chi_plus, c, lam).nu

    V = np.column_stack([_e_theta(nu, params.chi_plus) for nu in nu_p])
    scale_m = max(1.0, *np.abs(nu_m))
    degenerate_u = abs(nu_m[0] - nu_m[1]) < TOL_DBL * scale_m
    degenerate_s = abs(nu_m[2] - nu_m[3]) < TOL_DBL * scale_m
    if degenerate_u:
        nub = 0.5 * (nu_m[0] + nu_m[1])
        U = np.column_stack([_e_theta(nub, params.chi_minus),
                             _e_theta_dnu(nub, params.chi_minus)])
    else:
        U = np.column_stack([_e_theta(nu_m[0], params.chi_minus),
                             _e_theta(nu_m[1], params.chi_minus)])
    C = np.linalg.solve(V, U)
    if degenerate_s:
        nub = 0.5 * (nu_m[2] + nu_m[3])
        s3 = _e_theta(nub, params.chi_minus)
        s4 = _e_theta_dnu(nub, params.chi_minus)
    else:
        s3 = _e_theta(nu_m[2], params.chi_minus)
        s4 = _e_theta(nu_m[3], params.chi_minus)

    m = {}
    w = {}
    E = {}
    for i, j in _PAIRS:
        m[(i, j)] = C[i, 0] * C[j, 1] - C[j, 0] * C[i, 1]
        w[(i, j)] = np.linalg.det(np.column_stack([V[:, i], V[:, j], s3, s4]))
        E[(i, j)] = 2.0 * ell * (nu_p[i] + nu_p[j])
    return {"nu_m": nu_m, "nu_p": nu_p, "V": V, "C": C, "s3": s3, "s4": s4,
            "m": m, "w": w, "E": E,
            "degenerate_u": degenerate_u, "degenerate_s": degenerate_s}


def _plateau_value(params, lam, nu_m=None, nu_p=None):
    """(normalized_value, literal_value, log_scale, term_scale, data)."""
    data = _plateau_terms(params, lam, nu_m=nu_m, nu_p=nu_p)
    m, w, E = data["m"], data["w"], data["E"]
    sigma = max(e.real for e in E.values())
    nu_p_ = data["nu_p"]
    min_sep_p = min(abs(nu_p_[j] - nu_p_[i]) for i, j in _PAIRS)
    if min_sep_p < 1e-5 * max(1.0, *np.abs(nu_p_)):
        # eigenbasis of the plateau system is (nearly) singular; use the
        # exterior-power propagator instead
        if data["degenerate_u"] or data["degenerate_s"]:
            raise EigenbasisIllConditioned(
                "simultaneous plus-family and minus-family root collisions "
                f"at lambda = {lam}")
        acc, sigma = _plateau_compound(params, lam, data["nu_m"], nu_p_)
        term_scale = abs(acc)
        nu_m_ = data["nu_m"]
        normalized = acc / ((nu_m_[1] - nu_m_[0]) * (nu_m_[3] - nu_m_[2]))
        data.update(sigma=sigma, term_scale=term_scale, compound=True)
        return normalized, acc, sigma, term_scale, data
    acc = 0.0 + 0.0j
    term_scale = 0.0
    for ij in _PAIRS:
        t = m[ij] * w[ij] * cmath.exp(E[ij] - sigma)
        acc += t
        term_scale += abs(t)
    # `acc` is the scaled determinant with any collided minus-pair factor
    # already replaced by its derivative limit.  `normalized` divides out
    # whichever pair factors are still present, so it is analytic through
    # the collisions; `literal` restores both actual factors.
    nu_m_ = data["nu_m"]
    fac_u = 1.0 if data["degenerate_u"] else nu_m_[1] - nu_m_[0]
    fac_s = 1.0 if data["degenerate_s"] else nu_m_[3] - nu_m_[2]
    normalized = acc / (fac_u * fac_s)
    literal = normalized * (nu_m_[1] - nu_m_[0]) * (nu_m_[3] - nu_m_[2])
    data.update(sigma=sigma, term_scale=term_scale)
    return normalized, literal, sigma, term_scale, data


def plateau_determinant(params, lam):
    """Scaled matching determinant whose zeros are the eigenvalues of
    the finite-plateau operator.

    Raises OnEssentialSpectrum if the exterior (chi_minus) system is not
    hyperbolic at lambda.  If lambda sits on the minus-side absolute
    spectrum the stable/unstable selection is ambiguous; the tie-broken
    value is returned with on_absolute=True.
    """
    lam = complex(lam)
    rm = spatial_roots(params.chi_minus, params.c, lam)
    _assert_off_essential(rm, "minus")
    normalized, literal, sigma, _, data = _plateau_value(params, lam,
                                                         nu_m=rm.nu)
    return EvansValue(
        lam=lam, value=complex(literal), log_scale=float(sigma),
        kind="plateau",
        degenerate=data["degenerate_u"] or data["degenerate_s"],
        on_absolute=_abs_tie(rm), normalized=complex(normalized))


def _plateau_derivs(params, lam, data, wrt):
    """Analytic derivative of the *normalized* scaled plateau value with
    respect to lambda or c (wrt in {"lam", "c"}), holding log_scale
    fixed at its current value.

    Uses dn/dlambda = 1/d_nu and dn/dc = -nu/d_nu for every root, then
    the product/quotient structure of the m·w·exp sum.
    """
    nu_m, nu_p = data["nu_m"], data["nu_p"]
    c, ell = params.c, params.ell

    def droot(nu, chi):
        dnu = dispersion_dnu(chi, c, nu)
        return (1.0 / dnu) if wrt == "lam" else (-nu / dnu)

    if data["degenerate_u"] or data["degenerate_s"]:
        raise EigenbasisIllConditioned(
            "plateau derivative is not defined through a double spatial root; "
            "perturb lambda or c away from the branch point")

    dm_roots = np.array([droot(nu, params.chi_minus) for nu in nu_m])
    dp_roots = np.array([droot(nu, params.chi_plus) for nu in nu_p])

    # dV, dU and hence dC = V^{-1} (dU - dV C)
    V, C = data["V"], data["C"]
    dV = np.column_stack([_e_theta_dnu(nu_p[i], params.chi_plus) * dp_roots[i]
                          for i in range(4)])
    dU = np.column_stack([_e_theta_dnu(nu_m[k], params.chi_minus) * dm_roots[k]
                          for k in (0, 1)])
    dC = np.linalg.solve(V, dU - dV @ C)
    s3, s4 = data["s3"], data["s4"]
    ds3 = _e_theta_dnu(nu_m[2], params.chi_minus) * dm_roots[2]
    ds4 = _e_theta_dnu(nu_m[3], params.chi_minus) * dm_roots[3]

    m, w, E = data["m"], data["w"], data["E"]
    sigma = data["sigma"]
    acc = 0.0 + 0.0j
    dacc = 0.0 + 0.0j
    for i, j in _PAIRS:
        dm = (dC[i, 0] * C[j, 1] + C[i, 0] * dC[j, 1]
              - dC[j, 0] * C[i, 1] - C[j, 0] * dC[i, 1])
        cols = [V[:, i], V[:, j], s3, s4]
        dcols = [dV[:, i], dV[:, j], ds3, ds4]
        dw = 0.0 + 0.0j
        for k in range(4):
            repl = list(cols)
            repl[k] = dcols[k]
            dw += np.linalg.det(np.column_stack(repl))
        dE = 2.0 * ell * (dp_roots[i] + dp_roots[j])
        ex = cmath.exp(E[(i, j)] - sigma)
        acc += m[(i, j)] * w[(i, j)] * ex
        dacc += (dm * w[(i, j)] + m[(i, j)] * dw
                 + m[(i, j)] * w[(i, j)] * dE) * ex
    # quotient rule for the two normalization factors
    dlog_fac = 0.0 + 0.0j
    if not data["degenerate_u"]:
        dlog_fac += (dm_roots[1] - dm_roots[0]) / (nu_m[1] - nu_m[0])
    if not data["degenerate_s"]:
        dlog_fac += (dm_roots[3] - dm_roots[2]) / (nu_m[3] - nu_m[2])
    fac_u = 1.0 if data["degenerate_u"] else nu_m[1] - nu_m[0]
    fac_s = 1.0 if data["degenerate_s"] else nu_m[3] - nu_m[2]
    val = acc / (fac_u * fac_s)
    dval = dacc / (fac_u * fac_s) - val * dlog_fac
    return val, dval


@dataclass(frozen=True)
class CrossingData:
    """First Hopf crossing of the plateau eigenvalue pair."""

    ell: float
    c_star: float
    lambda_star: complex
    dRe_dc: float
    simple: bool
    residual: float = 0.0
    iterations: int = 0

    @property
    def omega(self):
        return self.lambda_star.imag


def expansion_crossing(ell, alpha):
    """Large-plateau predictions for the crossing shifts:

        lambda_hat = i pi^2 kappa / (4 mu ell^2) * (-1 + 6 (mu^2 + kappa^2))
        c_hat      =       -pi^2 / (4 mu ell^2) * ( 1 + 6 (mu^2 - kappa^2))

    with (mu, kappa) the spreading-point constants for plateau strength
    alpha.  Returns (c_hat, lambda_hat); both are O(ell^-2) and the true
    crossing differs from (c_lin + c_hat, lambda_lin + lambda_hat) by
    O(ell^-3).

    Both lines follow from the central-pair quantization of the matching
    determinant: the pair collides at nu_br(c) with lambda quantized as
    lambda = lambda_br(c) - pi^2 d_nunu / (8 ell^2) + O(ell^-3), and the
    crossing condition Re lambda = 0 together with dlambda_br/dc = nu_br
    yields c_hat = -Re(lambda_tilde)/mu and lambda_hat = i (kappa c_hat +
    Im lambda_tilde), which simplify to the formulas above.  (Checked
    against tracked determinant roots and against finite-difference
    eigenvalues of the full operator; the remainders are genuinely
    O(ell^-3).)
    """
    if not ell > 0:
        raise ValidationError(f"ell must be positive, got {ell}")
    sp = closed_form_spreading(alpha)
    mu, kappa = sp.mu_lin, sp.kappa_lin
    pref = math.pi ** 2 / (4.0 * mu * ell ** 2)
    lam_hat = 1j * pref * kappa * (-1.0 + 6.0 * (mu ** 2 + kappa ** 2))
    c_hat = -pref * (1.0 + 6.0 * (mu ** 2 - kappa ** 2))
    return c_hat, lam_hat


def determinant_root(params, seed):
    """Track the determinant zero nearest `seed` at fixed speed.

    Newton in lambda with the analytic derivative; returns the polished
    eigenvalue.  Useful for following the leading pair away from the
    crossing, e.g. to read off the oscillation frequency Im lambda(c)
    at an off-critical speed.
    """
    lam, _ = _newton_lambda(params, seed)
    return lam


def _newton_lambda(params, lam0, tol=1e-13, max_iter=60):
    """Polish a determinant root in lambda at fixed c."""
    lam = complex(lam0)
    for it in range(max_iter):
        val, _, _, tscale, data = _plateau_value(params, lam)
        if abs(val) < tol * max(tscale, 1e-300):
            return lam, abs(val) / max(tscale, 1e-300)
        _, dval = _plateau_derivs(params, lam, data, "lam")
        if dval == 0:
            break
        lam -= val / dval
    raise NoConvergence(f"lambda-polish stalled at {lam} (c = {params.c})",
                        last_iterate=lam)


def find_hopf_crossing(params, seed=None, tol=TOL_CROSS, max_iter=50):
    """Locate the first crossing: solve {D(lambda, c) = 0, Re lambda = 0}
    for (lambda, c) by Newton with analytic derivatives, seeded by the
    large-plateau expansion (alpha is params.chi_plus).

    dRe_dc is filled by central finite differences of the tracked root,
    and simplicity of the zero is asserted via its lambda-derivative.
    """
    ell = params.ell
    if ell < 8:
        warnings.warn(f"ell = {ell} is small; the expansion seed may sit in "
                      "the wrong basin", stacklevel=2)
    if seed is None:
        sp = closed_form_spreading(params.chi_plus)
        c_hat, lam_hat = expansion_crossing(ell, params.chi_plus)
        lam, c = sp.lam_lin + lam_hat, sp.c_lin + c_hat
    else:
        lam, c = complex(seed[0]), float(seed[1])

    # Snap onto the rightmost determinant root near the seed.  At moderate
    # ell the expansion seed can sit between neighbouring plateau modes, and
    # the later modes lie strictly to the left of the first one, so "largest
    # real part among polished candidates" picks the first-crossing branch.
    p = params.with_c(c)
    fan = 0.15 * (1.0 + abs(lam.imag))
    candidates = []
    for off in (0.0, fan * 1j, -fan * 1j, fan, fan + fan * 1j,
                fan - fan * 1j, 2 * fan * 1j):
        try:
            root, res = _newton_lambda(p, lam + off)
        except (NoConvergence, OnEssentialSpectrum, EigenbasisIllConditioned):
            continue
        if res < 1e-9 and abs(root - lam) < 4.0 * fan and root.imag > 0:
            if not any(abs(root - r) < 1e-8 * (1 + abs(r))
                       for r in candidates):
                candidates.append(root)
    if not candidates:
        raise NoConvergence(
            f"no determinant root found near the seed {lam} (ell = {ell})",
            last_iterate=(lam, c))
    lam = max(candidates, key=lambda z: z.real)

    # Drive Re lambda(c) to zero along the tracked root: Newton in c with
    # dlambda/dc = -D_c / D_lambda, re-polishing lambda after every step.
    it = 0
    for it in range(1, max_iter + 1):
        if abs(lam.real) < tol:
            break
        p = params.with_c(c)
        _, _, _, _, data = _plateau_value(p, lam)
        _, dlam = _plateau_derivs(p, lam, data, "lam")
        _, dc_ = _plateau_derivs(p, lam, data, "c")
        slope = (-dc_ / dlam).real
        if slope == 0.0:
            raise NoConvergence(
                f"Re lambda is stationary in c at iteration {it}",
                last_iterate=(lam, c))
        step = -lam.real / slope
        cap = 0.1 * (1.0 + c)
        step = math.copysign(min(abs(step), cap), step)
        moved = False
        for _ in range(10):
            c_try = c + step
            if c_try > 0:
                try:
                    lam_try, _ = _newton_lambda(params.with_c(c_try), lam)
                except (NoConvergence, OnEssentialSpectrum,
                        EigenbasisIllConditioned):
                    lam_try = None
                if (lam_try is not None
                        and abs(lam_try - lam) < 0.3 * (1.0 + abs(lam))):
                    lam, c = lam_try, c_try
                    moved = True
                    break
            step *= 0.5
        if not moved:
            raise NoConvergence(
                f"root tracking stalled at iteration {it} (ell = {ell})",
                last_iterate=(lam, c))
    else:
        raise NoConvergence(
            f"crossing Newton did not converge in {max_iter} iterations "
            f"(ell = {ell})", last_iterate=(lam, c))

    p = params.with_c(c)
    val, _, _, tscale, data = _plateau_value(p, lam)
    _, dlam = _plateau_derivs(p, lam, data, "lam")
    simple = abs(dlam) > 1e-8 * tscale * (1.0 + 2.0 * ell)
    if not simple:
        raise NotSimple(
            f"|dD/dlambda| = {abs(dlam):.3e} too small relative to the "
            f"term scale {tscale:.3e} at the located crossing")

    dc_step = 1e-5 * max(1.0, abs(c))
    lp, _ = _newton_lambda(params.with_c(c + dc_step), lam)
    lm, _ = _newton_lambda(params.with_c(c - dc_step), lam)
    dre_dc = (lp.real - lm.real) / (2.0 * dc_step)

    return CrossingData(ell=float(ell), c_star=float(c), lambda_star=lam,
                        dRe_dc=float(dre_dc), simple=True,
                        residual=abs(val) / max(tscale, 1e-300),
                        iterations=it)


# ---------------------------------------------------------------------------
# winding counts
# ---------------------------------------------------------------------------

def _track(prev, fresh):
    """Assign each previous root its nearest fresh successor (unique).
    Returns the permuted fresh array, or None if the assignment is
    ambiguous (step too large)."""
    n = len(prev)
    out = np.empty(n, dtype=complex)
    dist = np.abs(prev[:, None] - fresh[None, :])
    sep = np.min(np.abs(fresh[:, None] - fresh[None, :])
                 + np.diag([np.inf] * n))
    used_r, used_c = set(), set()
    for _ in range(n):
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        if dist[i, j] > 0.45 * max(sep, 1e-14):
            return None
        out[i] = fresh[j]
        used_r.add(i)
        used_c.add(j)
        dist[i, :] = np.inf
        dist[:, j] = np.inf
    return out


def count_eigs_in_box(params, box, n_contour=600, max_points=60_000):
    """Number of matching-determinant zeros inside a rectangle, via the
    argument principle.

    box = (re0, re1, im0, im1).  The boundary is walked counterclockwise
    from the bottom-right corner with the spatial-root labels continued
    along the contour (never re-sorted), and the winding of the
    pair-normalized determinant is accumulated with adaptive bisection
    until every phase increment is below pi/2.  The normalized
    determinant is single-valued along such contours, so the total phase
    closes up to roundoff; a winding that is not nearly an integer (or a
    refinement budget blow-up, e.g. a zero sitting on the boundary)
    raises ContourTooCoarse.
    """
    re0, re1, im0, im1 = map(float, box)
    if not (re1 > re0 and im1 > im0):
        raise ValidationError(f"degenerate box {box}")
    corners = [complex(re1, im0), complex(re1, im1),
               complex(re0, im1), complex(re0, im0), complex(re1, im0)]
    pts = []
    per_edge = max(2, n_contour // 4)
    for a, b in zip(corners[:-1], corners[1:]):
        ts = np.linspace(0.0, 1.0, per_edge, endpoint=False)
        pts.extend(a + (b - a) * ts)
    pts.append(corners[0])

    def eval_at(lam, nu_m_prev, nu_p_prev):
        if nu_m_prev is None:
            rm = spatial_roots(params.chi_minus, params.c, lam).nu
            rp = spatial_roots(params.chi_plus, params.c, lam).nu
        else:
            rm = _track(nu_m_prev,
                        spatial_roots(params.chi_minus, params.c, lam,
                                      order=False).nu)
            rp = _track(nu_p_prev,
                        spatial_roots(params.chi_plus, params.c, lam,
                                      order=False).nu)
            if rm is None or rp is None:
                return None
        val, _, _, _, _ = _plateau_value(params, lam, nu_m=rm, nu_p=rp)
        return val, rm, rp

    first = eval_at(pts[0], None, None)
    total = 0.0
    budget = max_points
    cur_lam = pts[0]
    cur_val, cur_m, cur_p = first
    queue = list(pts[1:])
    idx = 0
    while idx < len(queue):
        lam_next = queue[idx]
        res = eval_at(lam_next, cur_m, cur_p)
        dphi = None
        if res is not None:
            if abs(res[0]) == 0.0:
                raise ContourTooCoarse(
                    f"determinant zero on the contour at {lam_next}")
            dphi = cmath.phase(res[0] / cur_val)
        if res is None or abs(dphi) > 0.5 * math.pi:
            budget -= 1
            if budget <= 0 or abs(lam_next - cur_lam) < 1e-13:
                raise ContourTooCoarse(
                    f"refinement exhausted near lambda = {lam_next}")
            queue.insert(idx, 0.5 * (cur_lam + lam_next))
            continue
        total += dphi
        cur_lam, (cur_val, cur_m, cur_p) = lam_next, res
        idx += 1

    winding = total / (2.0 * math.pi)
    if abs(winding - round(winding)) > 0.1:
        raise ContourTooCoarse(
            f"winding {winding:.4f} is not close to an integer; a zero or "
            "branch point is probably hugging the contour")
    n = int(round(winding))
    if n < 0:
        raise ContourTooCoarse(f"negative winding {n}; tracking failure")
    return n


# ---------------------------------------------------------------------------
# eigenfunction profiles at a crossing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenfunctionProfile:
    """Direct (p) and adjoint (psi) eigenfunctions at a crossing, sampled
    on `grid`, plus the plateau-envelope data: fitted amplitudes A, B
    (normalized so A^3 B = e^{2 mu_lin ell} with <psi, p> = 1), the
    complex phase correction alpha_ell of the plateau rate, and the tail
    decay rates delta (left, = |Re nu_2^-|) and delta_prime (right,
    = |Re nu_3^-|).  p_pieces / psi_pieces hold the exact
    piecewise-exponential representation as (region, coef, rate, anchor)
    tuples, region in {"left", "mid", "right"}."""

    grid: np.ndarray
    p: np.ndarray
    psi: np.ndarray
    A: float
    B: float
    alpha_ell: complex
    delta: float
    delta_prime: float
    nu_minus: np.ndarray
    nu_plus: np.ndarray
    p_pieces: tuple
    psi_pieces: tuple
    fit_r2_p: float
    fit_r2_psi: float
    normalization: str


def _null_vector(N):
    _, s, vh = np.linalg.svd(N)
    if s[-1] > 1e-6 * s[0]:
        raise NullVectorDegenerate(
            f"smallest singular value {s[-1]:.3e} not small relative to "
            f"{s[0]:.3e}; lambda is not an eigenvalue here")
    if s[-2] < 1e-6 * s[0]:
        raise NullVectorDegenerate(
            "two near-zero singular values; null space is not 1-dimensional")
    return vh[-1].conj()


def _eval_pieces(pieces, ell, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    masks = {"left": x < -ell, "mid": (x >= -ell) & (x <= ell),
             "right": x > ell}
    for region, coef, rate, anchor in pieces:
        msk = masks[region]
        if np.any(msk):
            out[msk] += coef * np.exp(rate * (x[msk] - anchor))
    return out


def _inner_exact(pieces_a, pieces_b, ell):
    """<a, b> = integral of conj(a) * b over the line, exactly, using the
    piecewise-exponential representations."""
    by_region_a = {"left": [], "mid": [], "right": []}
    by_region_b = {"left": [], "mid": [], "right": []}
    for region, coef, rate, anchor in pieces_a:
        by_region_a[region].append((coef, rate, anchor))
    for region, coef, rate, anchor in pieces_b:
        by_region_b[region].append((coef, rate, anchor))
    limits = {"left": (-np.inf, -ell), "mid": (-ell, ell),
              "right": (ell, np.inf)}
    total = 0.0 + 0.0j
    for region in ("left", "mid", "right"):
        a, b = limits[region]
        for ca, ra, Aa in by_region_a[region]:
            for cb, rb, Ab in by_region_b[region]:
                r = np.conj(ra) + rb
                coef = np.conj(ca) * cb

                def f(x):
                    return np.conj(ra) * (x - Aa) + rb * (x - Ab)

                if a == -np.inf:
                    total += coef * cmath.exp(f(b)) / r
                elif b == np.inf:
                    total += coef * (-cmath.exp(f(a)) / r)
                else:
                    if abs(r * (b - a)) < 1e-8:
                        total += coef * cmath.exp(f(a)) * (b - a) \
                            * (1.0 + r * (b - a) / 2.0)
                    else:
                        total += coef * (cmath.exp(f(b)) - cmath.exp(f(a))) / r
    return total


def _matching_system(rates_left, vecs_left, rates_mid, vecs_mid,
                     rates_right, vecs_right, ell):
    """8x8 continuity system for a piecewise solution with 2 left modes
    anchored at -ell, 4 mid modes anchored at their largest endpoint,
    and 2 right modes anchored at +ell.  Unknown order: (a1, a2,
    b1..b4, s1, s2)."""
    anchors_mid = np.where(np.real(rates_mid) >= 0, ell, -ell)
    N = np.zeros((8, 8), dtype=complex)
    for k in range(2):
        N[0:4, k] = vecs_left[k]                      # e^{r*0} at x=-ell
    for k in range(4):
        N[0:4, 2 + k] = -vecs_mid[k] * cmath.exp(
            rates_mid[k] * (-ell - anchors_mid[k]))
        N[4:8, 2 + k] = vecs_mid[k] * cmath.exp(
            rates_mid[k] * (ell - anchors_mid[k]))
    for k in range(2):
        N[4:8, 6 + k] = -vecs_right[k]
    return N, anchors_mid


def eigenfunction_profiles(crossing, params, grid, normalization="paper_AB"):
    """Construct the eigenfunction p and adjoint eigenfunction psi at a
    crossing, exactly (piecewise exponentials from the matching null
    vectors), sampled on `grid`.

    Normalization: <psi, p> = 1 always (exact quadrature-free inner
    product); with normalization="paper_AB" (default) the pair is
    additionally rescaled so the fitted plateau amplitudes satisfy
    A^3 B = e^{2 mu_lin ell}.  The plateau fits must reach R^2 >= 0.99
    or NormalizationFitFailure is raised.
    """
    grid = np.asarray(grid, dtype=float)
    ell, c, lam = params.ell, crossing.c_star, crossing.lambda_star
    if grid.min() > -ell or grid.max() < ell:
        raise ValidationError(
            f"grid [{grid.min()}, {grid.max()}] must cover [-ell, ell]")
    p2 = params.with_c(c)
    rm = spatial_roots(p2.chi_minus, c, lam)
    rp = spatial_roots(p2.chi_plus, c, lam)
    nu_m, nu_p = rm.nu, rp.nu

    # direct eigenfunction in the continuous theta-variables
    N_p, anchors = _matching_system(
        nu_m[:2], [_e_theta(nu, p2.chi_minus) for nu in nu_m[:2]],
        nu_p, [_e_theta(nu, p2.chi_plus) for nu in nu_p],
        nu_m[2:], [_e_theta(nu, p2.chi_minus) for nu in nu_m[2:]], ell)
    z = _null_vector(N_p)
    p_pieces = tuple(
        [("left", z[k], nu_m[k], -ell) for k in range(2)]
        + [("mid", z[2 + k], nu_p[k], anchors[k]) for k in range(4)]
        + [("right", z[6 + k], nu_m[2 + k], ell) for k in range(2)])

    # adjoint: plain C^3 matching, rates -conj(nu), Vandermonde vectors
    am = -np.conj(nu_m)
    ap = -np.conj(nu_p)

    def plain(mval):
        return np.array([1.0, mval, mval ** 2, mval ** 3], dtype=complex)

    # decaying-left adjoint modes come from nu_3^-, nu_4^- and vice versa
    N_psi, anchors_a = _matching_system(
        am[2:], [plain(mv) for mv in am[2:]],
        ap, [plain(mv) for mv in ap],
        am[:2], [plain(mv) for mv in am[:2]], ell)
    za = _null_vector(N_psi)
    psi_pieces = tuple(
        [("left", za[k], am[2 + k], -ell) for k in range(2)]
        + [("mid", za[2 + k], ap[k], anchors_a[k]) for k in range(4)]
        + [("right", za[6 + k], am[k], ell) for k in range(2)])

    # <psi, p> = 1
    ip = _inner_exact(psi_pieces, p_pieces, ell)
    if abs(ip) < 1e-13:
        raise NullVectorDegenerate(
            f"<psi, p> = {ip:.3e}; eigenvalue is not algebraically simple")
    tpsi = np.conj(1.0 / ip)
    psi_pieces = tuple((r, c_ * tpsi, rt, an) for r, c_, rt, an in psi_pieces)

    # plateau envelope fits
    sp = closed_form_spreading(p2.chi_plus)
    center = sorted(range(4), key=lambda i: abs(nu_p[i] - sp.nu_lin))[:2]
    alpha_ell = 0.5 * (nu_p[center[0]] + nu_p[center[1]]) - sp.nu_lin
    xf = np.linspace(-ell, ell, 4001)
    envelope = np.sin(math.pi * (xf - ell) / (2.0 * ell)).astype(complex)
    # Fit the demodulated profiles p e^{-(nu_lin+alpha)x} (resp.
    # psi e^{+conj(nu_lin+alpha)x}) against the bare sine.  A straight
    # least-squares fit of the modulated model would carry weight
    # |e^{2 mu x}| spanning many orders of magnitude across the plateau
    # and judge the profile only at the amplified interface, whereas the
    # O(1/ell) residual bound is relative to the local carrier amplitude.
    rate = sp.nu_lin + alpha_ell
    dem_p = _eval_pieces(p_pieces, ell, xf) * np.exp(-rate * xf)
    dem_q = _eval_pieces(psi_pieces, ell, xf) * np.exp(np.conj(rate) * xf)
    ee = np.vdot(envelope, envelope)
    A_hat = np.vdot(envelope, dem_p) / ee
    B_hat = np.vdot(envelope, dem_q) / ee
    r2_p = 1.0 - np.linalg.norm(dem_p - A_hat * envelope) ** 2 \
        / np.linalg.norm(dem_p) ** 2
    r2_psi = 1.0 - np.linalg.norm(dem_q - B_hat * envelope) ** 2 \
        / np.linalg.norm(dem_q) ** 2
    # The gauge A^3 B = e^{2 mu ell} leans on the leading-order plateau
    # profile, so it is only meaningful when the profile actually follows
    # that shape.  Gate on the p-fit: the adjoint carries a larger O(1/ell)
    # correction constant and its fitted magnitude B is insensitive to it
    # (sub-percent across fit windows), so r2_psi is reported but not gated.
    if normalization == "paper_AB" and r2_p < 0.99:
        raise NormalizationFitFailure(
            f"plateau envelope fit R^2 = {r2_p:.4f} below 0.99 "
            f"(adjoint fit {r2_psi:.4f}); the product normalization is "
            "meaningless here")

    # common phase rotation making the p-amplitude real positive
    phase = cmath.exp(-1j * cmath.phase(complex(A_hat)))
    p_pieces = tuple((r, c_ * phase, rt, an) for r, c_, rt, an in p_pieces)
    psi_pieces = tuple((r, c_ * phase, rt, an)
                       for r, c_, rt, an in psi_pieces)
    A0 = abs(complex(A_hat))
    B0 = abs(complex(B_hat))
    if normalization == "paper_AB":
        s = math.sqrt(math.exp(2.0 * sp.mu_lin * ell) / (A0 ** 3 * B0))
        p_pieces = tuple((r, c_ * s, rt, an) for r, c_, rt, an in p_pieces)
        psi_pieces = tuple((r, c_ / s, rt, an)
                           for r, c_, rt, an in psi_pieces)
        A0, B0 = A0 * s, B0 / s
    elif normalization != "unit":
        raise ValidationError(
            f"unknown normalization {normalization!r}; "
            "expected 'paper_AB' or 'unit'")

    return EigenfunctionProfile(
        grid=grid, p=_eval_pieces(p_pieces, ell, grid),
        psi=_eval_pieces(psi_pieces, ell, grid),
        A=float(A0), B=float(B0), alpha_ell=complex(alpha_ell),
        delta=abs(nu_m[1].real), delta_prime=abs(nu_m[2].real),
        nu_minus=nu_m, nu_plus=nu_p,
        p_pieces=p_pieces, psi_pieces=psi_pieces,
        fit_r2_p=float(r2_p), fit_r2_psi=float(r2_psi),
        normalization=normalization)
