"""Banded finite-difference discretization of the linearized operator.

The linearization about the trivial rest state in the comoving frame,

    L u = -(u_xx + chi(x) u)_xx + c u_x,

is put on a truncated interval [-L_half, L_half] with clamped ends
(u = u_x = 0) using fourth-order central stencils.  Because the exterior
state is exponentially stable, truncation error decays like
exp(-delta * margin) and a modest margin beyond the plateau suffices;
the margin-doubling check in the test suite pins that down numerically.

The dense eigendecomposition here is the slow-but-trustworthy
counterpart to the analytic matching determinant in `evans`: the two
must agree on eigenvalues to discretization accuracy, which is the
strongest cross-validation the toolkit has.  The normalized right/left
pairs feed the normal-form quadrature in `hopf`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as sparse_linalg

from .dispersion import ModelParams
from .errors import (EigensolverFailure, GeometryMismatch,
                     NoEigenvalueNearSeed, ValidationError)

__all__ = [
    "GridOperator", "EigenPair", "build_operator", "spectrum",
    "leading_pair", "derivative_matrix", "gregory_weights",
    "DENSE_LIMIT", "DEFAULT_MARGIN",
]

DENSE_LIMIT = 4000
DEFAULT_MARGIN = 15.0
RESIDUAL_TOL = 1e-8

# fourth-order central stencils: (offsets, numerators, h-power divisor)
_STENCILS = {
    1: ((-2, -1, 1, 2), (1.0, -8.0, 8.0, -1.0), 12.0),
    2: ((-2, -1, 0, 1, 2), (-1.0, 16.0, -30.0, 16.0, -1.0), 12.0),
    4: ((-3, -2, -1, 0, 1, 2, 3),
        (-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0), 6.0),
}


def derivative_matrix(n, h, order):
    """n x n sparse d^order/dx^order on the clamped interior grid.

    Interior rows carry the fourth-order central stencil; rows near the
    ends fold ghost values through the boundary node by even reflection
    u(x_b - s) = u(x_b + s), which together with the dropped boundary
    value encodes u = u_x = 0.
    """
    offsets, nums, div = _STENCILS[order]
    coefs = np.asarray(nums) / (div * h ** order)
    mat = sparse.diags(
        [np.full(n - abs(o), cf) for o, cf in zip(offsets, coefs)],
        offsets, shape=(n, n), format="lil")
    width = max(-min(offsets), max(offsets))
    for i in range(width):
        for o, cf in zip(offsets, coefs):
            j = i + o
            if j <= -2:                      # ghost left of the boundary
                mat[i, -j - 2] += cf
    for i in range(n - width, n):
        for o, cf in zip(offsets, coefs):
            j = i + o
            if j >= n + 1:                   # ghost right of the boundary
                mat[i, 2 * n - j] += cf
    return mat.tocsr()


def gregory_weights(n, h):
    """Fourth-order Gregory quadrature weights on n uniform nodes.

    Trapezoid weights with end corrections; interior weights are all
    equal to h, which keeps discrete summation-by-parts exact for the
    symmetric interior stencils (the transposition check in `hopf`
    relies on that).
    """
    if n < 8:
        raise ValidationError(f"need at least 8 nodes for Gregory-4, got {n}")
    w = np.full(n, h)
    edge = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0]) * h
    w[:3] = edge
    w[-3:] = edge[::-1]
    return w


@dataclass(frozen=True)
class GridOperator:
    """Discretized linearization on a clamped truncated interval.

    `matrix` is real CSR with bandwidth <= 7 away from the folded rows.
    If eta > 0 it is the similarity transform W M W^{-1} with
    W = diag(exp(eta*sqrt(1+x^2))), whose spectrum is that of L viewed
    on the exponentially weighted space.
    """

    params: ModelParams
    L_half: float
    h: float
    n: int
    x: np.ndarray = field(repr=False)
    chi: np.ndarray = field(repr=False)
    matrix: sparse.csr_matrix = field(repr=False)
    eta: float = 0.0
    boundary: str = "dirichlet_clamped"

    def apply(self, u):
        return self.matrix @ np.asarray(u)

    def derivative(self, order):
        """The matching D1/D2/D4 used in the assembly, for integrand work."""
        return derivative_matrix(self.n, self.h, order)


@dataclass(frozen=True)
class EigenPair:
    """Right/left eigenpair of a GridOperator.

    The pairing is the h-weighted discrete inner product, so `lam`, `v`
    and `w` approximate a continuum eigenvalue, eigenfunction and
    adjoint eigenfunction with <w, v>_{L^2} = 1.
    """

    lam: complex
    v: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    normalized: bool
    x: np.ndarray = field(repr=False)
    h: float
    residual: float
    residual_adjoint: float = math.nan


def _sample_chi(x, params, h):
    chi = np.where(np.abs(x) < params.ell, params.chi_plus, params.chi_minus)
    mid = 0.5 * (params.chi_plus + params.chi_minus)
    for s in (-params.ell, params.ell):
        j = int(np.argmin(np.abs(x - s)))
        if abs(abs(x[j]) - params.ell) <= 0.5 * h + 1e-12:
            chi[j] = mid
    return chi


def build_operator(params, L_half=None, h=0.05, eta=None):
    """Assemble -D4 - D2 diag(chi) + c D1 on the clamped interior grid.

    The interfaces x = +-ell need not be grid points; the node nearest
    each interface (always within h/2) takes the midpoint value
    (chi_+ + chi_-)/2, which keeps the jump treatment symmetric and, as
    measured by the refinement tests, does not degrade the global
    fourth-order convergence of the leading eigenvalues.
    """
    if L_half is None:
        # snap the default up to a multiple of h so any step size works;
        # an explicit L_half is honored exactly (and may fail the tiling
        # check below, which is the caller's cue to pick compatible values)
        L_half = h * math.ceil((params.ell + DEFAULT_MARGIN) / h - 1e-12)
    if eta is None:
        eta = params.eta
    if L_half <= params.ell:
        raise GeometryMismatch(
            f"L_half = {L_half} does not contain the plateau ell = {params.ell}")
    steps = 2.0 * L_half / h
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        raise GeometryMismatch(
            f"h = {h} does not tile [-{L_half}, {L_half}] evenly")
    n = int(round(steps)) - 1
    if n < 9:
        raise GeometryMismatch(f"grid too coarse: only {n} interior nodes")
    if eta < 0:
        raise ValidationError(f"eta must be >= 0, got {eta}")
    x = -L_half + h * np.arange(1, n + 1)
    chi = _sample_chi(x, params, h)
    d1 = derivative_matrix(n, h, 1)
    d2 = derivative_matrix(n, h, 2)
    d4 = derivative_matrix(n, h, 4)
    mat = (-d4 - d2 @ sparse.diags(chi) + params.c * d1).tocsr()
    if eta > 0.0:
        wgt = np.exp(eta * np.sqrt(1.0 + x ** 2))
        mat = (sparse.diags(wgt) @ mat @ sparse.diags(1.0 / wgt)).tocsr()
    return GridOperator(params=params, L_half=float(L_half), h=float(h),
                        n=n, x=x, chi=chi, matrix=mat, eta=float(eta))


def _normalize_pair(lam, v, w, h):
    ip = h * np.vdot(w, v)
    if abs(ip) < 1e-12 * math.sqrt(float(np.vdot(v, v).real
                                         * np.vdot(w, w).real)) * h:
        return v, w, False
    return v, w / np.conj(ip), True


def _in_region(lam, region):
    if region is None or region == "all":
        return True
    re_lo, re_hi, im_lo, im_hi = region
    return re_lo <= lam.real <= re_hi and im_lo <= lam.imag <= im_hi


def spectrum(op, region=None):
    """Dense eigendecomposition, filtered to `region` and normalized.

    region: None/"all" or a rectangle (re_min, re_max, im_min, im_max).
    Returns EigenPairs sorted by descending real part.  Every returned
    pair satisfies the residual invariant; a violation aborts rather
    than silently returning junk.
    """
    if op.n > DENSE_LIMIT:
        raise EigensolverFailure(
            f"n = {op.n} exceeds the dense limit {DENSE_LIMIT}; "
            "use leading_pair (shift-invert) instead")
    dense = op.matrix.toarray()
    try:
        vals, vl, vr = scipy.linalg.eig(dense, left=True, right=True)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigensolverFailure(f"dense eigensolver failed: {exc}") from exc
    scale = np.linalg.norm(dense, ord=np.inf)
    pairs = []
    for k in np.argsort(-vals.real):
        lam = complex(vals[k])
        if not _in_region(lam, region):
            continue
        v, w = vr[:, k], vl[:, k]
        res = np.linalg.norm(dense @ v - lam * v) / np.linalg.norm(v)
        if res > RESIDUAL_TOL * max(1.0, scale * 1e-6):
            raise EigensolverFailure(
                f"eigenpair at {lam:.6g} has residual {res:.3e}")
        res_w = np.linalg.norm(np.conj(w) @ dense - lam * np.conj(w)) \
            / np.linalg.norm(w)
        v, w, ok = _normalize_pair(lam, v, w, op.h)
        pairs.append(EigenPair(lam=lam, v=v, w=w, normalized=ok, x=op.x,
                               h=op.h, residual=float(res),
                               residual_adjoint=float(res_w)))
    return pairs


def _shift_invert(mat, sigma, tol=0.0):
    try:
        vals, vecs = sparse_linalg.eigs(mat, k=1, sigma=sigma, which="LM",
                                        tol=tol)
    except (sparse_linalg.ArpackNoConvergence, RuntimeError) as exc:
        raise EigensolverFailure(
            f"shift-invert at sigma = {sigma:.6g} failed: {exc}") from exc
    lam, z = complex(vals[0]), vecs[:, 0]
    # ARPACK residuals can sit right at 1e-8 for the transposed problem;
    # two inverse-iteration sweeps at the converged value push them to
    # the factorization's own accuracy.
    shift = lam + 1e-12j * (1.0 + abs(lam))
    lu = sparse_linalg.splu((mat - shift * sparse.identity(
        mat.shape[0], format="csc", dtype=complex)).tocsc())
    for _ in range(2):
        z = lu.solve(z)
        z = z / np.linalg.norm(z)
    lam = complex(np.vdot(z, mat @ z) / np.vdot(z, z))
    return lam, z


def leading_pair(params, seed_lambda, L_half=None, h=0.05, eta=None, op=None):
    """Normalized eigenpair nearest `seed_lambda` via sparse shift-invert.

    The adjoint vector comes from the transposed problem at the *found*
    eigenvalue (the matrix is real, so M^T y = lam y and w = conj(y)
    gives the left eigenvector for lam itself, not its conjugate).
    """
    if op is None:
        op = build_operator(params, L_half=L_half, h=h, eta=eta)
    mat = op.matrix.tocsc()
    lam, v = _shift_invert(mat, seed_lambda)
    gap = 0.25 * (1.0 + abs(seed_lambda))
    if abs(lam - seed_lambda) > gap:
        raise NoEigenvalueNearSeed(
            f"nearest eigenvalue {lam:.6g} lies {abs(lam - seed_lambda):.3g} "
            f"from seed {seed_lambda:.6g} (threshold {gap:.3g})",
            found=lam, seed=seed_lambda)
    lam_t, y = _shift_invert(mat.T, lam)
    if abs(lam_t - lam) > 1e-6 * (1.0 + abs(lam)):
        raise EigensolverFailure(
            f"transpose eigenvalue {lam_t:.6g} does not match {lam:.6g}")
    w = np.conj(y)
    res = np.linalg.norm(mat @ v - lam * v) / np.linalg.norm(v)
    res_w = np.linalg.norm(mat.T @ y - lam * y) / np.linalg.norm(y)
    if max(res, res_w) > RESIDUAL_TOL:
        raise EigensolverFailure(
            f"shift-invert pair residuals ({res:.3e}, {res_w:.3e}) "
            f"exceed {RESIDUAL_TOL}")
    v, w, ok = _normalize_pair(lam, v, w, op.h)
    if not ok:
        raise EigensolverFailure(
            "left/right vectors are numerically orthogonal; "
            "the eigenvalue does not look algebraically simple")
    return EigenPair(lam=lam, v=v, w=w, normalized=True, x=op.x, h=op.h,
                     residual=float(res), residual_adjoint=float(res_w))
