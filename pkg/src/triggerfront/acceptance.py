"""The executable acceptance suite: nine numbered criteria, each a
self-contained function returning measured-vs-expected data.

This module is the single source of truth for "does the build
reproduce the analysis" — the `verify` CLI command and the acceptance
tests both call `run_criteria` rather than duplicating thresholds.
Criteria A1-A6 and A9 are pure spectral computations (the fast tier);
A7 and A8 are time-dependent simulations (the full tier).

Every check states its tolerance inline and stores what it actually
measured, so a failure report is diagnosable without rerunning.
"""

from __future__ import annotations

import cmath
import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .absolute_spectrum import trace_absolute
from .branch_point import (closed_form_spreading, find_double_root,
                           find_spreading_speed, pinching_check)
from .discrete_operator import build_operator, leading_pair
from .dispersion import ModelParams, eval_dispersion, dispersion_dnu, \
    spatial_roots
from .errors import TriggerFrontError
from .evans import (count_eigs_in_box, determinant_root, evans_back,
                    evans_front, expansion_crossing, find_hopf_crossing)
from .hopf import hopf_analysis, hopf_coefficient, leading_order_theta, \
    solve_quadratic_modes
from .simulate import (GaussianBump, SimConfig, amplitude_sweep, run,
                       _window_amplitudes)

__all__ = ["CriterionResult", "run_criteria", "FAST_CRITERIA",
           "ALL_CRITERIA"]


@dataclass
class CriterionResult:
    name: str
    title: str
    passed: bool
    runtime: float
    expected: str
    measured: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def line(self):
        return f"{self.name} {'PASS' if self.passed else 'FAIL'} " \
               f"({self.runtime:.1f}s)  {self.title}"


def _result(name, title, expected, started, passed, measured, notes=()):
    return CriterionResult(
        name=name, title=title, passed=bool(passed),
        runtime=time.time() - started, expected=expected,
        measured=measured, notes=list(notes))


def criterion_a1(corrupt=False):
    """Closed-form spreading constants vs independent solvers.

    corrupt=True perturbs the reference constant by 1e-6 — the negative
    control demanded of the verify machinery (it must then fail).
    """
    t0 = time.time()
    measured = {}
    ok = True
    for alpha in (0.5, 1.0, 2.0):
        sp = closed_form_spreading(alpha)
        c_ref = sp.c_lin * (1.0 + 1e-6 * corrupt)
        bp = find_spreading_speed(alpha, alpha)
        rel_c = abs(bp.c - c_ref) / abs(c_ref)
        dbl = find_double_root(alpha, sp.c_lin,
                               (sp.lam_lin, sp.nu_lin))
        rel_lam = abs(dbl.lam - sp.lam_lin) / abs(sp.lam_lin)
        rel_nu = abs(dbl.nu - sp.nu_lin) / abs(sp.nu_lin)
        res_d = abs(eval_dispersion(alpha, sp.c_lin, sp.lam_lin,
                                    sp.nu_lin))
        res_dnu = abs(dispersion_dnu(alpha, sp.c_lin, sp.nu_lin))
        measured[f"alpha={alpha}"] = {
            "rel_c": rel_c, "rel_lambda": rel_lam, "rel_nu": rel_nu,
            "residual_d": res_d, "residual_dnu": res_dnu}
        ok &= max(rel_c, rel_lam, rel_nu) < 1e-8
        ok &= max(res_d, res_dnu) < 1e-10
    return _result("A1", "closed-form spreading constants",
                   "rel err < 1e-8 (bisection and Newton vs closed form), "
                   "residuals < 1e-10, alpha in {0.5, 1, 2}",
                   t0, ok, measured)


def criterion_a2():
    t0 = time.time()
    sp = closed_form_spreading(1.0)
    offs = {}
    for ell in (10.0, 20.0, 40.0):
        cr = find_hopf_crossing(ModelParams(c=sp.c_lin, ell=ell))
        c_hat, lam_hat = expansion_crossing(ell, 1.0)
        offs[ell] = (abs(cr.c_star - (sp.c_lin + c_hat)),
                     abs(cr.lambda_star - (sp.lam_lin + lam_hat)))
    orders = {
        "order_c_10_20": math.log2(offs[10.0][0] / offs[20.0][0]),
        "order_c_20_40": math.log2(offs[20.0][0] / offs[40.0][0]),
        "order_lam_10_20": math.log2(offs[10.0][1] / offs[20.0][1]),
        "order_lam_20_40": math.log2(offs[20.0][1] / offs[40.0][1]),
    }
    ok = all(2.5 <= v <= 3.5 for v in orders.values())
    measured = {"offsets": {k: v for k, v in offs.items()}, **orders}
    return _result("A2", "crossing asymptotics vs expansion",
                   "per-doubling order of |crossing - expansion| in "
                   "[2.5, 3.5] for ell in {10, 20, 40}",
                   t0, ok, measured)


def criterion_a3():
    t0 = time.time()
    ell = 15.0
    params = ModelParams(c=1.52, ell=ell)
    cr = find_hopf_crossing(params)
    at = params.with_c(cr.c_star)
    lams = []
    for h in (0.25, 0.125, 0.0625):
        pair = leading_pair(at, cr.lambda_star, L_half=30.0, h=h)
        lams.append(pair.lam)
    e1, e2 = abs(lams[1] - lams[0]), abs(lams[2] - lams[1])
    order = math.log2(e1 / e2)
    rich = lams[2] + (lams[2] - lams[1]) / (2.0 ** order - 1.0)
    gap = abs(rich - cr.lambda_star)
    ok = 3.5 <= order <= 4.5 and gap < 1e-4
    return _result("A3", "discretized operator vs matching determinant",
                   "refinement order in [3.5, 4.5]; Richardson limit "
                   "within 1e-4 of the determinant root (ell = 15)",
                   t0, ok,
                   {"eigenvalues": lams, "order": order,
                    "richardson_gap": gap,
                    "det_root": cr.lambda_star})


def criterion_a4():
    t0 = time.time()
    cr = find_hopf_crossing(ModelParams(c=1.56, ell=20.0))
    at_star = ModelParams(c=cr.c_star, ell=20.0)
    n_star = count_eigs_in_box(at_star, (-0.02, 2.0, -3.0, 3.0))
    shifted = ModelParams(c=cr.c_star + 0.1, ell=20.0)
    n_shift = count_eigs_in_box(shifted, (0.0, 2.0, -3.0, 3.0))
    ok = n_star == 2 and n_shift == 0
    return _result("A4", "first-crossing eigenvalue counts",
                   "2 zeros in {Re >= -0.02, |Im| <= 3} at c_*; 0 in "
                   "{Re >= 0} at c_* + 0.1 (ell = 20)",
                   t0, ok,
                   {"count_at_c_star": n_star,
                    "count_at_c_star_plus_0.1": n_shift,
                    "c_star": cr.c_star})


# Regression floors recorded from the first passing run of the grid
# below; deterministic inputs, so later builds must land within 0.1%.
A5_FLOOR_FRONT = 4.951090
A5_FLOOR_BACK = 2.054694


def criterion_a5():
    t0 = time.time()
    sp = closed_form_spreading(1.0)
    c = sp.c_lin
    bp = find_double_root(1.0, c, (sp.lam_lin, sp.nu_lin))
    curve = trace_absolute(bp)
    abs_pts = np.concatenate([curve.lam, np.conj(curve.lam), [0.0 + 0.0j]])
    min_f, min_b = math.inf, math.inf
    arg_f = arg_b = None
    n_used = 0
    for re in np.linspace(-0.5, 2.0, 40):
        for im in np.linspace(0.0, 3.0, 40):
            lam = complex(re, im)
            if np.min(np.abs(abs_pts - lam)) <= 0.05:
                continue
            n_used += 1
            df = abs(evans_front(c, lam).value)
            db = abs(evans_back(c, lam).value)
            if df < min_f:
                min_f, arg_f = df, lam
            if db < min_b:
                min_b, arg_b = db, lam
    ok = (min_f > 0.0 and min_b > 0.0
          and abs(min_f - A5_FLOOR_FRONT) < 1e-3 * A5_FLOOR_FRONT
          and abs(min_b - A5_FLOOR_BACK) < 1e-3 * A5_FLOOR_BACK)
    return _result("A5", "interface Evans functions do not vanish",
                   "min |D_f|, |D_b| positive on the 40x40 grid (tubes "
                   "around the absolute spectrum and 0 excluded) and "
                   "within 0.1% of the recorded floors "
                   f"{A5_FLOOR_FRONT}/{A5_FLOOR_BACK}",
                   t0, ok,
                   {"min_front": min_f, "at_front": arg_f,
                    "min_back": min_b, "at_back": arg_b,
                    "grid_points_used": n_used})


LEADING_RE_OVER_GAMMA = -1.141420198256433


def criterion_a6(h=0.04375):
    t0 = time.time()
    signs_ok = True
    measured = {}
    results = {}
    for ell in (20.0, 40.0):
        res = hopf_analysis(ModelParams(c=1.56, ell=ell, gamma=1.0), h=h)
        results[ell] = res
    # theta is exactly linear in gamma here (f'' = 0, f''' = 6 gamma),
    # so the gamma sweep is a sign table, not four more eigensolves
    for g in (1.0, -1.0, 0.3, -0.3):
        re_theta = g * results[20.0].theta_plus.real
        measured[f"sign_re_theta(gamma={g})"] = math.copysign(1.0, re_theta)
        signs_ok &= (re_theta > 0) == (g < 0)
    gaps = {}
    for ell, res in results.items():
        ratio = res.theta_plus.real / res.gamma
        gaps[ell] = abs(ratio - LEADING_RE_OVER_GAMMA) \
            / abs(LEADING_RE_OVER_GAMMA)
        measured[f"re_theta_over_gamma(ell={ell})"] = ratio
        measured[f"gap_vs_leading(ell={ell})"] = gaps[ell]
    quant_ok = gaps[20.0] < 0.30 and gaps[40.0] < gaps[20.0]
    notes = []
    if not quant_ok:
        notes.append(
            "sign clause holds; the quantitative clause fails because "
            "the measured paper_AB theta_+ decays with ell instead of "
            "approaching the printed leading value (the reference "
            "evaluation of the normal-form integral is not reproducible "
            "from its own inputs; see the eigenfunction-profile module "
            "docs for the normalization actually implemented)")
    return _result("A6", "branching direction and leading magnitude",
                   "sign(Re theta_+) = -sign(gamma) for gamma in "
                   "{+-1, +-0.3}; paper_AB Re theta_+/gamma within 30% "
                   f"of {LEADING_RE_OVER_GAMMA:.4f} at ell = 20, gap "
                   "shrinking to ell = 40",
                   t0, signs_ok and quant_ok, measured, notes)


def _crossing_20():
    return find_hopf_crossing(ModelParams(c=1.56, ell=20.0, gamma=-1.0))


def criterion_a7():
    t0 = time.time()
    sp = closed_form_spreading(1.0)
    cr = _crossing_20()
    seed = GaussianBump(-10.0, 1e-3, 6.0, mean_free=True,
                        carrier=sp.kappa_lin)
    # (a) + (b): convective regime, zero source
    pb = ModelParams(c=cr.c_star + 0.1, ell=20.0, gamma=1.0)
    cfg_b = SimConfig(params=pb, domain_length=400.0, t_final=500.0,
                      n_modes=16384, dt=0.05, perturbation=seed)
    _, db = run(cfg_b)
    masses = [v for _, v in db.mass_series]
    drift = max(abs(v - masses[0]) for v in masses)
    tt = np.array([q[0] for q in db.probe_series])
    vv = np.array([q[1] for q in db.probe_series])
    amps = _window_amplitudes(tt, vv, 100.0)
    decay_factor = max(amps) / max(amps[-1], 1e-300)
    # (c): sustained regime below onset
    pc = ModelParams(c=cr.c_star - 0.05, ell=20.0, gamma=-1.0)
    cfg_c = SimConfig(params=pc, domain_length=400.0, t_final=900.0,
                      n_modes=8192, dt=0.05,
                      perturbation=GaussianBump(-10.0, 1e-2, 6.0,
                                                mean_free=True,
                                                carrier=sp.kappa_lin))
    _, dc = run(cfg_c)
    lam_c = determinant_root(pc, cr.lambda_star)
    freq_err = abs(dc.frequency - abs(lam_c.imag)) / abs(lam_c.imag)
    ok = (drift < 1e-12
          and db.classification == "decaying" and decay_factor >= 100.0
          and dc.classification == "sustained" and freq_err < 0.10)
    return _result("A7", "simulation conservation and classification",
                   "(a) mean drift < 1e-12; (b) decaying with >= 100x "
                   "probe decay at c_* + 0.1; (c) sustained at c_* - "
                   "0.05 (gamma = -1) with frequency within 10% of "
                   "|Im lambda(c)|",
                   t0, ok,
                   {"mass_drift": drift,
                    "convective_class": db.classification,
                    "decay_factor": decay_factor,
                    "sustained_class": dc.classification,
                    "frequency": dc.frequency,
                    "im_lambda": abs(lam_c.imag),
                    "freq_rel_err": freq_err,
                    "aliasing_max": max(db.aliasing_max, dc.aliasing_max)})


def criterion_a8():
    t0 = time.time()
    sp = closed_form_spreading(1.0)
    cr = _crossing_20()
    # probe near the back edge of the plateau, where the critical
    # eigenfunction peaks (|v| at x = 0 is ~25x smaller, so a mid-plateau
    # probe reads the second-order response and fits beta ~ 1 instead)
    base = SimConfig(
        params=ModelParams(c=cr.c_star, ell=20.0, gamma=-1.0),
        domain_length=400.0, t_final=1600.0, n_modes=8192, dt=0.02,
        probe_x=-16.0,
        perturbation=GaussianBump(-10.0, 5e-2, 6.0, mean_free=True,
                                  carrier=sp.kappa_lin))
    cs = [cr.c_star - m for m in (0.04, 0.03, 0.02, 0.01)]
    sweep = amplitude_sweep(base, sorted(cs), c_star=cr.c_star)
    ok = 0.4 <= sweep.beta_hat <= 0.6
    return _result("A8", "supercritical amplitude law",
                   "amplitude ~ (c_* - c)^beta with beta in [0.4, 0.6] "
                   "over c in [c_* - 0.04, c_*), gamma = -1",
                   t0, ok,
                   {"beta_hat": sweep.beta_hat,
                    "prefactor": sweep.prefactor,
                    "rows": sweep.rows})


def criterion_a9():
    t0 = time.time()
    checks = {}

    lam_samples = [0.3 + 1.1j, -0.2 + 0.7j, 2.0 + 0.01j, 1.5 - 2.2j]
    det_ok = conj_ok = True
    for chi in (1.0, -1.0):
        for lam in lam_samples:
            a = spatial_roots(chi, 1.5638, lam).nu
            b = spatial_roots(chi, 1.5638, lam).nu
            det_ok &= all(x == y for x, y in zip(a, b))
            cc = spatial_roots(chi, 1.5638, np.conj(lam)).nu
            conj_ok &= max(abs(x - y) for x, y in zip(
                sorted(cc, key=lambda z: (z.real, z.imag)),
                sorted(np.conj(a), key=lambda z: (z.real, z.imag)))) < 1e-12
    checks["root_ordering_deterministic"] = det_ok
    checks["conjugation_equivariance"] = conj_ok

    morse_ok = True
    for chi in (1.0, -1.0):
        for lam in (3.0 + 0.0j, 3.0 + 1.0j, 4.0 - 2.0j):
            rs = spatial_roots(chi, 1.5638, lam)
            morse_ok &= sum(1 for z in rs.nu if z.real > 0) == 2
    checks["morse_index_right_of_spectrum"] = morse_ok

    sp = closed_form_spreading(1.0)
    checks["branch_point_pinched"] = bool(
        pinching_check(sp.branch).pinched)

    cr = _crossing_20()
    at = ModelParams(c=cr.c_star, ell=20.0)
    lower = count_eigs_in_box(at, (-0.02, 2.0, -3.0, 0.3))
    upper = count_eigs_in_box(at, (-0.02, 2.0, 0.3, 3.0))
    whole = count_eigs_in_box(at, (-0.02, 2.0, -3.0, 3.0))
    checks["winding_additivity"] = (lower + upper == whole == 2)

    pars = ModelParams(c=cr.c_star, ell=20.0, gamma=-0.3)
    op = build_operator(pars, h=0.0875)
    pair = leading_pair(pars, cr.lambda_star, op=op)
    modes = solve_quadratic_modes(op, pair, cr.lambda_star.imag)
    res = hopf_coefficient(pair, modes, pars, crossing=cr)
    checks["theta_minus_is_conjugate"] = (
        abs(res.theta_minus - np.conj(res.theta_plus))
        <= 1e-10 * abs(res.theta_plus))
    s = 2.0 * cmath.exp(1j * math.pi / 3.0)
    scaled = dataclasses.replace(pair, v=pair.v * s, w=pair.w / np.conj(s))
    modes_s = solve_quadratic_modes(op, scaled, cr.lambda_star.imag)
    res_s = hopf_coefficient(scaled, modes_s, pars,
                             normalization="inner_product", crossing=cr)
    res_i = hopf_coefficient(pair, modes, pars,
                             normalization="inner_product", crossing=cr)
    # gamma < 0 here, so Re theta_+ > 0 on both grids and in both gauges
    checks["sign_invariant_under_rescaling"] = (
        res_s.theta_plus.real > 0 and res_i.theta_plus.real > 0
        and abs(res_s.theta_plus / res_i.theta_plus - abs(s) ** 2) < 1e-8)
    op_f = build_operator(pars, h=0.04375)
    pair_f = leading_pair(pars, cr.lambda_star, op=op_f)
    modes_f = solve_quadratic_modes(op_f, pair_f, cr.lambda_star.imag)
    fine = hopf_coefficient(pair_f, modes_f, pars, crossing=cr)
    checks["sign_invariant_under_refinement"] = (
        math.copysign(1.0, fine.theta_plus.real)
        == math.copysign(1.0, res.theta_plus.real))

    ok = all(checks.values())
    return _result("A9", "structural property spot checks",
                   "determinism, conjugation symmetry, Morse index 2, "
                   "pinching, winding additivity, theta_- = conj, sign "
                   "stability under rescaling and refinement",
                   t0, ok, checks)


FAST_CRITERIA = {
    "A1": criterion_a1, "A2": criterion_a2, "A3": criterion_a3,
    "A4": criterion_a4, "A5": criterion_a5, "A6": criterion_a6,
    "A9": criterion_a9,
}
ALL_CRITERIA = dict(FAST_CRITERIA, A7=criterion_a7, A8=criterion_a8)


def run_criteria(level="fast", only=None):
    """Run the acceptance criteria at the given level.

    level "fast" skips the simulation criteria (A7, A8); "full" runs
    everything.  `only` restricts to an iterable of names.  A criterion
    that raises is reported as failed with the exception recorded, not
    allowed to take down the rest of the suite.
    """
    table = FAST_CRITERIA if level == "fast" else ALL_CRITERIA
    if level not in ("fast", "full"):
        raise ValueError(f"level must be 'fast' or 'full', got {level!r}")
    results = []
    for name in sorted(table):
        if only is not None and name not in only:
            continue
        fn = table[name]
        try:
            results.append(fn())
        except TriggerFrontError as exc:
            results.append(CriterionResult(
                name=name, title=fn.__doc__ or name, passed=False,
                runtime=0.0, expected="(criterion raised)",
                measured={"exception": f"{type(exc).__name__}: {exc}"}))
    return results
