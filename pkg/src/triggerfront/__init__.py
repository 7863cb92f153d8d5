"""Spectral and bifurcation toolkit for trigger fronts of the
Cahn-Hilliard equation in a comoving frame.

The pieces, roughly bottom-up: `dispersion` (spatial roots and essential
spectra), `branch_point` (double roots, pinching, linear spreading
speed), `absolute_spectrum` (curve tracing), `evans` (matching
determinants, Hopf crossing, eigenfunctions), `discrete_operator`
(banded finite-difference discretization), `hopf` (normal-form
coefficient and branching direction), `simulate` (Fourier IMEX
time-stepper), `cli` (command-line front end), `acceptance` (the
criteria behind `triggerfront verify`).
"""

from .dispersion import (ModelParams, check_no_resonance, essential_curve,
                         spatial_roots)
from .branch_point import (all_double_roots, closed_form_spreading,
                           find_double_root, find_spreading_speed,
                           pinching_check)
from .absolute_spectrum import (genericity_check, rightmost_absolute,
                                trace_absolute)
from .evans import (count_eigs_in_box, determinant_root,
                    eigenfunction_profiles, evans_back, evans_front,
                    expansion_crossing, find_hopf_crossing,
                    plateau_determinant)
from .discrete_operator import (build_operator, derivative_matrix,
                                gregory_weights, leading_pair, spectrum)
from .hopf import (branch_prediction, hopf_analysis, hopf_coefficient,
                   leading_order_theta, solve_quadratic_modes)
from .simulate import (GaussianBump, GaussianSum, SimConfig,
                       amplitude_sweep, fit_amplitude_law,
                       gaussian_trigger_demo, growth_rate, run,
                       trigger_profile)
from .acceptance import run_criteria

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "check_no_resonance", "essential_curve",
    "spatial_roots",
    "all_double_roots", "closed_form_spreading", "find_double_root",
    "find_spreading_speed", "pinching_check",
    "genericity_check", "rightmost_absolute", "trace_absolute",
    "count_eigs_in_box", "determinant_root", "eigenfunction_profiles",
    "evans_back", "evans_front", "expansion_crossing",
    "find_hopf_crossing", "plateau_determinant",
    "build_operator", "derivative_matrix", "gregory_weights",
    "leading_pair", "spectrum",
    "branch_prediction", "hopf_analysis", "hopf_coefficient",
    "leading_order_theta", "solve_quadratic_modes",
    "GaussianBump", "GaussianSum", "SimConfig", "amplitude_sweep",
    "fit_amplitude_law", "gaussian_trigger_demo", "growth_rate", "run",
    "trigger_profile",
    "run_criteria", "__version__",
]
