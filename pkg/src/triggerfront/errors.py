"""Exception types shared across the toolkit.

Everything numerical that can fail in a structured way raises one of
these instead of a bare RuntimeError, so callers (and the CLI) can
distinguish "you asked an ill-posed question" from "the solver gave up".
"""


class TriggerFrontError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(TriggerFrontError):
    """Bad parameter values.  Collects *all* violations, not just the first."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class RootSolveFailure(TriggerFrontError):
    """Polynomial root finding did not reach the requested residual."""


class NoConvergence(TriggerFrontError):
    """An iterative solve (Newton, bisection, inverse iteration) stalled."""

    def __init__(self, msg, last_iterate=None, residual=None):
        super().__init__(msg)
        self.last_iterate = last_iterate
        self.residual = residual


class DegenerateDoubleRoot(TriggerFrontError):
    """A double spatial root where d_nunu also vanishes (triple or worse);
    the quadratic normal form is meaningless there."""


class OnEssentialSpectrum(TriggerFrontError):
    """lambda sits on (or numerically straddles) an essential-spectrum curve,
    so stable/unstable spatial eigenspaces are not defined."""


class OnAbsoluteSpectrum(TriggerFrontError):
    """lambda sits on the absolute spectrum: the middle spatial roots have
    equal real part and the pointwise determinant is ill-defined."""


class EigenbasisIllConditioned(TriggerFrontError):
    """Spatial roots nearly collide; the eigenvector basis cannot be inverted
    reliably and the caller should use (or was routed to) the exterior-power
    fallback."""


class ContinuationStall(TriggerFrontError):
    """Predictor-corrector continuation could not advance even at the
    minimum step size."""


class ContourTooCoarse(TriggerFrontError):
    """Adaptive refinement of a winding-number contour hit its subdivision
    budget without meeting the phase-increment bound."""


class NotSimple(TriggerFrontError):
    """A determinant zero that was expected to be simple has (numerically)
    vanishing lambda-derivative."""


class NullVectorDegenerate(TriggerFrontError):
    """The matching system has a null space of dimension != 1, so no
    well-defined eigenfunction profile exists."""


class ResonantSolve(TriggerFrontError):
    """A linear solve (sigma - L) x = b was requested at sigma too close to
    spectrum of L; the result would be garbage."""


class GeometryMismatch(TriggerFrontError):
    """Grid geometry is inconsistent: the spacing does not tile the
    truncated domain, or the interfaces fall too far between nodes."""


class EigensolverFailure(TriggerFrontError):
    """The dense or shift-invert eigensolver failed, or returned pairs that
    violate the residual invariant."""


class NoEigenvalueNearSeed(TriggerFrontError):
    """Shift-invert converged, but to an eigenvalue too far from the
    requested seed to plausibly be the mode that was asked for."""

    def __init__(self, msg, found=None, seed=None):
        super().__init__(msg)
        self.found = found
        self.seed = seed


class NormalizationFitFailure(TriggerFrontError):
    """The plateau envelope fit behind the product normalization did not
    reach the required goodness of fit."""


class FrontRelaxationFailure(TriggerFrontError):
    """Pseudo-time relaxation toward a steady front profile did not settle."""


class BlowupDetected(TriggerFrontError):
    """Time integration produced non-finite values or exceeded the amplitude
    cap; usually a wrong sign somewhere or a too-large time step."""

    def __init__(self, msg, t=None, max_abs=None):
        super().__init__(msg)
        self.t = t
        self.max_abs = max_abs
