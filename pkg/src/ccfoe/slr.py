"""Closed-form two-breakpoint segmented linear regression.

The breakpoints of a continuous three-segment line are found without any
iteration: the data are linearised through two trapezoidal primitives
(S_y, S_xy), an auxiliary least-squares problem in four coefficients is
solved, and the breakpoints are the roots of ``C1 t**2 - C2 t + 1 = 0``.
A second 4x4 least-squares problem on hinge regressors then gives the
slopes and the first intercept; the remaining intercepts follow from
continuity.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    BreakpointOutOfRange,
    DegenerateQuadratic,
    IllConditioned,
    InputError,
    NoBreakpoints,
)

MIN_POINTS = 8
COND_LIMIT = 1e12
EDGE_TOL = 1e-3


@dataclass(frozen=True)
class AuxCoefficients:
    c1: float
    c2: float
    c3: float
    c4: float
    discriminant: float
    pivot_ratio: float
    shift: float = 0.0  # abscissa offset the coefficients refer to


@dataclass(frozen=True)
class PiecewiseFit:
    """Continuous three-segment line.

    Segment 1 covers ``x < psi1``, segment 2 ``psi1 <= x < psi2`` and
    segment 3 ``x >= psi2``.
    """

    psi1: float
    psi2: float
    p1: float
    p2: float
    p3: float
    q1: float
    q2: float
    q3: float

    @property
    def midpoint(self):
        return 0.5 * (self.psi1 + self.psi2)

    @property
    def slope_increments(self):
        """Slope changes at the two breakpoints (hinge-form coefficients)."""
        return self.p2 - self.p1, self.p3 - self.p2

    def __call__(self, x):
        return evaluate(self, x)

    def sse(self, x, y):
        r = np.asarray(y, dtype=float) - evaluate(self, x)
        return float(r @ r)

    def as_dict(self):
        return {k: float(v) for k, v in self.__dict__.items()}


def _validate(x, y):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.ndim != 1 or y.shape != x.shape:
        raise InputError(f"x and y must be 1-D with equal length, got {x.shape} and {y.shape}")
    if x.shape[0] < MIN_POINTS:
        raise InputError(f"need at least {MIN_POINTS} points, got {x.shape[0]}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InputError("x and y must be finite")
    if np.any(np.diff(x) <= 0):
        raise InputError("x must be strictly increasing")
    return x, y


def primitives(x, y):
    """Trapezoidal running integrals of ``y`` and ``x*y`` starting at zero."""
    x, y = _validate(x, y)
    return kernels.primitives(x, y)


def _solve_equilibrated(m, b):
    """Solve ``m c = b`` after symmetric diagonal scaling.

    Scaling makes the pivot-ratio check independent of the units of the
    regressors (e.g. of ``y``).
    """
    d = np.sqrt(np.diag(m))
    if not np.all(d > 0):
        return np.full(b.shape, np.nan), np.inf
    sol, ratio = kernels.solve4(m / np.outer(d, d), b / d)
    return sol / d, ratio


def _is_collinear(x, y):
    a = np.column_stack((x, np.ones_like(x)))
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    r = y - a @ coef
    scale = max(float(np.ptp(y)), float(np.max(np.abs(y))), 1e-300)
    return float(np.max(np.abs(r))) <= 1e-9 * scale


def _quadratic_roots(c1, c2):
    disc = c2 * c2 - 4.0 * c1
    root = np.sqrt(disc)
    q = 0.5 * (c2 + root if c2 >= 0.0 else c2 - root)
    r1 = q / c1
    r2 = 1.0 / q
    return min(r1, r2), max(r1, r2)


def fit_breakpoints(x, y):
    """Estimate the two breakpoints of a continuous three-segment line.

    Parameters
    ----------
    x : array_like
        Strictly increasing abscissae, at least 8 of them.
    y : array_like
        Responses, same length as ``x``.

    Returns
    -------
    psi1, psi2 : float
        Breakpoints with ``psi1 < psi2``, both inside ``(x[0], x[-1])``.
    aux : AuxCoefficients
        Coefficients of the auxiliary regression plus diagnostics.

    Raises
    ------
    NoBreakpoints
        The quadratic has complex roots.
    DegenerateQuadratic
        The leading coefficient vanishes, or the data are a single line.
    BreakpointOutOfRange
        A root falls outside the sampled range (with a small edge margin).
    IllConditioned
        The normal equations cannot be solved reliably.
    """
    x, y = _validate(x, y)
    width = x[-1] - x[0]
    # A breakpoint at exactly x = 0 makes C1 = 1/(psi1 psi2) infinite and the
    # system singular; retrying on a shifted abscissa moves it off the origin.
    for shift in (0.0, width / np.pi, -width / np.pi):
        xs = x + shift
        m, b = kernels.breakpoint_normal_eq(xs, y)
        coef, ratio = _solve_equilibrated(m, b)
        if np.isfinite(ratio) and ratio <= COND_LIMIT and np.all(np.isfinite(coef)):
            break
    else:
        if _is_collinear(x, y):
            raise DegenerateQuadratic("data lie on a single line; no breakpoint to resolve")
        raise IllConditioned(f"breakpoint normal equations ill-conditioned (pivot ratio {ratio:.3g})")
    c1, c2, c3, c4 = (float(c) for c in coef)
    disc = c2 * c2 - 4.0 * c1
    aux = AuxCoefficients(c1, c2, c3, c4, disc, float(ratio), float(shift))

    span = float(max(abs(xs[0]), abs(xs[-1]), width))
    if abs(c1) * span * span <= 1e-12 * (abs(c2) * span + 1.0):
        raise DegenerateQuadratic(f"leading coefficient C1={c1:.3g} vanishes")
    if disc < 0.0:
        raise NoBreakpoints(f"negative discriminant {disc:.3g}")

    psi1, psi2 = (r - shift for r in _quadratic_roots(c1, c2))
    margin = EDGE_TOL * (x[-1] - x[0])
    lo, hi = x[0] + margin, x[-1] - margin
    if not (lo < psi1 and psi2 < hi) or psi1 == psi2:
        raise BreakpointOutOfRange(
            f"breakpoints ({psi1:.6g}, {psi2:.6g}) outside ({lo:.6g}, {hi:.6g})", (psi1, psi2)
        )
    return psi1, psi2, aux


def fit_slopes(x, y, psi1, psi2):
    """Least-squares slopes and intercepts for fixed breakpoints."""
    x, y = _validate(x, y)
    if not (x[0] < psi1 < psi2 < x[-1]):
        raise InputError(f"need x[0] < psi1 < psi2 < x[-1], got ({psi1}, {psi2})")
    m, b = kernels.slope_normal_eq(x, y, float(psi1), float(psi2))
    coef, ratio = _solve_equilibrated(m, b)
    if not np.isfinite(ratio) or ratio > COND_LIMIT or not np.all(np.isfinite(coef)):
        raise IllConditioned(f"slope normal equations ill-conditioned (pivot ratio {ratio:.3g})")
    p1, p2, p3, q1 = (float(c) for c in coef)
    q2 = q1 + (p1 - p2) * psi1
    q3 = q2 + (p2 - p3) * psi2
    return PiecewiseFit(float(psi1), float(psi2), p1, p2, p3, q1, q2, q3)


def fit(x, y):
    """Breakpoints and slopes in one call."""
    psi1, psi2, _ = fit_breakpoints(x, y)
    return fit_slopes(x, y, psi1, psi2)


def evaluate(fit, x):
    x = np.asarray(x, dtype=float)
    out = np.where(
        x < fit.psi1,
        fit.p1 * x + fit.q1,
        np.where(x < fit.psi2, fit.p2 * x + fit.q2, fit.p3 * x + fit.q3),
    )
    return out if out.ndim else float(out)
