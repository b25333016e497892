"""Numerical integration.

Adaptive Simpson's rule is the workhorse for every deterministic
quantity in the package (intensity factors, KL divergence and
variation, threshold and variance integrals, kernel moments).  All
in-scope integrands are smooth on the intervals handed to it; callers
with known kinks (compactly supported kernels) split at the kinks with
integrate_piecewise().

riemann_sum() is a dense midpoint rule used as an independent oracle.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence

import numpy as np

from spikebayes.errors import QuadratureError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_DEPTH = 50
_ROUNDOFF = 4.0 * np.finfo(float).eps


def integrate_adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> tuple[float, float]:
    """Adaptive Simpson's rule integration.

    Args:
        f: Scalar function to integrate.
        a: Lower bound.
        b: Upper bound.
        tol: Absolute error tolerance.
        max_depth: Maximum recursion depth.

    Returns:
        Tuple of (integral_value, error_estimate).

    Raises:
        QuadratureError: If the integrand returns a non-finite value.
    """
    if a == b:
        return 0.0, 0.0

    if a > b:
        result, error = integrate_adaptive_simpson(f, b, a, tol, max_depth)
        return -result, error

    def _eval(x: float) -> float:
        y = float(f(x))
        if not math.isfinite(y):
            raise QuadratureError(f"integrand is not finite at x={x!r} (value {y!r})")
        return y

    def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
        return h / 3.0 * (fa + 4.0 * fm + fb)

    def _adaptive(
        a: float,
        b: float,
        fa: float,
        fm: float,
        fb: float,
        s_whole: float,
        depth: int,
        tol: float,
    ) -> tuple[float, float]:
        m = (a + b) / 2.0
        h = (b - a) / 2.0
        lm = (a + m) / 2.0
        rm = (m + b) / 2.0
        flm = _eval(lm)
        frm = _eval(rm)

        s_left = _simpson(fa, flm, fm, h / 2.0)
        s_right = _simpson(fm, frm, fb, h / 2.0)
        s_combined = s_left + s_right

        error_estimate = (s_combined - s_whole) / 15.0

        # Below the roundoff floor further halving cannot improve the estimate.
        floor = _ROUNDOFF * abs(s_combined)
        if depth >= max_depth or abs(error_estimate) < max(tol, floor):
            # Richardson extrapolation
            return s_combined + error_estimate, abs(error_estimate)

        left_result, left_error = _adaptive(a, m, fa, flm, fm, s_left, depth + 1, tol / 2.0)
        right_result, right_error = _adaptive(m, b, fm, frm, fb, s_right, depth + 1, tol / 2.0)

        return left_result + right_result, left_error + right_error

    fa = _eval(a)
    fb = _eval(b)
    m = (a + b) / 2.0
    fm = _eval(m)
    h = (b - a) / 2.0

    s_whole = _simpson(fa, fm, fb, h)

    return _adaptive(a, b, fa, fm, fb, s_whole, 0, tol)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
) -> float:
    """Integral of f over [a, b] by adaptive Simpson; value only."""
    value, _ = integrate_adaptive_simpson(f, a, b, tol)
    return value


def integrate_piecewise(
    f: Callable[[float], float],
    breakpoints: Sequence[float],
    tol: float = DEFAULT_TOL,
) -> float:
    """Integrate f over [breakpoints[0], breakpoints[-1]], restarting the
    adaptive rule at every breakpoint.

    Breakpoints are sorted and de-duplicated; the tolerance is shared
    evenly between the pieces.
    """
    points = sorted(set(float(p) for p in breakpoints))
    if len(points) < 2:
        return 0.0
    pieces = len(points) - 1
    total = 0.0
    for lo, hi in zip(points[:-1], points[1:]):
        total += integrate(f, lo, hi, tol / pieces)
    return total


def riemann_sum(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    points: int = 1_000_000,
) -> float:
    """Dense midpoint-rule integral of a vectorized f over [a, b].

    Evaluated in blocks so a 10^6-point oracle does not allocate more
    than a few megabytes at a time.
    """
    if points < 1:
        raise ValueError(f"points must be >= 1, got {points}")
    width = (b - a) / points
    total = 0.0
    block = 1 << 17
    for start in range(0, points, block):
        stop = min(points, start + block)
        mids = a + (np.arange(start, stop, dtype=float) + 0.5) * width
        total += float(np.sum(f(mids)))
    return total * width
