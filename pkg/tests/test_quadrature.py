"""Tests for the adaptive Simpson integrator and the Riemann oracle."""

import math

import numpy as np
import pytest

from spikebayes.errors import QuadratureError
from spikebayes.quadrature import (
    integrate,
    integrate_adaptive_simpson,
    integrate_piecewise,
    riemann_sum,
)


class TestAdaptiveSimpson:
    @pytest.mark.parametrize("f, a, b, expected", [
        (lambda x: x ** 2, 0.0, 3.0, 9.0),
        (math.sin, 0.0, math.pi, 2.0),
        (math.exp, 0.0, 1.0, math.e - 1.0),
        (lambda x: 1.0 / (1.0 + x * x), 0.0, 1.0, math.pi / 4),
    ])
    def test_known_integrals(self, f, a, b, expected):
        assert integrate(f, a, b) == pytest.approx(expected, abs=1e-9)

    def test_empty_interval(self):
        assert integrate_adaptive_simpson(math.cos, 2.0, 2.0) == (0.0, 0.0)

    def test_reversed_limits_flip_sign(self):
        forward = integrate(math.cos, 0.0, 1.0)
        backward = integrate(math.cos, 1.0, 0.0)
        assert backward == pytest.approx(-forward)

    def test_error_estimate_is_small(self):
        _, error = integrate_adaptive_simpson(math.sin, 0.0, math.pi, tol=1e-10)
        assert error < 1e-9

    def test_non_finite_integrand_raises(self):
        with pytest.raises(QuadratureError, match="not finite"):
            integrate(lambda x: math.inf if x > 0.5 else 0.0, 0.0, 1.0)


class TestPiecewise:
    def test_kink_split(self):
        # |x - 1/3| has a kink the uniform stencil would straddle.
        value = integrate_piecewise(lambda x: abs(x - 1 / 3), [0.0, 1 / 3, 1.0])
        assert value == pytest.approx((1 / 3) ** 2 / 2 + (2 / 3) ** 2 / 2, abs=1e-12)

    def test_unsorted_duplicated_breakpoints(self):
        value = integrate_piecewise(lambda x: x, [1.0, 0.0, 0.5, 0.5])
        assert value == pytest.approx(0.5)

    def test_single_breakpoint_is_zero(self):
        assert integrate_piecewise(math.exp, [1.0]) == 0.0


class TestRiemannSum:
    def test_matches_adaptive(self):
        oracle = riemann_sum(np.sin, 0.0, math.pi, points=100_000)
        assert oracle == pytest.approx(integrate(math.sin, 0.0, math.pi), abs=1e-8)

    def test_rejects_zero_points(self):
        with pytest.raises(ValueError, match="points"):
            riemann_sum(np.sin, 0.0, 1.0, points=0)
