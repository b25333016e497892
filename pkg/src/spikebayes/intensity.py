"""Intensity functions and the deterministic quantities between two classes.

An intensity model is one of five immutable variants:

- Homogeneous(rate)              lambda(t) = rate
- Harmonic(phi)                  lambda(t) = 1.6 + cos(w1 t + phi) + 0.5 cos(w2 t + pi/4 + phi)
                                 with w1 = pi/(4 sqrt 3), w2 = pi/(3 sqrt 2)
- GaussianBump(amplitude, width) lambda(t) = a exp(-b (t - 0.5)^2)
- Scaled(base, factor)           lambda(t) = mu * base(t)
- Tabulated(times, rates)        piecewise-linear interpolation of a grid

On a window [0, T] every model decomposes as lambda = tau * p with
tau the expected count and p a probability density (the "shape").  The
KL divergence, KL variation and Bhattacharyya exponent between two
classes are computed from these decompositions by adaptive quadrature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from spikebayes.errors import AssumptionError, DegenerateModelError
from spikebayes.quadrature import DEFAULT_TOL, integrate_piecewise

logger = logging.getLogger(__name__)

HARMONIC_BASE = 1.6
HARMONIC_OMEGA_1 = math.pi / (4.0 * math.sqrt(3.0))
HARMONIC_OMEGA_2 = math.pi / (3.0 * math.sqrt(2.0))
HARMONIC_SECOND_AMPLITUDE = 0.5
HARMONIC_SECOND_PHASE = math.pi / 4.0
GAUSSIAN_CENTER = 0.5

# Shapes below this floor are treated as zero (log-ratio singularity).
SHAPE_FLOOR = 1e-12
DEFAULT_BOUNDS_GRID = 100_000


# --- Variants ---

@dataclass(frozen=True)
class Homogeneous:
    """Constant rate."""
    rate: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rate) and self.rate >= 0):
            raise ValueError(f"Homogeneous rate must be finite and >= 0, got {self.rate!r}")

    def rate_at(self, t):
        return np.full(np.shape(t), float(self.rate)) if np.ndim(t) else float(self.rate)

    def closed_integral(self, a: float, b: float) -> float | None:
        return self.rate * (b - a)

    @property
    def label(self) -> str:
        return f"homogeneous(rate={self.rate:g})"


@dataclass(frozen=True)
class Harmonic:
    """Two-frequency harmonic intensity parametrized by a phase."""
    phi: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.phi):
            raise ValueError(f"Harmonic phase must be finite, got {self.phi!r}")

    def rate_at(self, t):
        return (
            HARMONIC_BASE
            + np.cos(HARMONIC_OMEGA_1 * t + self.phi)
            + HARMONIC_SECOND_AMPLITUDE
            * np.cos(HARMONIC_OMEGA_2 * t + HARMONIC_SECOND_PHASE + self.phi)
        )

    def _antiderivative(self, t: float) -> float:
        return (
            HARMONIC_BASE * t
            + math.sin(HARMONIC_OMEGA_1 * t + self.phi) / HARMONIC_OMEGA_1
            + HARMONIC_SECOND_AMPLITUDE
            * math.sin(HARMONIC_OMEGA_2 * t + HARMONIC_SECOND_PHASE + self.phi)
            / HARMONIC_OMEGA_2
        )

    def closed_integral(self, a: float, b: float) -> float | None:
        return self._antiderivative(b) - self._antiderivative(a)

    @property
    def label(self) -> str:
        return f"harmonic(phi={self.phi:.6g})"


@dataclass(frozen=True)
class GaussianBump:
    """Gaussian-type bump centred at t = 0.5."""
    amplitude: float
    width: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise ValueError(f"GaussianBump amplitude must be > 0, got {self.amplitude!r}")
        if not (math.isfinite(self.width) and self.width > 0):
            raise ValueError(f"GaussianBump width must be > 0, got {self.width!r}")

    def rate_at(self, t):
        return self.amplitude * np.exp(-self.width * (np.asarray(t) - GAUSSIAN_CENTER) ** 2)

    def closed_integral(self, a: float, b: float) -> float | None:
        root = math.sqrt(self.width)
        scale = self.amplitude * math.sqrt(math.pi / self.width) / 2.0
        return float(scale * (erf(root * (b - GAUSSIAN_CENTER)) - erf(root * (a - GAUSSIAN_CENTER))))

    @property
    def label(self) -> str:
        return f"gaussian_bump(amplitude={self.amplitude:g}, width={self.width:g})"


@dataclass(frozen=True)
class Scaled:
    """Base intensity multiplied by a positive factor."""
    base: IntensityModel
    factor: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.factor) and self.factor > 0):
            raise ValueError(f"Scaled factor must be > 0, got {self.factor!r}")

    def rate_at(self, t):
        return self.factor * self.base.rate_at(t)

    def closed_integral(self, a: float, b: float) -> float | None:
        inner = self.base.closed_integral(a, b)
        return None if inner is None else self.factor * inner

    @property
    def label(self) -> str:
        return f"scaled(base={self.base.label}, factor={self.factor:g})"


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear intensity read from a (t, lambda) grid.

    Outside the grid the end values are held constant.
    """
    times: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        times = tuple(float(x) for x in self.times)
        rates = tuple(float(x) for x in self.rates)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rates", rates)
        if len(times) != len(rates):
            raise ValueError(f"Tabulated grid has {len(times)} times but {len(rates)} rates")
        if len(times) < 2:
            raise ValueError("Tabulated grid needs at least two points")
        if any(not math.isfinite(x) for x in times + rates):
            raise ValueError("Tabulated grid contains non-finite values")
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise ValueError("Tabulated grid times must be strictly increasing")
        if any(r < 0 for r in rates):
            raise ValueError("Tabulated grid rates must be >= 0")

    def rate_at(self, t):
        return np.interp(t, self.times, self.rates)

    def closed_integral(self, a: float, b: float) -> float | None:
        # Trapezoid on the knots is exact for a piecewise-linear function.
        inner = [x for x in self.times if a < x < b]
        xs = np.array([a, *inner, b])
        ys = np.interp(xs, self.times, self.rates)
        return float(np.sum((ys[1:] + ys[:-1]) * np.diff(xs)) / 2.0)

    @property
    def label(self) -> str:
        return f"tabulated(points={len(self.times)})"


IntensityModel = Homogeneous | Harmonic | GaussianBump | Scaled | Tabulated


# --- Derived types ---

@dataclass(frozen=True)
class ShapeDecomposition:
    """lambda(t) = tau * p(t) on [0, window_T]."""
    model: IntensityModel
    tau: float
    window_T: float

    def shape(self, t):
        return self.model.rate_at(t) / self.tau


@dataclass(frozen=True)
class IntensityBounds:
    """Grid estimates of (delta, C) and of the average rate d-hat."""
    delta: float
    C: float
    d_hat: float
    window_T: float
    grid_points: int
    a1_holds: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "a1_holds", bool(self.delta >= SHAPE_FLOOR))

    @property
    def log_ratio(self) -> float:
        """u = log(C / delta); infinite when A1 fails."""
        if not self.a1_holds:
            return math.inf
        return math.log(self.C / self.delta)


def joint_bounds(first: IntensityBounds, second: IntensityBounds) -> IntensityBounds:
    """Bounds covering both class intensities.

    d_hat is the mean of the two per-class averages.
    """
    if first.window_T != second.window_T:
        raise ValueError("bounds computed on different windows")
    return IntensityBounds(
        delta=min(first.delta, second.delta),
        C=max(first.C, second.C),
        d_hat=(first.d_hat + second.d_hat) / 2.0,
        window_T=first.window_T,
        grid_points=min(first.grid_points, second.grid_points),
    )


# --- Operations ---

def evaluate(model: IntensityModel, t):
    """lambda(t) for a time or an array of times (all >= 0)."""
    if np.any(np.asarray(t) < 0):
        raise ValueError(f"intensity evaluated at negative time {t!r}")
    return model.rate_at(t)


def feature_scale(model: IntensityModel) -> float:
    """Length below which the model has no unresolved structure."""
    if isinstance(model, GaussianBump):
        return 1.0 / math.sqrt(model.width)
    if isinstance(model, Scaled):
        return feature_scale(model.base)
    return 1.0


def _knots(model: IntensityModel) -> tuple[float, ...]:
    if isinstance(model, Tabulated):
        return model.times
    if isinstance(model, Scaled):
        return _knots(model.base)
    return ()


def quadrature_breakpoints(a: float, b: float, *models: IntensityModel,
                           extra: tuple[float, ...] = ()) -> list[float]:
    """Split points for integrating expressions built from `models` on [a, b].

    Includes tabulated knots, caller-supplied kinks and a uniform panel
    grid no coarser than the finest model feature scale, so a narrow
    bump is never skipped by the first Simpson stencil.
    """
    scale = min((feature_scale(m) for m in models), default=1.0)
    panels = max(1, int(math.ceil((b - a) / scale)))
    points = set(np.linspace(a, b, panels + 1).tolist())
    for m in models:
        points.update(x for x in _knots(m) if a < x < b)
    points.update(x for x in extra if a < x < b)
    return sorted(points)


def integrate(model: IntensityModel, a: float, b: float,
              method: str = "auto", tol: float = DEFAULT_TOL) -> float:
    """Integral of lambda over [a, b].

    Args:
        model: Intensity model.
        a: Lower limit (>= 0).
        b: Upper limit (>= a).
        method: "auto" (closed form when available, else quadrature),
            "closed" (closed form, error if unavailable) or "quadrature".
        tol: Absolute tolerance for the adaptive rule.

    Returns:
        The integral value.
    """
    if a < 0:
        raise ValueError(f"integration limit a must be >= 0, got {a!r}")
    if a > b:
        raise ValueError(f"integration limits reversed: a={a!r} > b={b!r}")
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown integration method {method!r}")

    if method != "quadrature":
        value = model.closed_integral(a, b)
        if value is not None:
            return float(value)
        if method == "closed":
            raise ValueError(f"{model.label} has no closed-form integral")

    return integrate_piecewise(model.rate_at, quadrature_breakpoints(a, b, model), tol)


def shape_decompose(model: IntensityModel, T: float) -> ShapeDecomposition:
    """Split lambda on [0, T] into its intensity factor and shape density."""
    if not T > 0:
        raise ValueError(f"window T must be > 0, got {T!r}")
    tau = integrate(model, 0.0, T)
    if not tau > 0:
        raise DegenerateModelError(
            f"{model.label} has zero mass on [0, {T:g}]; the class shape cannot be normalized"
        )
    return ShapeDecomposition(model=model, tau=tau, window_T=T)


def _check_pair(p: ShapeDecomposition, q: ShapeDecomposition) -> None:
    if p.window_T != q.window_T:
        raise ValueError(f"shapes on different windows: {p.window_T!r} vs {q.window_T!r}")


def _log_ratio_integral(p: ShapeDecomposition, q: ShapeDecomposition, power: int) -> float:
    _check_pair(p, q)
    T = p.window_T

    def integrand(t: float) -> float:
        pt = p.shape(t)
        qt = q.shape(t)
        if pt < SHAPE_FLOOR or qt < SHAPE_FLOOR:
            raise AssumptionError(
                f"shape below {SHAPE_FLOOR:g} at t={t:.6g} "
                f"({p.model.label}: {pt:.3g}, {q.model.label}: {qt:.3g}); "
                f"intensities must be bounded away from zero"
            )
        return math.log(pt / qt) ** power * pt

    return integrate_piecewise(integrand, quadrature_breakpoints(0.0, T, p.model, q.model))


def kl_divergence(p: ShapeDecomposition, q: ShapeDecomposition) -> float:
    """K_T(p || q) = int_0^T log(p/q) p dt."""
    return _log_ratio_integral(p, q, 1)


def kl_variation(p: ShapeDecomposition, q: ShapeDecomposition) -> float:
    """V_T(p || q) = int_0^T log^2(p/q) p dt."""
    return _log_ratio_integral(p, q, 2)


def bhattacharyya_exponent(lambda1: IntensityModel, lambda2: IntensityModel, T: float) -> float:
    """beta(T) = int_0^T [lambda1/2 + lambda2/2 - sqrt(lambda1 lambda2)] du."""
    if not T > 0:
        raise ValueError(f"window T must be > 0, got {T!r}")

    def integrand(u: float) -> float:
        l1 = float(lambda1.rate_at(u))
        l2 = float(lambda2.rate_at(u))
        return 0.5 * l1 + 0.5 * l2 - math.sqrt(l1 * l2)

    beta = integrate_piecewise(integrand, quadrature_breakpoints(0.0, T, lambda1, lambda2))
    # The integrand is a squared difference; clip quadrature noise.
    return max(beta, 0.0)


def bhattacharyya_bound(lambda1: IntensityModel, lambda2: IntensityModel, T: float,
                        priors: tuple[float, float] = (0.5, 0.5)) -> float:
    """Upper bound sqrt(pi1 pi2) exp(-beta(T)) on the Bayes risk."""
    pi1, pi2 = priors
    return math.sqrt(pi1 * pi2) * math.exp(-bhattacharyya_exponent(lambda1, lambda2, T))


def verify_bounds(model: IntensityModel, T: float,
                  grid_points: int = DEFAULT_BOUNDS_GRID) -> IntensityBounds:
    """Grid scan of lambda on [0, T] for (delta, C) plus d_hat = tau / T.

    An A1 violation is reported through `a1_holds`, never raised.
    """
    if grid_points < 2:
        raise ValueError(f"grid_points must be >= 2, got {grid_points}")
    if not T > 0:
        raise ValueError(f"window T must be > 0, got {T!r}")
    grid = np.linspace(0.0, T, grid_points)
    values = np.asarray(model.rate_at(grid), dtype=float)
    bounds = IntensityBounds(
        delta=float(values.min()),
        C=float(values.max()),
        d_hat=integrate(model, 0.0, T) / T,
        window_T=T,
        grid_points=grid_points,
    )
    if not bounds.a1_holds:
        logger.warning("%s: minimum rate %.3g on [0, %g] violates A1", model.label, bounds.delta, T)
    return bounds
