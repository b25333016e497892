"""Spike-train simulation by thinning, and labeled training sets.

Seeds
-----
Every random draw comes from a Generator built by derive_rng(seed, *key):
a Philox counter-based bit generator keyed by the master seed and a path
such as ("train", j) or ("test", run, i).  A sample's randomness depends
only on its key, so generation is identical in any order and under any
number of workers.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache

import numpy as np

from spikebayes.errors import DegenerateModelError
from spikebayes.intensity import IntensityModel, quadrature_breakpoints, verify_bounds
from spikebayes.parallel import parallel_map
from spikebayes.quadrature import integrate_piecewise

logger = logging.getLogger(__name__)

PRIOR_FLOOR = 1e-6
DOMINATING_SAFETY = 1.001
_PRIOR_SUM_TOL = 1e-9


class ClassLabel(IntEnum):
    """The two classes, omega_1 and omega_2."""
    OMEGA_1 = 1
    OMEGA_2 = 2

    @property
    def other(self) -> ClassLabel:
        return ClassLabel.OMEGA_2 if self is ClassLabel.OMEGA_1 else ClassLabel.OMEGA_1


# --- Seeds ---

def _key_word(part: int | str) -> int:
    if isinstance(part, str):
        return int.from_bytes(hashlib.sha256(part.encode("utf-8")).digest()[:4], "little")
    if part < 0:
        raise ValueError(f"seed key parts must be >= 0, got {part}")
    return int(part)


def derive_rng(seed: int, *key: int | str) -> np.random.Generator:
    """Independent generator for the stream named by (seed, key)."""
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(_key_word(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *key: int | str) -> int:
    """Integer seed for a sub-experiment named by (seed, key)."""
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(_key_word(k) for k in key))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> 1)


def check_priors(priors: Sequence[float]) -> tuple[float, float]:
    """Validate a prior pair: two values >= PRIOR_FLOOR summing to 1."""
    if len(priors) != 2:
        raise ValueError(f"priors must be a pair, got {priors!r}")
    pi1, pi2 = float(priors[0]), float(priors[1])
    if abs(pi1 + pi2 - 1.0) > _PRIOR_SUM_TOL:
        raise ValueError(f"priors must sum to 1, got {pi1!r} + {pi2!r}")
    if min(pi1, pi2) < PRIOR_FLOOR:
        raise ValueError(f"priors must both be >= {PRIOR_FLOOR:g}, got ({pi1!r}, {pi2!r})")
    return pi1, pi2


# --- Types ---

@dataclass(frozen=True, eq=False)
class SpikeTrain:
    """Event times 0 < t_1 < ... < t_N <= T on the window [0, T]."""
    times: np.ndarray
    window_T: float

    def __post_init__(self) -> None:
        times = np.array(self.times, dtype=float).reshape(-1)
        if not self.window_T > 0:
            raise ValueError(f"window T must be > 0, got {self.window_T!r}")
        if times.size:
            if times[0] <= 0 or times[-1] > self.window_T:
                raise ValueError(f"event times must lie in (0, {self.window_T:g}]")
            if np.any(np.diff(times) <= 0):
                raise ValueError("event times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @property
    def count(self) -> int:
        return int(self.times.size)

    def count_in(self, a: float, b: float) -> int:
        """Number of events in (a, b]."""
        return int(np.count_nonzero((self.times > a) & (self.times <= b)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpikeTrain):
            return NotImplemented
        return self.window_T == other.window_T and np.array_equal(self.times, other.times)

    def __repr__(self) -> str:
        return f"SpikeTrain(N={self.count}, T={self.window_T:g})"


@dataclass(frozen=True)
class LabeledSample:
    train: SpikeTrain
    label: ClassLabel


@dataclass(frozen=True)
class TrainingSet:
    """Labeled samples sharing one window."""
    samples: tuple[LabeledSample, ...]
    window_T: float
    priors: tuple[float, float]
    seed: int | None = None
    L1: int = field(init=False)
    L2: int = field(init=False)

    def __post_init__(self) -> None:
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        for s in samples:
            if s.train.window_T != self.window_T:
                raise ValueError(
                    f"sample window {s.train.window_T!r} differs from set window {self.window_T!r}"
                )
        l1 = sum(1 for s in samples if s.label is ClassLabel.OMEGA_1)
        object.__setattr__(self, "L1", l1)
        object.__setattr__(self, "L2", len(samples) - l1)

    @property
    def L(self) -> int:
        return len(self.samples)

    def class_count(self, label: ClassLabel) -> int:
        return self.L1 if label is ClassLabel.OMEGA_1 else self.L2

    def trains(self, label: ClassLabel) -> list[SpikeTrain]:
        return [s.train for s in self.samples if s.label is label]


# --- Sampling ---

@lru_cache(maxsize=256)
def dominating_rate(model: IntensityModel, T: float) -> float:
    """Thinning envelope: grid maximum of lambda on [0, T] times 1.001."""
    bounds = verify_bounds(model, T)
    if not math.isfinite(bounds.C):
        raise DegenerateModelError(f"{model.label} is unbounded on [0, {T:g}]")
    return bounds.C * DOMINATING_SAFETY


def _strictly_increasing(times: np.ndarray) -> np.ndarray:
    # Ties at float resolution are moved up by one ulp.
    if times.size and times[0] <= 0.0:
        times[0] = np.nextafter(0.0, 1.0)
    for i in np.flatnonzero(np.diff(times) <= 0):
        times[i + 1] = np.nextafter(times[i], np.inf)
    return times


def sample_poisson(model: IntensityModel, T: float,
                   seed: int | np.random.Generator) -> SpikeTrain:
    """One exact draw of an inhomogeneous Poisson process on [0, T].

    Candidates come from a homogeneous process at the dominating rate
    and are kept with probability lambda(t) / rate.

    Raises:
        DegenerateModelError: If lambda exceeds the envelope at a candidate.
    """
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed)
    rate = dominating_rate(model, float(T))
    if rate == 0.0:
        return SpikeTrain(np.empty(0), T)
    n = rng.poisson(rate * T)
    candidates = np.sort(rng.uniform(0.0, T, size=n))
    lam = np.asarray(model.rate_at(candidates), dtype=float)
    if np.any(lam > rate):
        raise DegenerateModelError(
            f"{model.label} exceeds its thinning envelope {rate:.6g} on [0, {T:g}]"
        )
    keep = rng.uniform(0.0, rate, size=n) < lam
    return SpikeTrain(_strictly_increasing(candidates[keep]), T)


@dataclass(frozen=True)
class _SampleTask:
    lambda1: IntensityModel
    lambda2: IntensityModel
    priors: tuple[float, float]
    T: float
    seed: int
    stream: str
    index: int


def draw_labeled(task: _SampleTask) -> LabeledSample:
    """Label from the priors, then a train from that class."""
    rng = derive_rng(task.seed, task.stream, task.index)
    label = ClassLabel.OMEGA_1 if rng.random() < task.priors[0] else ClassLabel.OMEGA_2
    model = task.lambda1 if label is ClassLabel.OMEGA_1 else task.lambda2
    return LabeledSample(sample_poisson(model, task.T, rng), label)


def draw_labeled_samples(lambda1: IntensityModel, lambda2: IntensityModel,
                         priors: Sequence[float], n: int, T: float, seed: int,
                         stream: str | tuple[int | str, ...] = "train",
                         threads: int = 1) -> list[LabeledSample]:
    """n labeled samples from the stream (seed, stream, i), i < n."""
    pair = check_priors(priors)
    name = stream if isinstance(stream, str) else "/".join(str(p) for p in stream)
    tasks = [_SampleTask(lambda1, lambda2, pair, float(T), seed, name, i) for i in range(n)]
    return parallel_map(draw_labeled, tasks, threads)


def generate_training_set(lambda1: IntensityModel, lambda2: IntensityModel,
                          priors: Sequence[float], L: int, T: float, seed: int,
                          threads: int = 1) -> TrainingSet:
    """Training set of L labeled trains; labels i.i.d. from the priors."""
    if L < 1:
        raise ValueError(f"training set size L must be >= 1, got {L}")
    pair = check_priors(priors)
    samples = draw_labeled_samples(lambda1, lambda2, pair, L, T, seed, "train", threads)
    data = TrainingSet(tuple(samples), float(T), pair, seed)
    logger.debug("training set seed=%d: L=%d (L1=%d, L2=%d)", seed, data.L, data.L1, data.L2)
    return data


# --- Martingale noise ---

def compensator(g: Callable, model: IntensityModel, T: float) -> float:
    """int_0^T g(t) lambda(t) dt."""
    return integrate_piecewise(
        lambda t: float(g(t)) * float(model.rate_at(t)),
        quadrature_breakpoints(0.0, T, model),
    )


def stochastic_integral(train: SpikeTrain, g: Callable, model: IntensityModel,
                        compensator_value: float | None = None) -> float:
    """int g dM = sum_i g(t_i) - int_0^T g lambda dt for the noise dM = dN - lambda dt.

    Pass `compensator_value` to reuse the deterministic part across
    replicates.
    """
    if compensator_value is None:
        compensator_value = compensator(g, model, train.window_T)
    jumps = float(np.sum(g(train.times))) if train.count else 0.0
    return jumps - compensator_value


def martingale_variance(g: Callable, model: IntensityModel, T: float) -> float:
    """Var int g dM = int_0^T g(t)^2 lambda(t) dt."""
    return integrate_piecewise(
        lambda t: float(g(t)) ** 2 * float(model.rate_at(t)),
        quadrature_breakpoints(0.0, T, model),
    )
