"""Synthetic drift-stream generators with ground-truth drift regions.

Seven benchmark tasks, each a 30,000-point stream.  The Gaussian-mixture
family draws every point from ``N(20, 10^2 I)`` with probability ``p`` and
from ``N(20, 50^2 I)`` otherwise, with the weight ``p`` following a per-task
schedule; the remaining tasks switch between Gamma, Lognormal and Weibull
segments (every dimension follows the same scalar law).

Randomness comes from ``numpy.random.default_rng`` (PCG64) seeded by the
TaskSpec, so a given spec always reproduces the same stream bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional

import numpy as np

from .errors import ContractError
from .stream import DataPoint

STREAM_LENGTH = 30000

MIX_MEAN = 20.0
MIX_STD_NARROW = 10.0  # component selected with probability p
MIX_STD_WIDE = 50.0

GAMMA_SHAPE, GAMMA_SCALE = 1.5, 20.0
GAMMA_WIDE_SHAPE, GAMMA_WIDE_SCALE = 2.0, 10.0
LOGNORMAL_MU, LOGNORMAL_SIGMA = math.log(30.0) - 0.5, 0.5  # natural-log parameters
WEIBULL_SHAPE, WEIBULL_SCALE = 1.5, 20.0


class TaskId(str, Enum):
    GM_SUD = "GM_Sud"
    GM_REC = "GM_Rec"
    GM_INC = "GM_Inc"
    GM_GRAD = "GM_Grad"
    GAMLOG_SUD = "GamLog_Sud"
    LOGGAMWEI_SUD = "LogGamWei_Sud"
    GAMGM_SUDGRAD = "GamGM_SudGrad"


TASK_DIMENSION = {
    TaskId.GM_SUD: 5,
    TaskId.GM_REC: 5,
    TaskId.GM_INC: 5,
    TaskId.GM_GRAD: 5,
    TaskId.GAMLOG_SUD: 5,
    TaskId.LOGGAMWEI_SUD: 20,
    TaskId.GAMGM_SUDGRAD: 20,
}

# Linear ramps of the mixture weight: (start, end, p_from, p_to), half-open.
_INC_RAMPS = (
    (12000, 12600, 0.2, 0.8),
    (18000, 19200, 0.8, 0.2),
    (24000, 25200, 0.2, 0.8),
)

# Intervals where the gradual task holds p = 0.8; elsewhere p = 0.2.
# Interval bounds are taken verbatim and applied half-open, so the single
# indices 11000, 12000, 15000, 21000 fall back to the 0.2 baseline.
_GRAD_HIGH = ((10000, 11000), (12001, 15000), (18000, 21000))

# The sudden-then-gradual task enters its mixture phase at this index and
# follows the gradual schedule restricted to the phase.
_SUDGRAD_ONSET = 11000


@dataclass(frozen=True)
class DriftRegion:
    """Ground-truth drift location as a half-open index interval."""

    start: int
    end: int
    kind: str

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ContractError(f"bad drift region [{self.start}, {self.end})")


_TASK_REGIONS = {
    TaskId.GM_SUD: ((21000, 21001, "sudden"),),
    TaskId.GM_REC: ((15000, 15001, "reoccurring"), (25000, 25001, "reoccurring")),
    TaskId.GM_INC: tuple((a, b, "incremental") for a, b, _, _ in _INC_RAMPS),
    TaskId.GM_GRAD: tuple(
        (t, t + 1, "gradual") for t in (10000, 11000, 12001, 15000, 18000, 21000)
    ),
    TaskId.GAMLOG_SUD: ((21000, 21001, "sudden"),),
    TaskId.LOGGAMWEI_SUD: ((15000, 15001, "sudden"), (24000, 24001, "sudden")),
    TaskId.GAMGM_SUDGRAD: ((11000, 11001, "sudden"),)
    + tuple((t, t + 1, "gradual") for t in (12001, 15000, 18000, 21000)),
}


@dataclass(frozen=True)
class TaskSpec:
    """Fully determines one synthetic stream."""

    task_id: TaskId
    seed: int
    length: int = STREAM_LENGTH
    dimension: Optional[int] = None

    def __post_init__(self):
        task_id = TaskId(self.task_id)
        object.__setattr__(self, "task_id", task_id)
        if self.length != STREAM_LENGTH:
            raise ContractError(f"task streams are {STREAM_LENGTH} points, got {self.length}")
        expected = TASK_DIMENSION[task_id]
        if self.dimension is None:
            object.__setattr__(self, "dimension", expected)
        elif self.dimension != expected:
            raise ContractError(
                f"{task_id.value} streams are {expected}-dimensional, got {self.dimension}"
            )


@dataclass
class LabeledStream:
    """Generated points plus ground-truth drift regions."""

    features: np.ndarray  # (T, d)
    drift_regions: list

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    def point_labels(self) -> np.ndarray:
        """Per-point boolean drift flags: True inside any drift region."""
        flags = np.zeros(len(self), dtype=bool)
        for region in self.drift_regions:
            if region.end > len(self):
                raise ContractError(f"drift region [{region.start}, {region.end}) outside stream")
            flags[region.start:region.end] = True
        return flags

    def iter_points(self) -> Iterator[DataPoint]:
        labels = self.point_labels()
        for t in range(len(self)):
            yield DataPoint(self.features[t], t, bool(labels[t]))


def _grad_weight(t: np.ndarray) -> np.ndarray:
    p = np.full(t.shape, 0.2)
    for lo, hi in _GRAD_HIGH:
        p[(t >= lo) & (t < hi)] = 0.8
    return p


def _inc_weight(t: np.ndarray) -> np.ndarray:
    p = np.full(t.shape, 0.2)
    for lo, hi, p_from, p_to in _INC_RAMPS:
        ramp = (t >= lo) & (t < hi)
        p[ramp] = p_from + (p_to - p_from) * (t[ramp] - lo) / (hi - lo)
        p[t >= hi] = p_to
    return p


def _mixture_weights(task_id: TaskId, t: np.ndarray) -> np.ndarray:
    """Vectorized mixture-weight schedule; assumes t is inside the mixture phase."""
    if task_id == TaskId.GM_SUD:
        return np.where(t < 21000, 0.2, 0.8)
    if task_id == TaskId.GM_REC:
        return np.where((t >= 15000) & (t < 25000), 0.2, 0.8)
    if task_id == TaskId.GM_INC:
        return _inc_weight(t)
    if task_id == TaskId.GM_GRAD:
        return _grad_weight(t)
    if task_id == TaskId.GAMGM_SUDGRAD:
        return _grad_weight(t)
    raise ContractError(f"{task_id.value} has no mixture-weight schedule")


def mixture_weight_schedule(task_id: TaskId, t: int) -> float:
    """Mixture weight p at instance index t for tasks with a mixture phase.

    Raises ContractError for tasks (or, for the sudden-then-gradual task,
    indices before the mixture onset) where no mixture weight is defined.
    """
    task_id = TaskId(task_id)
    if not 0 <= t < STREAM_LENGTH:
        raise ContractError(f"instance index {t} outside [0, {STREAM_LENGTH})")
    if task_id in (TaskId.GAMLOG_SUD, TaskId.LOGGAMWEI_SUD):
        raise ContractError(f"{task_id.value} has no mixture-weight schedule")
    if task_id == TaskId.GAMGM_SUDGRAD and t < _SUDGRAD_ONSET:
        raise ContractError(
            f"{task_id.value} has no mixture phase before index {_SUDGRAD_ONSET}"
        )
    return float(_mixture_weights(task_id, np.asarray([t]))[0])


def _gaussian_mixture(rng: np.random.Generator, weights: np.ndarray, dim: int) -> np.ndarray:
    """Per-point component choice: Bernoulli(p) selects the narrow component."""
    n = weights.shape[0]
    z = rng.standard_normal((n, dim))
    narrow = rng.random(n) < weights
    scale = np.where(narrow, MIX_STD_NARROW, MIX_STD_WIDE)
    return MIX_MEAN + z * scale[:, None]


def _gamma(rng, shape, scale, n, dim):
    return rng.gamma(shape, scale, size=(n, dim))


def _lognormal(rng, n, dim):
    return rng.lognormal(mean=LOGNORMAL_MU, sigma=LOGNORMAL_SIGMA, size=(n, dim))


def _weibull(rng, n, dim):
    return WEIBULL_SCALE * rng.weibull(WEIBULL_SHAPE, size=(n, dim))


def generate_task(spec: TaskSpec) -> LabeledStream:
    """Generate one labeled benchmark stream.

    Segments are drawn in stream order from a single PCG64 generator, so the
    output is a pure function of the TaskSpec.
    """
    rng = np.random.default_rng(spec.seed)
    n, d = spec.length, spec.dimension
    task = spec.task_id
    t = np.arange(n)

    if task in (TaskId.GM_SUD, TaskId.GM_REC, TaskId.GM_INC, TaskId.GM_GRAD):
        features = _gaussian_mixture(rng, _mixture_weights(task, t), d)
    elif task == TaskId.GAMLOG_SUD:
        features = np.concatenate(
            [_gamma(rng, GAMMA_SHAPE, GAMMA_SCALE, 21000, d), _lognormal(rng, n - 21000, d)]
        )
    elif task == TaskId.LOGGAMWEI_SUD:
        features = np.concatenate(
            [
                _lognormal(rng, 15000, d),
                _gamma(rng, GAMMA_SHAPE, GAMMA_SCALE, 24000 - 15000, d),
                _weibull(rng, n - 24000, d),
            ]
        )
    elif task == TaskId.GAMGM_SUDGRAD:
        head = _gamma(rng, GAMMA_WIDE_SHAPE, GAMMA_WIDE_SCALE, _SUDGRAD_ONSET, d)
        tail = _gaussian_mixture(rng, _mixture_weights(task, t[_SUDGRAD_ONSET:]), d)
        features = np.concatenate([head, tail])
    else:  # pragma: no cover - TaskSpec validates task_id
        raise ContractError(f"unknown task {task}")

    regions = [DriftRegion(a, b, kind) for a, b, kind in _TASK_REGIONS[task]]
    return LabeledStream(features=features, drift_regions=regions)
