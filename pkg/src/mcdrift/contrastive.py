"""Time-aware pair sampling, per-window training, and the bootstrapped threshold.

Each warm window yields one training batch: for every sub-window, ``draws``
positive pairs (two fresh sample sets from the same sub-window) and the same
number of weak-negative pairs (same sub-window, small Gaussian noise added to
the second set); plus ``draws`` strong-negative pairs between the newest and
the oldest sub-window with large noise on the second set.  Noise is i.i.d.
per coordinate with the stated standard deviation.

The drift threshold sigma is the upper empirical quantile (nearest-rank rule)
of a rolling history of positive-pair discrepancies, so it tracks how far
apart same-distribution sample sets currently land in embedding space.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .encoder import EncoderParams, _loss_and_grads_detail, sgd_step
from .errors import ContractError, NotReadyError
from .stream import SlidingWindowState, SubWindow, partition

HISTORY_WINDOWS = 20  # rolling threshold history, in windows of positive pairs


@dataclass(frozen=True)
class SampleSet:
    """``sample_size`` points drawn without replacement from one sub-window."""

    features: np.ndarray  # (sample_size, d)
    source_subwindow: int

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class PairBatch:
    """One window's contrastive pairs as stacked feature arrays.

    pos*/wn* have shape (n_sub, draws, sample_size, d); sn* have shape
    (draws, sample_size, d).  Noise is already applied to wn2 and sn2.
    """

    pos1: np.ndarray
    pos2: np.ndarray
    wn1: np.ndarray
    wn2: np.ndarray
    sn1: np.ndarray
    sn2: np.ndarray

    @property
    def n_sub(self) -> int:
        return self.pos1.shape[0]

    @property
    def draws(self) -> int:
        return self.pos1.shape[1]

    @property
    def sample_size(self) -> int:
        return self.pos1.shape[2]

    @property
    def n_positive_pairs(self) -> int:
        return self.n_sub * self.draws

    @property
    def n_weak_pairs(self) -> int:
        return self.n_sub * self.draws

    @property
    def n_strong_pairs(self) -> int:
        return self.sn1.shape[0]


@dataclass
class MCDHistory:
    """Bounded FIFO of positive-pair discrepancy values."""

    capacity: int
    values: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.capacity <= 0:
            raise ContractError("history capacity must be positive")
        self.values = deque(self.values, maxlen=self.capacity)

    def extend(self, new_values) -> None:
        arr = np.asarray(new_values, dtype=float).ravel()
        if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0)):
            raise ContractError("history values must be finite and non-negative")
        self.values.extend(arr.tolist())

    def __len__(self) -> int:
        return len(self.values)

    def snapshot(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class ThresholdState:
    """Current drift threshold and the significance level it was built at."""

    sigma: float
    alpha: float

    def __post_init__(self):
        if not np.isfinite(self.sigma):
            raise ContractError("sigma must be finite")


@dataclass(frozen=True)
class TrainingConfig:
    """Per-window training hyperparameters (defaults are the standard setup)."""

    sample_size: int = 30          # points per sample set
    draws: int = 10                # pairs per category per sub-window
    penalty_weight: float = 1.0    # Lipschitz penalty coefficient
    lipschitz_target: float = 1.0
    learning_rate: float = 0.005
    noise_small: float = 1.0       # weak-negative noise std per coordinate
    noise_big: float = 10.0        # strong-negative noise std per coordinate

    def __post_init__(self):
        if self.sample_size <= 0 or self.draws <= 0:
            raise ContractError("sample_size and draws must be positive")
        if self.penalty_weight < 0 or self.noise_small < 0 or self.noise_big < 0:
            raise ContractError("penalty_weight and noise levels must be non-negative")
        if self.lipschitz_target <= 0 or self.learning_rate < 0:
            raise ContractError("lipschitz_target must be positive, learning_rate non-negative")


def _draw_index_sets(rng: np.random.Generator, population: int, size: int, count: int) -> np.ndarray:
    """``count`` independent without-replacement draws of ``size`` indices each."""
    if size > population:
        raise ContractError(f"cannot draw {size} points from a sub-window of {population}")
    keys = rng.random((count, population))
    return np.argsort(keys, axis=1)[:, :size]


def draw_sample_set(sub: SubWindow, sample_size: int, rng: np.random.Generator) -> SampleSet:
    """Uniform without-replacement sample of ``sample_size`` points from one sub-window."""
    idx = _draw_index_sets(rng, len(sub), sample_size, 1)[0]
    return SampleSet(features=sub.features[idx], source_subwindow=sub.index)


def build_pair_batch(
    window: SlidingWindowState,
    sample_size: int,
    draws: int,
    noise_small: float,
    noise_big: float,
    rng: np.random.Generator,
) -> PairBatch:
    """Draw all contrastive pairs for one warm window.

    Consumes the generator in a fixed order (positive indices, weak indices,
    strong indices, then the two noise blocks), so a given (window, rng state)
    always produces the same batch.  Noise blocks are drawn even at zero noise
    level to keep that order independent of the settings.
    """
    subs = partition(window)
    n_sub = len(subs)
    slide = len(subs[0])
    stacked = np.stack([sw.features for sw in subs])  # (n_sub, slide, d)

    def block(idx: np.ndarray) -> np.ndarray:
        # idx (n_sub, draws, sample_size) gathered per sub-window
        return stacked[np.arange(n_sub)[:, None, None], idx]

    shape = (n_sub, draws, sample_size)
    pos1 = block(_draw_index_sets(rng, slide, sample_size, n_sub * draws).reshape(shape))
    pos2 = block(_draw_index_sets(rng, slide, sample_size, n_sub * draws).reshape(shape))
    wn1 = block(_draw_index_sets(rng, slide, sample_size, n_sub * draws).reshape(shape))
    wn2 = block(_draw_index_sets(rng, slide, sample_size, n_sub * draws).reshape(shape))
    sn1 = subs[-1].features[_draw_index_sets(rng, slide, sample_size, draws)]
    sn2 = subs[0].features[_draw_index_sets(rng, slide, sample_size, draws)]
    wn2 = wn2 + noise_small * rng.standard_normal(wn2.shape)
    sn2 = sn2 + noise_big * rng.standard_normal(sn2.shape)
    return PairBatch(pos1=pos1, pos2=pos2, wn1=wn1, wn2=wn2, sn1=sn1, sn2=sn2)


def train_window(
    params: EncoderParams,
    window: SlidingWindowState,
    config: TrainingConfig,
    rng: np.random.Generator,
    batch: Optional[PairBatch] = None,
) -> Tuple[EncoderParams, np.ndarray]:
    """One epoch (one full-batch gradient step) on a warm window's pairs.

    Returns the updated params and the positive-pair discrepancies computed
    with the pre-update params; they feed the threshold bootstrap and come out
    of the loss evaluation at no extra cost.
    """
    if batch is None:
        batch = build_pair_batch(
            window, config.sample_size, config.draws, config.noise_small, config.noise_big, rng
        )
    # Penalty points: the newest sub-window's first positive sample set, so the
    # Lipschitz control is enforced where detection happens.
    penalty_points = batch.pos1[-1, 0]
    loss, grads, d_pos = _loss_and_grads_detail(
        params, batch, config.penalty_weight, penalty_points
    )
    return sgd_step(params, grads, config.learning_rate), d_pos.ravel()


def update_threshold(history: MCDHistory, alpha: float) -> ThresholdState:
    """Nearest-rank upper quantile of the history: the ceil((1-alpha)*n)-th
    smallest value becomes sigma."""
    if not 0 < alpha < 1:
        raise ContractError(f"alpha must be in (0, 1), got {alpha}")
    n = len(history)
    if n == 0:
        raise NotReadyError("threshold history is empty; detector must abstain")
    values = np.sort(history.snapshot())
    rank = min(max(math.ceil((1.0 - alpha) * n), 1), n)
    return ThresholdState(sigma=float(values[rank - 1]), alpha=alpha)


def history_capacity(config: TrainingConfig, n_sub: int, windows: int = HISTORY_WINDOWS) -> int:
    """History size holding ``windows`` windows' worth of positive-pair values."""
    return windows * n_sub * config.draws
