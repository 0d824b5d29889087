"""Drift decisions and diagnostic discrepancy matrices.

The maximum concept discrepancy between two sample sets is the Euclidean
distance between their pooled embeddings under the current trained encoder
(the supremum over encoders is realized by training, not re-optimized per
query).  A window is flagged as drifted when the discrepancy between its two
newest sub-windows strictly exceeds the bootstrapped threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .contrastive import ThresholdState, draw_sample_set
from .encoder import EncoderParams, encode_sets
from .errors import ContractError
from .stream import SlidingWindowState, partition


@dataclass(frozen=True)
class DriftReport:
    """Per-window decision: drift iff the threshold was ready and mcd_value > sigma."""

    window_end_time: int
    mcd_value: float
    sigma: Optional[float]
    drift: bool
    threshold_ready: bool = True

    def __post_init__(self):
        if self.mcd_value < 0 or not np.isfinite(self.mcd_value):
            raise ContractError("mcd_value must be finite and non-negative")
        if self.threshold_ready:
            if self.sigma is None:
                raise ContractError("a ready report needs a sigma")
            if self.drift != (self.mcd_value > self.sigma):
                raise ContractError("drift flag must equal (mcd_value > sigma)")
        elif self.drift:
            raise ContractError("cannot flag drift before the threshold is ready")

    def to_record(self, method: str = "mcd_dd") -> dict:
        return {
            "window_end_time": self.window_end_time,
            "method": method,
            "mcd_value": self.mcd_value,
            "sigma": self.sigma,
            "drift": self.drift,
            "threshold_ready": self.threshold_ready,
        }

    def to_json(self, method: str = "mcd_dd") -> str:
        return json.dumps(self.to_record(method))


@dataclass(frozen=True)
class HeatmapMatrix:
    """Discrepancies between each window's newest sub-window and its predecessors.

    Row j (1-based) compares against preceding sub-window j; one column per
    window position, identified by its end time.
    """

    values: np.ndarray  # (n_sub - 1, n_positions)
    window_end_times: np.ndarray  # (n_positions,)

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.window_end_times):
            raise ContractError("heatmap values and window_end_times are inconsistent")
        if self.values.size and (np.any(self.values < 0) or not np.all(np.isfinite(self.values))):
            raise ContractError("heatmap cells must be finite and non-negative")

    def write_csv(self, path) -> None:
        """One column per window position, rows ordered by preceding index."""
        with open(path, "w", encoding="utf-8") as fh:
            header = ["preceding_subwindow"] + [str(int(t)) for t in self.window_end_times]
            fh.write(",".join(header) + "\n")
            for j in range(self.values.shape[0]):
                cells = [str(j + 1)] + [repr(float(v)) for v in self.values[j]]
                fh.write(",".join(cells) + "\n")


def mcd(h_a, h_b) -> float:
    """Euclidean distance between two concept representations."""
    a = np.asarray(getattr(h_a, "h", h_a), dtype=float)
    b = np.asarray(getattr(h_b, "h", h_b), dtype=float)
    if a.shape != b.shape:
        raise ContractError(f"embedding dimensions differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def detect_drift(
    window: SlidingWindowState,
    params: EncoderParams,
    threshold: Optional[ThresholdState],
    sample_size: int,
    rng: np.random.Generator,
    draws: int = 1,
) -> DriftReport:
    """Compare fresh sample sets of the two newest sub-windows against sigma.

    Sample sets are drawn anew at detection time (newest sub-window first, one
    pair per draw) rather than reusing training draws.  With ``draws`` > 1 the
    reported value is the mean discrepancy over the fresh pairs, which
    suppresses sampling noise relative to the single-pair threshold while
    leaving a real distribution gap intact.  With no threshold yet (empty
    history), the detector abstains: drift is False and the report carries
    threshold_ready=False.
    """
    if draws < 1:
        raise ContractError("draws must be at least 1")
    subs = partition(window)
    pairs = []
    for _ in range(draws):
        pairs.append(draw_sample_set(subs[-1], sample_size, rng).features)
        pairs.append(draw_sample_set(subs[-2], sample_size, rng).features)
    h = encode_sets(params, np.stack(pairs))
    value = float(np.mean(np.linalg.norm(h[0::2] - h[1::2], axis=1)))
    if threshold is None:
        return DriftReport(
            window_end_time=window.window_end_time,
            mcd_value=value,
            sigma=None,
            drift=False,
            threshold_ready=False,
        )
    return DriftReport(
        window_end_time=window.window_end_time,
        mcd_value=value,
        sigma=threshold.sigma,
        drift=value > threshold.sigma,
    )


def heatmap_row(
    window: SlidingWindowState,
    params: EncoderParams,
    sample_size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Discrepancy between the newest sub-window and each predecessor (j = 1..n_sub-1)."""
    subs = partition(window)
    sets = np.stack([draw_sample_set(sw, sample_size, rng).features for sw in subs])
    h = encode_sets(params, sets)
    return np.linalg.norm(h[:-1] - h[-1], axis=1)
