"""Prequential (test-then-train) evaluation with Precision/F1/MCC scoring.

Each full window yields exactly one prediction about its newest sub-window:
the detector is queried first, then (for the learned method only) the encoder
and threshold are updated on the same window.  A window position is labeled
Drift when its newest sub-window's index range intersects any ground-truth
drift region.  Metrics over repeated runs are aggregated from per-run values,
not pooled confusion counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .baselines import ks_drift_decision, mmd_permutation_decision
from .contrastive import (
    MCDHistory,
    TrainingConfig,
    history_capacity,
    train_window,
    update_threshold,
)
from .detector import HeatmapMatrix, detect_drift, heatmap_row
from .encoder import init_params
from .errors import ContractError
from .stream import StreamConfig, full_window_count, partition, windows_from_array
from .synth import LabeledStream

METHODS = ("mcd_dd", "ks", "mmd_gk")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @classmethod
    def from_predictions(cls, predictions, truth) -> "ConfusionCounts":
        predictions = np.asarray(predictions, dtype=bool)
        truth = np.asarray(truth, dtype=bool)
        if predictions.shape != truth.shape:
            raise ContractError(
                f"length mismatch: {predictions.shape} predictions vs {truth.shape} labels"
            )
        return cls(
            tp=int(np.sum(predictions & truth)),
            fp=int(np.sum(predictions & ~truth)),
            fn=int(np.sum(~predictions & truth)),
            tn=int(np.sum(~predictions & ~truth)),
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    """Precision/F1/MCC for one run (zero-denominator cases score 0)."""

    precision: float
    f1: float
    mcc: float
    counts: ConfusionCounts

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "f1": self.f1,
            "mcc": self.mcc,
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "fn": self.counts.fn,
            "tn": self.counts.tn,
        }


def compute_metrics(predictions, truth) -> MetricsReport:
    """Score one prediction sequence against the ground truth."""
    counts = ConfusionCounts.from_predictions(predictions, truth)
    tp, fp, fn, tn = counts.tp, counts.fp, counts.fn, counts.tn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    den_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(den_sq) if den_sq else 0.0
    return MetricsReport(precision=precision, f1=f1, mcc=mcc, counts=counts)


def summarize_runs(reports: List[MetricsReport]) -> dict:
    """Mean and sample std (ddof=1) of each metric over per-run values."""
    if not reports:
        raise ContractError("no runs to summarize")
    summary = {"runs": len(reports)}
    for name in ("precision", "f1", "mcc"):
        values = np.asarray([getattr(r, name) for r in reports], dtype=float)
        summary[name] = {
            "mean": float(values.mean()),
            "std": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
            "per_seed": values.tolist(),
        }
    return summary


def ground_truth_labels(drift_regions, stream_length: int, config: StreamConfig) -> np.ndarray:
    """Boolean label per evaluated window position.

    Position i's newest sub-window covers [W - S + i*S, W + i*S); it is
    labeled True iff that range intersects any drift region.
    """
    for region in drift_regions:
        if not 0 <= region.start < region.end <= stream_length:
            raise ContractError(
                f"drift region [{region.start}, {region.end}) outside stream of {stream_length}"
            )
    n_windows = full_window_count(stream_length, config)
    labels = np.zeros(n_windows, dtype=bool)
    w, s = config.window_size, config.slide_size
    for i in range(n_windows):
        lo = w - s + i * s
        hi = w + i * s
        labels[i] = any(region.start < hi and region.end > lo for region in drift_regions)
    return labels


@dataclass
class PrequentialResult:
    """Everything one prequential pass produces."""

    method: str
    seed: int
    window_end_times: np.ndarray
    predictions: np.ndarray
    truth: np.ndarray
    statistics: np.ndarray          # discrepancy (learned method) or test statistic
    p_values: Optional[np.ndarray]  # baselines only
    sigma_trace: Optional[np.ndarray]  # post-update threshold per window (learned method)
    detection_sigmas: Optional[np.ndarray]  # threshold used at detection time (NaN = abstained)
    heatmap: Optional[HeatmapMatrix]
    metrics: MetricsReport = field(init=False)

    def __post_init__(self):
        self.metrics = compute_metrics(self.predictions, self.truth)

    def report_records(self) -> List[dict]:
        """JSON-ready per-window records sharing the drift-report shape."""
        records = []
        for i, end in enumerate(self.window_end_times):
            record = {
                "window_end_time": int(end),
                "method": self.method,
                "mcd_value": float(self.statistics[i]),
                "sigma": None,
                "drift": bool(self.predictions[i]),
                "threshold_ready": True,
            }
            if self.method == "mcd_dd":
                ready = not np.isnan(self.detection_sigmas[i])
                record["sigma"] = float(self.detection_sigmas[i]) if ready else None
                record["threshold_ready"] = ready
            else:
                record["p_value"] = float(self.p_values[i])
            records.append(record)
        return records


@dataclass(frozen=True)
class HarnessConfig:
    """Detector-side settings shared by all prequential runs."""

    training: TrainingConfig = TrainingConfig()
    hidden_dim: int = 100
    output_dim: int = 100
    alpha: float = 0.05
    history_windows: int = 20
    n_permutations: int = 200
    collect_heatmap: bool = True


def _standardize(features: np.ndarray, window_size: int) -> np.ndarray:
    """Affine rescale using first-window statistics only.

    The reference window precedes every detection decision (the detector
    abstains until it has trained once), so this stays online-legitimate.  It
    puts features on unit scale, where the contrastive noise levels are
    meaningful perturbations.  Constant features keep scale 1.
    """
    ref = features[:window_size]
    mean = ref.mean(axis=0)
    std = ref.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (features - mean) / std


def _run_learned(stream, config, harness, seed):
    rng = np.random.default_rng(seed)
    training = harness.training
    features = _standardize(stream.features, config.window_size)
    params = init_params(
        stream.dimension, harness.hidden_dim, harness.output_dim,
        training.lipschitz_target, rng,
    )
    history = MCDHistory(history_capacity(training, config.n_sub, harness.history_windows))
    threshold = None

    end_times, predictions, statistics = [], [], []
    detection_sigmas, sigma_trace, heat_rows = [], [], []
    for state in windows_from_array(config, features):
        report = detect_drift(
            state, params, threshold, training.sample_size, rng, draws=training.draws
        )
        end_times.append(state.window_end_time)
        predictions.append(report.drift)
        statistics.append(report.mcd_value)
        detection_sigmas.append(report.sigma if report.threshold_ready else np.nan)
        if harness.collect_heatmap:
            heat_rows.append(heatmap_row(state, params, training.sample_size, rng))
        params, positive_mcds = train_window(params, state, training, rng)
        history.extend(positive_mcds)
        threshold = update_threshold(history, harness.alpha)
        sigma_trace.append(threshold.sigma)

    heatmap = None
    if harness.collect_heatmap:
        heatmap = HeatmapMatrix(
            values=np.stack(heat_rows, axis=1), window_end_times=np.asarray(end_times)
        )
    return end_times, predictions, statistics, None, sigma_trace, detection_sigmas, heatmap


def _run_baseline(stream, config, harness, seed, method):
    rng = np.random.default_rng(seed)
    end_times, predictions, statistics, p_values = [], [], [], []
    for state in windows_from_array(config, stream.features):
        subs = partition(state)
        x, y = subs[-2].features, subs[-1].features
        if method == "ks":
            decision = ks_drift_decision(x, y, harness.alpha)
        else:
            decision = mmd_permutation_decision(
                x, y, harness.alpha, n_perm=harness.n_permutations, rng=rng
            )
        end_times.append(state.window_end_time)
        predictions.append(decision.reject)
        statistics.append(decision.statistic)
        p_values.append(decision.p_value)
    return end_times, predictions, statistics, p_values, None, None, None


def prequential_run(
    stream: LabeledStream,
    method: str,
    config: StreamConfig,
    harness: HarnessConfig = HarnessConfig(),
    seed: int = 0,
) -> PrequentialResult:
    """One test-then-train pass over a stream; one prediction per full window."""
    if method not in METHODS:
        raise ContractError(f"unknown method {method!r}; choose one of {METHODS}")
    if len(stream) < config.window_size:
        raise ContractError(
            f"stream of {len(stream)} points is shorter than one window ({config.window_size})"
        )
    if method == "mcd_dd":
        parts = _run_learned(stream, config, harness, seed)
    else:
        parts = _run_baseline(stream, config, harness, seed, method)
    end_times, predictions, statistics, p_values, sigma_trace, detection_sigmas, heatmap = parts
    truth = ground_truth_labels(stream.drift_regions, len(stream), config)
    return PrequentialResult(
        method=method,
        seed=seed,
        window_end_times=np.asarray(end_times, dtype=int),
        predictions=np.asarray(predictions, dtype=bool),
        truth=truth,
        statistics=np.asarray(statistics, dtype=float),
        p_values=None if p_values is None else np.asarray(p_values, dtype=float),
        sigma_trace=None if sigma_trace is None else np.asarray(sigma_trace, dtype=float),
        detection_sigmas=None if detection_sigmas is None else np.asarray(detection_sigmas, dtype=float),
        heatmap=heatmap,
    )


def evaluate_runs(
    make_stream,
    method: str,
    config_for,
    harness: HarnessConfig = HarnessConfig(),
    n_runs: int = 20,
    base_seed: int = 0,
    collect_results: bool = False,
):
    """Repeat prequential runs with seeds base_seed + i and aggregate metrics.

    ``make_stream(seed)`` supplies the stream for each run (regenerating a
    synthetic task per seed, or returning a fixed stream for file sources);
    ``config_for(stream)`` resolves the window geometry.
    """
    if n_runs < 1:
        raise ContractError("n_runs must be at least 1")
    reports, results = [], []
    for i in range(n_runs):
        seed = base_seed + i
        stream = make_stream(seed)
        result = prequential_run(stream, method, config_for(stream), harness, seed)
        reports.append(result.metrics)
        if collect_results:
            results.append(result)
    summary = summarize_runs(reports)
    summary["method"] = method
    summary["base_seed"] = base_seed
    return (summary, results) if collect_results else (summary, None)
