"""Sliding-window bookkeeping over multivariate data streams.

A stream is consumed in non-overlapping slides of ``slide_size`` points; the
newest ``n_sub = window_size / slide_size`` slides form the active window.
Windows are defined by point count, not wall time, so identical input
sequences always produce identical window states.  Trailing points that do
not fill a complete slide are discarded.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from .errors import ContractError, NotWarmError, ParseError, SchemaError

LABEL_COLUMN = "drift"


@dataclass(frozen=True)
class DataPoint:
    """One stream observation: a feature vector and its stream position."""

    features: np.ndarray
    time_index: int
    drift_label: Optional[bool] = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 1:
            raise ContractError(f"features must be a 1-d vector, got shape {features.shape}")
        if not np.all(np.isfinite(features)):
            raise ContractError(f"non-finite feature at time_index {self.time_index}")
        if self.time_index < 0:
            raise ContractError(f"time_index must be non-negative, got {self.time_index}")
        object.__setattr__(self, "features", features)

    @property
    def dimension(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class StreamConfig:
    """Window geometry: ``slide_size`` must divide ``window_size`` exactly."""

    window_size: int
    slide_size: int

    def __post_init__(self):
        if self.window_size <= 0 or self.slide_size <= 0:
            raise ContractError("window_size and slide_size must be positive")
        if self.window_size % self.slide_size != 0:
            raise ContractError(
                f"slide_size {self.slide_size} does not divide window_size {self.window_size}"
            )
        if self.n_sub < 2:
            raise ContractError("a window must contain at least 2 sub-windows")

    @property
    def n_sub(self) -> int:
        return self.window_size // self.slide_size


@dataclass(frozen=True)
class SubWindow:
    """A contiguous slide of the stream; ``index`` is 1 (oldest) .. n_sub (newest)."""

    features: np.ndarray  # (slide_size, d), row order = arrival order
    start_time: int
    index: int

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def end_time(self) -> int:
        return self.start_time + self.features.shape[0]

    @property
    def time_indices(self) -> np.ndarray:
        return np.arange(self.start_time, self.end_time)


@dataclass(frozen=True)
class SlidingWindowState:
    """Immutable snapshot of the active window.

    ``slides`` holds up to ``n_sub`` feature blocks, oldest first; the state is
    warm once all ``n_sub`` are present.  ``window_end_time`` is the index one
    past the newest point seen (0 for an empty state).
    """

    config: StreamConfig
    slides: tuple
    window_end_time: int

    @property
    def warm(self) -> bool:
        return len(self.slides) == self.config.n_sub

    @property
    def dimension(self) -> Optional[int]:
        return self.slides[0].shape[1] if self.slides else None


def new_state(config: StreamConfig) -> SlidingWindowState:
    """An empty (cold) window state starting at time index 0."""
    return SlidingWindowState(config=config, slides=(), window_end_time=0)


def _as_slide_array(state: SlidingWindowState, new_points) -> np.ndarray:
    """Validate one slide of input and return it as a (slide_size, d) array."""
    s = state.config.slide_size
    if isinstance(new_points, np.ndarray):
        block = np.asarray(new_points, dtype=float)
        if block.ndim != 2 or block.shape[0] != s:
            raise ContractError(f"expected {s} points per slide, got shape {block.shape}")
    else:
        points = list(new_points)
        if len(points) != s:
            raise ContractError(f"expected {s} points per slide, got {len(points)}")
        expected = state.window_end_time
        for offset, p in enumerate(points):
            if p.time_index != expected + offset:
                raise ContractError(
                    f"time indices must continue the stream: expected {expected + offset}, "
                    f"got {p.time_index}"
                )
        block = np.stack([p.features for p in points])
    if not np.all(np.isfinite(block)):
        raise ContractError("slide contains non-finite values")
    if state.slides and block.shape[1] != state.dimension:
        raise ContractError(
            f"dimension changed mid-stream: {state.dimension} -> {block.shape[1]}"
        )
    return block


def advance(state: SlidingWindowState, new_points) -> SlidingWindowState:
    """Append one slide of points, evicting the oldest sub-window once warm.

    ``new_points`` is either a sequence of ``slide_size`` DataPoints whose time
    indices continue the stream, or a ``(slide_size, d)`` array (contiguity is
    then the caller's responsibility).  Returns a new state; the input state
    is unchanged.
    """
    block = _as_slide_array(state, new_points)
    slides = (state.slides + (block,))[-state.config.n_sub:]
    return SlidingWindowState(
        config=state.config,
        slides=slides,
        window_end_time=state.window_end_time + state.config.slide_size,
    )


def partition(state: SlidingWindowState) -> list:
    """The window's sub-windows, oldest first; concatenating them reproduces it."""
    if not state.warm:
        raise NotWarmError(
            f"window not warm: has {len(state.slides)} of {state.config.n_sub} sub-windows"
        )
    s = state.config.slide_size
    n = state.config.n_sub
    return [
        SubWindow(
            features=state.slides[i],
            start_time=state.window_end_time - (n - i) * s,
            index=i + 1,
        )
        for i in range(n)
    ]


def full_window_count(stream_length: int, config: StreamConfig) -> int:
    """Number of full windows a stream of ``stream_length`` points yields."""
    if stream_length < config.window_size:
        return 0
    return (stream_length - config.window_size) // config.slide_size + 1


def iter_windows(config: StreamConfig, points: Iterable[DataPoint]) -> Iterator[SlidingWindowState]:
    """Yield each warm window state as the stream is consumed slide by slide."""
    state = new_state(config)
    buf: list = []
    for p in points:
        buf.append(p)
        if len(buf) == config.slide_size:
            state = advance(state, buf)
            buf = []
            if state.warm:
                yield state


def windows_from_array(config: StreamConfig, features: np.ndarray) -> Iterator[SlidingWindowState]:
    """Like :func:`iter_windows` but over a pre-materialized (T, d) array."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise ContractError(f"expected a (T, d) array, got shape {features.shape}")
    s = config.slide_size
    state = new_state(config)
    for i in range(features.shape[0] // s):
        state = advance(state, features[i * s:(i + 1) * s])
        if state.warm:
            yield state


def _parse_label(value: str, row: int) -> bool:
    text = value.strip()
    if text in ("0", "1"):
        return text == "1"
    try:
        number = float(text)
    except ValueError:
        raise ParseError(f"row {row}: drift label must be 0 or 1, got {value!r}") from None
    if number not in (0.0, 1.0):
        raise ParseError(f"row {row}: drift label must be 0 or 1, got {value!r}")
    return number == 1.0


def ingest_csv(path) -> Iterator[DataPoint]:
    """Stream DataPoints from a CSV file.

    The file must carry a header row; every column is a feature column except
    an optional trailing ``drift`` column holding 0/1 labels.  Points are
    yielded in file order with time_index counting from 0 (so "row n" in error
    messages is the n-th data row, matching the point's time index).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise SchemaError(f"{path}: header row required")
        has_label = header[-1].strip().lower() == LABEL_COLUMN
        n_features = len(header) - (1 if has_label else 0)
        if n_features < 1:
            raise SchemaError(f"{path}: no feature columns in header {header!r}")
        for row_idx, row in enumerate(reader):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(
                    f"row {row_idx}: expected {len(header)} columns, got {len(row)}"
                )
            try:
                values = [float(cell) for cell in row[:n_features]]
            except ValueError as exc:
                raise ParseError(f"row {row_idx}: {exc}") from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError(f"row {row_idx}: non-finite feature value")
            label = _parse_label(row[-1], row_idx) if has_label else None
            yield DataPoint(np.asarray(values), row_idx, label)


def read_csv(path):
    """Materialize a CSV stream as ``(features (T, d), labels or None)``."""
    rows = []
    labels = []
    for p in ingest_csv(path):
        rows.append(p.features)
        labels.append(p.drift_label)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    features = np.stack(rows)
    if labels[0] is None:
        return features, None
    return features, np.asarray(labels, dtype=bool)


def write_csv(path, features: np.ndarray, drift_labels: Optional[np.ndarray] = None) -> None:
    """Write a stream to CSV with the ``f0,...,f{d-1}[,drift]`` header."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise ContractError(f"expected a (T, d) array, got shape {features.shape}")
    if drift_labels is not None and len(drift_labels) != features.shape[0]:
        raise ContractError("drift_labels length must match the stream length")
    d = features.shape[1]
    header = [f"f{i}" for i in range(d)]
    if drift_labels is not None:
        header.append(LABEL_COLUMN)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(features.shape[0]):
            row = [repr(float(v)) for v in features[t]]
            if drift_labels is not None:
                row.append("1" if drift_labels[t] else "0")
            writer.writerow(row)
