"""Command-line entry point.

Subcommands: generate (synthetic stream to CSV), run (one detection pass),
eval (repeated runs with metrics), heatmap (discrepancy matrix), bound
(analytic null bound), bench (per-window timing).  Options come from an
optional flat JSON config file; command-line flags override config keys.
Report-producing commands write delimited data and, unless --no-figures is
given, a matching PNG next to it.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import DEFAULT_PERMUTATIONS
from .contrastive import (
    HISTORY_WINDOWS,
    MCDHistory,
    TrainingConfig,
    build_pair_batch,
    history_capacity,
    train_window,
    update_threshold,
)
from .detector import detect_drift
from .encoder import init_params
from .errors import ConfigError, MCDriftError
from .evaluation import HarnessConfig, METHODS, evaluate_runs, prequential_run
from .report import save_heatmap_figure, save_metrics_figure, save_sigma_trace_figure
from .stream import StreamConfig, read_csv, windows_from_array, write_csv
from .synth import TaskId, TaskSpec, generate_task, LabeledStream
from .theory import BoundInputs, mcd_bound

OUT_DIR_ENV = "MCDRIFT_OUT_DIR"


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration; every key of the JSON config file is a field here."""

    task: Optional[str] = None
    csv: Optional[str] = None
    method: str = "mcd_dd"
    seed: int = 0
    runs: int = 20
    window_size: Optional[int] = None   # default: 10% of the stream length
    slide_size: Optional[int] = None    # default: window_size / 10
    sample_size: int = 30
    draws: int = 10
    penalty_weight: float = 1.0
    lipschitz_target: float = 1.0
    learning_rate: float = 0.005
    noise_small: float = 1.0
    noise_big: float = 10.0
    alpha: float = 0.05
    hidden_dim: int = 100
    output_dim: int = 100
    history_windows: int = HISTORY_WINDOWS
    n_permutations: int = DEFAULT_PERMUTATIONS
    out_dir: Optional[str] = None
    figures: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.task is not None:
            try:
                TaskId(self.task)
            except ValueError:
                raise ConfigError(f"unknown task {self.task!r}") from None
        if self.window_size is not None and self.slide_size is not None:
            if self.window_size % self.slide_size != 0:
                raise ConfigError(
                    f"slide_size {self.slide_size} does not divide window_size {self.window_size}"
                )
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        for name in ("runs", "sample_size", "draws", "hidden_dim", "output_dim",
                     "history_windows", "n_permutations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")

    def training(self) -> TrainingConfig:
        return TrainingConfig(
            sample_size=self.sample_size,
            draws=self.draws,
            penalty_weight=self.penalty_weight,
            lipschitz_target=self.lipschitz_target,
            learning_rate=self.learning_rate,
            noise_small=self.noise_small,
            noise_big=self.noise_big,
        )

    def harness(self, collect_heatmap: bool = False) -> HarnessConfig:
        return HarnessConfig(
            training=self.training(),
            hidden_dim=self.hidden_dim,
            output_dim=self.output_dim,
            alpha=self.alpha,
            history_windows=self.history_windows,
            n_permutations=self.n_permutations,
            collect_heatmap=collect_heatmap,
        )

    def resolved_out_dir(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUT_DIR_ENV) or ".")


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def load_config(path) -> RunConfig:
    """Read a flat JSON config; unknown keys are rejected."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a flat JSON object")
    unknown = sorted(set(doc) - _CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    try:
        return RunConfig(**doc)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def save_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataclasses.asdict(config), fh, indent=2)
        fh.write("\n")


def resolve_stream_config(stream_length: int, config: RunConfig) -> StreamConfig:
    """Window geometry defaults: W = 10% of the stream, 10 sub-windows."""
    window = config.window_size
    if window is None:
        window = (stream_length // 10) // 10 * 10  # keep W divisible into 10 slides
        if window < 20:
            raise ConfigError(f"stream of {stream_length} points is too short for defaults")
    slide = config.slide_size if config.slide_size is not None else window // 10
    return StreamConfig(window_size=window, slide_size=slide)


def _load_stream(config: RunConfig, seed: int) -> LabeledStream:
    if (config.task is None) == (config.csv is None):
        raise ConfigError("exactly one stream source required: --task or --csv")
    if config.task is not None:
        return generate_task(TaskSpec(task_id=TaskId(config.task), seed=seed))
    features, labels = read_csv(config.csv)
    regions = [] if labels is None else _regions_from_labels(labels)
    return LabeledStream(features=features, drift_regions=regions)


def _regions_from_labels(labels: np.ndarray):
    """Consecutive runs of True labels become drift regions."""
    from .synth import DriftRegion

    regions = []
    start = None
    for i, flag in enumerate(labels):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            regions.append(DriftRegion(start, i, "labeled"))
            start = None
    if start is not None:
        regions.append(DriftRegion(start, len(labels), "labeled"))
    return regions


def _merged_config(args: argparse.Namespace) -> RunConfig:
    base = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {
        name: getattr(args, name)
        for name in _CONFIG_FIELDS
        if getattr(args, name, None) is not None
    }
    if getattr(args, "no_figures", False):
        overrides["figures"] = False
    merged = {**dataclasses.asdict(base), **overrides}
    return RunConfig(**merged)


def _write_lines(path: Path, lines) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def _cmd_generate(args) -> int:
    config = _merged_config(args)
    if config.task is None:
        raise ConfigError("generate requires --task")
    stream = generate_task(TaskSpec(task_id=TaskId(config.task), seed=config.seed))
    write_csv(args.out, stream.features, stream.point_labels())
    print(f"wrote {len(stream)} points to {args.out}")
    return 0


def _cmd_run(args) -> int:
    config = _merged_config(args)
    stream = _load_stream(config, config.seed)
    stream_config = resolve_stream_config(len(stream), config)
    result = prequential_run(
        stream, config.method, stream_config,
        config.harness(collect_heatmap=False), config.seed,
    )
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    reports_path = out / "reports.jsonl"
    _write_lines(reports_path, (json.dumps(r) for r in result.report_records()))
    written = [reports_path]
    if result.sigma_trace is not None:
        trace_path = out / "sigma_trace.csv"
        _write_lines(
            trace_path,
            ["window_index,sigma"]
            + [f"{i},{repr(float(s))}" for i, s in enumerate(result.sigma_trace)],
        )
        written.append(trace_path)
        if config.figures:
            fig_path = out / "sigma_trace.png"
            save_sigma_trace_figure(
                result.window_end_times, result.sigma_trace, result.statistics, fig_path
            )
            written.append(fig_path)
    n_drifts = int(result.predictions.sum())
    print(f"{config.method}: {n_drifts} drift(s) over {len(result.predictions)} windows")
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_eval(args) -> int:
    config = _merged_config(args)
    fixed_stream = None if config.task is not None else _load_stream(config, config.seed)

    def make_stream(seed):
        if fixed_stream is not None:
            return fixed_stream
        return generate_task(TaskSpec(task_id=TaskId(config.task), seed=seed))

    summary, results = evaluate_runs(
        make_stream,
        config.method,
        lambda stream: resolve_stream_config(len(stream), config),
        config.harness(collect_heatmap=False),
        n_runs=config.runs,
        base_seed=config.seed,
        collect_results=True,
    )
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    metrics_path = out / "metrics.json"
    with open(metrics_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    written = [metrics_path]
    for result in results:
        trace_path = out / f"predictions_run{result.seed - config.seed:02d}.csv"
        lines = ["window_index,window_end_time,prediction,truth,statistic"]
        for i in range(len(result.predictions)):
            lines.append(
                f"{i},{int(result.window_end_times[i])},"
                f"{int(result.predictions[i])},{int(result.truth[i])},"
                f"{repr(float(result.statistics[i]))}"
            )
        _write_lines(trace_path, lines)
        written.append(trace_path)
    if config.figures:
        fig_path = out / "metrics.png"
        save_metrics_figure(summary, fig_path)
        written.append(fig_path)
    for name in ("precision", "f1", "mcc"):
        print(f"{name}: {summary[name]['mean']:.4f} +- {summary[name]['std']:.4f}")
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_heatmap(args) -> int:
    config = _merged_config(args)
    if config.method != "mcd_dd":
        raise ConfigError("heatmap is only defined for the mcd_dd method")
    stream = _load_stream(config, config.seed)
    stream_config = resolve_stream_config(len(stream), config)
    result = prequential_run(
        stream, "mcd_dd", stream_config, config.harness(collect_heatmap=True), config.seed
    )
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "heatmap.csv"
    result.heatmap.write_csv(csv_path)
    written = [csv_path]
    if config.figures:
        fig_path = out / "heatmap.png"
        save_heatmap_figure(result.heatmap, fig_path)
        written.append(fig_path)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_bound(args) -> int:
    value = mcd_bound(
        BoundInputs(alpha=args.alpha, n=args.n, lipschitz=args.L, data_sigma=args.sigma)
    )
    print(f"{value:.6f}")
    return 0


def _cmd_bench(args) -> int:
    config = _merged_config(args)
    stream = _load_stream(config, config.seed)
    stream_config = resolve_stream_config(len(stream), config)
    training = config.training()
    rng = np.random.default_rng(config.seed)
    params = init_params(
        stream.dimension, config.hidden_dim, config.output_dim,
        training.lipschitz_target, rng,
    )
    history = MCDHistory(history_capacity(training, stream_config.n_sub, config.history_windows))
    threshold = None
    sampling, training_times, inference = [], [], []
    for count, state in enumerate(windows_from_array(stream_config, stream.features)):
        if count >= args.windows:
            break
        t0 = time.perf_counter()
        batch = build_pair_batch(
            state, training.sample_size, training.draws,
            training.noise_small, training.noise_big, rng,
        )
        t1 = time.perf_counter()
        params, positive_mcds = train_window(params, state, training, rng, batch=batch)
        t2 = time.perf_counter()
        detect_drift(state, params, threshold, training.sample_size, rng)
        history.extend(positive_mcds)
        threshold = update_threshold(history, config.alpha)
        t3 = time.perf_counter()
        sampling.append(t1 - t0)
        training_times.append(t2 - t1)
        inference.append(t3 - t2)
    medians = [float(np.median(v)) for v in (sampling, training_times, inference)]
    total = sum(medians)
    header = f"{'hidden':>6}  {'sampling':>10}  {'training':>10}  {'inference':>10}  {'total':>10}"
    row = (
        f"{config.hidden_dim:>6}  {medians[0]:>10.4f}  {medians[1]:>10.4f}  "
        f"{medians[2]:>10.4f}  {total:>10.4f}"
    )
    print(header)
    print(row)
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    bench_path = out / "bench.csv"
    _write_lines(
        bench_path,
        [
            "hidden_dim,sampling_median_s,training_median_s,inference_median_s,total_s",
            f"{config.hidden_dim},{medians[0]!r},{medians[1]!r},{medians[2]!r},{total!r}",
        ],
    )
    print(f"wrote {bench_path}")
    return 0


def _add_config_flags(parser: argparse.ArgumentParser, include_method: bool = True) -> None:
    parser.add_argument("--config", help="flat JSON config file")
    parser.add_argument("--task", choices=[t.value for t in TaskId])
    parser.add_argument("--csv", help="CSV stream source")
    parser.add_argument("--seed", type=int)
    if include_method:
        parser.add_argument("--method", choices=list(METHODS))
    parser.add_argument("--window-size", dest="window_size", type=int)
    parser.add_argument("--slide-size", dest="slide_size", type=int)
    parser.add_argument("--sample-size", dest="sample_size", type=int)
    parser.add_argument("--draws", type=int)
    parser.add_argument("--penalty-weight", dest="penalty_weight", type=float)
    parser.add_argument("--lipschitz-target", dest="lipschitz_target", type=float)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float)
    parser.add_argument("--noise-small", dest="noise_small", type=float)
    parser.add_argument("--noise-big", dest="noise_big", type=float)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--hidden", dest="hidden_dim", type=int)
    parser.add_argument("--output-dim", dest="output_dim", type=int)
    parser.add_argument("--n-permutations", dest="n_permutations", type=int)
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--no-figures", dest="no_figures", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcdrift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic task stream to CSV")
    _add_config_flags(p, include_method=False)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("run", help="one detection pass over a stream")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("eval", help="repeated seeded runs with metrics")
    _add_config_flags(p)
    p.add_argument("--runs", type=int)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("heatmap", help="discrepancy matrix for one run")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_heatmap)

    p = sub.add_parser("bound", help="print the analytic null bound")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True, help="data standard deviation")
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("bench", help="per-window phase timings")
    _add_config_flags(p)
    p.add_argument("--windows", type=int, default=30, help="windows to time")
    p.set_defaults(func=_cmd_bench)

    return parser


def run_command(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MCDriftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))
