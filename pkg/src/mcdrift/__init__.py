"""Unsupervised online concept drift detection over sliding windows.

Drift is detected by the maximum concept discrepancy between sample-set
embeddings of adjacent sub-windows, under an encoder trained contrastively
window by window, with a bootstrapped per-window threshold.  Classical KS and
Gaussian-kernel MMD baselines, synthetic labeled drift streams, the analytic
null bound, and a prequential evaluation harness round out the toolkit.
"""

from .contrastive import (
    MCDHistory,
    PairBatch,
    SampleSet,
    ThresholdState,
    TrainingConfig,
    build_pair_batch,
    draw_sample_set,
    train_window,
    update_threshold,
)
from .detector import DriftReport, HeatmapMatrix, detect_drift, heatmap_row, mcd
from .encoder import (
    Embedding,
    EncoderGrads,
    EncoderParams,
    forward,
    init_params,
    input_jacobian_norm,
    loss_and_grads,
    set_encode,
    sgd_step,
)
from .errors import (
    ConfigError,
    ContractError,
    MCDriftError,
    NotReadyError,
    NotWarmError,
    NumericalError,
    ParseError,
    SchemaError,
)
from .evaluation import (
    ConfusionCounts,
    HarnessConfig,
    MetricsReport,
    PrequentialResult,
    compute_metrics,
    evaluate_runs,
    ground_truth_labels,
    prequential_run,
    summarize_runs,
)
from .stream import (
    DataPoint,
    SlidingWindowState,
    StreamConfig,
    SubWindow,
    advance,
    full_window_count,
    ingest_csv,
    iter_windows,
    new_state,
    partition,
    windows_from_array,
    write_csv,
)
from .synth import DriftRegion, LabeledStream, TaskId, TaskSpec, generate_task, mixture_weight_schedule
from .theory import BoundInputs, mcd_bound, null_rejection_rate, std_normal_quantile

__version__ = "0.1.0"
