"""Acceptance suite: each criterion runs at its stated tolerance and prints
one pass/fail line (visible with ``pytest -s`` or in captured output).

The 20-seed sudden-drift batch is shared by the criteria that need it; it is
computed once per session.
"""

import math
import time

import numpy as np
import pytest
from helpers import grad_check, mmd_oracle, sample_kink_free_case

from mcdrift.baselines import ks_drift_decision, mmd2_unbiased, mmd_permutation_decision
from mcdrift.contrastive import (
    MCDHistory,
    TrainingConfig,
    build_pair_batch,
    draw_sample_set,
    train_window,
    update_threshold,
)
from mcdrift.detector import detect_drift
from mcdrift.encoder import encode_sets, init_params
from mcdrift.evaluation import (
    HarnessConfig,
    compute_metrics,
    prequential_run,
)
from mcdrift.evaluation import _standardize
from mcdrift.stream import StreamConfig, partition, windows_from_array
from mcdrift.synth import TaskId, TaskSpec, generate_task
from mcdrift.theory import null_rejection_rate, standard_normal_sampler

N_SEEDS = 20
DRIFT_POINT = 21000
STREAM_CONFIG = StreamConfig(window_size=3000, slide_size=300)


def verdict(num, description, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num}: {description} [{detail}] -> {status}")
    return ok


@pytest.fixture(scope="module")
def sudden_drift_runs():
    """20 seeded prequential runs on the sudden-drift task with defaults."""
    start = time.perf_counter()
    results = []
    for seed in range(N_SEEDS):
        stream = generate_task(TaskSpec(TaskId.GM_SUD, seed=seed))
        results.append(
            prequential_run(stream, "mcd_dd", STREAM_CONFIG,
                            HarnessConfig(collect_heatmap=True), seed=seed)
        )
    return results, time.perf_counter() - start


def test_criterion_1_gradient_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for i in range(20):
        n_sub = 2 + i % 2          # up to 3 sub-window groups
        k = 1 + i % 3              # up to 3 pairs per group
        d = 2 + i % 3              # inputs up to 4-d
        hidden = 4 + i % 5         # up to 8 hidden units
        out = 2 + i % 3            # up to 4 outputs
        params, batch, pen = sample_kink_free_case(
            rng, n_sub=n_sub, k=k, m=3, d=d, hidden=hidden, out=out
        )
        worst = max(worst, grad_check(params, batch, 1.0, pen))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 30.0
    assert verdict(1, "analytic gradients vs central finite differences",
                   ok, f"worst rel err {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_theorem_monte_carlo():
    start = time.perf_counter()
    rate = null_rejection_rate(
        slope=1.0, sampler=standard_normal_sampler, data_sigma=1.0,
        n=100, alpha=0.05, trials=2000, rng=np.random.default_rng(2024),
    )
    elapsed = time.perf_counter() - start
    ok = rate <= 0.07 and elapsed < 60.0
    assert verdict(2, "null bound rejection rate (identity map, n=100)",
                   ok, f"rate {rate:.4f}, {elapsed:.1f}s")


def test_criterion_3_sudden_drift_precision(sudden_drift_runs):
    results, elapsed = sudden_drift_runs
    precisions = [r.metrics.precision for r in results]
    mean_precision = float(np.mean(precisions))
    ok = mean_precision >= 0.90 and elapsed < 900.0
    assert verdict(3, "sudden-drift reproduction, mean precision over 20 seeds",
                   ok, f"precision {mean_precision:.3f}, {elapsed:.0f}s")


def test_drift_window_flagged_in_most_seeds(sudden_drift_runs):
    # the window whose newest sub-window starts at the drift point fires
    # in at least 18 of 20 seeded runs
    results, _ = sudden_drift_runs
    hits = 0
    for result in results:
        idx = int(np.where(result.truth)[0][0])
        hits += bool(result.predictions[idx])
    assert hits >= 18


def test_criterion_4_baseline_null_calibration():
    start = time.perf_counter()
    rng = np.random.default_rng(99)
    trials = 2000
    ks_rejects = 0
    mmd_rejects = 0
    for _ in range(trials):
        x = rng.standard_normal(100)
        y = rng.standard_normal(100)
        if ks_drift_decision(x, y, 0.05).reject:
            ks_rejects += 1
        if mmd_permutation_decision(x[:, None], y[:, None], 0.05, n_perm=200, rng=rng).reject:
            mmd_rejects += 1
    ks_rate = ks_rejects / trials
    mmd_rate = mmd_rejects / trials
    elapsed = time.perf_counter() - start
    ok = 0.03 <= ks_rate <= 0.07 and 0.03 <= mmd_rate <= 0.07 and elapsed < 120.0
    assert verdict(4, "KS / permutation-MMD null rejection at alpha=0.05",
                   ok, f"ks {ks_rate:.4f}, mmd {mmd_rate:.4f}, {elapsed:.0f}s")


def test_criterion_5_mmd_brute_force_equivalence():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        n, m = rng.integers(2, 6), rng.integers(2, 6)
        d = int(rng.integers(1, 4))
        x = rng.normal(size=(n, d))
        y = rng.normal(size=(m, d))
        bw = float(rng.uniform(0.3, 3.0))
        worst = max(worst, abs(mmd2_unbiased(x, y, bw) - mmd_oracle(x, y, bw)))
    ok = worst <= 1e-12
    assert verdict(5, "unbiased MMD equals brute-force kernel enumeration",
                   ok, f"worst abs diff {worst:.2e}")


def test_criterion_6_threshold_calibration():
    # frozen encoder, stationary mixture stream (pre-drift segment only)
    stream = generate_task(TaskSpec(TaskId.GM_SUD, seed=123))
    features = _standardize(stream.features, STREAM_CONFIG.window_size)[:DRIFT_POINT]
    params = init_params(5, 100, 100, 1.0, np.random.default_rng(7))
    rng = np.random.default_rng(8)
    pairs_per_sub = 7

    def window_mcds(state):
        subs = partition(state)
        sets = []
        for sub in subs:
            for _ in range(pairs_per_sub):
                sets.append(draw_sample_set(sub, 30, rng).features)
                sets.append(draw_sample_set(sub, 30, rng).features)
        h = encode_sets(params, np.stack(sets))
        return np.linalg.norm(h[0::2] - h[1::2], axis=1)

    states = list(windows_from_array(STREAM_CONFIG, features))
    split = len(states) // 2
    history = MCDHistory(capacity=10**6)
    for state in states[:split]:
        history.extend(window_mcds(state))
    sigma = update_threshold(history, alpha=0.05).sigma
    fresh = np.concatenate([window_mcds(state) for state in states[split:]])
    fraction = float(np.mean(fresh > sigma))
    ok = len(fresh) >= 2000 and fraction <= 0.08
    assert verdict(6, "positive-pair exceedance of sigma on a stationary stream",
                   ok, f"fraction {fraction:.4f} over {len(fresh)} pairs")


def test_criterion_7_heatmap_pattern(sudden_drift_runs):
    results, _ = sudden_drift_runs
    n_sub, s = STREAM_CONFIG.n_sub, STREAM_CONFIG.slide_size
    seeds_with_pattern = 0
    for result in results:
        pre_cells, post_cells = [], []
        for col, end in enumerate(result.window_end_times):
            if end - s < DRIFT_POINT:
                continue  # newest sub-window not yet fully post-drift
            for j in range(1, n_sub):
                start_j = end - (n_sub - j + 1) * s
                end_j = end - (n_sub - j) * s
                value = result.heatmap.values[j - 1, col]
                if end_j <= DRIFT_POINT:
                    pre_cells.append(value)
                elif start_j >= DRIFT_POINT:
                    post_cells.append(value)
        if pre_cells and post_cells and np.mean(pre_cells) > np.mean(post_cells):
            seeds_with_pattern += 1
    ok = seeds_with_pattern >= 16
    assert verdict(7, "post-drift rows separate pre- from post-drift sub-windows",
                   ok, f"{seeds_with_pattern}/20 seeds")


def test_criterion_8_performance_envelope():
    stream = generate_task(TaskSpec(TaskId.GM_SUD, seed=3))
    features = _standardize(stream.features, STREAM_CONFIG.window_size)
    training = TrainingConfig()  # hidden size 100 encoder below
    rng = np.random.default_rng(3)
    params = init_params(5, 100, 100, training.lipschitz_target, rng)
    history = MCDHistory(capacity=2000)
    threshold = None
    totals = []
    for count, state in enumerate(windows_from_array(STREAM_CONFIG, features)):
        if count >= 12:
            break
        t0 = time.perf_counter()
        batch = build_pair_batch(state, training.sample_size, training.draws,
                                 training.noise_small, training.noise_big, rng)
        params, positives = train_window(params, state, training, rng, batch=batch)
        detect_drift(state, params, threshold, training.sample_size, rng,
                     draws=training.draws)
        history.extend(positives)
        threshold = update_threshold(history, 0.05)
        totals.append(time.perf_counter() - t0)
    median_total = float(np.median(totals))
    ok = median_total <= 2.0
    assert verdict(8, "per-window sampling+training+inference at hidden size 100",
                   ok, f"median {median_total:.3f}s")


def test_criterion_9_metric_arithmetic():
    truth = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0], dtype=bool)
    preds = np.array([1, 1, 0, 1, 0, 0, 0, 0, 0, 0], dtype=bool)
    report = compute_metrics(preds, truth)
    ok = (
        report.precision == 2 / 3
        and report.f1 == 2 / 3
        and report.mcc == 11 / 21
    )
    assert verdict(9, "hand-derived confusion example reproduced exactly",
                   ok, f"precision {report.precision}, f1 {report.f1}, mcc {report.mcc}")
