"""Classical unsupervised two-sample baselines: KS and Gaussian-kernel MMD.

The KS path tests each dimension separately (supremum gap between empirical
CDFs, asymptotic p-value) and aggregates with a Bonferroni correction.  The
MMD path uses the standard unbiased squared-MMD estimator with a Gaussian
kernel and a label-permutation test; the bandwidth defaults to the median
pairwise distance of the pooled sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import ContractError

DEFAULT_PERMUTATIONS = 200


@dataclass(frozen=True)
class TwoSampleDecision:
    """Outcome of one two-sample test at significance level alpha."""

    statistic: float
    p_value: float
    reject: bool
    alpha: float

    def __post_init__(self):
        if not 0 <= self.p_value <= 1:
            raise ContractError(f"p_value must be in [0, 1], got {self.p_value}")
        if self.reject != (self.p_value < self.alpha):
            raise ContractError("reject flag must equal (p_value < alpha)")


def _as_samples(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ContractError(f"{name} must be a non-empty (n, d) sample, got shape {arr.shape}")
    return arr


def ks_statistic(xs, ys) -> float:
    """Supremum gap between the two empirical CDFs over the pooled points."""
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.size == 0 or ys.size == 0:
        raise ContractError("both samples must be non-empty")
    xs_sorted = np.sort(xs)
    ys_sorted = np.sort(ys)
    pooled = np.concatenate([xs_sorted, ys_sorted])
    f_x = np.searchsorted(xs_sorted, pooled, side="right") / xs.size
    f_y = np.searchsorted(ys_sorted, pooled, side="right") / ys.size
    return float(np.max(np.abs(f_x - f_y)))


def _kolmogorov_sf(lam: float) -> float:
    """Asymptotic survival function 2 * sum_j (-1)^(j-1) exp(-2 j^2 lam^2)."""
    if lam < 1e-3:
        return 1.0
    total = 0.0
    sign = 1.0
    for j in range(1, 100_000):
        term = math.exp(-2.0 * j * j * lam * lam)
        total += sign * term
        if term < 1e-12:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def ks_pvalue(d_stat: float, n: int, m: int) -> float:
    """Asymptotic two-sided p-value for a KS statistic from samples of size n, m."""
    if n < 1 or m < 1:
        raise ContractError("sample sizes must be at least 1")
    if not 0 <= d_stat <= 1:
        raise ContractError(f"KS statistic must be in [0, 1], got {d_stat}")
    lam = d_stat * math.sqrt(n * m / (n + m))
    return _kolmogorov_sf(lam)


def ks_drift_decision(x, y, alpha: float) -> TwoSampleDecision:
    """Per-dimension KS tests, Bonferroni-aggregated.

    Rejects when the smallest per-dimension p-value falls below alpha / d; the
    reported p-value is min(1, d * min_p) and the statistic is the largest
    per-dimension supremum gap.
    """
    x = _as_samples(x, "x")
    y = _as_samples(y, "y")
    if x.shape[1] != y.shape[1]:
        raise ContractError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    d = x.shape[1]
    stats = [ks_statistic(x[:, i], y[:, i]) for i in range(d)]
    pvals = [ks_pvalue(s, x.shape[0], y.shape[0]) for s in stats]
    p_combined = min(1.0, d * min(pvals))
    return TwoSampleDecision(
        statistic=max(stats),
        p_value=p_combined,
        reject=p_combined < alpha,
        alpha=alpha,
    )


def _gaussian_kernel(a: np.ndarray, b: np.ndarray, bandwidth: float) -> np.ndarray:
    return np.exp(-cdist(a, b, "sqeuclidean") / (2.0 * bandwidth**2))


def mmd2_unbiased(x, y, bandwidth: float) -> float:
    """Unbiased squared-MMD estimate with a Gaussian kernel.

    (1/(n(n-1))) sum_{i!=j} k(x_i, x_j) + (1/(m(m-1))) sum_{i!=j} k(y_i, y_j)
    - (2/(nm)) sum_{i,j} k(x_i, y_j); can be negative by unbiasedness.
    """
    x = _as_samples(x, "x")
    y = _as_samples(y, "y")
    n, m = x.shape[0], y.shape[0]
    if n < 2 or m < 2:
        raise ContractError("both samples need at least 2 points")
    if x.shape[1] != y.shape[1]:
        raise ContractError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    if not bandwidth > 0:
        raise ContractError("bandwidth must be positive")
    k_xx = _gaussian_kernel(x, x, bandwidth)
    k_yy = _gaussian_kernel(y, y, bandwidth)
    k_xy = _gaussian_kernel(x, y, bandwidth)
    term_x = (k_xx.sum() - np.trace(k_xx)) / (n * (n - 1))
    term_y = (k_yy.sum() - np.trace(k_yy)) / (m * (m - 1))
    return float(term_x + term_y - 2.0 * k_xy.sum() / (n * m))


def median_heuristic_bandwidth(x, y=None) -> float:
    """Median pairwise distance of the pooled sample (1.0 for degenerate data)."""
    pooled = _as_samples(x, "x")
    if y is not None:
        pooled = np.concatenate([pooled, _as_samples(y, "y")])
    if pooled.shape[0] < 2:
        return 1.0
    med = float(np.median(pdist(pooled)))
    return med if med > 0 else 1.0


def permutation_pvalue(
    x,
    y,
    stat: Callable[[np.ndarray, np.ndarray], float],
    n_perm: int,
    rng: np.random.Generator,
) -> float:
    """Label-permutation p-value with the add-one rule.

    p = (1 + #{permuted stat >= observed}) / (n_perm + 1) over n_perm random
    relabelings of the pooled sample.
    """
    if n_perm < 1:
        raise ContractError("n_perm must be at least 1")
    x = _as_samples(x, "x")
    y = _as_samples(y, "y")
    observed = stat(x, y)
    pooled = np.concatenate([x, y])
    n = x.shape[0]
    count = 0
    for _ in range(n_perm):
        idx = rng.permutation(pooled.shape[0])
        if stat(pooled[idx[:n]], pooled[idx[n:]]) >= observed:
            count += 1
    return (1 + count) / (n_perm + 1)


def mmd_permutation_decision(
    x,
    y,
    alpha: float,
    n_perm: int = DEFAULT_PERMUTATIONS,
    rng: Optional[np.random.Generator] = None,
    bandwidth: Optional[float] = None,
) -> TwoSampleDecision:
    """Permutation-MMD test via one pooled kernel matrix.

    The bandwidth is fixed once (median heuristic on the pooled sample unless
    given) and permutation statistics are evaluated as quadratic forms of a
    block-membership indicator, so each permutation costs one matrix-vector
    pass instead of a kernel recomputation.  Permutations are drawn exactly as
    :func:`permutation_pvalue` draws them, so matched generators give matched
    p-values.
    """
    if rng is None:
        rng = np.random.default_rng()
    x = _as_samples(x, "x")
    y = _as_samples(y, "y")
    n, m = x.shape[0], y.shape[0]
    if n < 2 or m < 2:
        raise ContractError("both samples need at least 2 points")
    if bandwidth is None:
        bandwidth = median_heuristic_bandwidth(x, y)
    observed = mmd2_unbiased(x, y, bandwidth)

    pooled = np.concatenate([x, y])
    kernel = _gaussian_kernel(pooled, pooled, bandwidth)
    diag = np.diag(kernel)
    row_sums = kernel.sum(axis=1)
    total = row_sums.sum()

    perms = np.stack([rng.permutation(n + m) for _ in range(n_perm)])
    members = np.zeros((n_perm, n + m))
    members[np.arange(n_perm)[:, None], perms[:, :n]] = 1.0
    quad = np.einsum("bi,bi->b", members @ kernel, members)
    in_diag = members @ diag
    in_rows = members @ row_sums
    s_xx = quad - in_diag
    s_yy = (total - 2.0 * in_rows + quad) - (diag.sum() - in_diag)
    s_xy = in_rows - quad
    stats = s_xx / (n * (n - 1)) + s_yy / (m * (m - 1)) - 2.0 * s_xy / (n * m)

    p = (1 + int(np.sum(stats >= observed))) / (n_perm + 1)
    return TwoSampleDecision(statistic=observed, p_value=p, reject=p < alpha, alpha=alpha)
