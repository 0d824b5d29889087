"""Analytic null bound on the discrepancy of same-distribution sample means.

For i.i.d. samples X, Y of size n from a distribution with standard deviation
``data_sigma``, and an L-Lipschitz map f, the difference of encoded sample
means satisfies

    P(|mean f(X) - mean f(Y)| > q(1 - alpha/2) * sqrt(2/n) * L * data_sigma) <= alpha,

where q is the standard normal quantile: the mean difference is centered, its
variance is at most 2 L^2 data_sigma^2 / n, and it is asymptotically Gaussian.
The bound is conservative whenever f contracts, so the Monte Carlo validator
below checks the one-sided direction (empirical rate <= alpha plus slack),
never equality.

Note ``data_sigma`` is the data scale, distinct from the drift threshold
sigma used by the detector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .errors import ContractError


@dataclass(frozen=True)
class BoundInputs:
    """Inputs of the null bound; alpha = 1 is allowed and gives a zero bound."""

    alpha: float
    n: int
    lipschitz: float
    data_sigma: float

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ContractError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.n <= 0:
            raise ContractError("n must be positive")
        if self.lipschitz < 0 or self.data_sigma < 0:
            raise ContractError("lipschitz and data_sigma must be non-negative")


def std_normal_quantile(q: float) -> float:
    """Inverse standard normal CDF; absolute error well below 1e-8."""
    if not 0 < q < 1:
        raise ContractError(f"quantile argument must be in (0, 1), got {q}")
    return float(ndtri(q))


def mcd_bound(inputs: BoundInputs) -> float:
    """The null bound q(1 - alpha/2) * sqrt(2/n) * L * data_sigma."""
    z = std_normal_quantile(1.0 - inputs.alpha / 2.0)
    return z * math.sqrt(2.0 / inputs.n) * inputs.lipschitz * inputs.data_sigma


def standard_normal_sampler(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape)


def null_rejection_rate(
    slope: float,
    sampler: Callable[[np.random.Generator, tuple], np.ndarray],
    data_sigma: float,
    n: int,
    alpha: float,
    trials: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo exceedance rate of the bound under the null.

    The map is the fixed linear f(x) = slope * x (Lipschitz constant |slope|;
    any intercept cancels in the mean difference).  Each trial draws
    independent X and Y of size n from ``sampler``, computes
    |mean f(X) - mean f(Y)|, and counts strict exceedances of the bound.
    Draws do not depend on the slope, so matched seeds give scale-invariant
    decisions.
    """
    if trials < 1000:
        raise ContractError(f"need at least 1000 trials, got {trials}")
    x = sampler(rng, (trials, n))
    y = sampler(rng, (trials, n))
    stat = abs(slope) * np.abs(x.mean(axis=1) - y.mean(axis=1))
    bound = mcd_bound(BoundInputs(alpha=alpha, n=n, lipschitz=abs(slope), data_sigma=data_sigma))
    return float(np.mean(stat > bound))
