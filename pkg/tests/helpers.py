"""Shared test oracles: independent re-implementations kept deliberately naive."""

import math

import numpy as np

from mcdrift.contrastive import PairBatch
from mcdrift.encoder import EncoderParams, _loss_and_grads_detail, init_params, input_jacobian_norm


def random_batch(rng, n_sub=3, k=2, m=4, d=3, scale=1.0):
    return PairBatch(
        pos1=scale * rng.normal(size=(n_sub, k, m, d)),
        pos2=scale * rng.normal(size=(n_sub, k, m, d)),
        wn1=scale * rng.normal(size=(n_sub, k, m, d)),
        wn2=scale * rng.normal(size=(n_sub, k, m, d)),
        sn1=scale * rng.normal(size=(k, m, d)),
        sn2=scale * rng.normal(size=(k, m, d)),
    )


def grad_check(params, batch, weight, pen, step=1e-5):
    """Combined relative error between analytic and central-difference gradients.

    All parameter blocks are concatenated before comparing, because the loss is
    exactly invariant to b2 (a uniform embedding shift), whose near-zero block
    would otherwise compare pure rounding noise.
    """

    def loss_at(p):
        v, _, _ = _loss_and_grads_detail(p, batch, weight, pen)
        return v

    _, grads, _ = _loss_and_grads_detail(params, batch, weight, pen)
    analytic, fd = [], []
    for name, block in grads.blocks():
        arr = getattr(params, name)
        g_fd = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            bumped = {n: getattr(params, n).copy() for n in ("w1", "b1", "w2", "b2")}
            bumped[name][idx] += step
            up = loss_at(EncoderParams(lipschitz_target=params.lipschitz_target, **bumped))
            bumped[name][idx] -= 2 * step
            down = loss_at(EncoderParams(lipschitz_target=params.lipschitz_target, **bumped))
            g_fd[idx] = (up - down) / (2 * step)
        analytic.append(block.ravel())
        fd.append(g_fd.ravel())
    analytic = np.concatenate(analytic)
    fd = np.concatenate(fd)
    return np.linalg.norm(analytic - fd) / max(np.linalg.norm(analytic), np.linalg.norm(fd))


def sample_kink_free_case(rng, n_sub=2, k=2, m=3, d=3, hidden=5, out=3):
    """Random config with pre-activations, distances, and Jacobian norms away
    from the loss's non-differentiable points, so finite differences are valid."""
    while True:
        params = init_params(d, hidden, out, 1.0, rng)
        batch = random_batch(rng, n_sub=n_sub, k=k, m=m, d=d)
        pen = rng.normal(size=(m, d))
        points = np.concatenate(
            [arr.reshape(-1, d) for arr in (batch.pos1, batch.pos2, batch.wn1,
                                            batch.wn2, batch.sn1, batch.sn2)]
            + [pen]
        )
        z = points @ params.w1.T + params.b1
        _, _, d_pos = _loss_and_grads_detail(params, batch, 1.0, pen)
        norms = [input_jacobian_norm(params, p) for p in pen]
        if np.min(np.abs(z)) > 1e-3 and d_pos.min() > 1e-3 and min(norms) > 1e-3:
            return params, batch, pen


def mmd_oracle(x, y, bandwidth):
    """Explicit enumeration of every kernel term of the unbiased estimator."""

    def k(a, b):
        return math.exp(-sum((ai - bi) ** 2 for ai, bi in zip(a, b)) / (2 * bandwidth**2))

    n, m = len(x), len(y)
    xx = sum(k(x[i], x[j]) for i in range(n) for j in range(n) if i != j) / (n * (n - 1))
    yy = sum(k(y[i], y[j]) for i in range(m) for j in range(m) if i != j) / (m * (m - 1))
    xy = sum(k(x[i], y[j]) for i in range(n) for j in range(m)) / (n * m)
    return xx + yy - 2 * xy
