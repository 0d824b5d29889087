"""Two-layer ReLU encoder with closed-form training gradients.

The encoder ``f(x) = W2 relu(W1 x + b1) + b2`` maps points to an embedding
space; a sample set is represented by the mean of its per-point encodings
(its concept representation).  Training minimizes a contrastive objective,

    log sum_j [ sum_i exp(d_pos[j,i]) /
                sum_i (exp(d_pos[j,i]) + exp(d_weak[j,i]) + exp(d_strong[i])) ]
    + penalty_weight * sum_p (||J(x_p)||_F - L)^2,

where the d's are Euclidean distances between pair embeddings and J(x) is the
input Jacobian ``W2 diag(1[W1 x + b1 > 0]) W1``.  All gradients here are exact
analytic derivatives; the penalty term contributes closed-form gradients for
W1 and W2 because the Jacobian is piecewise constant in x (its dependence on
the activation pattern has zero derivative almost everywhere, and b1/b2 drop
out entirely).

Conventions at non-differentiable points: the ReLU subgradient at 0 is taken
as 0, the distance gradient at coinciding embeddings is 0, and the penalty
gradient at a zero-norm Jacobian is 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np

from .errors import ContractError, NumericalError

if TYPE_CHECKING:  # pragma: no cover
    from .contrastive import PairBatch


@dataclass(frozen=True)
class EncoderParams:
    """Weights of the two-layer encoder plus its target Lipschitz constant."""

    w1: np.ndarray  # (hidden, d)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (out, hidden)
    b2: np.ndarray  # (out,)
    lipschitz_target: float = 1.0

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        hidden, d = self.w1.shape
        out = self.w2.shape[0]
        if self.b1.shape != (hidden,) or self.w2.shape != (out, hidden) or self.b2.shape != (out,):
            raise ContractError(
                f"inconsistent shapes: w1 {self.w1.shape}, b1 {self.b1.shape}, "
                f"w2 {self.w2.shape}, b2 {self.b2.shape}"
            )
        for name in ("w1", "b1", "w2", "b2"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ContractError(f"non-finite entries in {name}")
        if not self.lipschitz_target > 0:
            raise ContractError("lipschitz_target must be positive")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]


@dataclass(frozen=True)
class Embedding:
    """Concept representation: the pooled encoding of one sample set."""

    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        if h.ndim != 1 or not np.all(np.isfinite(h)):
            raise ContractError("embedding must be a finite 1-d vector")
        object.__setattr__(self, "h", h)


@dataclass
class EncoderGrads:
    """Parameter-shaped gradient container."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def blocks(self):
        return (("w1", self.w1), ("b1", self.b1), ("w2", self.w2), ("b2", self.b2))


def init_params(
    input_dim: int,
    hidden_dim: int,
    output_dim: int,
    lipschitz_target: float,
    rng: np.random.Generator,
) -> EncoderParams:
    """Seeded uniform init in +-1/sqrt(fan_in) per layer."""
    s1 = 1.0 / np.sqrt(input_dim)
    s2 = 1.0 / np.sqrt(hidden_dim)
    return EncoderParams(
        w1=rng.uniform(-s1, s1, size=(hidden_dim, input_dim)),
        b1=rng.uniform(-s1, s1, size=hidden_dim),
        w2=rng.uniform(-s2, s2, size=(output_dim, hidden_dim)),
        b2=rng.uniform(-s2, s2, size=output_dim),
        lipschitz_target=lipschitz_target,
    )


def _forward_parts(params: EncoderParams, x: np.ndarray):
    z = x @ params.w1.T + params.b1
    a = np.maximum(z, 0.0)
    return z, a, a @ params.w2.T + params.b2


def forward(params: EncoderParams, x: np.ndarray) -> np.ndarray:
    """Encode a single point: ``W2 relu(W1 x + b1) + b2``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (params.input_dim,):
        raise ContractError(f"expected input of shape ({params.input_dim},), got {x.shape}")
    return _forward_parts(params, x[None, :])[2][0]


def forward_batch(params: EncoderParams, points: np.ndarray) -> np.ndarray:
    """Encode a (n, d) batch of points to (n, out)."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != params.input_dim:
        raise ContractError(f"expected (n, {params.input_dim}) points, got shape {points.shape}")
    return _forward_parts(params, points)[2]


def set_encode(params: EncoderParams, sample_set) -> Embedding:
    """Mean per-point encoding of a sample set (accepts a SampleSet or (m, d) array)."""
    points = np.asarray(getattr(sample_set, "features", sample_set), dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ContractError(f"sample set must be a non-empty (m, d) array, got {points.shape}")
    return Embedding(forward_batch(params, points).mean(axis=0))


def encode_sets(params: EncoderParams, sets: np.ndarray) -> np.ndarray:
    """Pooled encodings for a (n_sets, m, d) stack of sample sets."""
    sets = np.asarray(sets, dtype=float)
    n_sets, m, d = sets.shape
    out = forward_batch(params, sets.reshape(n_sets * m, d))
    return out.reshape(n_sets, m, params.output_dim).mean(axis=1)


def input_jacobian(params: EncoderParams, x: np.ndarray) -> np.ndarray:
    """Jacobian of the encoder at x: ``W2 diag(1[z > 0]) W1`` with shape (out, d)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (params.input_dim,):
        raise ContractError(f"expected input of shape ({params.input_dim},), got {x.shape}")
    active = (x @ params.w1.T + params.b1) > 0
    return (params.w2 * active) @ params.w1


def input_jacobian_norm(params: EncoderParams, x: np.ndarray) -> float:
    """Frobenius norm of the input Jacobian at x."""
    return float(np.linalg.norm(input_jacobian(params, x)))


def _infonce_terms(d_pos: np.ndarray, d_weak: np.ndarray, d_strong: np.ndarray):
    """Contrastive term and its gradients with respect to the distances.

    d_pos and d_weak are (n_sub, k); d_strong is (k,) and is shared by every
    sub-window's denominator.  Exponentials are shifted per sub-window for
    stability; the returned gradients are shift-invariant.
    """
    c = np.maximum(np.max(np.maximum(d_pos, d_weak), axis=1), np.max(d_strong))
    ep = np.exp(d_pos - c[:, None])
    ew = np.exp(d_weak - c[:, None])
    es = np.exp(d_strong[None, :] - c[:, None])
    num = ep.sum(axis=1)
    den = num + ew.sum(axis=1) + es.sum(axis=1)
    ratios = num / den
    total = ratios.sum()
    value = float(np.log(total))
    scale = (1.0 / total) / den**2
    g_pos = ep * ((den - num) * scale)[:, None]
    g_weak = -ew * (num * scale)[:, None]
    g_strong = -(es * (num * scale)[:, None]).sum(axis=0)
    return value, g_pos, g_weak, g_strong


def _pair_embedding_grads(h_a, h_b, g_dist):
    """Gradient on h_a of distances ||h_a - h_b|| weighted g_dist (h_b gets the negation)."""
    diff = h_a - h_b
    dist = np.linalg.norm(diff, axis=-1)
    unit = np.divide(diff, dist[..., None], out=np.zeros_like(diff), where=dist[..., None] > 0)
    return g_dist[..., None] * unit


def _penalty_terms(params: EncoderParams, points: np.ndarray, weight: float):
    """Value and W1/W2 gradients of the Lipschitz penalty over penalty points."""
    z = points @ params.w1.T + params.b1
    active = (z > 0).astype(float)  # (p, hidden)
    jac = np.einsum("oh,ph,hd->pod", params.w2, active, params.w1, optimize=True)
    norms = np.sqrt((jac**2).sum(axis=(1, 2)))
    gap = norms - params.lipschitz_target
    value = weight * float((gap**2).sum())
    coef = np.divide(2.0 * weight * gap, norms, out=np.zeros_like(norms), where=norms > 0)
    g_w2 = np.einsum("p,pod,hd,ph->oh", coef, jac, params.w1, active, optimize=True)
    g_w1 = np.einsum("p,oh,pod,ph->hd", coef, params.w2, jac, active, optimize=True)
    return value, g_w1, g_w2, norms


def _stack_batch(batch: "PairBatch"):
    n_sub, k, m, d = batch.pos1.shape
    sets = np.concatenate(
        [
            batch.pos1.reshape(-1, m, d),
            batch.pos2.reshape(-1, m, d),
            batch.wn1.reshape(-1, m, d),
            batch.wn2.reshape(-1, m, d),
            batch.sn1,
            batch.sn2,
        ]
    )
    return sets, (n_sub, k, m, d)


def _loss_and_grads_detail(
    params: EncoderParams,
    batch: "PairBatch",
    penalty_weight: float,
    penalty_points: Optional[np.ndarray],
):
    """Loss, exact gradients, and the positive-pair distances of the batch."""
    if penalty_weight < 0:
        raise ContractError("penalty_weight must be non-negative")
    sets, (n_sub, k, m, d) = _stack_batch(batch)
    n_sets = sets.shape[0]
    x = sets.reshape(n_sets * m, d)
    z, a, out = _forward_parts(params, x)
    h = out.reshape(n_sets, m, params.output_dim).mean(axis=1)

    nk = n_sub * k
    h_p1 = h[:nk].reshape(n_sub, k, -1)
    h_p2 = h[nk:2 * nk].reshape(n_sub, k, -1)
    h_w1 = h[2 * nk:3 * nk].reshape(n_sub, k, -1)
    h_w2 = h[3 * nk:4 * nk].reshape(n_sub, k, -1)
    h_s1, h_s2 = h[4 * nk:4 * nk + k], h[4 * nk + k:]

    d_pos = np.linalg.norm(h_p1 - h_p2, axis=-1)
    d_weak = np.linalg.norm(h_w1 - h_w2, axis=-1)
    d_strong = np.linalg.norm(h_s1 - h_s2, axis=-1)

    value, g_dpos, g_dweak, g_dstrong = _infonce_terms(d_pos, d_weak, d_strong)

    g_p1 = _pair_embedding_grads(h_p1, h_p2, g_dpos)
    g_w1h = _pair_embedding_grads(h_w1, h_w2, g_dweak)
    g_s1 = _pair_embedding_grads(h_s1, h_s2, g_dstrong)

    o = params.output_dim
    g_sets = np.concatenate(
        [
            g_p1.reshape(nk, o),
            -g_p1.reshape(nk, o),
            g_w1h.reshape(nk, o),
            -g_w1h.reshape(nk, o),
            g_s1,
            -g_s1,
        ]
    )
    # Each point of a set receives 1/m of its set's embedding gradient.
    g_out = np.repeat(g_sets, m, axis=0) / m
    g_w2 = g_out.T @ a
    g_b2 = g_out.sum(axis=0)
    g_z = (g_out @ params.w2) * (z > 0)
    g_w1 = g_z.T @ x
    g_b1 = g_z.sum(axis=0)

    if penalty_points is not None and penalty_weight > 0:
        penalty_points = np.asarray(penalty_points, dtype=float)
        pen_value, pen_w1, pen_w2, _ = _penalty_terms(params, penalty_points, penalty_weight)
        value += pen_value
        g_w1 += pen_w1
        g_w2 += pen_w2

    grads = EncoderGrads(w1=g_w1, b1=g_b1, w2=g_w2, b2=g_b2)
    if not np.isfinite(value) or not all(np.all(np.isfinite(g)) for _, g in grads.blocks()):
        raise NumericalError(
            "non-finite loss or gradients: "
            f"max |embedding| = {np.max(np.abs(h)):.3g}, "
            f"distance ranges pos [{d_pos.min():.3g}, {d_pos.max():.3g}], "
            f"weak [{d_weak.min():.3g}, {d_weak.max():.3g}], "
            f"strong [{d_strong.min():.3g}, {d_strong.max():.3g}]"
        )
    return value, grads, d_pos


def loss_and_grads(
    params: EncoderParams,
    batch: "PairBatch",
    penalty_weight: float,
    penalty_points: Optional[np.ndarray],
) -> Tuple[float, EncoderGrads]:
    """Contrastive loss plus Lipschitz penalty, with exact analytic gradients.

    ``penalty_points`` is the (p, d) array the input-gradient penalty is
    evaluated at (may be None when penalty_weight is 0).
    """
    value, grads, _ = _loss_and_grads_detail(params, batch, penalty_weight, penalty_points)
    return value, grads


def sgd_step(params: EncoderParams, grads: EncoderGrads, learning_rate: float) -> EncoderParams:
    """One plain gradient-descent step; returns new params."""
    return EncoderParams(
        w1=params.w1 - learning_rate * grads.w1,
        b1=params.b1 - learning_rate * grads.b1,
        w2=params.w2 - learning_rate * grads.w2,
        b2=params.b2 - learning_rate * grads.b2,
        lipschitz_target=params.lipschitz_target,
    )


CHECKPOINT_FORMAT = "mcdrift-encoder-v1"


def save_checkpoint(params: EncoderParams, path, seed=None, hyper: Optional[dict] = None) -> None:
    """Write params to JSON: shapes plus row-major flattened weight arrays.

    Floats are serialized via repr and round-trip exactly.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "input_dim": params.input_dim,
        "hidden_dim": params.hidden_dim,
        "output_dim": params.output_dim,
        "lipschitz_target": params.lipschitz_target,
        "w1": params.w1.ravel().tolist(),
        "b1": params.b1.tolist(),
        "w2": params.w2.ravel().tolist(),
        "b2": params.b2.tolist(),
        "seed": seed,
        "hyper": hyper or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> Tuple[EncoderParams, dict]:
    """Read a checkpoint written by :func:`save_checkpoint`."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ContractError(f"unknown checkpoint format {doc.get('format')!r}")
    d, hidden, out = doc["input_dim"], doc["hidden_dim"], doc["output_dim"]
    params = EncoderParams(
        w1=np.asarray(doc["w1"]).reshape(hidden, d),
        b1=np.asarray(doc["b1"]),
        w2=np.asarray(doc["w2"]).reshape(out, hidden),
        b2=np.asarray(doc["b2"]),
        lipschitz_target=doc["lipschitz_target"],
    )
    return params, {"seed": doc.get("seed"), "hyper": doc.get("hyper", {})}
