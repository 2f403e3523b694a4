"""GRU sequence classifier with hand-rolled backpropagation and Adam.

Architecture: single GRU layer over the feature sequence, mean or
last-step pooling of the hidden states, one ReLU dense layer with
inverted dropout, and a linear softmax output. Training is plain
stochastic gradient descent with batch size 1 and Adam updates.

Gate convention (sigmoid gates, tanh candidate):

    z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)
    r_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)
    g_t = tanh(W_h x_t + U_h (r_t * h_{t-1}) + b_h)
    h_t = (1 - z_t) * h_{t-1} + z_t * g_t

so z_t == 1 means "take the candidate" and z_t == 0 means "keep the
previous state".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    DivergenceError,
    EmptySplitError,
    NonFiniteGradientError,
)
from .seeding import substream
from .types import FeatureSequence, LabeledExample

POOLING_MODES = ("average", "last")

# Probability floor inside log() so a confidently wrong prediction yields
# a large finite loss instead of infinity.
_PROB_FLOOR = 1e-12

_INIT_SCALE = 0.08


@dataclass
class GruParams:
    w_z: np.ndarray
    u_z: np.ndarray
    b_z: np.ndarray
    w_r: np.ndarray
    u_r: np.ndarray
    b_r: np.ndarray
    w_h: np.ndarray
    u_h: np.ndarray
    b_h: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.w_z.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_z.shape[1]


@dataclass
class ModelParams:
    gru: GruParams
    dense_w: np.ndarray
    dense_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray
    pooling: str = "average"
    dropout_rate: float = 0.2

    def __post_init__(self):
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}, got {self.pooling!r}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValueError(f"dropout rate must lie in [0, 1), got {self.dropout_rate}")

    @property
    def n_classes(self) -> int:
        return self.out_w.shape[0]

    @property
    def input_size(self) -> int:
        return self.gru.input_size

    def tensors(self) -> dict[str, np.ndarray]:
        """Flat name -> array view of every trainable tensor, in a fixed order."""
        g = self.gru
        return {
            "gru.w_z": g.w_z, "gru.u_z": g.u_z, "gru.b_z": g.b_z,
            "gru.w_r": g.w_r, "gru.u_r": g.u_r, "gru.b_r": g.b_r,
            "gru.w_h": g.w_h, "gru.u_h": g.u_h, "gru.b_h": g.b_h,
            "dense_w": self.dense_w, "dense_b": self.dense_b,
            "out_w": self.out_w, "out_b": self.out_b,
        }


def init_model(
    input_dim: int,
    n_classes: int,
    hidden: int = 128,
    dense: int = 64,
    pooling: str = "average",
    dropout_rate: float = 0.2,
    seed: int = 0,
) -> ModelParams:
    """Fresh model with all tensors drawn uniform(-0.08, 0.08) from a seeded stream.

    Tensors are drawn in the order listed by ModelParams.tensors(), so a
    given seed always produces the same model.
    """
    if input_dim < 1 or n_classes < 2 or hidden < 1 or dense < 1:
        raise ValueError("input_dim, hidden, dense must be >= 1 and n_classes >= 2")
    rng = substream(seed, "init")

    def draw(*shape):
        return rng.uniform(-_INIT_SCALE, _INIT_SCALE, shape)

    gru = GruParams(
        w_z=draw(hidden, input_dim), u_z=draw(hidden, hidden), b_z=draw(hidden),
        w_r=draw(hidden, input_dim), u_r=draw(hidden, hidden), b_r=draw(hidden),
        w_h=draw(hidden, input_dim), u_h=draw(hidden, hidden), b_h=draw(hidden),
    )
    return ModelParams(
        gru=gru,
        dense_w=draw(dense, hidden), dense_b=draw(dense),
        out_w=draw(n_classes, dense), out_b=draw(n_classes),
        pooling=pooling, dropout_rate=dropout_rate,
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over a 1-D logit vector."""
    shifted = logits - np.max(logits)
    e = np.exp(shifted)
    return e / e.sum()


def gru_step(p: GruParams, x: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    """One recurrence step; x: (input_size,), h_prev: (hidden,) -> (hidden,)."""
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    if x.shape != (p.input_size,):
        raise DimensionMismatchError(f"expected input of shape ({p.input_size},), got {x.shape}")
    if h_prev.shape != (p.hidden_size,):
        raise DimensionMismatchError(f"expected state of shape ({p.hidden_size},), got {h_prev.shape}")
    z = _sigmoid(p.w_z @ x + p.u_z @ h_prev + p.b_z)
    r = _sigmoid(p.w_r @ x + p.u_r @ h_prev + p.b_r)
    g = np.tanh(p.w_h @ x + p.u_h @ (r * h_prev) + p.b_h)
    return (1.0 - z) * h_prev + z * g


def _pool(hidden_states: np.ndarray, mode: str) -> np.ndarray:
    """Collapse (T, hidden) states to one vector by mean or last step."""
    if mode == "average":
        return hidden_states.mean(axis=0)
    return hidden_states[-1]


def _as_features(x) -> np.ndarray:
    if isinstance(x, FeatureSequence):
        return x.data
    return np.asarray(x, dtype=np.float64)


def forward(
    m: ModelParams,
    x,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
    dropout_mask: np.ndarray | None = None,
):
    """Full forward pass; returns (class probabilities, cache for backward).

    Dropout (inverted scaling) is applied to the dense activations only
    when ``train_mode`` is set; the mask comes from ``rng`` unless one is
    passed explicitly, which is what the gradient checks do.
    """
    feats = _as_features(x)
    gru = m.gru
    if feats.ndim != 2 or feats.shape[1] != gru.input_size:
        raise DimensionMismatchError(f"expected (T, {gru.input_size}) features, got {feats.shape}")
    n_steps, hidden = feats.shape[0], gru.hidden_size

    # Input-to-gate projections for all timesteps at once; only the
    # recurrent terms stay in the python loop.
    xz = feats @ gru.w_z.T + gru.b_z
    xr = feats @ gru.w_r.T + gru.b_r
    xh = feats @ gru.w_h.T + gru.b_h

    states = np.zeros((n_steps + 1, hidden))
    zs = np.empty((n_steps, hidden))
    rs = np.empty((n_steps, hidden))
    gs = np.empty((n_steps, hidden))
    h = states[0]
    for t in range(n_steps):
        z = _sigmoid(xz[t] + gru.u_z @ h)
        r = _sigmoid(xr[t] + gru.u_r @ h)
        g = np.tanh(xh[t] + gru.u_h @ (r * h))
        h = (1.0 - z) * h + z * g
        zs[t], rs[t], gs[t], states[t + 1] = z, r, g, h

    pooled = _pool(states[1:], m.pooling)
    dense_pre = m.dense_w @ pooled + m.dense_b
    dense_act = np.maximum(dense_pre, 0.0)

    mask = None
    if dropout_mask is not None:
        mask = np.asarray(dropout_mask, dtype=np.float64)
    elif train_mode and m.dropout_rate > 0.0:
        if rng is None:
            raise ValueError("train_mode with dropout requires an rng or an explicit mask")
        keep = 1.0 - m.dropout_rate
        mask = (rng.random(dense_act.shape[0]) < keep) / keep
    dropped = dense_act if mask is None else dense_act * mask

    logits = m.out_w @ dropped + m.out_b
    probs = softmax(logits)
    cache = {
        "features": feats, "zs": zs, "rs": rs, "gs": gs, "states": states,
        "pooled": pooled, "dense_pre": dense_pre, "mask": mask,
        "dropped": dropped, "logits": logits, "probs": probs,
    }
    return probs, cache


def backward_from_dlogits(m: ModelParams, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Backpropagate an output-logit gradient through the whole model.

    Shared by plain cross-entropy training and the distillation loss,
    which differ only in how dlogits is formed.
    """
    gru = m.gru
    feats, states = cache["features"], cache["states"]
    zs, rs, gs = cache["zs"], cache["rs"], cache["gs"]
    n_steps = feats.shape[0]

    grads_out_w = np.outer(dlogits, cache["dropped"])
    grads_out_b = dlogits.copy()
    d_dropped = m.out_w.T @ dlogits
    d_act = d_dropped if cache["mask"] is None else d_dropped * cache["mask"]
    d_pre = d_act * (cache["dense_pre"] > 0.0)
    grads_dense_w = np.outer(d_pre, cache["pooled"])
    grads_dense_b = d_pre.copy()
    d_pooled = m.dense_w.T @ d_pre

    uz_t, ur_t, uh_t = gru.u_z.T, gru.u_r.T, gru.u_h.T
    da_z = np.empty_like(zs)
    da_r = np.empty_like(rs)
    da_h = np.empty_like(gs)
    dh = np.zeros(gru.hidden_size)
    pool_share = d_pooled / n_steps if m.pooling == "average" else None
    for t in reversed(range(n_steps)):
        if pool_share is not None:
            dh = dh + pool_share
        elif t == n_steps - 1:
            dh = dh + d_pooled
        h_prev, z, r, g = states[t], zs[t], rs[t], gs[t]
        dz = dh * (g - h_prev)
        az = dz * z * (1.0 - z)
        dg = dh * z
        ah = dg * (1.0 - g * g)
        uh_back = uh_t @ ah
        dr = uh_back * h_prev
        ar = dr * r * (1.0 - r)
        dh = dh * (1.0 - z) + uz_t @ az + ur_t @ ar + uh_back * r
        da_z[t], da_r[t], da_h[t] = az, ar, ah

    h_prevs = states[:-1]
    return {
        "gru.w_z": da_z.T @ feats, "gru.u_z": da_z.T @ h_prevs, "gru.b_z": da_z.sum(axis=0),
        "gru.w_r": da_r.T @ feats, "gru.u_r": da_r.T @ h_prevs, "gru.b_r": da_r.sum(axis=0),
        "gru.w_h": da_h.T @ feats, "gru.u_h": da_h.T @ (rs * h_prevs), "gru.b_h": da_h.sum(axis=0),
        "dense_w": grads_dense_w, "dense_b": grads_dense_b,
        "out_w": grads_out_w, "out_b": grads_out_b,
    }


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """Negative log probability of the true class, floored away from infinity."""
    if not (0 <= label < probs.shape[0]):
        raise ValueError(f"label {label} out of range for {probs.shape[0]} classes")
    return float(-np.log(max(probs[label], _PROB_FLOOR)))


def loss_and_grads(
    m: ModelParams,
    x,
    label: int,
    rng: np.random.Generator | None = None,
    dropout_mask: np.ndarray | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Cross-entropy loss and gradients for one example.

    With neither ``rng`` nor ``dropout_mask`` the pass runs in inference
    mode (no dropout), which is also what the finite-difference checks use.
    """
    train_mode = rng is not None or dropout_mask is not None
    probs, cache = forward(m, x, train_mode=train_mode, rng=rng, dropout_mask=dropout_mask)
    loss = cross_entropy(probs, label)
    dlogits = probs.copy()
    dlogits[label] -= 1.0
    return loss, backward_from_dlogits(m, cache, dlogits)


@dataclass
class TrainConfig:
    """Optimizer and loop settings. Batch size is pinned to 1 by design."""

    learning_rate: float = 0.001
    epochs: int = 10000
    batch_size: int = 1
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size != 1:
            raise ValueError("only batch_size == 1 is supported")


@dataclass
class AdamState:
    """First/second moment accumulators, created lazily on the first step."""

    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    state: AdamState,
    params,
    grads: dict[str, np.ndarray],
    cfg: TrainConfig,
):
    """One bias-corrected Adam update, applied to the parameters in place.

    ``params`` is any parameter collection: a ModelParams or a plain
    name -> array dict (the autoencoder uses the latter).
    """
    tensors = params if isinstance(params, dict) else params.tensors()
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"non-finite gradient in {name!r}")
    if not state.m:
        state.m = {name: np.zeros_like(t) for name, t in tensors.items()}
        state.v = {name: np.zeros_like(t) for name, t in tensors.items()}
    state.step += 1
    b1, b2 = cfg.beta1, cfg.beta2
    bias1 = 1.0 - b1**state.step
    bias2 = 1.0 - b2**state.step
    for name, tensor in tensors.items():
        g = grads[name]
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * (g * g)
        m_hat = state.m[name] / bias1
        v_hat = state.v[name] / bias2
        tensor -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return params, state


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_acc: float


# A step function maps (model, example, dropout rng) to (loss, grads);
# the default is plain cross-entropy. Distillation plugs in its own.
StepFn = Callable[[ModelParams, LabeledExample, np.random.Generator], tuple[float, dict]]


def _default_step(m: ModelParams, ex: LabeledExample, rng: np.random.Generator):
    use_rng = rng if m.dropout_rate > 0.0 else None
    return loss_and_grads(m, ex.features, ex.label, rng=use_rng)


def _check_split(split: Sequence[LabeledExample], name: str, input_dim: int):
    if len(split) == 0:
        raise EmptySplitError(f"{name} split is empty")
    for ex in split:
        if ex.features.shape[1] != input_dim:
            raise DimensionMismatchError(
                f"{name} example {ex.example_id!r} has dim {ex.features.shape[1]}, model expects {input_dim}"
            )


def train(
    train_split: Sequence[LabeledExample],
    val_split: Sequence[LabeledExample],
    m: ModelParams,
    cfg: TrainConfig,
    step_fn: StepFn | None = None,
) -> tuple[ModelParams, list[EpochRecord]]:
    """Shuffled single-example training loop with per-epoch history.

    Example order and dropout masks come from substreams of cfg.seed, so
    the resulting model is a pure function of (initial model, splits, cfg).
    """
    _check_split(train_split, "train", m.input_size)
    _check_split(val_split, "validation", m.input_size)
    step = step_fn or _default_step
    shuffle_rng = substream(cfg.seed, "shuffle")
    dropout_rng = substream(cfg.seed, "dropout")
    state = AdamState()
    history: list[EpochRecord] = []
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(len(train_split))
        total = 0.0
        for idx in order:
            loss, grads = step(m, train_split[idx], dropout_rng)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite training loss at epoch {epoch}")
            m, state = adam_step(state, m, grads, cfg)
            total += loss
        history.append(
            EpochRecord(
                epoch=epoch,
                train_loss=total / len(train_split),
                train_acc=evaluate(m, train_split),
                val_acc=evaluate(m, val_split),
            )
        )
    return m, history


def predict(m: ModelParams, x) -> int:
    """Most probable class index (first index wins ties)."""
    probs, _ = forward(m, x)
    return int(np.argmax(probs))


def evaluate(m: ModelParams, split: Sequence[LabeledExample]) -> float:
    """Classification accuracy of the model on a split, in [0, 1]."""
    if len(split) == 0:
        raise EmptySplitError("cannot evaluate an empty split")
    correct = sum(1 for ex in split if predict(m, ex.features) == ex.label)
    return correct / len(split)
