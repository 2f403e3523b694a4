"""Dimensionality reduction for the EEG feature stream.

Two interchangeable reducers: kernel PCA with a cubic polynomial kernel,
and a small tanh autoencoder whose bottleneck provides the code. Both
standardize their input columns internally and remember the scaling, so
transform-time inputs are raw feature rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import (
    DegenerateFitError,
    DimensionMismatchError,
    DivergenceError,
    InsufficientSamplesError,
)
from .seeding import substream
from .speech import add_deltas
from .types import FeatureSequence

# Columns whose std falls below this are treated as constant and left
# centered at zero instead of being divided by noise.
_STD_FLOOR = 1e-12

# Eigenvalues below this (including small negatives from round-off in the
# centered kernel) are clamped to exactly zero.
_EIG_FLOOR = 1e-10


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale = np.where(scale < _STD_FLOOR, 1.0, scale)
        return cls(mean, scale)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale


@dataclass
class KpcaModel:
    """Fitted kernel PCA with kernel k(x, y) = (x . y + offset)^degree."""

    x_fit: np.ndarray  # standardized fit rows, (n, d)
    standardizer: Standardizer
    degree: int
    offset: float
    eigenvalues: np.ndarray  # all n of them, descending, >= 0
    alphas: np.ndarray  # (n, k), scaled so alpha_i' K_c alpha_i == 1
    kernel_col_means: np.ndarray  # (n,), column means of the fit kernel
    kernel_grand_mean: float
    train_scores: np.ndarray  # (n, k), projections of the fit rows

    @property
    def n_components(self) -> int:
        return self.alphas.shape[1]

    @property
    def input_dim(self) -> int:
        return self.x_fit.shape[1]


def _poly_kernel(a: np.ndarray, b: np.ndarray, degree: int, offset: float) -> np.ndarray:
    return (a @ b.T + offset) ** degree


def kpca_fit(x: np.ndarray, n_components: int, degree: int = 3, offset: float = 1.0) -> KpcaModel:
    """Fit kernel PCA on raw feature rows.

    Columns are standardized first (constant columns pinned to zero), the
    polynomial kernel matrix is double-centered in feature space, and the
    eigenvectors are rescaled by 1 / sqrt(eigenvalue) so that projections
    have unit self-normalization. Components with a zero eigenvalue get a
    zero projection vector, so degenerate directions map to 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatchError(f"fit data must be 2-D, got shape {x.shape}")
    n = x.shape[0]
    if not (1 <= n_components <= n):
        raise InsufficientSamplesError(f"need 1 <= n_components <= {n} fit rows, got {n_components}")

    std = Standardizer.fit(x)
    xs = std.apply(x)
    k = _poly_kernel(xs, xs, degree, offset)
    col_means = k.mean(axis=0)
    grand = float(k.mean())
    kc = k - col_means[None, :] - col_means[:, None] + grand

    eigvals, eigvecs = np.linalg.eigh(kc)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    eigvals[eigvals < _EIG_FLOOR] = 0.0

    top_vals = eigvals[:n_components]
    top_vecs = eigvecs[:, :n_components]
    inv_root = np.where(top_vals > 0.0, 1.0 / np.sqrt(np.where(top_vals > 0.0, top_vals, 1.0)), 0.0)
    alphas = top_vecs * inv_root[None, :]

    return KpcaModel(
        x_fit=xs,
        standardizer=std,
        degree=degree,
        offset=offset,
        eigenvalues=eigvals,
        alphas=alphas,
        kernel_col_means=col_means,
        kernel_grand_mean=grand,
        train_scores=kc @ alphas,
    )


def kpca_transform(model: KpcaModel, x: np.ndarray) -> np.ndarray:
    """Project raw rows onto the fitted components: (m, d) -> (m, k).

    The cross-kernel against the fit rows is centered with the statistics
    stored at fit time, so transforming the original fit data reproduces
    the training scores.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise DimensionMismatchError(f"expected (m, {model.input_dim}) rows, got {x.shape}")
    xs = model.standardizer.apply(x)
    k_new = _poly_kernel(xs, model.x_fit, model.degree, model.offset)
    k_centered = (
        k_new
        - k_new.mean(axis=1, keepdims=True)
        - model.kernel_col_means[None, :]
        + model.kernel_grand_mean
    )
    return k_centered @ model.alphas


def explained_variance_curve(model: KpcaModel) -> np.ndarray:
    """Cumulative explained-variance ratios over all eigenvalues.

    Non-decreasing and ends at 1. Raises if the fit captured no variance
    at all (e.g. every fit row identical).
    """
    total = model.eigenvalues.sum()
    if total <= 0.0:
        raise DegenerateFitError("all eigenvalues are zero; nothing to explain")
    return np.cumsum(model.eigenvalues) / total


@dataclass
class AutoencoderModel:
    """Symmetric tanh autoencoder; the bottleneck code is the reduction."""

    weights: dict[str, np.ndarray]  # w1, b1, w2, b2, w3, b3, w4, b4
    standardizer: Standardizer
    loss_history: list[float] = field(default_factory=list)

    @property
    def n_components(self) -> int:
        return self.weights["w2"].shape[0]

    @property
    def input_dim(self) -> int:
        return self.weights["w1"].shape[1]


def _ae_forward(weights: dict[str, np.ndarray], xs: np.ndarray):
    h1 = np.tanh(xs @ weights["w1"].T + weights["b1"])
    code = np.tanh(h1 @ weights["w2"].T + weights["b2"])
    h3 = np.tanh(code @ weights["w3"].T + weights["b3"])
    recon = h3 @ weights["w4"].T + weights["b4"]
    return h1, code, h3, recon


def ae_loss_and_grads(weights: dict[str, np.ndarray], xs: np.ndarray):
    """Full-batch reconstruction MSE and its gradients.

    xs must already be standardized; the loss is the mean over all
    entries of (reconstruction - xs)^2.
    """
    h1, code, h3, recon = _ae_forward(weights, xs)
    diff = recon - xs
    loss = float(np.mean(diff * diff))

    d_recon = 2.0 * diff / diff.size
    g = {}
    g["w4"] = d_recon.T @ h3
    g["b4"] = d_recon.sum(axis=0)
    d_h3 = (d_recon @ weights["w4"]) * (1.0 - h3 * h3)
    g["w3"] = d_h3.T @ code
    g["b3"] = d_h3.sum(axis=0)
    d_code = (d_h3 @ weights["w3"]) * (1.0 - code * code)
    g["w2"] = d_code.T @ h1
    g["b2"] = d_code.sum(axis=0)
    d_h1 = (d_code @ weights["w2"]) * (1.0 - h1 * h1)
    g["w1"] = d_h1.T @ xs
    g["b1"] = d_h1.sum(axis=0)
    return loss, g


def autoencoder_fit(
    x: np.ndarray,
    n_components: int = 6,
    hidden: int = 64,
    epochs: int = 200,
    learning_rate: float = 0.001,
    seed: int = 0,
) -> AutoencoderModel:
    """Train the autoencoder full-batch with Adam on standardized rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatchError(f"fit data must be 2-D, got shape {x.shape}")
    if x.shape[0] < 2:
        raise InsufficientSamplesError(f"need at least 2 fit rows, got {x.shape[0]}")
    if not (1 <= n_components <= x.shape[1]):
        raise InsufficientSamplesError(f"need 1 <= n_components <= {x.shape[1]}, got {n_components}")

    std = Standardizer.fit(x)
    xs = std.apply(x)
    d = x.shape[1]
    rng = substream(seed, "init")

    def glorot(n_out, n_in):
        limit = np.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-limit, limit, (n_out, n_in))

    weights = {
        "w1": glorot(hidden, d), "b1": np.zeros(hidden),
        "w2": glorot(n_components, hidden), "b2": np.zeros(n_components),
        "w3": glorot(hidden, n_components), "b3": np.zeros(hidden),
        "w4": glorot(d, hidden), "b4": np.zeros(d),
    }

    cfg = nn.TrainConfig(learning_rate=learning_rate, epochs=max(epochs, 1), seed=seed)
    state = nn.AdamState()
    history = []
    for _ in range(epochs):
        loss, grads = ae_loss_and_grads(weights, xs)
        if not np.isfinite(loss):
            raise DivergenceError("autoencoder reconstruction loss is non-finite")
        history.append(loss)
        weights, state = nn.adam_step(state, weights, grads, cfg)
    history.append(ae_loss_and_grads(weights, xs)[0])
    return AutoencoderModel(weights=weights, standardizer=std, loss_history=history)


def autoencoder_encode(model: AutoencoderModel, x: np.ndarray) -> np.ndarray:
    """Bottleneck codes for raw rows: (m, d) -> (m, n_components)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise DimensionMismatchError(f"expected (m, {model.input_dim}) rows, got {x.shape}")
    _, code, _, _ = _ae_forward(model.weights, model.standardizer.apply(x))
    return code


def autoencoder_reconstruct(model: AutoencoderModel, x: np.ndarray) -> np.ndarray:
    """Round-trip through the bottleneck, still in standardized space."""
    x = np.asarray(x, dtype=np.float64)
    _, _, _, recon = _ae_forward(model.weights, model.standardizer.apply(x))
    return recon


def stack_time_deltas(features: FeatureSequence, delta_window: int = 2) -> FeatureSequence:
    """Append velocity and acceleration rows to a reduced sequence (D -> 3D)."""
    return add_deltas(features, delta_window)
