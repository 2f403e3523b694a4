import numpy as np
import pytest

from neurospeech.types import LabeledExample, MultichannelSignal


def fd_gradcheck(loss_fn, tensors, eps=1e-5, floor=1e-8):
    """Worst relative error between analytic and central-difference grads.

    loss_fn() -> (loss, grads dict keyed like tensors). Perturbs every
    entry of every tensor in place.
    """
    _, grads = loss_fn()
    worst = 0.0
    for name, tensor in tensors.items():
        g = grads[name]
        it = np.nditer(tensor, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = tensor[idx]
            tensor[idx] = orig + eps
            up, _ = loss_fn()
            tensor[idx] = orig - eps
            down, _ = loss_fn()
            tensor[idx] = orig
            fd = (up - down) / (2.0 * eps)
            rel = abs(g[idx] - fd) / max(floor, abs(g[idx]), abs(fd))
            worst = max(worst, rel)
    return worst


def toy_sequence_examples(n_per_class, n_classes, n_steps, dim, seed, separation=2.0):
    """Linearly separable random sequences: class k is shifted along axis k % dim."""
    rng = np.random.default_rng(seed)
    examples = []
    for k in range(n_classes):
        shift = np.zeros(dim)
        shift[k % dim] = separation
        for i in range(n_per_class):
            feats = rng.standard_normal((n_steps, dim)) * 0.5 + shift
            examples.append(LabeledExample(f"c{k}_{i}", feats, k))
    return examples


def sine_signal(freq_hz, fs_hz, duration_s, n_channels=1, names=None):
    t = np.arange(int(duration_s * fs_hz)) / fs_hz
    data = np.tile(np.sin(2 * np.pi * freq_hz * t)[:, None], (1, n_channels))
    return MultichannelSignal(data, fs_hz, names)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
