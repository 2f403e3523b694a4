import numpy as np
import pytest

from conftest import fd_gradcheck, toy_sequence_examples
from neurospeech.errors import (
    DimensionMismatchError,
    EmptySplitError,
    NonFiniteGradientError,
)
from neurospeech.nn import (
    AdamState,
    GruParams,
    ModelParams,
    TrainConfig,
    adam_step,
    cross_entropy,
    evaluate,
    forward,
    gru_step,
    init_model,
    loss_and_grads,
    predict,
    softmax,
    train,
)
from neurospeech.types import LabeledExample


def scalar_gru(b_z, w_h=1.0, u_h=0.0, b_h=0.0):
    z = np.zeros((1, 1))
    return GruParams(
        w_z=z.copy(), u_z=z.copy(), b_z=np.array([b_z]),
        w_r=z.copy(), u_r=z.copy(), b_r=np.array([0.0]),
        w_h=np.array([[w_h]]), u_h=np.array([[u_h]]), b_h=np.array([b_h]),
    )


def tiny_model(seed=0, hidden=3, dense=2, input_dim=2, n_classes=3, **kw):
    return init_model(input_dim, n_classes, hidden=hidden, dense=dense, seed=seed, **kw)


def perturb(m, rng, scale=0.3):
    """Kick parameters away from the near-zero init so every gradient is
    well above finite-difference noise."""
    for t in m.tensors().values():
        t += rng.normal(0.0, scale, t.shape)
    return m


def test_softmax_properties():
    p = softmax(np.array([2.0, 0.0]))
    assert np.allclose(p, [0.88079708, 0.11920292], atol=1e-8)
    assert p.sum() == pytest.approx(1.0)
    big = softmax(np.array([1000.0, 1000.0, 999.0]))
    assert np.all(np.isfinite(big))
    assert big.sum() == pytest.approx(1.0)
    shifted = softmax(np.array([2.0, 0.0]) + 7.5)
    assert np.allclose(shifted, p, atol=1e-12)


def test_gru_step_update_gate_open():
    # z saturates to 1, so the state jumps straight to the candidate tanh(0.5)
    p = scalar_gru(b_z=100.0)
    h = gru_step(p, np.array([0.5]), np.array([0.0]))
    assert h[0] == pytest.approx(np.tanh(0.5), abs=1e-12)
    assert h[0] == pytest.approx(0.46211715726000974, abs=1e-12)


def test_gru_step_update_gate_closed():
    p = scalar_gru(b_z=-100.0)
    h = gru_step(p, np.array([0.5]), np.array([0.7]))
    assert h[0] == pytest.approx(0.7, abs=1e-12)


def test_gru_step_shape_checks():
    p = scalar_gru(b_z=0.0)
    with pytest.raises(DimensionMismatchError):
        gru_step(p, np.array([0.5, 0.5]), np.array([0.0]))
    with pytest.raises(DimensionMismatchError):
        gru_step(p, np.array([0.5]), np.array([0.0, 0.0]))


def test_forward_pooling_modes():
    m = tiny_model(hidden=2, dense=2, input_dim=1, n_classes=2, dropout_rate=0.0)
    x = np.array([[1.0], [2.0], [3.0]])
    _, cache_avg = forward(m, x)
    states = cache_avg["states"][1:]
    assert np.allclose(cache_avg["pooled"], states.mean(axis=0))
    m_last = ModelParams(
        gru=m.gru, dense_w=m.dense_w, dense_b=m.dense_b,
        out_w=m.out_w, out_b=m.out_b, pooling="last", dropout_rate=0.0,
    )
    _, cache_last = forward(m_last, x)
    assert np.allclose(cache_last["pooled"], states[-1])


def test_forward_uniform_when_output_layer_zeroed():
    m = tiny_model(n_classes=4, dropout_rate=0.0)
    m.out_w[:] = 0.0
    m.out_b[:] = 0.0
    probs, _ = forward(m, np.ones((5, 2)))
    assert np.allclose(probs, 0.25, atol=1e-15)


def test_unknown_pooling_rejected():
    with pytest.raises(ValueError):
        tiny_model(pooling="max")


def test_cross_entropy_floor():
    val = cross_entropy(np.array([1.0, 0.0]), 1)
    assert np.isfinite(val)
    assert val == pytest.approx(-np.log(1e-12))
    assert cross_entropy(np.array([1.0, 0.0]), 0) == pytest.approx(0.0)


def test_gradients_match_finite_differences_average_pooling(rng):
    m = perturb(tiny_model(hidden=3, dense=2, input_dim=2, n_classes=3, dropout_rate=0.0), rng)
    x = rng.standard_normal((4, 2))

    def loss_fn():
        return loss_and_grads(m, x, 1)

    assert fd_gradcheck(loss_fn, m.tensors()) < 1e-4


def test_gradients_match_finite_differences_last_pooling(rng):
    m = perturb(tiny_model(hidden=3, dense=2, input_dim=2, n_classes=3,
                           pooling="last", dropout_rate=0.0), rng)
    x = rng.standard_normal((4, 2))

    def loss_fn():
        return loss_and_grads(m, x, 2)

    assert fd_gradcheck(loss_fn, m.tensors()) < 1e-4


def test_gradients_with_fixed_dropout_mask(rng):
    m = perturb(tiny_model(hidden=3, dense=4, input_dim=2, n_classes=3, dropout_rate=0.5), rng)
    x = rng.standard_normal((4, 2))
    mask = np.array([2.0, 0.0, 2.0, 0.0])

    def loss_fn():
        return loss_and_grads(m, x, 0, dropout_mask=mask)

    assert fd_gradcheck(loss_fn, m.tensors()) < 1e-4


def test_train_mode_needs_randomness_source():
    m = tiny_model(dropout_rate=0.5)
    with pytest.raises(ValueError):
        forward(m, np.ones((3, 2)), train_mode=True)


def test_dropout_changes_training_pass_only(rng):
    m = tiny_model(dropout_rate=0.5)
    x = rng.standard_normal((4, 2))
    probs_inf, cache = forward(m, x)
    assert cache["mask"] is None
    probs_inf2, _ = forward(m, x)
    assert np.array_equal(probs_inf, probs_inf2)
    mask = np.zeros(m.dense_b.shape[0])
    probs_off, _ = forward(m, x, train_mode=True, dropout_mask=mask)
    assert np.allclose(probs_off, softmax(m.out_b))


def test_init_model_deterministic_and_bounded():
    a = init_model(5, 3, hidden=4, dense=3, seed=7)
    b = init_model(5, 3, hidden=4, dense=3, seed=7)
    c = init_model(5, 3, hidden=4, dense=3, seed=8)
    for name, t in a.tensors().items():
        assert np.array_equal(t, b.tensors()[name])
        assert np.all(np.abs(t) <= 0.08)
    assert any(not np.array_equal(t, c.tensors()[name]) for name, t in a.tensors().items())


def test_init_model_validation():
    with pytest.raises(ValueError):
        init_model(0, 3)
    with pytest.raises(ValueError):
        init_model(5, 1)


def test_adam_first_step_moves_by_learning_rate():
    m = tiny_model(hidden=2, dense=2, input_dim=2, n_classes=2)
    before = {k: v.copy() for k, v in m.tensors().items()}
    grads = {k: np.where(np.arange(v.size).reshape(v.shape) % 2 == 0, 0.5, -0.5)
             for k, v in m.tensors().items()}
    cfg = TrainConfig(learning_rate=0.01, epochs=1, seed=0)
    m, state = adam_step(AdamState(), m, grads, cfg)
    assert state.step == 1
    for k, t in m.tensors().items():
        delta = np.abs(t - before[k])
        assert np.allclose(delta, cfg.learning_rate, rtol=0.01)
        assert np.all(np.sign(before[k] - t) == np.sign(grads[k]))


def test_adam_zero_gradient_leaves_params():
    m = tiny_model()
    before = {k: v.copy() for k, v in m.tensors().items()}
    grads = {k: np.zeros_like(v) for k, v in m.tensors().items()}
    m, _ = adam_step(AdamState(), m, grads, TrainConfig(epochs=1))
    for k, t in m.tensors().items():
        assert np.array_equal(t, before[k])


def test_adam_rejects_non_finite_gradient():
    m = tiny_model()
    grads = {k: np.zeros_like(v) for k, v in m.tensors().items()}
    grads["out_b"][0] = np.nan
    with pytest.raises(NonFiniteGradientError):
        adam_step(AdamState(), m, grads, TrainConfig(epochs=1))


def test_adam_works_on_plain_dict():
    params = {"w": np.array([1.0, 2.0])}
    grads = {"w": np.array([0.5, -0.5])}
    params, state = adam_step(AdamState(), params, grads, TrainConfig(learning_rate=0.1, epochs=1))
    assert np.allclose(np.abs(params["w"] - [1.0, 2.0]), 0.1, rtol=0.01)


def test_batch_size_pinned_to_one():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=4)


def test_overfits_single_example(rng):
    m = init_model(3, 3, hidden=6, dense=4, dropout_rate=0.0, seed=0)
    x = rng.standard_normal((6, 3))
    cfg = TrainConfig(learning_rate=0.1, epochs=1)
    state = AdamState()
    losses = []
    for _ in range(50):
        loss, grads = loss_and_grads(m, x, 2)
        losses.append(loss)
        m, state = adam_step(state, m, grads, cfg)
    losses.append(loss_and_grads(m, x, 2)[0])
    assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 0.01


def test_predict_tie_break_and_shift_invariance():
    m = tiny_model(n_classes=4, dropout_rate=0.0)
    m.out_w[:] = 0.0
    m.out_b[:] = np.array([0.5, 0.5, 0.5, 0.5])
    assert predict(m, np.ones((3, 2))) == 0
    m.out_b[:] = np.array([0.1, 0.9, 0.3, 0.2])
    x = np.ones((3, 2))
    first = predict(m, x)
    m.out_b += 13.0
    assert predict(m, x) == first


def test_evaluate_counts_correct_fraction():
    m = tiny_model(n_classes=4, dropout_rate=0.0)
    m.out_w[:] = 0.0
    m.out_b[:] = np.array([1.0, 0.0, 0.0, 0.0])
    split = [LabeledExample(str(k), np.ones((3, 2)), k) for k in range(4)]
    assert evaluate(m, split) == pytest.approx(0.25)
    with pytest.raises(EmptySplitError):
        evaluate(m, [])


def test_train_smoke_and_history():
    examples = toy_sequence_examples(4, 2, 5, 3, seed=0)
    m = init_model(3, 2, hidden=4, dense=3, dropout_rate=0.0, seed=1)
    cfg = TrainConfig(learning_rate=0.01, epochs=3, seed=5)
    m, history = train(examples, examples, m, cfg)
    assert len(history) == 3
    assert [h.epoch for h in history] == [0, 1, 2]
    assert all(np.isfinite(h.train_loss) for h in history)
    assert all(0.0 <= h.val_acc <= 1.0 for h in history)


def test_train_is_deterministic_per_seed():
    examples = toy_sequence_examples(3, 2, 5, 3, seed=0)

    def run(seed):
        m = init_model(3, 2, hidden=4, dense=3, dropout_rate=0.2, seed=1)
        cfg = TrainConfig(learning_rate=0.01, epochs=2, seed=seed)
        return train(examples, examples, m, cfg)

    m1, h1 = run(5)
    m2, h2 = run(5)
    m3, _ = run(6)
    for k, t in m1.tensors().items():
        assert np.array_equal(t, m2.tensors()[k])
    assert [r.train_loss for r in h1] == [r.train_loss for r in h2]
    assert any(not np.array_equal(t, m3.tensors()[k]) for k, t in m1.tensors().items())


def test_train_split_validation():
    m = init_model(3, 2, hidden=4, dense=3, seed=1)
    cfg = TrainConfig(epochs=1)
    good = toy_sequence_examples(2, 2, 5, 3, seed=0)
    with pytest.raises(EmptySplitError):
        train([], good, m, cfg)
    bad_dim = toy_sequence_examples(2, 2, 5, 4, seed=0)
    with pytest.raises(DimensionMismatchError):
        train(bad_dim, good, m, cfg)
