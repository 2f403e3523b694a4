import numpy as np
import pytest

from conftest import fd_gradcheck, toy_sequence_examples
from neurospeech import nn
from neurospeech.distill import (
    DistillConfig,
    SoftTargetSet,
    grid_sweep,
    soft_targets,
    soften,
    student_dlogits,
    student_loss,
    student_loss_and_grads,
    train_student,
)
from neurospeech.errors import IdMismatchError, MissingSoftTargetError
from neurospeech.types import LabeledExample


def test_config_validation():
    DistillConfig(temperature=1.0, lam=0.0)
    DistillConfig(temperature=10.0, lam=1.0)
    with pytest.raises(ValueError):
        DistillConfig(temperature=0.0, lam=0.5)
    with pytest.raises(ValueError):
        DistillConfig(temperature=2.0, lam=1.5)
    with pytest.raises(ValueError):
        DistillConfig(temperature=2.0, lam=-0.1)


def test_soften_unit_temperature_is_softmax():
    logits = np.array([1.5, -0.3, 0.8])
    assert np.array_equal(soften(logits, 1.0), nn.softmax(logits))


def test_soften_raises_entropy_with_temperature():
    logits = np.array([3.0, 1.0, 0.0])

    def entropy(p):
        return -np.sum(p * np.log(p))

    ents = [entropy(soften(logits, t)) for t in (1.0, 2.0, 5.0, 10.0)]
    assert all(b > a for a, b in zip(ents, ents[1:]))
    assert np.allclose(soften(logits, 1e9), 1.0 / 3.0, atol=1e-6)


def test_lambda_endpoints_are_exact():
    logits = np.array([0.7, -1.2, 0.4])
    teacher = np.array([2.0, 0.1, -0.5])
    hard_only = DistillConfig(temperature=4.0, lam=0.0)
    soft_only = DistillConfig(temperature=4.0, lam=1.0)

    ce = nn.cross_entropy(nn.softmax(logits), 1)
    assert student_loss(logits, 1, teacher, hard_only) == ce
    d_hard = nn.softmax(logits)
    d_hard[1] -= 1.0
    assert np.array_equal(student_dlogits(logits, 1, teacher, hard_only), d_hard)

    d_soft = (soften(logits, 4.0) - soften(teacher, 4.0)) / 4.0
    assert np.array_equal(student_dlogits(logits, 1, teacher, soft_only), d_soft)


def test_matching_teacher_gives_zero_soft_gradient():
    logits = np.array([0.9, -0.2, 1.1])
    cfg = DistillConfig(temperature=3.0, lam=1.0)
    assert np.allclose(student_dlogits(logits, 0, logits.copy(), cfg), 0.0, atol=1e-15)


def test_blend_is_convex_combination():
    logits = np.array([0.7, -1.2, 0.4])
    teacher = np.array([2.0, 0.1, -0.5])
    l0 = student_loss(logits, 2, teacher, DistillConfig(temperature=2.0, lam=0.0))
    l1 = student_loss(logits, 2, teacher, DistillConfig(temperature=2.0, lam=1.0))
    mid = student_loss(logits, 2, teacher, DistillConfig(temperature=2.0, lam=0.25))
    assert mid == pytest.approx(0.75 * l0 + 0.25 * l1, rel=1e-12)


def test_student_gradients_match_finite_differences(rng):
    m = nn.init_model(2, 3, hidden=3, dense=2, dropout_rate=0.0, seed=0)
    for t in m.tensors().values():
        t += rng.normal(0.0, 0.3, t.shape)
    ex = LabeledExample("a", rng.standard_normal((4, 2)), 1)
    teacher_logits = rng.standard_normal(3)
    dcfg = DistillConfig(temperature=2.0, lam=0.2)

    def loss_fn():
        return student_loss_and_grads(m, ex, teacher_logits, dcfg)

    assert fd_gradcheck(loss_fn, m.tensors()) < 1e-4


def test_soft_targets_store_raw_logits(rng):
    m = nn.init_model(3, 2, hidden=4, dense=3, dropout_rate=0.0, seed=0)
    split = toy_sequence_examples(2, 2, 5, 3, seed=1)
    targets = soft_targets(m, split)
    assert len(targets) == len(split)
    for ex in split:
        _, cache = nn.forward(m, ex.features)
        assert np.array_equal(targets.get(ex.example_id), cache["logits"])


def test_soft_targets_duplicate_id_rejected(rng):
    m = nn.init_model(3, 2, hidden=4, dense=3, seed=0)
    ex = LabeledExample("same", rng.standard_normal((4, 3)), 0)
    with pytest.raises(IdMismatchError):
        soft_targets(m, [ex, ex])


def test_missing_target_raises():
    targets = SoftTargetSet({"a": np.zeros(2)})
    with pytest.raises(MissingSoftTargetError):
        targets.get("b")
    split = toy_sequence_examples(2, 2, 4, 3, seed=0)
    cfg = nn.TrainConfig(epochs=1, seed=0)
    with pytest.raises(MissingSoftTargetError):
        train_student(split, split, targets, 2, DistillConfig(2.0, 0.5), cfg,
                      hidden=3, dense=2)


def test_lam_zero_trajectory_matches_plain_training():
    split = toy_sequence_examples(3, 2, 5, 3, seed=2)
    cfg = nn.TrainConfig(learning_rate=0.01, epochs=3, seed=9)

    teacher = nn.init_model(3, 2, hidden=4, dense=3, dropout_rate=0.0, seed=7)
    targets = soft_targets(teacher, split)
    student, s_hist = train_student(split, split, targets, 2,
                                    DistillConfig(temperature=5.0, lam=0.0), cfg,
                                    hidden=4, dense=3, dropout_rate=0.2)

    baseline = nn.init_model(3, 2, hidden=4, dense=3, pooling="last",
                             dropout_rate=0.2, seed=cfg.seed)
    base, b_hist = nn.train(split, split, baseline, cfg)

    for k, t in student.tensors().items():
        assert np.array_equal(t, base.tensors()[k])
    assert [r.train_loss for r in s_hist] == [r.train_loss for r in b_hist]


def test_grid_sweep_order_and_best():
    split = toy_sequence_examples(3, 2, 4, 3, seed=3)
    teacher = nn.init_model(3, 2, hidden=4, dense=3, dropout_rate=0.0, seed=1)
    targets = soft_targets(teacher, split)
    cfg = nn.TrainConfig(learning_rate=0.01, epochs=1, seed=4)
    result = grid_sweep(split, split, split, targets,
                        temperatures=[1.0, 2.0], lambdas=[0.0, 0.5],
                        n_classes=2, cfg=cfg, hidden=4, dense=3)
    assert [(c.temperature, c.lam) for c in result.cells] == [
        (1.0, 0.0), (1.0, 0.5), (2.0, 0.0), (2.0, 0.5)]
    best_val = max(c.val_acc for c in result.cells)
    assert result.best.val_acc == best_val
    # earliest cell wins a tie
    first_at_best = next(i for i, c in enumerate(result.cells) if c.val_acc == best_val)
    assert result.best_index == first_at_best


def test_grid_sweep_empty_grid_rejected():
    split = toy_sequence_examples(2, 2, 4, 3, seed=0)
    targets = soft_targets(nn.init_model(3, 2, hidden=3, dense=2, seed=0), split)
    with pytest.raises(ValueError):
        grid_sweep(split, split, split, targets, [], [0.5], 2,
                   nn.TrainConfig(epochs=1))


def test_grid_sweep_parallel_matches_serial():
    split = toy_sequence_examples(2, 2, 4, 3, seed=5)
    teacher = nn.init_model(3, 2, hidden=3, dense=2, dropout_rate=0.0, seed=2)
    targets = soft_targets(teacher, split)
    cfg = nn.TrainConfig(learning_rate=0.01, epochs=1, seed=6)
    serial = grid_sweep(split, split, split, targets, [1.0, 3.0], [0.0, 1.0],
                        2, cfg, hidden=3, dense=2)
    parallel = grid_sweep(split, split, split, targets, [1.0, 3.0], [0.0, 1.0],
                          2, cfg, hidden=3, dense=2, jobs=2)
    for a, b in zip(serial.cells, parallel.cells):
        assert (a.temperature, a.lam, a.train_acc, a.val_acc, a.test_acc) == \
            (b.temperature, b.lam, b.train_acc, b.val_acc, b.test_acc)
    assert serial.best_index == parallel.best_index
