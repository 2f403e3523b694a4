"""Teacher-student training with softened targets.

A teacher is trained on the privileged feature stream (fused EEG+MFCC),
its raw output logits are stored per example, and a student seeing only
MFCC features is trained on a blend of the usual hard cross-entropy and
a soft cross-entropy against the teacher's temperature-softened outputs:

    loss = (1 - lam) * hard + lam * soft
    soft = - sum_i softmax(teacher / T)_i * log softmax(student / T)_i

Raw logits are stored (not probabilities) so one stored set serves every
temperature in a sweep. Both teacher and student pool the last hidden
state.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import nn
from .errors import IdMismatchError, MissingSoftTargetError
from .types import LabeledExample

_PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class DistillConfig:
    temperature: float
    lam: float

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")


@dataclass
class SoftTargetSet:
    """Teacher logits keyed by example id."""

    logits: dict[str, np.ndarray] = field(default_factory=dict)

    def get(self, example_id: str) -> np.ndarray:
        try:
            return self.logits[example_id]
        except KeyError:
            raise MissingSoftTargetError(f"no stored teacher logits for example {example_id!r}") from None

    def __len__(self) -> int:
        return len(self.logits)


def soften(logits: np.ndarray, temperature: float) -> np.ndarray:
    """softmax(logits / T); T == 1 reduces to the plain softmax."""
    return nn.softmax(np.asarray(logits, dtype=np.float64) / temperature)


def soft_targets(teacher: nn.ModelParams, split: Sequence[LabeledExample]) -> SoftTargetSet:
    """Run the teacher in inference mode and record its raw logits per example."""
    store: dict[str, np.ndarray] = {}
    for ex in split:
        if ex.example_id in store:
            raise IdMismatchError(f"duplicate example id {ex.example_id!r} in split")
        _, cache = nn.forward(teacher, ex.features)
        store[ex.example_id] = cache["logits"].copy()
    return SoftTargetSet(store)


def student_loss(
    student_logits: np.ndarray,
    label: int,
    teacher_logits: np.ndarray,
    dcfg: DistillConfig,
) -> float:
    """Blended hard/soft loss value for one example."""
    hard = nn.cross_entropy(nn.softmax(student_logits), label)
    p_soft = soften(student_logits, dcfg.temperature)
    q = soften(teacher_logits, dcfg.temperature)
    soft = float(-np.sum(q * np.log(np.maximum(p_soft, _PROB_FLOOR))))
    return (1.0 - dcfg.lam) * hard + dcfg.lam * soft


def student_dlogits(
    student_logits: np.ndarray,
    label: int,
    teacher_logits: np.ndarray,
    dcfg: DistillConfig,
) -> np.ndarray:
    """Gradient of the blended loss with respect to the student logits.

    The hard term gives probs - onehot; the soft term, whose logits are
    scaled by 1/T before the softmax, gives (softened student - softened
    teacher) / T by the chain rule.
    """
    probs = nn.softmax(student_logits)
    d_hard = probs.copy()
    d_hard[label] -= 1.0
    d_soft = (soften(student_logits, dcfg.temperature) - soften(teacher_logits, dcfg.temperature)) / dcfg.temperature
    return (1.0 - dcfg.lam) * d_hard + dcfg.lam * d_soft


def student_loss_and_grads(
    m: nn.ModelParams,
    ex: LabeledExample,
    teacher_logits: np.ndarray,
    dcfg: DistillConfig,
    rng: np.random.Generator | None = None,
    dropout_mask: np.ndarray | None = None,
):
    """Loss and parameter gradients of the blended objective for one example."""
    train_mode = rng is not None or dropout_mask is not None
    _, cache = nn.forward(m, ex.features, train_mode=train_mode, rng=rng, dropout_mask=dropout_mask)
    logits = cache["logits"]
    loss = student_loss(logits, ex.label, teacher_logits, dcfg)
    grads = nn.backward_from_dlogits(m, cache, student_dlogits(logits, ex.label, teacher_logits, dcfg))
    return loss, grads


def train_teacher(
    train_split: Sequence[LabeledExample],
    val_split: Sequence[LabeledExample],
    n_classes: int,
    cfg: nn.TrainConfig,
    hidden: int = 128,
    dense: int = 64,
    dropout_rate: float = 0.2,
):
    """Plain cross-entropy training of a last-pooling model on fused features."""
    model = nn.init_model(
        input_dim=train_split[0].features.shape[1] if train_split else 1,
        n_classes=n_classes,
        hidden=hidden,
        dense=dense,
        pooling="last",
        dropout_rate=dropout_rate,
        seed=cfg.seed,
    )
    return nn.train(train_split, val_split, model, cfg)


def train_student(
    train_split: Sequence[LabeledExample],
    val_split: Sequence[LabeledExample],
    targets: SoftTargetSet,
    n_classes: int,
    dcfg: DistillConfig,
    cfg: nn.TrainConfig,
    hidden: int = 128,
    dense: int = 64,
    dropout_rate: float = 0.2,
):
    """Train a last-pooling student against stored teacher logits.

    Every training example must have a soft target. With lam == 0 the
    step gradient reduces exactly to plain cross-entropy, so the run is
    update-for-update identical to an undistilled student with the same
    seed.
    """
    for ex in train_split:
        targets.get(ex.example_id)

    def step(m: nn.ModelParams, ex: LabeledExample, rng: np.random.Generator):
        use_rng = rng if m.dropout_rate > 0.0 else None
        return student_loss_and_grads(m, ex, targets.get(ex.example_id), dcfg, rng=use_rng)

    model = nn.init_model(
        input_dim=train_split[0].features.shape[1] if train_split else 1,
        n_classes=n_classes,
        hidden=hidden,
        dense=dense,
        pooling="last",
        dropout_rate=dropout_rate,
        seed=cfg.seed,
    )
    return nn.train(train_split, val_split, model, cfg, step_fn=step)


@dataclass
class SweepCell:
    temperature: float
    lam: float
    train_acc: float
    val_acc: float
    test_acc: float


@dataclass
class SweepResult:
    cells: list[SweepCell]
    best_index: int

    @property
    def best(self) -> SweepCell:
        return self.cells[self.best_index]


def _run_cell(args) -> SweepCell:
    (train_split, val_split, test_split, targets, temperature, lam,
     n_classes, cfg, hidden, dense, dropout_rate) = args
    dcfg = DistillConfig(temperature=temperature, lam=lam)
    model, _ = train_student(
        train_split, val_split, targets, n_classes, dcfg, cfg,
        hidden=hidden, dense=dense, dropout_rate=dropout_rate,
    )
    return SweepCell(
        temperature=temperature,
        lam=lam,
        train_acc=nn.evaluate(model, train_split),
        val_acc=nn.evaluate(model, val_split),
        test_acc=nn.evaluate(model, test_split),
    )


def grid_sweep(
    train_split: Sequence[LabeledExample],
    val_split: Sequence[LabeledExample],
    test_split: Sequence[LabeledExample],
    targets: SoftTargetSet,
    temperatures: Sequence[float],
    lambdas: Sequence[float],
    n_classes: int,
    cfg: nn.TrainConfig,
    hidden: int = 128,
    dense: int = 64,
    dropout_rate: float = 0.2,
    jobs: int = 1,
) -> SweepResult:
    """Train one student per (temperature, lambda) cell, row-major order.

    All cells share the same training seed, so they differ only in the
    loss blend. The winning cell maximizes validation accuracy; ties go
    to the earliest cell in grid order, which makes the choice (and any
    parallel run) deterministic.
    """
    if not temperatures or not lambdas:
        raise ValueError("temperature and lambda grids must be non-empty")
    jobs_args = [
        (list(train_split), list(val_split), list(test_split), targets, t, lam,
         n_classes, cfg, hidden, dense, dropout_rate)
        for t in temperatures
        for lam in lambdas
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_run_cell, jobs_args))
    else:
        cells = [_run_cell(a) for a in jobs_args]
    best = 0
    for i, cell in enumerate(cells):
        if cell.val_acc > cells[best].val_acc:
            best = i
    return SweepResult(cells=cells, best_index=best)
