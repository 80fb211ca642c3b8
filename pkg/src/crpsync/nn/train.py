"""Mini-batch Adam training with validation-F1 checkpointing."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..dataset import SplitDataset
from ..errors import NonFiniteLoss, TooFewExamples
from ..evaluation import Metrics, confusion
from .layers import weighted_bce
from .model import ArchConfig, ModelParams, backward, build_model, classify, forward, predict
from .optim import AdamState, adam_step, lr_at_epoch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 128
    lr: float = 0.01
    lr_factor: float = 5.0
    lr_period: int = 40
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    dtype: str = "float64"
    arch: ArchConfig = ArchConfig()


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    train_f1: float
    validation: Metrics


@dataclass
class TrainReport:
    history: list = field(default_factory=list)
    best_epoch: int = -1
    params: ModelParams | None = None
    class_weights: tuple = (1.0, 1.0)

    @property
    def best_validation(self) -> Metrics:
        return self.history[self.best_epoch].validation


def train(dataset: SplitDataset, config: TrainConfig = TrainConfig(), log_every: int = 0) -> TrainReport:
    """Fit the CNN on ``dataset.train`` and keep the best validation-F1 epoch.

    Batches are taken in stored order every epoch (no shuffling), so a run
    is fully determined by the data and ``config.seed``. The returned
    ``params`` are those at the end of the first epoch reaching the highest
    validation F1.
    """
    tr, val = dataset.train, dataset.validation
    if len(tr) == 0 or len(val) == 0:
        raise TooFewExamples("training needs non-empty train and validation splits")
    weights = dataset.class_weights  # raises SingleClass
    dtype = np.dtype(config.dtype)
    model = build_model(tr.side, config.arch, config.seed, dtype)
    state = AdamState(
        lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps
    )
    # inputs stay boolean; each batch is cast on the fly to bound memory
    x_train = tr.inputs[:, None]
    y_train = tr.targets.astype(dtype)
    x_val = val.inputs

    report = TrainReport(class_weights=weights)
    best_f1 = -1.0
    n = len(tr)
    for epoch in range(config.epochs):
        state.lr = lr_at_epoch(epoch, config.lr, config.lr_factor, config.lr_period)
        total = 0.0
        batch_pred = np.empty(n, dtype=np.uint8)
        for start in range(0, n, config.batch_size):
            xb = x_train[start : start + config.batch_size].astype(dtype)
            yb = y_train[start : start + config.batch_size]
            logits, cache = forward(model, xb)
            loss, dlogits = weighted_bce(logits, yb, weights)
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss became {loss} at epoch {epoch}, batch starting at {start} "
                    f"(lr={state.lr:g}, max |logit|={np.max(np.abs(logits)):.3g})"
                )
            batch_pred[start : start + len(yb)] = logits >= 0
            total += loss * len(yb)
            adam_step(model.arrays, backward(model, cache, dlogits), state)
        val_metrics = confusion(classify(predict(model, x_val)), val.targets)
        train_f1 = confusion(batch_pred, tr.targets).f1
        report.history.append(EpochRecord(epoch, state.lr, total / n, train_f1, val_metrics))
        if val_metrics.f1 > best_f1:
            best_f1 = val_metrics.f1
            report.best_epoch = epoch
            report.params = model.copy()
        if log_every and (epoch % log_every == 0 or epoch == config.epochs - 1):
            logger.info(
                "epoch %d lr=%.2g loss=%.4f train_f1=%.3f val_f1=%.3f",
                epoch, state.lr, total / n, train_f1, val_metrics.f1,
            )
    if report.params is None:
        report.params = model.copy()
        report.best_epoch = config.epochs - 1
    return report


def evaluate(model: ModelParams, examples) -> Metrics:
    """Test-set metrics at the 0.5 probability threshold."""
    return confusion(classify(predict(model, examples.inputs)), examples.targets)
