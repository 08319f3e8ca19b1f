"""Mini-batch SGD with early stopping on development loss."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import DivergenceError
from .model import Batch, Example, ModelConfig, ModelParams, forward_loss, loss_and_gradients

logger = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_loss: float
    wall_seconds: float


@dataclass
class TrainingLog:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "train_loss", "dev_loss", "wall_seconds"])
            for r in self.records:
                writer.writerow([r.epoch, repr(r.train_loss), repr(r.dev_loss), f"{r.wall_seconds:.3f}"])


def batches(config: ModelConfig, examples: Sequence[Example], rng=None) -> list[Batch]:
    order = np.arange(len(examples))
    if rng is not None:
        rng.shuffle(order)
    size = config.batch_size
    return [Batch(config, [examples[i] for i in order[k : k + size]]) for k in range(0, len(order), size)]


def dataset_loss(params: ModelParams, config: ModelConfig, examples: Sequence[Example]) -> float:
    """Token-weighted mean loss over a dataset, dropout off."""
    total, tokens = 0.0, 0
    for batch in batches(config, examples):
        total += forward_loss(params, config, batch) * batch.num_tokens
        tokens += batch.num_tokens
    return total / tokens if tokens else 0.0


def sgd_step(params: ModelParams, grads: ModelParams, lr: float) -> None:
    if lr == 0.0:
        return
    for name, g in grads.items():
        params.tensors[name] -= lr * g


def train(
    params: ModelParams,
    config: ModelConfig,
    train_set: Sequence[Example],
    dev_set: Sequence[Example],
    max_epochs: int | None = None,
    dev_loss_fn: Callable[[ModelParams], float] | None = None,
    patience: int | None = None,
) -> tuple[ModelParams, TrainingLog]:
    """Train until the development loss rises ``patience`` epochs in a row.

    Returns a copy of the parameters from the epoch with the lowest
    development loss together with the per-epoch log. ``params`` is updated
    in place.
    """
    if not train_set or not dev_set:
        raise ValueError("training and development sets must be non-empty")
    max_epochs = config.max_epochs if max_epochs is None else max_epochs
    patience = config.patience if patience is None else patience
    if dev_loss_fn is None:
        dev_loss_fn = lambda p: dataset_loss(p, config, dev_set)  # noqa: E731
    rng = np.random.default_rng(config.seed)
    log = TrainingLog()
    best_loss = math.inf
    best = params.copy()
    bad_epochs = 0
    for epoch in range(1, max_epochs + 1):
        started = time.perf_counter()
        total, tokens = 0.0, 0
        for index, batch in enumerate(batches(config, train_set, rng)):
            # overflow is detected explicitly below, so numpy need not warn about it
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = loss_and_gradients(params, config, batch, rng)
                if not math.isfinite(loss):
                    raise DivergenceError(f"non-finite loss in epoch {epoch}, batch {index}", epoch, index)
                sgd_step(params, grads, config.learning_rate)
            if not params.all_finite():
                raise DivergenceError(f"non-finite parameters after epoch {epoch}, batch {index}", epoch, index)
            total += loss * batch.num_tokens
            tokens += batch.num_tokens
        dev_loss = float(dev_loss_fn(params))
        if not math.isfinite(dev_loss):
            raise DivergenceError(f"non-finite development loss in epoch {epoch}", epoch)
        record = EpochRecord(epoch, total / tokens if tokens else 0.0, dev_loss, time.perf_counter() - started)
        log.records.append(record)
        logger.info("epoch %d train %.4f dev %.4f", epoch, record.train_loss, dev_loss)
        if dev_loss < best_loss:
            best_loss = dev_loss
            best = params.copy()
            log.best_epoch = epoch
            bad_epochs = 0
        elif dev_loss > best_loss:
            bad_epochs += 1
            if bad_epochs >= patience:
                log.stopped_early = True
                break
    return best, log
