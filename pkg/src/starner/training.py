"""One-sentence-per-step training with warmup-decay and gradient clipping.

The optimizer is adaptive-moment with decoupled weight decay over the
store's flat master buffers.  The learning rate rises linearly over the
first tenth of the planned steps and then decays linearly toward zero.
Gradients are clipped by global norm before every update.  Everything is
single-threaded and fully determined by the model seed, so two runs over
the same data produce bit-identical loss traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import Sentence, lint_dataset
from .metrics import EvalReport, evaluate
from .model import NestedNerModel
from .numerics.tensor import backward


class TrainingError(RuntimeError):
    """Training cannot proceed (bad data or a diverged loss)."""


class AdamW:
    """Adaptive moments with decoupled weight decay on one flat buffer."""

    def __init__(
        self,
        values: np.ndarray,
        grads: np.ndarray,
        weight_decay: float = 0.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.values = values
        self.grads = grads
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros_like(values)
        self.v = np.zeros_like(values)
        self.t = 0

    def step(self, lr: float) -> None:
        self.t += 1
        self.m += (1 - self.beta1) * (self.grads - self.m)
        self.v += (1 - self.beta2) * (self.grads**2 - self.v)
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        self.values -= lr * (
            m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * self.values
        )


def schedule_scale(step: int, total_steps: int, warmup_fraction: float = 0.1) -> float:
    """Linear warmup to 1 over the first fraction, then linear decay."""
    if not 0 <= step < total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps})")
    warmup = max(1, int(round(warmup_fraction * total_steps)))
    if step < warmup:
        return (step + 1) / warmup
    if total_steps == warmup:
        return 1.0
    return (total_steps - step) / (total_steps - warmup)


def clip_gradients(grads: np.ndarray, max_norm: float) -> float:
    """Scale the flat gradient to the norm cap; returns the original norm."""
    norm = float(np.sqrt(np.sum(grads**2)))
    if max_norm > 0 and norm > max_norm:
        grads *= max_norm / norm
    return norm


def dataset_f1(model: NestedNerModel, dataset: Sequence[Sentence]) -> float:
    return evaluate_model(model, dataset).micro.f1


def evaluate_model(
    model: NestedNerModel, dataset: Sequence[Sentence]
) -> EvalReport:
    gold = [sentence.entities for sentence in dataset]
    predicted = [
        model.predict(sentence.tokens, sentence.pos).union for sentence in dataset
    ]
    return evaluate(gold, predicted, model.config.type_names)


@dataclass
class TrainResult:
    losses: list[float] = field(default_factory=list)
    epochs_run: int = 0
    stopped_early: bool = False
    final_train_f1: float | None = None


def train(
    model: NestedNerModel,
    dataset: Sequence[Sentence],
    *,
    epochs: int | None = None,
    learning_rate: float | None = None,
    clip_norm: float = 1.0,
    warmup_fraction: float = 0.1,
    shuffle: bool = True,
    early_stop_f1: float | None = None,
    eval_every: int = 10,
    on_epoch: Callable[[int, float], None] | None = None,
) -> TrainResult:
    """Optimize the model in place; returns the per-step loss trace.

    ``early_stop_f1`` checks the training-set micro-F1 every ``eval_every``
    epochs and stops once the threshold is met — a harness convenience that
    never changes any completed update.
    """
    if not dataset:
        raise TrainingError("dataset is empty")
    problems = lint_dataset(dataset)
    if problems:
        raise TrainingError(f"dataset is not codec-clean: {problems[0]}")
    epochs = model.config.epochs if epochs is None else epochs
    learning_rate = (
        model.config.learning_rate if learning_rate is None else learning_rate
    )
    store = model.store
    optimizer = AdamW(
        store.flat_values, store.flat_grads, weight_decay=model.config.weight_decay
    )
    order_rng = np.random.default_rng([model.config.seed, 1])
    total_steps = epochs * len(dataset)
    result = TrainResult()
    step = 0
    for epoch in range(epochs):
        if shuffle:
            order = order_rng.permutation(len(dataset))
        else:
            order = np.arange(len(dataset))
        for index in order:
            sentence = dataset[int(index)]
            store.zero_grad()
            loss = model.sentence_loss(sentence)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingError(
                    f"non-finite loss at sentence {int(index)} (epoch {epoch})"
                )
            result.losses.append(value)
            backward(loss, store.parameters())
            clip_gradients(store.flat_grads, clip_norm)
            optimizer.step(learning_rate * schedule_scale(step, total_steps,
                                                          warmup_fraction))
            step += 1
        result.epochs_run = epoch + 1
        mean_loss = float(np.mean(result.losses[-len(dataset):]))
        if on_epoch is not None:
            on_epoch(epoch, mean_loss)
        if early_stop_f1 is not None and (epoch + 1) % eval_every == 0:
            score = dataset_f1(model, dataset)
            result.final_train_f1 = score
            if score >= early_stop_f1:
                result.stopped_early = True
                return result
    return result
