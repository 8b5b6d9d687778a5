"""Full-batch gradient descent for the reasoner on small labeled sets."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DivergedLoss, EmptyDataset, InputError, NonFiniteLoss
from .reasoner import Instance, ReasonerParams, loss_and_grads, random_instance, score_choices


@dataclass
class TrainConfig:
    K: int = 2
    h: int = 4
    d: int = 32
    lr: float = 0.05
    epochs: int = 500
    seed: int = 0


@dataclass
class LabeledQuestion:
    instances: list[Instance]
    label: int


def accuracy(dataset: Sequence[LabeledQuestion], params: ReasonerParams) -> float:
    # np.argmax keeps the lowest index on ties
    hits = [int(np.argmax(score_choices(q.instances, params).probs)) == q.label for q in dataset]
    return float(np.mean(hits))


def train_toy(dataset: Sequence[LabeledQuestion], config: TrainConfig):
    """Returns ``(params, curve)`` where ``curve[0]`` is the untrained accuracy
    and ``curve[e]`` the accuracy after epoch ``e``."""
    if not dataset:
        raise EmptyDataset("no training questions")
    for q in dataset:
        if not 0 <= q.label < len(q.instances):
            raise InputError(f"label {q.label} out of range for {len(q.instances)} choices")
    params = ReasonerParams.init(config.K, config.h, config.d, config.seed)
    curve = [accuracy(dataset, params)]
    for epoch in range(config.epochs):
        total = ReasonerParams.zeros(config.K, config.h, config.d)
        for q in dataset:
            try:
                _, grads = loss_and_grads(q.instances, q.label, params)
            except NonFiniteLoss as exc:
                raise DivergedLoss(f"epoch {epoch}: {exc}") from None
            for acc, g in zip(total.arrays(), grads.arrays()):
                acc += g
        for p, g in zip(params.arrays(), total.arrays()):
            p -= config.lr * g / len(dataset)
        if not all(np.all(np.isfinite(p)) for p in params.arrays()):
            raise DivergedLoss(f"non-finite parameters after epoch {epoch}")
        curve.append(accuracy(dataset, params))
    return params, curve


def make_separable_toy(n_questions: int = 10, n_choices: int = 4, n_facts: int = 2, d: int = 32,
                       seed: int = 0, signal: float = 0.15) -> list[LabeledQuestion]:
    """Random questions where the correct choice's vectors are shifted along one hidden direction.

    A linear read-out of the sequence vector along that direction separates
    every question, so a model that can pass ``x_cls`` through the gate can
    fit the set exactly.
    """
    rng = np.random.default_rng(seed)
    direction = rng.uniform(0.0, 1.0, d)
    direction /= np.linalg.norm(direction)
    dataset = []
    for _ in range(n_questions):
        label = int(rng.integers(n_choices))
        instances = []
        for j in range(n_choices):
            inst = random_instance(rng, n_facts, d)
            if j == label:
                inst.x_cls = inst.x_cls + signal * np.sqrt(d) * direction
                inst.features = inst.features + signal * np.sqrt(d) * direction
            instances.append(inst)
        dataset.append(LabeledQuestion(instances, label))
    return dataset
