"""Native probabilistic classifier: one L2-regularized logistic head per criterion.

Trained with seeded mini-batch gradient descent over hashed unigram features.
This is the in-process stand-in for the fine-tuned encoders used at larger
scale; it emits probabilities with the same semantics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .criteria import CRITERIA, Criterion
from .errors import DegenerateHead
from .features import DEFAULT_DIMENSION, FeatureVector, context_text, featurize

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    dimension: int = DEFAULT_DIMENSION
    learning_rate: float = 0.5
    epochs: int = 40
    l2: float = 1e-4
    batch_size: int | None = 64  # None = full batch
    seed: int = 0


@dataclass(frozen=True)
class TrainingExample:
    sentence: str
    context: str
    labels: dict[str, bool]  # criterion value -> gold relevance


@dataclass
class NativeModel:
    """Per-criterion weight vectors and biases over a shared hashed feature space."""

    dimension: int
    config: TrainConfig
    weights: dict[Criterion, np.ndarray]
    biases: dict[Criterion, float]
    final_losses: dict[Criterion, float] = field(default_factory=dict)
    loss_history: dict[Criterion, list[float]] = field(default_factory=dict)  # not persisted

    def raw_score(self, features: FeatureVector, criterion: Criterion) -> float:
        w = self.weights[criterion]
        score = self.biases[criterion]
        for index, value in features.items():
            score += w[index] * value
        return score

    def probability(self, features: FeatureVector, criterion: Criterion) -> float:
        return _sigmoid(self.raw_score(features, criterion))

    def featurize(self, sentence_text: str, before_text: str = "", after_text: str = "") -> FeatureVector:
        return featurize(sentence_text, context_text(before_text, after_text), self.dimension)

    def save(self, path: str | Path) -> None:
        """Write a versioned sparse dump; round-trips exactly."""
        heads = {}
        for criterion in CRITERIA:
            w = self.weights[criterion]
            nz = np.nonzero(w)[0]
            heads[criterion.value] = {
                "bias": self.biases[criterion],
                "indices": [int(i) for i in nz],
                "values": [float(w[i]) for i in nz],
                "final_loss": self.final_losses.get(criterion),
            }
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "dimension": self.dimension,
            "config": {
                "dimension": self.config.dimension,
                "learning_rate": self.config.learning_rate,
                "epochs": self.config.epochs,
                "l2": self.config.l2,
                "batch_size": self.config.batch_size,
                "seed": self.config.seed,
            },
            "heads": heads,
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NativeModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format: {payload.get('format_version')}")
        dimension = payload["dimension"]
        config = TrainConfig(**payload["config"])
        weights: dict[Criterion, np.ndarray] = {}
        biases: dict[Criterion, float] = {}
        final_losses: dict[Criterion, float] = {}
        for key, head in payload["heads"].items():
            criterion = Criterion(key)
            w = np.zeros(dimension)
            w[head["indices"]] = head["values"]
            weights[criterion] = w
            biases[criterion] = head["bias"]
            if head.get("final_loss") is not None:
                final_losses[criterion] = head["final_loss"]
        return cls(
            dimension=dimension,
            config=config,
            weights=weights,
            biases=biases,
            final_losses=final_losses,
        )


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def _sigmoid_vec(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _pad_features(featurized: list[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    """Row-pad sparse vectors to (n, max_len) index/value arrays; padding is index 0, value 0."""
    width = max((len(f) for f in featurized), default=1) or 1
    idx = np.zeros((len(featurized), width), dtype=np.int64)
    val = np.zeros((len(featurized), width))
    for i, f in enumerate(featurized):
        if f:
            idx[i, : len(f)] = np.fromiter(f.keys(), np.int64, len(f))
            val[i, : len(f)] = np.fromiter(f.values(), np.float64, len(f))
    return idx, val


def _scores(v: np.ndarray, scale: float, b: float, idx: np.ndarray, val: np.ndarray) -> np.ndarray:
    return b + scale * np.einsum("ij,ij->i", v[idx], val)


def _head_loss(
    v: np.ndarray, scale: float, b: float, idx: np.ndarray, val: np.ndarray, y: np.ndarray, l2: float
) -> float:
    """Mean log-loss plus (l2/2)||w||^2, computed stably."""
    z = _scores(v, scale, b, idx, val)
    m = z * (2.0 * y - 1.0)
    losses = np.maximum(-m, 0.0) + np.log1p(np.exp(-np.abs(m)))
    return float(losses.mean() + 0.5 * l2 * scale * scale * float(v @ v))


def train_native(examples: list[TrainingExample], config: TrainConfig = TrainConfig()) -> NativeModel:
    """Fit all nine heads by mini-batch gradient descent on the logistic loss.

    Deterministic for a fixed seed. Raises DegenerateHead for any criterion
    whose labels are single-class. Per-epoch losses are recorded per head;
    `final_losses` keeps the last value. L2 decay is carried as a scalar
    multiplier on the weight vector, so each step is an exact gradient step
    on the regularized objective.
    """
    if not examples:
        raise ValueError("no training examples")
    for criterion in CRITERIA:
        labels = [ex.labels.get(criterion.value, False) for ex in examples]
        if all(labels) or not any(labels):
            raise DegenerateHead(criterion)

    featurized = [featurize(ex.sentence, ex.context, config.dimension) for ex in examples]
    idx, val = _pad_features(featurized)

    n = len(examples)
    batch = config.batch_size if config.batch_size else n
    lr = config.learning_rate
    weights: dict[Criterion, np.ndarray] = {}
    biases: dict[Criterion, float] = {}
    final_losses: dict[Criterion, float] = {}
    loss_history: dict[Criterion, list[float]] = {}

    for head_number, criterion in enumerate(CRITERIA):
        y = np.array([1.0 if ex.labels.get(criterion.value, False) else 0.0 for ex in examples])
        v = np.zeros(config.dimension)
        scale = 1.0
        b = 0.0
        rng = np.random.default_rng(config.seed + head_number)
        history = [_head_loss(v, scale, b, idx, val, y, config.l2)]
        for _ in range(config.epochs):
            order = rng.permutation(n) if batch < n else np.arange(n)
            for start in range(0, n, batch):
                chosen = order[start : start + batch]
                bidx, bval = idx[chosen], val[chosen]
                err = _sigmoid_vec(_scores(v, scale, b, bidx, bval)) - y[chosen]
                if config.l2:
                    scale *= 1.0 - lr * config.l2
                np.add.at(v, bidx, (-lr / (len(chosen) * scale)) * err[:, None] * bval)
                b -= lr * float(err.mean())
            history.append(_head_loss(v, scale, b, idx, val, y, config.l2))
        weights[criterion] = scale * v
        biases[criterion] = b
        final_losses[criterion] = history[-1]
        loss_history[criterion] = history

    return NativeModel(
        dimension=config.dimension,
        config=config,
        weights=weights,
        biases=biases,
        final_losses=final_losses,
        loss_history=loss_history,
    )
