"""Hashed n-gram features + regularized logistic regression.

A dependency-light text classifier over publication titles and abstracts:
token n-grams hashed into a fixed-dimension space, L2-normalized counts, and
mini-batch gradient descent on the logistic loss. Training is single-threaded
and fully determined by (data, config, seed); saved model files are
bit-identical across runs.
"""

from __future__ import annotations

import base64
import csv
import json
import re
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus.types import Label, LabelValue, Provenance, Publication
from .evalkit import MetricsReport, confusion, metrics

MODEL_FORMAT = "annobench-linear-model"
MODEL_VERSION = 1

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class ClassifierError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Featurizer and optimizer settings; defaults suit 10k-100k doc corpora."""

    dim: int = 2**18
    ngram_orders: tuple[int, ...] = (1, 2)
    epochs: int = 10
    learning_rate: float = 0.1
    l2: float = 1e-5
    batch_size: int = 64
    seed: int = 42
    threshold: float = 0.5
    max_train_samples: int = 30000
    max_eval_samples: int = 10000
    class_weighting: bool = False

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ClassifierError("dim must be >= 2")
        if not self.ngram_orders or any(n < 1 for n in self.ngram_orders):
            raise ClassifierError("ngram orders must be positive")
        for name in ("epochs", "learning_rate", "batch_size", "max_train_samples", "max_eval_samples"):
            if getattr(self, name) <= 0:
                raise ClassifierError(f"{name} must be positive")
        if self.l2 < 0:
            raise ClassifierError("l2 must be non-negative")
        if not 0.0 < self.threshold < 1.0:
            raise ClassifierError("threshold must be in (0, 1)")


@dataclass(frozen=True)
class FeatureVector:
    """Sparse L2-normalized hashed n-gram counts."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    @property
    def empty(self) -> bool:
        return len(self.indices) == 0


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def featurize(title: str, abstract: str, config: TrainConfig) -> FeatureVector:
    """Hash word n-grams of title+abstract into [0, dim) and L2-normalize.

    Deterministic across runs and processes (CRC32, not the salted builtin
    hash). Empty input yields the zero vector.
    """
    tokens = tokenize(f"{title} {abstract}")
    counts: dict[int, float] = {}
    for order in config.ngram_orders:
        for i in range(len(tokens) - order + 1):
            gram = " ".join(tokens[i : i + order])
            idx = zlib.crc32(gram.encode("utf-8")) % config.dim
            counts[idx] = counts.get(idx, 0.0) + 1.0
    if not counts:
        return FeatureVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), config.dim)
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64)
    values /= np.linalg.norm(values)
    return FeatureVector(indices, values, config.dim)


@dataclass
class EpochStats:
    epoch: int
    loss: float
    val_accuracy: float | None


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    config: TrainConfig
    history: list[EpochStats] = field(default_factory=list, repr=False)

    @property
    def threshold(self) -> float:
        return self.config.threshold


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _scores(X: Sequence[FeatureVector], w: np.ndarray, b: float) -> np.ndarray:
    z = np.full(len(X), b, dtype=np.float64)
    for i, fv in enumerate(X):
        if not fv.empty:
            z[i] += float(w[fv.indices] @ fv.values)
    return z


def logistic_loss(
    X: Sequence[FeatureVector],
    y: np.ndarray,
    w: np.ndarray,
    b: float,
    l2: float,
    sample_weights: np.ndarray | None = None,
    want_grad: bool = False,
):
    """Mean logistic loss with L2 penalty; optionally its exact gradient.

    loss = mean_i s_i * log(1 + exp(-y'_i z_i)) + l2/2 * ||w||^2 with
    y' in {-1, +1}. The gradient is returned densely so finite-difference
    checks can compare every coordinate.
    """
    z = _scores(X, w, b)
    signs = np.where(y > 0.5, 1.0, -1.0)
    weights = np.ones(len(X)) if sample_weights is None else sample_weights
    per_example = np.logaddexp(0.0, -signs * z)
    loss = float(np.mean(weights * per_example) + 0.5 * l2 * float(w @ w))
    if not want_grad:
        return loss
    p = _stable_sigmoid(z)
    residual = weights * (p - y) / len(X)
    grad_w = l2 * w.copy()
    for i, fv in enumerate(X):
        if not fv.empty:
            grad_w[fv.indices] += residual[i] * fv.values
    grad_b = float(np.sum(residual))
    return loss, grad_w, grad_b


def train_on_vectors(
    train_X: Sequence[FeatureVector],
    train_y: np.ndarray,
    val_X: Sequence[FeatureVector],
    val_y: np.ndarray | None,
    config: TrainConfig,
) -> LinearModel:
    """Mini-batch gradient descent on pre-featurized vectors."""
    if len(train_X) == 0:
        raise ClassifierError("training set is empty")
    classes = set(np.unique(train_y).tolist())
    if classes != {0.0, 1.0}:
        raise ClassifierError(f"training set must contain both classes, got labels {sorted(classes)}")

    dim = train_X[0].dim
    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    rng = np.random.default_rng(config.seed)

    sample_weights = None
    if config.class_weighting:
        pos = float(np.sum(train_y))
        neg = len(train_y) - pos
        weight_pos = len(train_y) / (2.0 * pos)
        weight_neg = len(train_y) / (2.0 * neg)
        sample_weights = np.where(train_y > 0.5, weight_pos, weight_neg)

    model = LinearModel(weights=w, bias=b, config=config)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_X))
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            X_batch = [train_X[i] for i in batch]
            y_batch = train_y[batch]
            z = _scores(X_batch, w, b)
            p = _stable_sigmoid(z)
            if sample_weights is None:
                residual = (p - y_batch) / len(batch)
            else:
                residual = sample_weights[batch] * (p - y_batch) / len(batch)
            # decay implements the l2 term of the gradient step
            if config.l2:
                w *= 1.0 - config.learning_rate * config.l2
            for i, fv in enumerate(X_batch):
                if not fv.empty:
                    w[fv.indices] -= config.learning_rate * residual[i] * fv.values
            b -= config.learning_rate * float(np.sum(residual))

        epoch_loss = logistic_loss(train_X, train_y, w, b, config.l2, sample_weights)
        if not np.isfinite(epoch_loss):
            raise ClassifierError(
                f"non-finite training loss at epoch {epoch} "
                f"(lr={config.learning_rate}, l2={config.l2}); lower the learning rate"
            )
        val_accuracy = None
        if val_y is not None and len(val_X):
            predictions = (_stable_sigmoid(_scores(val_X, w, b)) >= config.threshold).astype(float)
            val_accuracy = float(np.mean(predictions == val_y))
        model.history.append(EpochStats(epoch, epoch_loss, val_accuracy))

    model.weights = w
    model.bias = b
    return model


def _cap(pairs: list, cap: int, rng: np.random.Generator) -> list:
    """Deterministic truncation after a seeded shuffle."""
    order = rng.permutation(len(pairs))
    return [pairs[i] for i in order[: min(cap, len(pairs))]]


def train(
    train_set: Sequence[tuple[Publication, Label]],
    val_set: Sequence[tuple[Publication, Label]] | None,
    config: TrainConfig = TrainConfig(),
) -> LinearModel:
    """Fit the classifier on (publication, gold label) pairs.

    Sets are capped at max_train_samples / max_eval_samples by deterministic
    truncation after a seeded shuffle.
    """
    rng = np.random.default_rng(config.seed)
    train_pairs = _cap(list(train_set), config.max_train_samples, rng)
    val_pairs = _cap(list(val_set), config.max_eval_samples, rng) if val_set else []

    def vectors(pairs):
        X = [featurize(pub.title, pub.abstract, config) for pub, _ in pairs]
        y = np.array([1.0 if label.value is LabelValue.AI else 0.0 for _, label in pairs])
        return X, y

    train_X, train_y = vectors(train_pairs)
    if val_pairs:
        val_X, val_y = vectors(val_pairs)
    else:
        val_X, val_y = [], None
    return train_on_vectors(train_X, train_y, val_X, val_y, config)


def predict_vector(model: LinearModel, fv: FeatureVector) -> tuple[Label, float]:
    if fv.dim != len(model.weights):
        raise ClassifierError(
            f"feature dimension {fv.dim} does not match model dimension {len(model.weights)}"
        )
    z = model.bias + (float(model.weights[fv.indices] @ fv.values) if not fv.empty else 0.0)
    score = float(_stable_sigmoid(np.array([z]))[0])
    value = LabelValue.AI if score >= model.threshold else LabelValue.NON_AI
    return Label(value, Provenance.CLASSIFIER, confidence=score), score


def predict(model: LinearModel, pub: Publication) -> tuple[Label, float]:
    """Score one publication; AI iff sigmoid(w.x + b) >= threshold."""
    return predict_vector(model, featurize(pub.title, pub.abstract, model.config))


def evaluate(
    model: LinearModel,
    pairs: Sequence[tuple[Publication, Label]],
    slice: str | None = None,
) -> MetricsReport:
    """Confusion metrics of the model against gold labels, AI positive."""
    if not pairs:
        raise ClassifierError("cannot evaluate on an empty dataset")
    predicted_gold = [(predict(model, pub)[0], gold) for pub, gold in pairs]
    return metrics(confusion(predicted_gold), slice=slice)


# --- model files and training logs -------------------------------------------


def save_model(model: LinearModel, path: str | Path) -> None:
    nonzero = np.nonzero(model.weights)[0]
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": {
            "dim": model.config.dim,
            "ngram_orders": list(model.config.ngram_orders),
            "epochs": model.config.epochs,
            "learning_rate": model.config.learning_rate,
            "l2": model.config.l2,
            "batch_size": model.config.batch_size,
            "seed": model.config.seed,
            "threshold": model.config.threshold,
            "max_train_samples": model.config.max_train_samples,
            "max_eval_samples": model.config.max_eval_samples,
            "class_weighting": model.config.class_weighting,
        },
        "bias": model.bias,
        "weights": {
            "indices_b64": base64.b64encode(nonzero.astype("<i8").tobytes()).decode("ascii"),
            "values_b64": base64.b64encode(
                model.weights[nonzero].astype("<f8").tobytes()
            ).decode("ascii"),
        },
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LinearModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise ClassifierError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise ClassifierError(f"{path}: unsupported model version {doc.get('version')}")
    cfg = doc["config"]
    config = TrainConfig(
        dim=cfg["dim"],
        ngram_orders=tuple(cfg["ngram_orders"]),
        epochs=cfg["epochs"],
        learning_rate=cfg["learning_rate"],
        l2=cfg["l2"],
        batch_size=cfg["batch_size"],
        seed=cfg["seed"],
        threshold=cfg["threshold"],
        max_train_samples=cfg["max_train_samples"],
        max_eval_samples=cfg["max_eval_samples"],
        class_weighting=cfg["class_weighting"],
    )
    indices = np.frombuffer(base64.b64decode(doc["weights"]["indices_b64"]), dtype="<i8")
    values = np.frombuffer(base64.b64decode(doc["weights"]["values_b64"]), dtype="<f8")
    weights = np.zeros(config.dim, dtype=np.float64)
    weights[indices] = values
    return LinearModel(weights=weights, bias=float(doc["bias"]), config=config)


def with_threshold(model: LinearModel, threshold: float) -> LinearModel:
    return LinearModel(
        weights=model.weights,
        bias=model.bias,
        config=replace(model.config, threshold=threshold),
        history=model.history,
    )


def save_training_log(history: Sequence[EpochStats], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss", "val_accuracy"])
        for stats in history:
            writer.writerow(
                [stats.epoch, repr(stats.loss), "" if stats.val_accuracy is None else repr(stats.val_accuracy)]
            )
