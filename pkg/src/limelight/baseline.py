"""In-process probability-emitting baseline: TF-IDF features into a
three-class softmax regression trained by mini-batch gradient descent.

Stands in for a heavyweight neural classifier at desk scale while
keeping the same shape: texts in, normalized probability rows out,
with a per-epoch classification report.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .corpus import CLASS_NAMES, ClassLabel, LabeledDocument, Vocabulary
from .errors import DataError

logger = logging.getLogger(__name__)

N_CLASSES = len(CLASS_NAMES)


@dataclass
class TrainConfig:
    epochs: int = 4
    learning_rate: float = 0.1
    l2: float = 1e-4
    batch_size: int = 64
    seed: int = 42

    def validate(self) -> None:
        if self.epochs < 1:
            raise DataError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise DataError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.l2 < 0:
            raise DataError(f"L2 strength must be >= 0, got {self.l2}")
        if self.batch_size < 1:
            raise DataError(f"batch size must be >= 1, got {self.batch_size}")


class TfidfModel:
    """Smoothed TF-IDF with L2-normalized rows.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1, term frequency is the raw
    count at transform time, and unseen tokens map to zero columns.
    """

    def __init__(self, vocabulary: Vocabulary, idf: np.ndarray):
        self.vocabulary = vocabulary
        self.idf = idf

    @classmethod
    def fit(cls, docs: list[LabeledDocument]) -> "TfidfModel":
        vocabulary = Vocabulary.from_documents(docs)
        n = vocabulary.n_docs
        idf = np.ones(len(vocabulary))
        for token, i in vocabulary.index.items():
            idf[i] = math.log((1 + n) / (1 + vocabulary.doc_freq[token])) + 1.0
        return cls(vocabulary, idf)

    def transform_tokens(self, token_lists: list[tuple[str, ...]]) -> sparse.csr_matrix:
        data, indices, indptr = [], [], [0]
        index = self.vocabulary.index
        for tokens in token_lists:
            counts: dict[int, int] = {}
            for token in tokens:
                col = index.get(token)
                if col is not None:
                    counts[col] = counts.get(col, 0) + 1
            row = sorted(counts.items())
            values = np.array([tf * self.idf[col] for col, tf in row])
            norm = np.linalg.norm(values)
            if norm > 0:
                values = values / norm
            indices.extend(col for col, _ in row)
            data.extend(values)
            indptr.append(len(indices))
        return sparse.csr_matrix(
            (data, indices, indptr), shape=(len(token_lists), len(self.vocabulary))
        )

    def transform(self, docs: list[LabeledDocument]) -> sparse.csr_matrix:
        return self.transform_tokens([doc.tokens for doc in docs])


@dataclass
class SoftmaxModel:
    weights: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray     # (n_classes,)

    def logits(self, features) -> np.ndarray:
        return np.asarray(features @ self.weights.T) + self.bias

    def predict_proba(self, features) -> np.ndarray:
        """Probability rows; each sums to 1 and is strictly positive."""
        if features.shape[1] != self.weights.shape[1]:
            raise DataError(
                f"feature dimension {features.shape[1]} does not match "
                f"model dimension {self.weights.shape[1]}"
            )
        return _softmax(self.logits(features))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _one_hot(labels: np.ndarray) -> np.ndarray:
    out = np.zeros((len(labels), N_CLASSES))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def loss_and_gradients(weights: np.ndarray, bias: np.ndarray, features,
                       labels: np.ndarray, l2: float):
    """Mean cross-entropy plus 0.5*l2*||W||^2 and its exact gradients.

    The bias is not penalized. Returns (loss, grad_W, grad_b).
    """
    n = features.shape[0]
    logits = np.asarray(features @ weights.T) + bias
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_proba = shifted - log_z[:, None]
    ce = -log_proba[np.arange(n), labels].mean()
    loss = ce + 0.5 * l2 * float((weights ** 2).sum())

    delta = np.exp(log_proba) - _one_hot(labels)  # (n, classes)
    grad_w = np.asarray((features.T @ delta)).T / n + l2 * weights
    grad_b = delta.sum(axis=0) / n
    return loss, grad_w, grad_b


def train_softmax(features, labels: np.ndarray, config: TrainConfig,
                  epoch_callback=None) -> SoftmaxModel:
    """Mini-batch gradient descent; deterministic for a fixed config.

    Weights start at zero (the objective is convex, so no symmetry
    breaking is needed) and batches are shuffled from a generator
    seeded by config.seed. `epoch_callback(model, epoch, loss)` runs
    after each epoch with the full-train loss.
    """
    config.validate()
    n, n_features = features.shape
    if n != len(labels):
        raise DataError(f"{n} feature rows but {len(labels)} labels")
    present = set(int(v) for v in labels)
    missing = [CLASS_NAMES[c] for c in range(N_CLASSES) if c not in present]
    if missing:
        raise DataError(f"training set has no examples for: {', '.join(missing)}")

    weights = np.zeros((N_CLASSES, n_features))
    bias = np.zeros(N_CLASSES)
    rng = np.random.default_rng(config.seed)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grad_w, grad_b = loss_and_gradients(
                weights, bias, features[batch], labels[batch], config.l2)
            if not math.isfinite(loss):
                raise DataError(
                    f"non-finite loss at epoch {epoch}, batch offset {start}: "
                    f"{loss!r} (learning rate too high?)"
                )
            weights -= config.learning_rate * grad_w
            bias -= config.learning_rate * grad_b
        epoch_loss, _, _ = loss_and_gradients(weights, bias, features, labels, config.l2)
        if not math.isfinite(epoch_loss):
            raise DataError(f"non-finite training loss after epoch {epoch}")
        logger.info("epoch %d: loss %.6f", epoch, epoch_loss)
        if epoch_callback is not None:
            epoch_callback(SoftmaxModel(weights.copy(), bias.copy()), epoch, epoch_loss)
    return SoftmaxModel(weights, bias)


@dataclass
class EpochMetrics:
    epoch: int
    precision: float
    recall: float
    accuracy: float
    f1: float


@dataclass
class ClassReport:
    """Per-epoch macro metrics, displayed rounded to three decimals."""

    rows: list[EpochMetrics] = field(default_factory=list)

    def render_text(self) -> str:
        lines = ["Epoch  Precision  Recall  Accuracy  F1 Score"]
        for r in self.rows:
            lines.append(
                f"{r.epoch:<5d}  {r.precision:<9.3f}  {r.recall:<6.3f}  "
                f"{r.accuracy:<8.3f}  {r.f1:.3f}"
            )
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"epochs": [
            {"epoch": r.epoch, "precision": round(r.precision, 3),
             "recall": round(r.recall, 3), "accuracy": round(r.accuracy, 3),
             "f1": round(r.f1, 3)}
            for r in self.rows
        ]}


def evaluate(model: SoftmaxModel, features, labels: np.ndarray,
             epoch: int = 1) -> EpochMetrics:
    """Macro precision/recall/F1 and accuracy for one model snapshot."""
    if features.shape[0] == 0:
        raise DataError("cannot evaluate on an empty set")
    predictions = model.predict_proba(features).argmax(axis=1)
    return metrics_from_predictions(labels, predictions, epoch)


def metrics_from_predictions(labels: np.ndarray, predictions: np.ndarray,
                             epoch: int = 1) -> EpochMetrics:
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
    for truth, pred in zip(labels, predictions):
        counts[truth, pred] += 1
    precisions, recalls = [], []
    for c in range(N_CLASSES):
        tp = counts[c, c]
        predicted = counts[:, c].sum()
        actual = counts[c, :].sum()
        if actual == 0:
            logger.warning("class %s absent from truth; recall reported as 0",
                           CLASS_NAMES[c])
        precisions.append(tp / predicted if predicted else 0.0)
        recalls.append(tp / actual if actual else 0.0)
    precision = float(np.mean(precisions))
    recall = float(np.mean(recalls))
    f1s = [
        (2 * p * r / (p + r)) if (p + r) > 0 else 0.0
        for p, r in zip(precisions, recalls)
    ]
    f1 = float(np.mean(f1s))
    accuracy = float(np.trace(counts) / counts.sum())
    return EpochMetrics(epoch=epoch, precision=precision, recall=recall,
                        accuracy=accuracy, f1=f1)


@dataclass
class BaselineClassifier:
    """Bundle of the fitted TF-IDF transform and the softmax model."""

    tfidf: TfidfModel
    softmax: SoftmaxModel

    def predict_proba_tokens(self, token_lists: list[tuple[str, ...]]) -> np.ndarray:
        return self.softmax.predict_proba(self.tfidf.transform_tokens(token_lists))


def train_baseline(train_docs: list[LabeledDocument],
                   eval_docs: list[LabeledDocument] | None = None,
                   config: TrainConfig | None = None
                   ) -> tuple[BaselineClassifier, ClassReport]:
    """Fit TF-IDF on the train split, train the softmax, report per epoch.

    The report is computed against eval_docs when given (the usual
    test-split setup), otherwise against the training documents.
    """
    config = config or TrainConfig()
    tfidf = TfidfModel.fit(train_docs)
    features = tfidf.transform(train_docs)
    labels = np.array([int(d.label) for d in train_docs])
    report_docs = eval_docs if eval_docs else train_docs
    report_features = tfidf.transform(report_docs)
    report_labels = np.array([int(d.label) for d in report_docs])

    report = ClassReport()

    def on_epoch(model: SoftmaxModel, epoch: int, _loss: float) -> None:
        report.rows.append(evaluate(model, report_features, report_labels, epoch))

    softmax = train_softmax(features, labels, config, epoch_callback=on_epoch)
    return BaselineClassifier(tfidf=tfidf, softmax=softmax), report


MODEL_FORMAT_VERSION = 1


def save_model(classifier: BaselineClassifier, path: str | Path) -> None:
    """Versioned JSON: {format_version, vocabulary, idf, W, b}."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "vocabulary": classifier.tfidf.vocabulary.index,
        "idf": classifier.tfidf.idf.tolist(),
        "W": classifier.softmax.weights.tolist(),
        "b": classifier.softmax.bias.tolist(),
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_model(path: str | Path) -> BaselineClassifier:
    path = Path(path)
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {path} is not valid JSON: {exc}") from None
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format_version: {version!r}")
    index = {str(k): int(v) for k, v in payload["vocabulary"].items()}
    vocabulary = Vocabulary(index=index, doc_freq={}, n_docs=0)
    idf = np.array(payload["idf"], dtype=float)
    weights = np.array(payload["W"], dtype=float)
    bias = np.array(payload["b"], dtype=float)
    if weights.shape != (N_CLASSES, len(index)) or bias.shape != (N_CLASSES,):
        raise DataError(f"model file {path} has inconsistent shapes")
    if not (np.isfinite(weights).all() and np.isfinite(bias).all() and np.isfinite(idf).all()):
        raise DataError(f"model file {path} contains non-finite parameters")
    return BaselineClassifier(
        tfidf=TfidfModel(vocabulary, idf),
        softmax=SoftmaxModel(weights=weights, bias=bias),
    )


def labels_array(docs: list[LabeledDocument]) -> np.ndarray:
    return np.array([int(d.label) for d in docs])


def label_of_index(i: int) -> ClassLabel:
    return ClassLabel(i)
