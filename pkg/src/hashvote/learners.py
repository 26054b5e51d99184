"""Seeded, deterministic base text classifiers.

Two learner families stand in for an arbitrary training algorithm:

* ``naive_bayes``: multinomial naive Bayes over token counts with additive
  smoothing ``alpha``. Priors use add-one smoothing so every class score is
  finite even when a class is absent from the training data. Tokens unseen
  in training contribute nothing, so a text of only unseen tokens falls back
  to the priors. Closed form, order-free, and easy to check by hand.
* ``linear``: multiclass logistic regression over hashed bag-of-token counts
  (first-8-bytes-big-endian digest modulo the feature dimension), fit by
  full-batch gradient descent for a fixed epoch count from a seeded
  initialization.

Training is a pure function of (spec, data): the same inputs always produce
parameter-identical models. Training data containing a single class yields a
constant model that always predicts that class; an empty dataset is an
error. Predictions break score ties toward the smaller class index.

Models persist to a small self-describing binary container (magic string,
format version, learner kind, class count, parameter arrays as little-endian
64-bit floats); loading reproduces predictions bit-exactly.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from .corpus import LabeledDataset
from .errors import ConfigError, DataError
from .hashing import digest_int
from .partition import Text, canonical_word_id

LEARNER_KINDS = ("naive_bayes", "linear")
FEATURE_HASH_ALGORITHM = "md5"

_MAGIC = b"HVMODEL\x00"
_FORMAT_VERSION = 1
_KIND_CODES = {"constant": 0, "naive_bayes": 1, "linear": 2}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}


@dataclass(frozen=True)
class LearnerSpec:
    kind: str = "naive_bayes"
    alpha: float = 1.0
    learning_rate: float = 0.5
    epochs: int = 150
    feature_dim: int = 256
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in LEARNER_KINDS:
            raise ConfigError(f"unknown learner kind: {self.kind!r}")
        if not self.alpha > 0:
            raise ConfigError(f"smoothing alpha must be > 0, got {self.alpha}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.feature_dim < 1:
            raise ConfigError(f"feature dimension must be >= 1, got {self.feature_dim}")


def _argmax_label(scores: np.ndarray) -> int:
    # np.argmax returns the first maximal index: ties go to the smaller class.
    return int(np.argmax(scores)) + 1


class ConstantModel:
    """Degenerate model produced by single-class training data."""

    kind = "constant"

    def __init__(self, num_classes: int, label: int):
        self.num_classes = num_classes
        self.label = label

    def predict(self, text: Text) -> int:
        return self.label

    def feature_vector(self, text: Text) -> np.ndarray:
        vec = np.zeros(self.num_classes)
        vec[self.label - 1] = 1.0
        return vec


class NaiveBayesModel:
    kind = "naive_bayes"

    def __init__(
        self,
        num_classes: int,
        alpha: float,
        log_priors: np.ndarray,
        vocab: dict[str, int],
        log_likelihood: np.ndarray,
    ):
        self.num_classes = num_classes
        self.alpha = alpha
        self.log_priors = log_priors
        self.vocab = vocab
        self.log_likelihood = log_likelihood

    def feature_vector(self, text: Text) -> np.ndarray:
        """Per-class log prior plus log likelihood of the token counts."""
        scores = self.log_priors.copy()
        for token in text:
            col = self.vocab.get(token)
            if col is not None:
                scores += self.log_likelihood[:, col]
        return scores

    def predict(self, text: Text) -> int:
        return _argmax_label(self.feature_vector(text))


class LinearModel:
    kind = "linear"

    def __init__(
        self, num_classes: int, feature_dim: int, weights: np.ndarray, bias: np.ndarray
    ):
        self.num_classes = num_classes
        self.feature_dim = feature_dim
        self.weights = weights
        self.bias = bias

    def feature_vector(self, text: Text) -> np.ndarray:
        """Pre-argmax class score vector."""
        return self.weights @ token_features(text, self.feature_dim) + self.bias

    def predict(self, text: Text) -> int:
        return _argmax_label(self.feature_vector(text))


BaseModel = Union[ConstantModel, NaiveBayesModel, LinearModel]


def token_features(text: Text, feature_dim: int) -> np.ndarray:
    """Hashed bag-of-token count vector."""
    vec = np.zeros(feature_dim)
    for token in text:
        vec[digest_int(token.encode("utf-8"), FEATURE_HASH_ALGORITHM) % feature_dim] += 1.0
    return vec


def softmax_loss_and_grad(
    weights: np.ndarray, bias: np.ndarray, features: np.ndarray, labels_onehot: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy of a softmax linear model and its analytic gradient.

    Returns (loss, d loss / d weights, d loss / d bias). Kept separate from
    the training loop so the gradient can be checked against finite
    differences.
    """
    logits = features @ weights.T + bias
    logits -= logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(logits).sum(axis=1, keepdims=True))
    log_probs = logits - log_norm
    n = features.shape[0]
    loss = -float((labels_onehot * log_probs).sum()) / n
    residual = (np.exp(log_probs) - labels_onehot) / n
    return loss, residual.T @ features, residual.sum(axis=0)


def _train_naive_bayes(spec: LearnerSpec, data: LabeledDataset) -> NaiveBayesModel:
    C = data.num_classes
    class_counts = np.zeros(C)
    token_counts: dict[str, np.ndarray] = {}
    for ex in data:
        class_counts[ex.label - 1] += 1
        for token in ex.text:
            row = token_counts.get(token)
            if row is None:
                row = token_counts[token] = np.zeros(C)
            row[ex.label - 1] += 1

    vocab_words = sorted(token_counts, key=canonical_word_id)
    vocab = {word: j for j, word in enumerate(vocab_words)}
    V = len(vocab_words)
    counts = np.zeros((C, V))
    for word, j in vocab.items():
        counts[:, j] = token_counts[word]
    totals = counts.sum(axis=1)

    log_priors = np.log(class_counts + 1.0) - math.log(len(data) + C)
    if V == 0:
        # No tokens anywhere (all-empty texts): the model is prior-only.
        return NaiveBayesModel(C, spec.alpha, log_priors, vocab, np.zeros((C, 0)))
    log_likelihood = np.log(counts + spec.alpha) - np.log(
        totals + spec.alpha * V
    ).reshape(C, 1)
    return NaiveBayesModel(C, spec.alpha, log_priors, vocab, log_likelihood)


def _train_linear(spec: LearnerSpec, data: LabeledDataset) -> LinearModel:
    C = data.num_classes
    features = np.stack([token_features(ex.text, spec.feature_dim) for ex in data])
    labels_onehot = np.zeros((len(data), C))
    for i, ex in enumerate(data):
        labels_onehot[i, ex.label - 1] = 1.0

    rng = np.random.default_rng(spec.seed)
    weights = rng.normal(0.0, 0.01, size=(C, spec.feature_dim))
    bias = np.zeros(C)
    for _ in range(spec.epochs):
        _, grad_w, grad_b = softmax_loss_and_grad(weights, bias, features, labels_onehot)
        weights -= spec.learning_rate * grad_w
        bias -= spec.learning_rate * grad_b
    return LinearModel(C, spec.feature_dim, weights, bias)


def train(spec: LearnerSpec, data: LabeledDataset) -> BaseModel:
    """Train a base model. Deterministic in (spec, data)."""
    if len(data) == 0:
        raise DataError("cannot train on an empty dataset")
    labels = {ex.label for ex in data}
    if len(labels) == 1:
        return ConstantModel(data.num_classes, labels.pop())
    if spec.kind == "naive_bayes":
        return _train_naive_bayes(spec, data)
    return _train_linear(spec, data)


def _write_array(fh: BinaryIO, arr: np.ndarray) -> None:
    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_array(fh: BinaryIO, shape: tuple[int, ...]) -> np.ndarray:
    count = int(np.prod(shape)) if shape else 1
    buf = fh.read(8 * count)
    if len(buf) != 8 * count:
        raise DataError("model file truncated")
    return np.frombuffer(buf, dtype="<f8").reshape(shape).copy()


def _read_exact(fh: BinaryIO, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise DataError("model file truncated")
    return buf


def save_model(model: BaseModel, path: str | Path) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IBI", _FORMAT_VERSION, _KIND_CODES[model.kind], model.num_classes))
        if isinstance(model, ConstantModel):
            fh.write(struct.pack("<I", model.label))
        elif isinstance(model, NaiveBayesModel):
            fh.write(struct.pack("<dI", model.alpha, len(model.vocab)))
            _write_array(fh, model.log_priors)
            for word in sorted(model.vocab, key=model.vocab.get):
                encoded = word.encode("utf-8")
                fh.write(struct.pack("<I", len(encoded)))
                fh.write(encoded)
            _write_array(fh, model.log_likelihood)
        else:
            fh.write(struct.pack("<I", model.feature_dim))
            _write_array(fh, model.weights)
            _write_array(fh, model.bias)


def load_model(path: str | Path) -> BaseModel:
    path = Path(path)
    with open(path, "rb") as fh:
        if _read_exact(fh, len(_MAGIC)) != _MAGIC:
            raise DataError(f"{path}: not a model file (bad magic)")
        version, kind_code, num_classes = struct.unpack("<IBI", _read_exact(fh, 9))
        if version != _FORMAT_VERSION:
            raise DataError(f"{path}: unsupported model format version {version}")
        kind = _CODE_KINDS.get(kind_code)
        if kind is None:
            raise DataError(f"{path}: unknown learner kind code {kind_code}")
        if kind == "constant":
            (label,) = struct.unpack("<I", _read_exact(fh, 4))
            return ConstantModel(num_classes, label)
        if kind == "naive_bayes":
            alpha, vocab_size = struct.unpack("<dI", _read_exact(fh, 12))
            log_priors = _read_array(fh, (num_classes,))
            vocab: dict[str, int] = {}
            for j in range(vocab_size):
                (word_len,) = struct.unpack("<I", _read_exact(fh, 4))
                vocab[_read_exact(fh, word_len).decode("utf-8")] = j
            log_likelihood = _read_array(fh, (num_classes, vocab_size))
            return NaiveBayesModel(num_classes, alpha, log_priors, vocab, log_likelihood)
        (feature_dim,) = struct.unpack("<I", _read_exact(fh, 4))
        weights = _read_array(fh, (num_classes, feature_dim))
        bias = _read_array(fh, (num_classes,))
        return LinearModel(num_classes, feature_dim, weights, bias)
