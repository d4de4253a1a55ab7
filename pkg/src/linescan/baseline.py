"""N-gram classifier: hashed context features into one-vs-rest logistic
regression, trained with plain SGD.

Every span of up to maxN words is one example. Its 150 feature tokens
(own group plus four nearest-neighbour groups) are hashed into a 2**B
binary feature vector; targets are multi-hot over the eight fields plus
the null class, since overlapping truth values can label one span with
several fields at once.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .container import BASELINE_MAGIC, ModelFormatError, load_model, save_model
from .features import DocFeatures
from .hashing import TokenHasher
from .model import TARGET_FIELDS, Document, FieldType, Invoice, LabeledPair
from .ngrams import DEFAULT_MAX_N, Span, iter_spans

CLASS_ORDER: tuple[FieldType, ...] = TARGET_FIELDS + (FieldType.UNDEFINED,)
_CLASS_INDEX = {f: i for i, f in enumerate(CLASS_ORDER)}


@dataclass(frozen=True)
class BaselineConfig:
    hash_bits: int = 22
    epochs: int = 10
    lr: float = 0.1
    l2: float = 0.0
    seed: int = 0
    max_n: int = DEFAULT_MAX_N

    def scaled_down(self) -> "BaselineConfig":
        """Smaller hash table for tests and the bundled experiment corpora."""
        return replace(self, hash_bits=18)


class BaselineModel:
    def __init__(self, config: BaselineConfig, weights: np.ndarray, bias: np.ndarray):
        if weights.shape != (len(CLASS_ORDER), 1 << config.hash_bits):
            raise ValueError(f"weight shape {weights.shape} does not match config")
        self.config = config
        self.weights = weights
        self.bias = bias
        self._hasher = TokenHasher(config.hash_bits)

    def predict_doc(self, doc: Document) -> tuple[list[Span], np.ndarray]:
        """All candidate spans of the document with per-class probabilities."""
        spans = list(iter_spans(doc, self.config.max_n))
        indices, offsets = _doc_indices(doc, spans, self.config.max_n, self._hasher)
        probs = np.empty((len(spans), len(CLASS_ORDER)))
        kernels.predict_linear(indices, offsets, self.weights, self.bias, probs)
        return spans, probs

    def save(self, path: str | Path) -> None:
        header = {
            "kind": "baseline",
            "config": {
                "hash_bits": self.config.hash_bits,
                "epochs": self.config.epochs,
                "lr": self.config.lr,
                "l2": self.config.l2,
                "seed": self.config.seed,
                "max_n": self.config.max_n,
            },
            "classes": [f.value for f in CLASS_ORDER],
        }
        save_model(path, BASELINE_MAGIC, header, {"weights": self.weights, "bias": self.bias})

    @classmethod
    def load(cls, path: str | Path) -> "BaselineModel":
        header, tensors = load_model(path, BASELINE_MAGIC)
        stored = [FieldType(v) for v in header.get("classes", [])]
        if tuple(stored) != CLASS_ORDER:
            raise ModelFormatError(f"{path}: unexpected class order {header.get('classes')}")
        config = BaselineConfig(**header["config"])
        return cls(config, tensors["weights"], tensors["bias"])


def _doc_indices(
    doc: Document, spans: list[Span], max_n: int, hasher: TokenHasher
) -> tuple[np.ndarray, np.ndarray]:
    feats = DocFeatures(doc, max_n, spans)
    # Active indices are a set: hash collisions within one example merge.
    per_span = [np.unique(hasher.index_all(feats.tokens(si))) for si in range(len(spans))]
    offsets = np.zeros(len(spans) + 1, dtype=np.int64)
    np.cumsum([len(p) for p in per_span], out=offsets[1:])
    indices = np.concatenate(per_span) if per_span else np.empty(0, dtype=np.int64)
    return indices.astype(np.int64), offsets


def build_examples(
    pairs: list[LabeledPair], config: BaselineConfig, hasher: TokenHasher
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hashed features and multi-hot targets for every span of every pair."""
    from .autolabel import span_labels

    index_blocks: list[np.ndarray] = []
    target_rows: list[np.ndarray] = []
    lengths: list[int] = []
    for pair in pairs:
        labeled = span_labels(pair.doc, pair.truth, config.max_n)
        spans = [span for span, _ in labeled]
        feats = DocFeatures(pair.doc, config.max_n, spans)
        for si, (_, fields) in enumerate(labeled):
            idx = np.unique(hasher.index_all(feats.tokens(si)))
            index_blocks.append(idx)
            lengths.append(len(idx))
            row = np.zeros(len(CLASS_ORDER), dtype=np.float64)
            for f in fields:
                row[_CLASS_INDEX[f]] = 1.0
            target_rows.append(row)
    offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    indices = np.concatenate(index_blocks) if index_blocks else np.empty(0, dtype=np.int64)
    targets = np.array(target_rows) if target_rows else np.empty((0, len(CLASS_ORDER)))
    return indices.astype(np.int64), offsets, targets


def train_baseline(pairs: list[LabeledPair], config: BaselineConfig | None = None) -> BaselineModel:
    config = config or BaselineConfig()
    hasher = TokenHasher(config.hash_bits)
    indices, offsets, targets = build_examples(pairs, config, hasher)
    weights = np.zeros((len(CLASS_ORDER), 1 << config.hash_bits))
    bias = np.zeros(len(CLASS_ORDER))
    rng = np.random.default_rng(config.seed)
    n = targets.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n).astype(np.int64)
        lr = config.lr / np.sqrt(epoch + 1.0)
        kernels.sgd_epoch(indices, offsets, targets, order, weights, bias, lr, config.l2)
    return BaselineModel(config, weights, bias)
