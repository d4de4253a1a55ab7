"""Word-sequence IOB classifier.

Hashed word embedding concatenated with standardized numeric features, two
rectified dense layers, one bidirectional gated recurrent layer, two more
dense layers, and independent logistic outputs, one per IOB tag. Training
is multi-label (overlapping truth spans give a word several tags); decoding
takes the single best tag per word.

The feedforward ablation swaps the recurrent layer for a per-position
two-layer block with a matched parameter count; everything else is shared.

All training math is float64. Gradients returned by ``backward`` are the
raw gradient of the summed binary cross-entropy of one sequence, which is
what the finite-difference check expects; the trainer divides accumulated
batch gradients by the batch's word count before the Adam step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .container import SEQUENCE_MAGIC, ModelFormatError, load_model, save_model
from .features import WORD_NUMERIC_FEATURES, word_feature_matrix
from .hashing import stable_hash
from .model import TARGET_FIELDS, Document, FieldType, LabeledPair, iob_tags
from .ngrams import Span

TAGS: tuple[str, ...] = tuple(iob_tags(TARGET_FIELDS))
TAG_INDEX = {t: i for i, t in enumerate(TAGS)}
N_NUMERIC = len(WORD_NUMERIC_FEATURES)

RECURRENT = "recurrent"
FEEDFORWARD = "feedforward"


@dataclass(frozen=True)
class SeqConfig:
    """Desk-scale dims by default; ``paper()`` restores the full-size net."""

    word_hash_bits: int = 16
    embed_dim: int = 64
    hidden: int = 64
    recurrent: int = 32
    dropout: float = 0.5
    mode: str = RECURRENT

    def __post_init__(self) -> None:
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.mode not in (RECURRENT, FEEDFORWARD):
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def paper(cls) -> "SeqConfig":
        return cls(word_hash_bits=18, embed_dim=500, hidden=600, recurrent=400)

    def ablation(self) -> "SeqConfig":
        return replace(self, mode=FEEDFORWARD)

    @property
    def vocab(self) -> int:
        return 1 << self.word_hash_bits

    @property
    def recurrent_params(self) -> int:
        """Parameter count of the bidirectional recurrent layer."""
        h, r = self.hidden, self.recurrent
        return 2 * 4 * r * (h + r + 1)

    @property
    def ablation_width(self) -> int:
        """Width of the replacement block's inner layer, chosen so the
        block (hidden -> K -> 2R, both rectified) matches the recurrent
        layer's parameter count as nearly as an integer width allows."""
        h, r = self.hidden, self.recurrent
        return round((self.recurrent_params - 2 * r) / (h + 1 + 2 * r))


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 96
    patience: int = 5
    max_seq_len: int = 1000
    max_epochs: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass(frozen=True)
class SeqExample:
    """One document as the classifier sees it: hashed word ids, raw (not yet
    standardized) numeric features, multi-hot tag targets."""

    ids: np.ndarray
    numeric: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)


def word_ids(doc: Document, bits: int) -> np.ndarray:
    mask = (1 << bits) - 1
    return np.array([stable_hash(w.text) & mask for w in doc.words], dtype=np.int64)


def make_example(pair: LabeledPair, bits: int) -> SeqExample:
    from .autolabel import iob_sequence

    targets = np.zeros((len(pair.doc.words), len(TAGS)))
    for w, tags in enumerate(iob_sequence(pair.doc, pair.truth)):
        for t in tags:
            targets[w, TAG_INDEX[t]] = 1.0
    return SeqExample(word_ids(pair.doc, bits), word_feature_matrix(pair.doc), targets)


def feature_stats(examples: list[SeqExample]) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviation per numeric feature over all words of the
    training set; constant features get std 1 so standardizing is a no-op."""
    stacked = np.concatenate([e.numeric for e in examples])
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std[std == 0.0] = 1.0
    return mean, std


def _uniform(rng: np.random.Generator, fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
    s = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-s, s, size=shape)


class SeqModel:
    def __init__(
        self,
        config: SeqConfig,
        params: dict[str, np.ndarray],
        feat_mean: np.ndarray,
        feat_std: np.ndarray,
    ):
        self.config = config
        self.params = params
        self.feat_mean = feat_mean
        self.feat_std = feat_std
        self.epochs_trained = 0

    @classmethod
    def init(cls, config: SeqConfig, rng: np.random.Generator) -> "SeqModel":
        """Uniform fan-in-scaled weights; forget-gate bias starts at 1."""
        v, e, h, r = config.vocab, config.embed_dim, config.hidden, config.recurrent
        d0 = e + N_NUMERIC
        p: dict[str, np.ndarray] = {}
        p["emb"] = _uniform(rng, e, (v, e))
        p["d1_w"] = _uniform(rng, d0, (d0, h))
        p["d1_b"] = np.zeros(h)
        p["d2_w"] = _uniform(rng, h, (h, h))
        p["d2_b"] = np.zeros(h)
        if config.mode == RECURRENT:
            for name in ("fwd", "bwd"):
                p[f"{name}_wx"] = _uniform(rng, h, (h, 4 * r))
                p[f"{name}_wh"] = _uniform(rng, r, (r, 4 * r))
                b = np.zeros(4 * r)
                b[r : 2 * r] = 1.0
                p[f"{name}_b"] = b
        else:
            k = config.ablation_width
            p["ff1_w"] = _uniform(rng, h, (h, k))
            p["ff1_b"] = np.zeros(k)
            p["ff2_w"] = _uniform(rng, k, (k, 2 * r))
            p["ff2_b"] = np.zeros(2 * r)
        p["d3_w"] = _uniform(rng, 2 * r, (2 * r, h))
        p["d3_b"] = np.zeros(h)
        p["d4_w"] = _uniform(rng, h, (h, h))
        p["d4_b"] = np.zeros(h)
        p["out_w"] = np.zeros((h, len(TAGS)))
        p["out_b"] = np.zeros(len(TAGS))
        return cls(config, p, np.zeros(N_NUMERIC), np.ones(N_NUMERIC))

    def param_count(self) -> int:
        return sum(int(a.size) for a in self.params.values())

    def _masks(self, ids: np.ndarray, rng: np.random.Generator | None) -> dict[str, np.ndarray]:
        """Per-sequence dropout masks, constant across time steps: one keep
        factor per distinct word id (row dropout on the embedding) and one
        mask per direction on the recurrent state. Inverted scaling, so
        inference applies no correction."""
        cfg = self.config
        t_len = len(ids)
        if rng is None or cfg.dropout == 0.0:
            return {
                "emb": np.ones(t_len),
                "rec_fwd": np.ones(cfg.recurrent),
                "rec_bwd": np.ones(cfg.recurrent),
            }
        keep = 1.0 - cfg.dropout
        uniq, inverse = np.unique(ids, return_inverse=True)
        row_keep = (rng.random(len(uniq)) < keep) / keep
        masks = {"emb": row_keep[inverse]}
        for name in ("rec_fwd", "rec_bwd"):
            masks[name] = (rng.random(cfg.recurrent) < keep) / keep
        return masks

    def _forward(
        self, ids: np.ndarray, numeric: np.ndarray, rng: np.random.Generator | None
    ) -> dict:
        if len(ids) == 0:
            raise ValueError("empty sequence")
        cfg, p = self.config, self.params
        masks = self._masks(ids, rng)
        e = p["emb"][ids] * masks["emb"][:, None]
        x0 = np.concatenate([e, (numeric - self.feat_mean) / self.feat_std], axis=1)
        z1 = np.maximum(0.0, x0 @ p["d1_w"] + p["d1_b"])
        z2 = np.maximum(0.0, z1 @ p["d2_w"] + p["d2_b"])
        cache: dict = {"ids": ids, "masks": masks, "x0": x0, "z1": z1, "z2": z2}
        t_len, r = len(ids), cfg.recurrent
        if cfg.mode == RECURRENT:
            hf = np.empty((t_len, r))
            cf = np.empty((t_len, r))
            gf = np.empty((t_len, 4 * r))
            kernels.lstm_forward(z2, p["fwd_wx"], p["fwd_wh"], p["fwd_b"], masks["rec_fwd"], hf, cf, gf)
            z2r = z2[::-1].copy()
            hb = np.empty((t_len, r))
            cb = np.empty((t_len, r))
            gb = np.empty((t_len, 4 * r))
            kernels.lstm_forward(z2r, p["bwd_wx"], p["bwd_wh"], p["bwd_b"], masks["rec_bwd"], hb, cb, gb)
            rec = np.concatenate([hf, hb[::-1]], axis=1)
            cache.update(hf=hf, cf=cf, gf=gf, z2r=z2r, hb=hb, cb=cb, gb=gb)
        else:
            f1 = np.maximum(0.0, z2 @ p["ff1_w"] + p["ff1_b"])
            rec = np.maximum(0.0, f1 @ p["ff2_w"] + p["ff2_b"])
            cache.update(f1=f1)
        z3 = np.maximum(0.0, rec @ p["d3_w"] + p["d3_b"])
        z4 = np.maximum(0.0, z3 @ p["d4_w"] + p["d4_b"])
        # exp overflow on a very negative logit rounds to the right answer
        # (prob 0.0); don't warn about it.
        with np.errstate(over="ignore"):
            probs = 1.0 / (1.0 + np.exp(-(z4 @ p["out_w"] + p["out_b"])))
        cache.update(rec=rec, z3=z3, z4=z4, probs=probs)
        return cache

    def forward(
        self,
        ids: np.ndarray,
        numeric: np.ndarray,
        dropout_rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        """Per-word per-tag probabilities, shape (T, |tags|). Passing an rng
        turns dropout on; masks are reproducible from the rng state."""
        return self._forward(ids, numeric, dropout_rng)["probs"]

    def loss(self, example: SeqExample) -> float:
        """Summed binary cross-entropy of one sequence, dropout off."""
        p = self._forward(example.ids, example.numeric, None)["probs"]
        y = example.targets
        p = np.clip(p, 1e-12, 1.0 - 1e-12)
        return float(-(y * np.log(p) + (1.0 - y) * np.log1p(-p)).sum())

    def backward(
        self, example: SeqExample, dropout_rng: np.random.Generator | None = None
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Loss and the gradient of every parameter tensor for one sequence."""
        loss, g, ids, de = self._backward_sparse(example, dropout_rng)
        demb = np.zeros_like(self.params["emb"])
        np.add.at(demb, ids, de)
        g["emb"] = demb
        return loss, g

    def _backward_sparse(
        self, example: SeqExample, dropout_rng: np.random.Generator | None = None
    ) -> tuple[float, dict[str, np.ndarray], np.ndarray, np.ndarray]:
        """Like backward, but the embedding gradient stays in per-word form
        (word ids plus one gradient row per word) so the training loop can
        scatter it without materializing the full table per sequence."""
        cfg, p = self.config, self.params
        cache = self._forward(example.ids, example.numeric, dropout_rng)
        probs, y = cache["probs"], example.targets
        if y.shape != probs.shape:
            raise ValueError(f"target shape {y.shape} != output shape {probs.shape}")
        safe = np.clip(probs, 1e-12, 1.0 - 1e-12)
        loss = float(-(y * np.log(safe) + (1.0 - y) * np.log1p(-safe)).sum())

        g: dict[str, np.ndarray] = {}
        dlogits = probs - y
        g["out_w"] = cache["z4"].T @ dlogits
        g["out_b"] = dlogits.sum(axis=0)
        dz4 = (dlogits @ p["out_w"].T) * (cache["z4"] > 0)
        g["d4_w"] = cache["z3"].T @ dz4
        g["d4_b"] = dz4.sum(axis=0)
        dz3 = (dz4 @ p["d4_w"].T) * (cache["z3"] > 0)
        g["d3_w"] = cache["rec"].T @ dz3
        g["d3_b"] = dz3.sum(axis=0)
        drec = dz3 @ p["d3_w"].T

        r = cfg.recurrent
        if cfg.mode == RECURRENT:
            dz2 = np.zeros_like(cache["z2"])
            for name, dh, x_in in (
                ("fwd", drec[:, :r], cache["z2"]),
                ("bwd", drec[:, r:][::-1].copy(), cache["z2r"]),
            ):
                hk = "hf" if name == "fwd" else "hb"
                dx = np.zeros_like(x_in)
                dwx = np.zeros_like(p[f"{name}_wx"])
                dwh = np.zeros_like(p[f"{name}_wh"])
                db = np.zeros_like(p[f"{name}_b"])
                kernels.lstm_backward(
                    x_in,
                    p[f"{name}_wx"],
                    p[f"{name}_wh"],
                    cache["masks"][f"rec_{name}"],
                    cache[hk],
                    cache["c" + hk[1]],
                    cache["g" + hk[1]],
                    np.ascontiguousarray(dh),
                    dx,
                    dwx,
                    dwh,
                    db,
                )
                g[f"{name}_wx"] = dwx
                g[f"{name}_wh"] = dwh
                g[f"{name}_b"] = db
                dz2 += dx if name == "fwd" else dx[::-1]
        else:
            drec = drec * (cache["rec"] > 0)
            g["ff2_w"] = cache["f1"].T @ drec
            g["ff2_b"] = drec.sum(axis=0)
            df1 = (drec @ p["ff2_w"].T) * (cache["f1"] > 0)
            g["ff1_w"] = cache["z2"].T @ df1
            g["ff1_b"] = df1.sum(axis=0)
            dz2 = df1 @ p["ff1_w"].T

        dz2 *= cache["z2"] > 0
        g["d2_w"] = cache["z1"].T @ dz2
        g["d2_b"] = dz2.sum(axis=0)
        dz1 = (dz2 @ p["d2_w"].T) * (cache["z1"] > 0)
        g["d1_w"] = cache["x0"].T @ dz1
        g["d1_b"] = dz1.sum(axis=0)
        dx0 = dz1 @ p["d1_w"].T
        de = dx0[:, : cfg.embed_dim] * cache["masks"]["emb"][:, None]
        return loss, g, cache["ids"], de

    def predict_doc(self, doc: Document) -> tuple[np.ndarray, np.ndarray]:
        """Argmax tag index per word plus the full probability table."""
        ids = word_ids(doc, self.config.word_hash_bits)
        probs = self.forward(ids, word_feature_matrix(doc))
        return probs.argmax(axis=1), probs

    def decode(self, doc: Document) -> list[tuple[FieldType, Span, float]]:
        """Best-tag decoding chunked into labeled spans; a chunk's probability
        is the mean probability of its words' assigned tags."""
        from .autolabel import chunk_tags

        tag_idx, probs = self.predict_doc(doc)
        tags = [TAGS[i] for i in tag_idx]
        out = []
        for field, span in chunk_tags(doc, tags):
            word_p = [probs[w, tag_idx[w]] for w in range(span.start, span.stop)]
            out.append((field, span, float(np.mean(word_p))))
        return out

    def save(self, path: str | Path) -> None:
        header = {
            "kind": "sequence",
            "config": {
                "word_hash_bits": self.config.word_hash_bits,
                "embed_dim": self.config.embed_dim,
                "hidden": self.config.hidden,
                "recurrent": self.config.recurrent,
                "dropout": self.config.dropout,
                "mode": self.config.mode,
            },
            "tags": list(TAGS),
        }
        tensors = dict(self.params)
        tensors["feat_mean"] = self.feat_mean
        tensors["feat_std"] = self.feat_std
        save_model(path, SEQUENCE_MAGIC, header, tensors)

    @classmethod
    def load(cls, path: str | Path) -> "SeqModel":
        header, tensors = load_model(path, SEQUENCE_MAGIC)
        if tuple(header.get("tags", [])) != TAGS:
            raise ModelFormatError(f"{path}: unexpected tag set")
        config = SeqConfig(**header["config"])
        feat_mean = tensors.pop("feat_mean")
        feat_std = tensors.pop("feat_std")
        return cls(config, tensors, feat_mean, feat_std)


def train_seq(
    train_pairs: list[LabeledPair],
    val_pairs: list[LabeledPair],
    config: SeqConfig | None = None,
    train_config: TrainConfig | None = None,
) -> SeqModel:
    """Adam on shuffled minibatches with early stopping on validation loss.

    Deterministic for a fixed seed: parameter init, shuffles and dropout
    masks all come from one seeded generator consumed in a fixed order.
    Returns the parameters of the best validation epoch.
    """
    config = config or SeqConfig()
    tc = train_config or TrainConfig()
    if not train_pairs or not val_pairs:
        raise ValueError("train and validation sets must be non-empty")
    examples = [make_example(p, config.word_hash_bits) for p in train_pairs]
    train_ex = [e for e in examples if len(e) <= tc.max_seq_len]
    if not train_ex:
        raise ValueError(f"no training sequence is <= {tc.max_seq_len} words")
    val_ex = [make_example(p, config.word_hash_bits) for p in val_pairs]

    rng = np.random.default_rng(tc.seed)
    model = SeqModel.init(config, rng)
    model.feat_mean, model.feat_std = feature_stats(train_ex)

    m_state = {k: np.zeros_like(v) for k, v in model.params.items()}
    v_state = {k: np.zeros_like(v) for k, v in model.params.items()}
    grads = {k: np.zeros_like(v) for k, v in model.params.items()}
    step = 0
    best_loss = np.inf
    best_params: dict[str, np.ndarray] = {k: v.copy() for k, v in model.params.items()}
    bad = 0
    epochs = 0

    for _ in range(tc.max_epochs):
        epochs += 1
        order = rng.permutation(len(train_ex))
        for lo in range(0, len(order), tc.batch_size):
            batch = order[lo : lo + tc.batch_size]
            for buf in grads.values():
                buf.fill(0.0)
            words = 0
            for i in batch:
                ex = train_ex[i]
                _, g, ids, de = model._backward_sparse(ex, dropout_rng=rng)
                for k, gk in g.items():
                    grads[k] += gk
                np.add.at(grads["emb"], ids, de)
                words += len(ex)
            step += 1
            bc1 = 1.0 - tc.beta1**step
            bc2 = 1.0 - tc.beta2**step
            for k, p in model.params.items():
                kernels.adam_step(
                    p.ravel(),
                    grads[k].ravel(),
                    m_state[k].ravel(),
                    v_state[k].ravel(),
                    1.0 / words,
                    tc.lr,
                    tc.beta1,
                    tc.beta2,
                    tc.eps,
                    bc1,
                    bc2,
                )
        val_loss = sum(model.loss(e) for e in val_ex) / max(1, sum(len(e) for e in val_ex))
        if val_loss < best_loss:
            best_loss = val_loss
            best_params = {k: v.copy() for k, v in model.params.items()}
            bad = 0
        else:
            bad += 1
            if bad >= tc.patience:
                break
    model.params = best_params
    model.epochs_trained = epochs
    return model
