"""Document in, structured invoice out, for any trained model.

The two classifier families expose different raw outputs (per-span class
probabilities vs per-word tag probabilities); this module flattens both
into the per-field candidate lists the assignment stage consumes, and
dispatches training and model files by kind.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .baseline import CLASS_ORDER, BaselineConfig, BaselineModel, train_baseline
from .container import BASELINE_MAGIC, SEQUENCE_MAGIC, ModelFormatError
from .model import Document, FieldType, LabeledPair
from .ngrams import Span
from .postprocess import Extraction, PostConfig, extract_invoice
from .seqmodel import SeqConfig, SeqModel, TrainConfig, train_seq

CLASSIFIERS = ("baseline", "seq", "ablation", "oracle")

AnyModel = BaselineModel | SeqModel


def baseline_candidates(
    model: BaselineModel, doc: Document, floor: float = 0.0
) -> dict[FieldType, list[tuple[Span, float]]]:
    spans, probs = model.predict_doc(doc)
    out: dict[FieldType, list[tuple[Span, float]]] = {}
    for ci, f in enumerate(CLASS_ORDER):
        if f is FieldType.UNDEFINED:
            continue
        col = probs[:, ci]
        # Pre-dropping sub-floor spans here skips parsing them downstream.
        keep = np.nonzero(col >= floor)[0] if floor > 0 else range(len(spans))
        out[f] = [(spans[si], float(col[si])) for si in keep]
    return out


def seq_candidates(
    model: SeqModel, doc: Document
) -> dict[FieldType, list[tuple[Span, float]]]:
    out: dict[FieldType, list[tuple[Span, float]]] = {}
    for f, span, prob in model.decode(doc):
        out.setdefault(f, []).append((span, prob))
    return out


def extract(model: AnyModel, doc: Document, config: PostConfig | None = None) -> Extraction:
    config = config or PostConfig()
    if isinstance(model, BaselineModel):
        per_field = baseline_candidates(model, doc, floor=config.probability_floor)
    elif isinstance(model, SeqModel):
        per_field = seq_candidates(model, doc)
    else:
        raise TypeError(f"unknown model type {type(model).__name__}")
    return extract_invoice(doc, per_field, config)


def train_model(
    classifier: str,
    train_pairs: list[LabeledPair],
    val_pairs: list[LabeledPair],
    *,
    seed: int = 0,
    baseline_config: BaselineConfig | None = None,
    seq_config: SeqConfig | None = None,
    train_config: TrainConfig | None = None,
) -> AnyModel:
    """Train one classifier. The baseline runs its fixed epoch budget on the
    train split alone; the tagger additionally early-stops on val_pairs."""
    if classifier == "baseline":
        cfg = baseline_config if baseline_config is not None else BaselineConfig(seed=seed)
        return train_baseline(train_pairs, cfg)
    if classifier in ("seq", "ablation"):
        scfg = seq_config if seq_config is not None else SeqConfig()
        if classifier == "ablation":
            scfg = scfg.ablation()
        tcfg = train_config if train_config is not None else TrainConfig(seed=seed)
        return train_seq(train_pairs, val_pairs, scfg, tcfg)
    raise ValueError(f"classifier must be one of {CLASSIFIERS[:3]}, got {classifier!r}")


def load_any_model(path: str | Path) -> AnyModel:
    with open(path, "rb") as fh:
        magic = fh.read(len(BASELINE_MAGIC))
    if magic == BASELINE_MAGIC:
        return BaselineModel.load(path)
    if magic == SEQUENCE_MAGIC:
        return SeqModel.load(path)
    raise ModelFormatError(f"unrecognized model file magic {magic!r}")


def model_digest(path: str | Path) -> str:
    """Content id of a model file: its trailing checksum, hex encoded."""
    with open(path, "rb") as fh:
        fh.seek(-8, 2)
        (checksum,) = struct.unpack("<Q", fh.read(8))
    return f"{checksum:016x}"
