"""Classifier-agnostic plumbing: candidate flattening, dispatch, model files."""

import numpy as np
import pytest

from linescan.baseline import BaselineConfig, train_baseline
from linescan.container import ModelFormatError
from linescan.corpus import CorpusSpec, NoiseSpec, generate_corpus
from linescan.model import FieldType
from linescan.pipeline import (
    baseline_candidates,
    extract,
    load_any_model,
    model_digest,
    seq_candidates,
    train_model,
)
from linescan.seqmodel import FEEDFORWARD, SeqConfig, SeqModel, TrainConfig, train_seq

SMALL_SEQ = SeqConfig(word_hash_bits=12)
SMALL_BASE = BaselineConfig(hash_bits=14, epochs=4)
QUICK = TrainConfig(seed=0, max_epochs=2)


@pytest.fixture(scope="module")
def pairs():
    spec = CorpusSpec(
        num_templates=4, docs_per_template=(3, 3), seed=21, noise=NoiseSpec()
    )
    return [gp.pair for gp in generate_corpus(spec)]


@pytest.fixture(scope="module")
def baseline_model(pairs):
    return train_baseline(pairs[:8], SMALL_BASE)


@pytest.fixture(scope="module")
def seq_model(pairs):
    return train_seq(pairs[:8], pairs[8:10], SMALL_SEQ, QUICK)


def test_baseline_candidates_cover_target_fields(baseline_model, pairs):
    cands = baseline_candidates(baseline_model, pairs[0].doc)
    assert set(cands) == set(f for f in FieldType if f is not FieldType.UNDEFINED)
    for spans in cands.values():
        for span, prob in spans:
            assert 0.0 <= prob <= 1.0
            assert span.stop > span.start


def test_baseline_candidate_floor_drops_weak_spans(baseline_model, pairs):
    everything = baseline_candidates(baseline_model, pairs[0].doc, floor=0.0)
    floored = baseline_candidates(baseline_model, pairs[0].doc, floor=0.3)
    for f, spans in floored.items():
        assert all(prob >= 0.3 for _, prob in spans)
        kept = {(s.start, s.length) for s, _ in spans}
        above = {(s.start, s.length) for s, p in everything[f] if p >= 0.3}
        assert kept == above


def test_seq_candidates_group_by_field(seq_model, pairs):
    cands = seq_candidates(seq_model, pairs[0].doc)
    decoded = seq_model.decode(pairs[0].doc)
    assert sum(len(v) for v in cands.values()) == len(decoded)
    for f, span, prob in decoded:
        assert (span, prob) in cands[f]


def test_extract_dispatches_on_model_type(baseline_model, seq_model, pairs):
    doc = pairs[0].doc
    for model in (baseline_model, seq_model):
        ext = extract(model, doc)
        assert ext.invoice() is not None
    with pytest.raises(TypeError, match="unknown model"):
        extract(object(), doc)


def test_train_model_dispatch(pairs):
    model = train_model(
        "baseline", pairs[:8], pairs[8:10], baseline_config=SMALL_BASE
    )
    assert model.config == SMALL_BASE
    model = train_model(
        "seq", pairs[:8], pairs[8:10], seq_config=SMALL_SEQ, train_config=QUICK
    )
    assert isinstance(model, SeqModel)
    assert model.config.mode == "recurrent"


def test_train_model_ablation_flips_the_mode(pairs):
    model = train_model(
        "ablation", pairs[:8], pairs[8:10], seq_config=SMALL_SEQ, train_config=QUICK
    )
    assert isinstance(model, SeqModel)
    assert model.config.mode == FEEDFORWARD


def test_train_model_rejects_unknown_classifier(pairs):
    with pytest.raises(ValueError, match="classifier"):
        train_model("oracle", pairs[:2], pairs[2:3])


def test_load_any_model_dispatches_on_magic(tmp_path, baseline_model, seq_model):
    bp, sp = tmp_path / "b.model", tmp_path / "s.model"
    baseline_model.save(bp)
    seq_model.save(sp)
    assert type(load_any_model(bp)).__name__ == "BaselineModel"
    assert type(load_any_model(sp)).__name__ == "SeqModel"


def test_load_any_model_rejects_unknown_magic(tmp_path):
    path = tmp_path / "junk.model"
    path.write_bytes(b"NOPE!" + b"\x00" * 40)
    with pytest.raises(ModelFormatError, match="magic"):
        load_any_model(path)


def test_model_digest_is_the_trailing_checksum(tmp_path, seq_model):
    path = tmp_path / "m.model"
    seq_model.save(path)
    digest = model_digest(path)
    assert len(digest) == 16
    assert int(digest, 16) == int.from_bytes(path.read_bytes()[-8:], "little")
    # Same content, same id.
    again = tmp_path / "copy.model"
    again.write_bytes(path.read_bytes())
    assert model_digest(again) == digest


def test_extract_results_survive_a_model_round_trip(tmp_path, seq_model, pairs):
    path = tmp_path / "rt.model"
    seq_model.save(path)
    back = load_any_model(path)
    doc = pairs[0].doc
    assert extract(back, doc).invoice() == extract(seq_model, doc).invoice()
