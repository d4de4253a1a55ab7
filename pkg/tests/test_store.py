"""Flat-file training store: documents, feedback replay, model registry."""

import pytest

from linescan.baseline import BaselineConfig, train_baseline
from linescan.corpus import CorpusSpec, NoiseSpec, generate_corpus
from linescan.model import FieldType, Invoice
from linescan.store import FeedbackRecord, StoreError, TrainingStore


@pytest.fixture(scope="module")
def corpus_pairs():
    spec = CorpusSpec(
        num_templates=3, docs_per_template=(3, 3), seed=8, noise=NoiseSpec()
    )
    return [gp.pair for gp in generate_corpus(spec)]


@pytest.fixture
def store(tmp_path):
    return TrainingStore(tmp_path / "store")


def _record(doc_id, invoice, at="2026-08-22T10:00:00+00:00", source="api"):
    return FeedbackRecord(doc_id=doc_id, corrected=invoice, accepted_at=at, source=source)


# ------------------------------------------------------------- documents

def test_document_round_trip(store, corpus_pairs):
    doc = corpus_pairs[0].doc
    store.put_document(doc)
    assert store.has_document(doc.doc_id)
    assert store.get_document(doc.doc_id) == doc


def test_identical_reput_is_a_noop(store, corpus_pairs):
    doc = corpus_pairs[0].doc
    store.put_document(doc)
    store.put_document(doc)
    assert store.list_documents() == [doc.doc_id]


def test_conflicting_content_is_refused(store, corpus_pairs):
    a, b = corpus_pairs[0], corpus_pairs[1]
    store.put_document(a.doc)
    clash = type(a.doc)(doc_id=a.doc.doc_id, sender_id=b.doc.sender_id, words=b.doc.words)
    with pytest.raises(StoreError, match="different content"):
        store.put_document(clash)


def test_unusable_document_ids(store):
    for bad in ("", "a/b", ".hidden"):
        with pytest.raises(StoreError, match="unusable"):
            store._doc_path(bad)


def test_missing_document(store):
    assert not store.has_document("ghost")
    with pytest.raises(StoreError, match="ghost"):
        store.get_document("ghost")


def test_list_documents_is_sorted(store, corpus_pairs):
    for p in corpus_pairs[:4]:
        store.put_document(p.doc)
    ids = store.list_documents()
    assert ids == sorted(ids)
    assert len(ids) == 4


# -------------------------------------------------------------- feedback

def test_feedback_requires_the_document(store):
    with pytest.raises(StoreError, match="ghost"):
        store.append_feedback(_record("ghost", Invoice()))


def test_feedback_round_trip(store, corpus_pairs):
    doc = corpus_pairs[0].doc
    store.put_document(doc)
    rec = _record(doc.doc_id, corpus_pairs[0].truth, source="ui")
    store.append_feedback(rec)
    assert store.feedback_records() == [rec]


def test_replay_latest_acceptance_wins(store, corpus_pairs):
    a, b = corpus_pairs[0], corpus_pairs[1]
    store.put_document(a.doc)
    store.put_document(b.doc)
    revised = Invoice({FieldType.NUMBER: "424242"})
    store.append_feedback(_record(a.doc.doc_id, a.truth))
    store.append_feedback(_record(b.doc.doc_id, b.truth))
    store.append_feedback(_record(a.doc.doc_id, revised))
    pairs = store.pairs()
    # Latest record wins; order follows each document's first acceptance.
    assert [p.doc.doc_id for p in pairs] == [a.doc.doc_id, b.doc.doc_id]
    assert pairs[0].truth == revised
    assert pairs[1].truth == b.truth


def test_empty_store_has_no_pairs(store):
    assert store.feedback_records() == []
    assert store.pairs() == []


# ---------------------------------------------------------------- models

@pytest.fixture(scope="module")
def tiny_model(corpus_pairs):
    return train_baseline(corpus_pairs[:6], BaselineConfig(hash_bits=12, epochs=2))


def test_model_ids_are_content_derived(store, tiny_model):
    first = store.save_model(tiny_model, "baseline")
    second = store.save_model(tiny_model, "baseline")
    assert first == second
    assert first.startswith("baseline-")
    assert store.list_models() == [first]


def test_model_round_trip(store, tiny_model, corpus_pairs):
    model_id = store.save_model(tiny_model, "baseline")
    back = store.load_model(model_id)
    doc = corpus_pairs[0].doc
    _, p0 = tiny_model.predict_doc(doc)
    _, p1 = back.predict_doc(doc)
    assert abs(p1 - p0).max() < 1e-6


def test_load_missing_model(store):
    with pytest.raises(StoreError, match="nope"):
        store.load_model("nope")


def test_active_pointer(store, tiny_model):
    assert store.active_model_id() is None
    model_id = store.save_model(tiny_model, "baseline")
    store.set_active(model_id)
    assert store.active_model_id() == model_id
    with pytest.raises(StoreError, match="ghost"):
        store.set_active("ghost")
    assert store.active_model_id() == model_id
