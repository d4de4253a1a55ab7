"""Product acceptance suite. One test per shipped guarantee; each line of
``pytest -v`` output over this module is one pass/fail verdict.

The heavyweight entries (the hundred-template comparison) train real models
and take several minutes on purpose: the guarantees are about end-to-end
behavior at working size, not about unit mechanics. Run this module alone
with ``pytest tests/test_acceptance.py -v`` when iterating elsewhere.
"""

import itertools
import time
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from linescan.autolabel import chunk_tags, field_spans, iob_sequence, span_labels, value_matches
from linescan.baseline import BaselineConfig
from linescan.corpus import CorpusSpec, NoiseSpec, generate_corpus, save_corpus
from linescan.evaluate import build_report, run_experiment, score_pair, unattributed_losses
from linescan.ingest import save_document
from linescan.model import FieldType, Invoice, TARGET_FIELDS
from linescan.ngrams import span_text
from linescan.postprocess import hungarian_assign
from linescan.seqmodel import (
    N_NUMERIC,
    TAGS,
    SeqConfig,
    SeqExample,
    SeqModel,
    TrainConfig,
)
from linescan.service import ServiceConfig, create_app
from linescan.store import TrainingStore

# The noise level every noisy acceptance corpus uses: a 2% chance of a
# character substitution per word and a 5% chance per field that the filed
# truth disagrees with what was printed.
MODERATE_NOISE = NoiseSpec(ocr_char_sub_prob=0.02, truth_discrepancy_prob=0.05)

# Small-machine training schedule. The stock defaults are sized for the
# full-scale network; at desk size the rare tag classes need smaller
# batches and a longer leash to converge.
DESK_TRAIN = TrainConfig(seed=0, lr=3e-3, batch_size=8, patience=15)


def _pairs_and_noise(spec):
    gen = generate_corpus(spec)
    return [g.pair for g in gen], [g.noise for g in gen]


# ---------------------------------------------------------------------------
# 1. A perfect-knowledge extractor on a clean corpus scores a perfect 1.000.
#    Anything less means the labeler, scorer, or generator disagree among
#    themselves and every downstream number is suspect.

def test_c01_ceiling_oracle_perfect_on_clean_corpus():
    t0 = time.monotonic()
    spec = CorpusSpec(num_templates=50, docs_per_template=(20, 20), seed=13, noise=NoiseSpec())
    pairs, _ = _pairs_and_noise(spec)
    assert len(pairs) == 1000
    result = run_experiment(pairs, "none", "oracle", 0, experiment="ceiling")
    elapsed = time.monotonic() - t0
    assert result.report.micro.f1 == 1.0
    assert result.report.micro.fp == 0 and result.report.micro.fn == 0
    assert elapsed < 60.0, f"ceiling run took {elapsed:.1f}s"


# 2. With OCR substitutions and truth discrepancies injected, the same
#    extractor must lose ground, every single loss must trace back to a
#    field the noise actually touched, and the losses must skew toward
#    recall (a value the document no longer carries cannot be produced).

def test_c02_ceiling_noise_costs_recall_and_all_losses_attributed():
    spec = CorpusSpec(num_templates=50, docs_per_template=(20, 20), seed=13, noise=MODERATE_NOISE)
    pairs, noise = _pairs_and_noise(spec)
    result = run_experiment(pairs, "none", "oracle", 0, experiment="ceiling")
    micro = result.report.micro
    assert micro.f1 < 1.0
    assert micro.recall < micro.precision
    re_pairs = [pairs[i] for i in result.test_indices]
    re_noise = [noise[i] for i in result.test_indices]
    assert unattributed_losses(re_pairs, result.produced, re_noise) == []


# ---------------------------------------------------------------------------
# 3 and 4. The hundred-template comparison. One corpus, four trained runs.

@pytest.fixture(scope="module")
def hundred_template_runs():
    spec = CorpusSpec(num_templates=100, docs_per_template=(10, 10), seed=42, noise=MODERATE_NOISE)
    t0 = time.monotonic()
    pairs = [g.pair for g in generate_corpus(spec)]
    gen_time = time.monotonic() - t0
    runs = {}
    for split, classifier in (
        ("bySender", "baseline"),
        ("bySender", "ablation"),
        ("bySender", "seq"),
        ("byDocument", "seq"),
    ):
        t0 = time.monotonic()
        result = run_experiment(
            pairs, split, classifier, seed=0,
            seq_config=SeqConfig(), train_config=DESK_TRAIN,
        )
        runs[(split, classifier)] = (result.report.micro.f1, time.monotonic() - t0)
    return gen_time, runs


def test_c03_sequence_beats_baseline_beats_ablation_on_sender_split(hundred_template_runs):
    """Unseen-layout generalization must order the three classifiers the
    same way at desk size as at full size: the recurrent tagger first, the
    n-gram baseline second, its feedforward ablation last."""
    gen_time, runs = hundred_template_runs
    seq, t_seq = runs[("bySender", "seq")]
    baseline, t_base = runs[("bySender", "baseline")]
    ablation, t_abl = runs[("bySender", "ablation")]
    assert seq > baseline > ablation, (seq, baseline, ablation)
    budget = gen_time + t_seq + t_base + t_abl
    assert budget < 1800.0, f"sender-split comparison took {budget:.0f}s"


def test_c04_document_split_at_least_as_easy_as_sender_split(hundred_template_runs):
    """Held-out documents from known layouts cannot be harder than
    documents from unseen layouts."""
    _, runs = hundred_template_runs
    by_document, _ = runs[("byDocument", "seq")]
    by_sender, _ = runs[("bySender", "seq")]
    assert by_document >= by_sender, (by_document, by_sender)


# ---------------------------------------------------------------------------
# 5. Analytic gradients agree with central finite differences for every
#    parameter tensor, in both network modes, at double precision.

def _finite_difference_errors(config):
    rng = np.random.default_rng(42)
    model = SeqModel.init(config, rng)
    # Shift every tensor off its initial point; the output layer starts at
    # zero and would otherwise block gradient flow to everything upstream.
    for k in model.params:
        model.params[k] = model.params[k] + rng.normal(scale=0.1, size=model.params[k].shape)
    model.feat_mean = rng.normal(size=N_NUMERIC)
    model.feat_std = np.abs(rng.normal(size=N_NUMERIC)) + 0.5
    example = SeqExample(
        ids=rng.integers(0, config.vocab, 6).astype(np.int64),
        numeric=rng.normal(size=(6, N_NUMERIC)),
        targets=(rng.random((6, len(TAGS))) < 0.3).astype(np.float64),
    )
    _, grads = model.backward(example)
    eps = 1e-6
    errors = {}
    for name, grad in grads.items():
        flat = model.params[name].ravel()
        fd = np.zeros_like(grad).ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = model.loss(example)
            flat[i] = orig - eps
            down = model.loss(example)
            flat[i] = orig
            fd[i] = (up - down) / (2 * eps)
        fd = fd.reshape(grad.shape)
        denom = max(np.linalg.norm(grad), np.linalg.norm(fd), 1e-12)
        errors[name] = np.linalg.norm(grad - fd) / denom
    return errors


def test_c05_gradients_match_central_differences():
    toy = SeqConfig(word_hash_bits=6, embed_dim=5, hidden=4, recurrent=3, dropout=0.0)
    for config in (toy, toy.ablation()):
        errors = _finite_difference_errors(config)
        worst = max(errors, key=errors.get)
        assert errors[worst] < 1e-4, (config.mode, worst, errors[worst])


# ---------------------------------------------------------------------------
# 6. The assignment solver is exact: on a thousand random cost matrices up
#    to 7x7 its cost equals the brute-force minimum over all assignments.

def test_c06_assignment_matches_brute_force():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        m = int(rng.integers(n, 8))
        cost = rng.integers(0, 100, size=(n, m)).astype(np.float64)
        cols = hungarian_assign(cost)
        assert len(cols) == n and len(set(cols)) == n
        got = sum(cost[r, c] for r, c in enumerate(cols))
        best = min(
            sum(cost[r, p[r]] for r in range(n))
            for p in itertools.permutations(range(m), n)
        )
        assert got == best, (cost, cols)


# ---------------------------------------------------------------------------
# 7. On clean corpora the labeler is complete: every field the truth
#    records yields at least one positive training example in both the
#    span and the word-tag representation, and chunking the word tags
#    recovers exactly the spans that were labeled.

def test_c07_every_present_field_labeled_and_iob_round_trips():
    specs = (
        CorpusSpec(num_templates=20, docs_per_template=(3, 3), seed=5, noise=NoiseSpec()),
        CorpusSpec(num_templates=15, docs_per_template=(2, 2), seed=31, noise=NoiseSpec()),
    )
    for spec in specs:
        pairs, _ = _pairs_and_noise(spec)
        for pair in pairs:
            doc, truth = pair.doc, pair.truth
            spans = field_spans(doc, truth)
            tags = iob_sequence(doc, truth)
            labeled = span_labels(doc, truth)
            chunks = chunk_tags(doc, tags)
            for field, _ in truth.items():
                assert field in spans, (doc.doc_id, field)
                assert any(f"B-{field.value}" in t for t in tags), (doc.doc_id, field)
                assert any(field in fields for _, fields in labeled), (doc.doc_id, field)
            for field in TARGET_FIELDS:
                tagged = {
                    i for i, t in enumerate(tags)
                    if f"B-{field.value}" in t or f"I-{field.value}" in t
                }
                recovered = set()
                for chunk_field, span in chunks:
                    if chunk_field == field:
                        assert value_matches(field, span_text(doc, span), truth.get(field))
                        recovered.update(range(span.start, span.stop))
                assert recovered == tagged, (doc.doc_id, field)


# ---------------------------------------------------------------------------
# 8. Bit-reproducibility: generating, training, extracting, and evaluating
#    twice with one seed yields identical files and identical reports.

def test_c08_pipeline_is_bit_reproducible(tmp_path):
    spec = CorpusSpec(num_templates=4, docs_per_template=(4, 4), seed=5, noise=MODERATE_NOISE)
    first = generate_corpus(spec)
    second = generate_corpus(spec)
    save_corpus(first, spec, tmp_path / "c1")
    save_corpus(second, spec, tmp_path / "c2")
    files = sorted(p.relative_to(tmp_path / "c1") for p in (tmp_path / "c1").rglob("*") if p.is_file())
    assert files
    for rel in files:
        assert (tmp_path / "c1" / rel).read_bytes() == (tmp_path / "c2" / rel).read_bytes(), rel

    pairs = [g.pair for g in first]
    configs = dict(
        baseline=dict(baseline_config=BaselineConfig(hash_bits=14, epochs=4)),
        seq=dict(seq_config=SeqConfig(word_hash_bits=12),
                 train_config=TrainConfig(seed=0, max_epochs=3, batch_size=8)),
    )
    for classifier, kwargs in configs.items():
        outcomes = []
        for run in (1, 2):
            result = run_experiment(
                pairs, "byDocument", classifier, 3,
                work_dir=tmp_path / f"{classifier}{run}", **kwargs,
            )
            outcomes.append((
                result.report.to_json(),
                Path(result.model_path).read_bytes(),
                result.produced,
            ))
        assert outcomes[0][0] == outcomes[1][0], f"{classifier} reports differ"
        assert outcomes[0][1] == outcomes[1][1], f"{classifier} model files differ"
        assert outcomes[0][2] == outcomes[1][2], f"{classifier} extractions differ"


# ---------------------------------------------------------------------------
# 9. The scorer against hand-computed confusion tables. Twenty pairs cover
#    every outcome class, including the split-token artifact where OCR
#    reads "162054" as "16 2054": literal comparison makes that one error
#    count twice, once as a wrong production and once as a miss.

def _inv(**kw):
    return Invoice({FieldType(k): v for k, v in kw.items()})


SCORER_CASES = [
    ("exact number", dict(Number="162054"), dict(Number="162054"), {"Number": (1, 0, 0)}),
    ("split token artifact", dict(Number="16 2054"), dict(Number="162054"), {"Number": (0, 1, 1)}),
    ("spurious total", dict(Total="100.00"), dict(), {"Total": (0, 1, 0)}),
    ("missed total", dict(), dict(Total="100.00"), {"Total": (0, 0, 1)}),
    ("both empty", dict(), dict(), {}),
    (
        "full house",
        dict(Number="7", Date="2016-09-30", Currency="EUR", OrderId="PO-1",
             Total="1250.00", LineTotal="1000.00", TaxTotal="250.00", TaxPercent="25.00"),
        dict(Number="7", Date="2016-09-30", Currency="EUR", OrderId="PO-1",
             Total="1250.00", LineTotal="1000.00", TaxTotal="250.00", TaxPercent="25.00"),
        {f.value: (1, 0, 0) for f in TARGET_FIELDS},
    ),
    (
        "full house, all wrong",
        dict(Number="8", Date="2016-09-29", Currency="USD", OrderId="PO-2",
             Total="1250.01", LineTotal="1000.01", TaxTotal="250.01", TaxPercent="20.00"),
        dict(Number="7", Date="2016-09-30", Currency="EUR", OrderId="PO-1",
             Total="1250.00", LineTotal="1000.00", TaxTotal="250.00", TaxPercent="25.00"),
        {f.value: (0, 1, 1) for f in TARGET_FIELDS},
    ),
    ("transposed date", dict(Date="2016-09-03"), dict(Date="2016-03-09"), {"Date": (0, 1, 1)}),
    ("currency match", dict(Currency="EUR"), dict(Currency="EUR"), {"Currency": (1, 0, 0)}),
    ("currency mismatch", dict(Currency="EUR"), dict(Currency="USD"), {"Currency": (0, 1, 1)}),
    (
        "tax missed beside correct total",
        dict(Total="1250.00"), dict(Total="1250.00", TaxTotal="250.00"),
        {"Total": (1, 0, 0), "TaxTotal": (0, 0, 1)},
    ),
    (
        "spurious total beside correct number",
        dict(Number="7", Total="9.99"), dict(Number="7"),
        {"Number": (1, 0, 0), "Total": (0, 1, 0)},
    ),
    (
        "no cross-field credit",
        dict(LineTotal="100.00"), dict(Total="100.00"),
        {"LineTotal": (0, 1, 0), "Total": (0, 0, 1)},
    ),
    ("percent match", dict(TaxPercent="25.00"), dict(TaxPercent="25.00"), {"TaxPercent": (1, 0, 0)}),
    ("percent off by scale", dict(TaxPercent="25.00"), dict(TaxPercent="2.50"), {"TaxPercent": (0, 1, 1)}),
    ("spaced order id", dict(OrderId="AB 1"), dict(OrderId="AB1"), {"OrderId": (0, 1, 1)}),
    (
        "mixed outcome document",
        dict(Number="1", Date="2020-01-02", Total="5.00", Currency="EUR"),
        dict(Number="1", Date="2020-01-02", Total="6.00", OrderId="X"),
        {"Number": (1, 0, 0), "Date": (1, 0, 0), "Total": (0, 1, 1),
         "Currency": (0, 1, 0), "OrderId": (0, 0, 1)},
    ),
    ("trailing zeros matter", dict(Total="1250.0"), dict(Total="1250.00"), {"Total": (0, 1, 1)}),
    ("zero amount", dict(TaxTotal="0.00"), dict(TaxTotal="0.00"), {"TaxTotal": (1, 0, 0)}),
    ("wrong year", dict(Date="1999-01-01"), dict(Date="2000-01-01"), {"Date": (0, 1, 1)}),
]


def test_c09_scorer_matches_hand_confusion_tables():
    assert len(SCORER_CASES) == 20
    scored = []
    for label, produced, truth, expected in SCORER_CASES:
        tallies = score_pair(_inv(**produced), _inv(**truth))
        scored.append(tallies)
        for field, tally in tallies.items():
            want = expected.get(field.value, (0, 0, 0))
            assert (tally.tp, tally.fp, tally.fn) == want, (label, field.value)
    report = build_report(scored, experiment="scorer", split="curated", model_id="hand")
    want_tp = sum(v[0] for _, _, _, e in SCORER_CASES for v in e.values())
    want_fp = sum(v[1] for _, _, _, e in SCORER_CASES for v in e.values())
    want_fn = sum(v[2] for _, _, _, e in SCORER_CASES for v in e.values())
    assert (report.micro.tp, report.micro.fp, report.micro.fn) == (want_tp, want_fp, want_fn)


# ---------------------------------------------------------------------------
# 10. The feedback loop, scripted against the HTTP API alone: upload thirty
#     documents, accept twenty-five extractions as-is, correct five injected
#     errors, retrain, and the corrected documents come back with their
#     accepted values.

WRONG_VALUES = {
    FieldType.NUMBER: "999999",
    FieldType.TOTAL: "999999.99",
    FieldType.DATE: "1999-12-31",
}


def test_c10_feedback_loop_retrains_and_honors_corrections(tmp_path):
    spec = CorpusSpec(num_templates=10, docs_per_template=(3, 3), seed=77, noise=NoiseSpec())
    pairs, _ = _pairs_and_noise(spec)
    assert len(pairs) == 30
    config = ServiceConfig(baseline_config=BaselineConfig(seed=0).scaled_down())
    client = TestClient(create_app(TrainingStore(tmp_path / "store"), config))

    for pair in pairs:
        r = client.post("/documents", content=save_document(pair.doc),
                        headers={"content-type": "application/json"})
        assert r.status_code == 201

    corrected_ids = []
    for i, pair in enumerate(pairs):
        url = f"/documents/{pair.doc.doc_id}/feedback"
        if i % 6 == 0:
            # An injected error reaches the store first, then the correction.
            field = next(f for f in WRONG_VALUES if pair.truth.present(f))
            broken = dict(pair.truth.to_dict())
            broken[field.value] = WRONG_VALUES[field]
            assert client.post(url, json={"correctedInvoice": broken}).status_code == 204
            assert client.post(url, json={
                "correctedInvoice": pair.truth.to_dict(), "source": "ui",
            }).status_code == 204
            corrected_ids.append(pair.doc.doc_id)
        else:
            assert client.post(url, json={
                "correctedInvoice": pair.truth.to_dict(),
            }).status_code == 204
    assert len(corrected_ids) == 5

    r = client.post("/train", json={"classifier": "baseline"})
    assert r.status_code == 200, r.text
    body = r.json()
    assert body["activated"] is True
    model_id = body["modelId"]

    accepted = {p.doc.doc_id: p.truth.to_dict() for p in pairs}
    for doc_id in corrected_ids:
        r = client.get(f"/documents/{doc_id}/extraction")
        assert r.status_code == 200
        assert r.json()["modelId"] == model_id
        assert r.json()["invoice"] == accepted[doc_id], doc_id
    # The accepted documents keep their values too.
    for pair in pairs:
        r = client.get(f"/documents/{pair.doc.doc_id}/extraction")
        assert r.json()["invoice"] == accepted[pair.doc.doc_id], pair.doc.doc_id
