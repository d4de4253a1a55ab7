"""HTTP front door: upload documents, read extractions with provenance,
collect corrections, retrain on demand.

Corrections arrive as free-form field values, never as word references;
the labeling stage re-anchors them to the page on its own. Retraining is
an explicit batch endpoint guarded by a single-job lock, and a freshly
trained model becomes active only if it does not score worse than the
current one on a held-out slice of the feedback store.
"""

from __future__ import annotations

import datetime
import json
import threading
from dataclasses import dataclass, field as dc_field

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .baseline import BaselineConfig
from .evaluate import Tally, build_report, score_pair
from .hashing import fnv1a64
from .ingest import IngestError, load_document, load_hocr, save_document
from .model import PARSER_KINDS, TARGET_FIELDS, FieldType, Invoice
from .parsers import parse_as
from .pipeline import AnyModel, extract, train_model
from .postprocess import Extraction, PostConfig
from .seqmodel import SeqConfig, TrainConfig
from .store import FeedbackRecord, StoreError, TrainingStore

_HOCR_TYPES = ("text/html", "application/xhtml+xml", "text/vnd.hocr+html")


@dataclass
class ServiceConfig:
    max_body_bytes: int = 5 * 1024 * 1024
    min_training_pairs: int = 10
    holdout_fraction: float = 0.1
    seed: int = 0
    baseline_config: BaselineConfig = dc_field(default_factory=BaselineConfig)
    seq_config: SeqConfig = dc_field(default_factory=SeqConfig)
    train_config: TrainConfig = dc_field(default_factory=TrainConfig)
    post: PostConfig = dc_field(default_factory=PostConfig)


def canonicalize_invoice(raw: dict) -> tuple[Invoice | None, dict[str, str]]:
    """Free-form field values into canonical form, or per-field reasons."""
    values: dict[FieldType, str] = {}
    errors: dict[str, str] = {}
    for name, value in raw.items():
        try:
            f = FieldType(name)
        except ValueError:
            errors[name] = "unknown field"
            continue
        if f is FieldType.UNDEFINED:
            errors[name] = "not a correctable field"
            continue
        if value is None or str(value).strip() == "":
            continue  # blank means absent
        canonical = parse_as(PARSER_KINDS[f], str(value))
        if canonical is None:
            errors[name] = f"cannot canonicalize {value!r} as {PARSER_KINDS[f]}"
        else:
            values[f] = canonical
    if errors:
        return None, errors
    return Invoice(values), {}


def _extraction_payload(model_id: str, ext: Extraction) -> dict:
    per_field = {}
    for f in TARGET_FIELDS:
        res = ext.fields.get(f)
        if res is None:
            per_field[f.value] = {"present": False}
        else:
            per_field[f.value] = {
                "present": True,
                "value": res.value,
                "probability": res.probability,
                "sourceWordIndices": list(res.word_indices),
            }
    return {"modelId": model_id, "invoice": ext.invoice().to_dict(), "perField": per_field}


def create_app(store: TrainingStore, config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="invoice extraction service")
    # The review client is served from a separate origin during development.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    state = app.state
    state.active: tuple[str, AnyModel] | None = None
    state.extraction_cache: dict[tuple[str, str], Extraction] = {}
    state.train_lock = threading.Lock()

    active_id = store.active_model_id()
    if active_id is not None:
        state.active = (active_id, store.load_model(active_id))

    def _error(status: int, message: str, **extra) -> JSONResponse:
        return JSONResponse({"error": message, **extra}, status_code=status)

    def _extraction_for(doc_id: str) -> tuple[str, Extraction]:
        model_id, model = state.active
        key = (doc_id, model_id)
        ext = state.extraction_cache.get(key)
        if ext is None:
            ext = extract(model, store.get_document(doc_id), config.post)
            state.extraction_cache[key] = ext
        return model_id, ext

    @app.post("/documents", status_code=201)
    async def upload_document(request: Request):
        body = await request.body()
        if len(body) > config.max_body_bytes:
            return _error(413, f"body exceeds {config.max_body_bytes} bytes")
        content_type = request.headers.get("content-type", "").split(";")[0].strip().lower()
        try:
            if content_type in _HOCR_TYPES:
                doc_id = request.query_params.get("docId") or f"hocr-{fnv1a64(body):016x}"
                sender = request.query_params.get("senderId", "unknown")
                doc = load_hocr(body, doc_id=doc_id, sender_id=sender)
            else:
                doc = load_document(body)
        except IngestError as e:
            return _error(400, str(e))
        try:
            store.put_document(doc)
        except StoreError as e:
            return _error(400, str(e))
        if state.active is not None:
            _extraction_for(doc.doc_id)
        return {"docId": doc.doc_id}

    @app.get("/documents/{doc_id}")
    def get_document(doc_id: str):
        if not store.has_document(doc_id):
            return _error(404, f"no document {doc_id!r}")
        return json.loads(save_document(store.get_document(doc_id)))

    @app.get("/documents/{doc_id}/extraction")
    def get_extraction(doc_id: str):
        if not store.has_document(doc_id):
            return _error(404, f"no document {doc_id!r}")
        if state.active is None:
            return _error(409, "no active model; train one first")
        model_id, ext = _extraction_for(doc_id)
        return _extraction_payload(model_id, ext)

    @app.post("/documents/{doc_id}/feedback", status_code=204)
    async def post_feedback(doc_id: str, request: Request):
        if not store.has_document(doc_id):
            return _error(404, f"no document {doc_id!r}")
        try:
            payload = await request.json()
        except Exception:
            return _error(400, "body must be JSON")
        raw = payload.get("correctedInvoice")
        if not isinstance(raw, dict):
            return _error(400, "correctedInvoice object required")
        source = payload.get("source", "api")
        if source not in ("ui", "api"):
            return _error(400, "source must be 'ui' or 'api'")
        invoice, errors = canonicalize_invoice(raw)
        if errors:
            return JSONResponse({"errors": errors}, status_code=422)
        store.append_feedback(
            FeedbackRecord(
                doc_id=doc_id,
                corrected=invoice,
                accepted_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
                source=source,
            )
        )
        return Response(status_code=204)

    def _holdout_split(pairs):
        rng = np.random.default_rng(config.seed)
        order = rng.permutation(len(pairs))
        n_hold = max(1, int(len(pairs) * config.holdout_fraction))
        hold = [pairs[i] for i in order[:n_hold]]
        train = [pairs[i] for i in order[n_hold:]]
        return train, hold

    def _micro_f1(model: AnyModel, holdout) -> float:
        scored = [
            score_pair(extract(model, p.doc, config.post).invoice(), p.truth) for p in holdout
        ]
        micro = Tally()
        for per_field in scored:
            for t in per_field.values():
                micro.add(t)
        return micro.f1

    @app.post("/train")
    def train(payload: dict):
        classifier = payload.get("classifier")
        if classifier not in ("baseline", "seq"):
            return JSONResponse(
                {"errors": {"classifier": "must be 'baseline' or 'seq'"}}, status_code=422
            )
        if not state.train_lock.acquire(blocking=False):
            return _error(409, "a training job is already running")
        try:
            pairs = store.pairs()
            if len(pairs) < config.min_training_pairs:
                return JSONResponse(
                    {"errors": {"store": f"need at least {config.min_training_pairs} feedback pairs, have {len(pairs)}"}},
                    status_code=422,
                )
            train_pairs, holdout = _holdout_split(pairs)
            model = train_model(
                classifier,
                train_pairs,
                holdout,
                seed=config.seed,
                baseline_config=config.baseline_config,
                seq_config=config.seq_config,
                train_config=config.train_config,
            )
            model_id = store.save_model(model, classifier)
            model = store.load_model(model_id)

            produced = [extract(model, p.doc, config.post).invoice() for p in holdout]
            scored = [score_pair(inv, p.truth) for inv, p in zip(produced, holdout)]
            report = build_report(
                scored, "train", f"holdout {len(train_pairs)}/{len(holdout)} seed={config.seed}", model_id
            )

            activated = True
            if state.active is not None:
                _, current = state.active
                if report.micro.f1 < _micro_f1(current, holdout):
                    activated = False
            if activated:
                store.set_active(model_id)
                state.active = (model_id, model)
            return {"modelId": model_id, "activated": activated, "report": report.to_dict()}
        finally:
            state.train_lock.release()

    @app.get("/models")
    def list_models():
        active = state.active[0] if state.active else None
        return {
            "models": [
                {"modelId": mid, "kind": mid.split("-", 1)[0], "active": mid == active}
                for mid in store.list_models()
            ]
        }

    @app.get("/health")
    def health():
        return {"status": "ok", "activeModel": state.active[0] if state.active else None}

    return app
