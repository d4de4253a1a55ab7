"""Disk layout behind the service: documents, feedback log, model files.

Everything is flat files so a store directory is portable and a training
set can be reproduced by replaying the log. The feedback log is
append-only; re-accepting a document appends a new record and the latest
one wins at replay time. Stored documents are never rewritten.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

from .ingest import load_document, save_document
from .model import Document, Invoice, LabeledPair
from .pipeline import AnyModel, load_any_model, model_digest


@dataclass(frozen=True)
class FeedbackRecord:
    doc_id: str
    corrected: Invoice
    accepted_at: str
    source: str = "api"

    def to_dict(self) -> dict:
        return {
            "docId": self.doc_id,
            "correctedInvoice": self.corrected.to_dict(),
            "acceptedAt": self.accepted_at,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeedbackRecord":
        return cls(
            doc_id=d["docId"],
            corrected=Invoice.from_dict(d["correctedInvoice"]),
            accepted_at=d.get("acceptedAt", ""),
            source=d.get("source", "api"),
        )


class StoreError(Exception):
    pass


class TrainingStore:
    """One directory: docs/, feedback.jsonl, models/ with an active pointer."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "docs").mkdir(parents=True, exist_ok=True)
        (self.root / "models").mkdir(exist_ok=True)
        self._log = self.root / "feedback.jsonl"
        self._append_lock = threading.Lock()

    # -- documents

    def _doc_path(self, doc_id: str) -> Path:
        if not doc_id or "/" in doc_id or doc_id.startswith("."):
            raise StoreError(f"unusable document id {doc_id!r}")
        return self.root / "docs" / f"{doc_id}.json"

    def put_document(self, doc: Document) -> None:
        """Store a document; re-putting identical content is a no-op, a
        conflicting body under the same id is refused."""
        path = self._doc_path(doc.doc_id)
        body = save_document(doc)
        if path.exists():
            if path.read_bytes() != body:
                raise StoreError(f"document {doc.doc_id!r} already stored with different content")
            return
        path.write_bytes(body)

    def has_document(self, doc_id: str) -> bool:
        return self._doc_path(doc_id).exists()

    def get_document(self, doc_id: str) -> Document:
        path = self._doc_path(doc_id)
        if not path.exists():
            raise StoreError(f"no document {doc_id!r}")
        return load_document(path.read_bytes())

    def list_documents(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "docs").glob("*.json"))

    # -- feedback

    def append_feedback(self, record: FeedbackRecord) -> None:
        if not self.has_document(record.doc_id):
            raise StoreError(f"no document {record.doc_id!r}")
        line = json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True)
        with self._append_lock:
            with open(self._log, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def feedback_records(self) -> list[FeedbackRecord]:
        if not self._log.exists():
            return []
        records = []
        with open(self._log, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(FeedbackRecord.from_dict(json.loads(line)))
        return records

    def pairs(self) -> list[LabeledPair]:
        """Replay the log into a training set: latest acceptance per
        document wins, ordered by each document's first acceptance."""
        latest: dict[str, Invoice] = {}
        for rec in self.feedback_records():
            latest[rec.doc_id] = rec.corrected
        return [LabeledPair(self.get_document(doc_id), inv) for doc_id, inv in latest.items()]

    # -- models

    def save_model(self, model: AnyModel, kind: str) -> str:
        """Write under a content-derived id; returns the model id."""
        models = self.root / "models"
        fd, tmp = tempfile.mkstemp(dir=models, suffix=".tmp")
        os.close(fd)
        try:
            model.save(tmp)
            model_id = f"{kind}-{model_digest(tmp)}"
            os.replace(tmp, models / f"{model_id}.model")
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return model_id

    def model_path(self, model_id: str) -> Path:
        return self.root / "models" / f"{model_id}.model"

    def load_model(self, model_id: str) -> AnyModel:
        path = self.model_path(model_id)
        if not path.exists():
            raise StoreError(f"no model {model_id!r}")
        return load_any_model(path)

    def list_models(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "models").glob("*.model"))

    def active_model_id(self) -> str | None:
        pointer = self.root / "models" / "active.json"
        if not pointer.exists():
            return None
        return json.loads(pointer.read_text(encoding="utf-8")).get("modelId")

    def set_active(self, model_id: str) -> None:
        """Atomic pointer swap; readers see the old or the new id, nothing
        in between."""
        if not self.model_path(model_id).exists():
            raise StoreError(f"no model {model_id!r}")
        pointer = self.root / "models" / "active.json"
        fd, tmp = tempfile.mkstemp(dir=pointer.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump({"modelId": model_id}, fh)
        os.replace(tmp, pointer)
