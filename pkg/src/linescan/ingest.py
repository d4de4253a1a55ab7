"""Loading and saving positional-text documents.

The native interchange format is JSON:

    {"docId": "...", "senderId": "...",
     "pages": [{"width": W, "height": H,
                "lines": [{"words": [{"text": "...",
                                      "bbox": [l, t, r, b]}]}]}]}

with bbox in absolute page units, normalized to [0, 1] on load. A small
hOCR subset (ocr_page / ocr_line / ocrx_word with title "bbox l t r b") is
accepted as an alternative encoding of the same structure.

Errors are distinct by kind: MalformedInput for shape/type problems,
InvalidBox for bad geometry, EmptyDocument for a document with no words.
Messages carry the path of the offending element.
"""

from __future__ import annotations

import json
from html.parser import HTMLParser
from pathlib import Path
from typing import Any

from .model import Document, Word


class IngestError(ValueError):
    pass


class MalformedInput(IngestError):
    pass


class InvalidBox(IngestError):
    pass


class EmptyDocument(IngestError):
    pass


def _require(cond: bool, path: str, what: str) -> None:
    if not cond:
        raise MalformedInput(f"{path}: {what}")


def _number(value: Any, path: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), path, "expected a number")
    return float(value)


def load_document(data: bytes | str | dict) -> Document:
    if isinstance(data, (bytes, str)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"invalid JSON: {exc}") from None
    _require(isinstance(data, dict), "$", "expected a JSON object")
    doc_id = data.get("docId")
    sender_id = data.get("senderId")
    _require(isinstance(doc_id, str) and doc_id != "", "docId", "expected a non-empty string")
    _require(isinstance(sender_id, str), "senderId", "expected a string")
    pages = data.get("pages")
    _require(isinstance(pages, list), "pages", "expected a list")
    if not pages:
        raise EmptyDocument("pages: document has no pages")

    words: list[Word] = []
    for pi, page in enumerate(pages):
        ppath = f"pages[{pi}]"
        _require(isinstance(page, dict), ppath, "expected an object")
        width = _number(page.get("width"), f"{ppath}.width")
        height = _number(page.get("height"), f"{ppath}.height")
        _require(width > 0 and height > 0, ppath, "page dimensions must be positive")
        lines = page.get("lines")
        _require(isinstance(lines, list) and len(lines) > 0, f"{ppath}.lines", "expected a non-empty list")
        for li, line in enumerate(lines):
            lpath = f"{ppath}.lines[{li}]"
            _require(isinstance(line, dict), lpath, "expected an object")
            wlist = line.get("words")
            _require(isinstance(wlist, list) and len(wlist) > 0, f"{lpath}.words", "expected a non-empty list")
            for wi, w in enumerate(wlist):
                wpath = f"{lpath}.words[{wi}]"
                _require(isinstance(w, dict), wpath, "expected an object")
                text = w.get("text")
                _require(isinstance(text, str) and text != "", f"{wpath}.text", "expected a non-empty string")
                bbox = w.get("bbox")
                _require(
                    isinstance(bbox, list) and len(bbox) == 4,
                    f"{wpath}.bbox",
                    "expected [l, t, r, b]",
                )
                l, t, r, b = (_number(v, f"{wpath}.bbox[{k}]") for k, v in enumerate(bbox))
                if not (l < r and t < b):
                    raise InvalidBox(f"{wpath}.bbox: degenerate box [{l}, {t}, {r}, {b}]")
                if l < 0 or t < 0 or r > width or b > height:
                    raise InvalidBox(
                        f"{wpath}.bbox: box [{l}, {t}, {r}, {b}] outside page {width}x{height}"
                    )
                words.append(
                    Word(
                        text=text,
                        page=pi,
                        line=li,
                        pos_in_line=wi,
                        left=l / width,
                        top=t / height,
                        right=r / width,
                        bottom=b / height,
                        page_width=width,
                        page_height=height,
                    )
                )
    if not words:
        raise EmptyDocument("document has no words")
    return Document(doc_id, sender_id, tuple(words))


def save_document(doc: Document) -> bytes:
    """Canonical serialization: absolute coordinates rounded to 4 decimals.

    load(save(load(f))) is byte-identical to save(load(f)): rounding removes
    the sub-1e-4 drift of the normalize/denormalize division.
    """
    pages: list[dict] = []
    for w in doc.words:
        while w.page >= len(pages):
            pages.append({"width": w.page_width, "height": w.page_height, "lines": []})
        lines = pages[w.page]["lines"]
        while w.line >= len(lines):
            lines.append({"words": []})
        lines[w.line]["words"].append(
            {
                "text": w.text,
                "bbox": [
                    round(w.left * w.page_width, 4),
                    round(w.top * w.page_height, 4),
                    round(w.right * w.page_width, 4),
                    round(w.bottom * w.page_height, 4),
                ],
            }
        )
    for pi, page in enumerate(pages):
        if not page["lines"]:
            raise ValueError(f"page {pi} has no words; page indices must be contiguous")
    payload = {"docId": doc.doc_id, "senderId": doc.sender_id, "pages": pages}
    return (json.dumps(payload, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def load_document_file(path: str | Path) -> Document:
    return load_document(Path(path).read_bytes())


def save_document_file(doc: Document, path: str | Path) -> None:
    Path(path).write_bytes(save_document(doc))


class _HocrParser(HTMLParser):
    """Collects the ocr_page/ocr_line/ocrx_word hierarchy with bboxes."""

    # Void elements never produce an end tag; tracking them would desync
    # the open-element stack.
    _VOID = frozenset({"br", "hr", "img", "meta", "link", "input", "wbr"})

    def __init__(self) -> None:
        super().__init__()
        self.pages: list[dict] = []
        self._stack: list[str] = []
        self._word: dict | None = None

    def _classes(self, attrs: list[tuple[str, str | None]]) -> list[str]:
        for k, v in attrs:
            if k == "class" and v:
                return v.split()
        return []

    def _bbox(self, attrs: list[tuple[str, str | None]], path: str) -> list[float]:
        title = next((v for k, v in attrs if k == "title"), None)
        if title:
            for prop in title.split(";"):
                parts = prop.split()
                if parts and parts[0] == "bbox":
                    if len(parts) != 5:
                        raise MalformedInput(f"{path}: malformed bbox property {prop.strip()!r}")
                    try:
                        return [float(p) for p in parts[1:]]
                    except ValueError:
                        raise MalformedInput(f"{path}: non-numeric bbox in {prop.strip()!r}") from None
        raise MalformedInput(f"{path}: missing bbox in title attribute")

    def _path(self, kind: str) -> str:
        parts = [f"ocr_page[{max(0, len(self.pages) - 1)}]"]
        if kind in ("ocr_line", "ocrx_word") and self.pages:
            parts.append(f"ocr_line[{max(0, len(self.pages[-1]['lines']) - 1)}]")
        if kind == "ocrx_word" and self.pages and self.pages[-1]["lines"]:
            parts.append(f"ocrx_word[{len(self.pages[-1]['lines'][-1]['words'])}]")
        return "/".join(parts[: {"ocr_page": 1, "ocr_line": 2, "ocrx_word": 3}[kind]])

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag in self._VOID:
            return
        classes = self._classes(attrs)
        if "ocr_page" in classes:
            self.pages.append({"bbox": None, "lines": []})
            self.pages[-1]["bbox"] = self._bbox(attrs, self._path("ocr_page"))
            self._stack.append("ocr_page")
        elif "ocr_line" in classes:
            if not self.pages:
                raise MalformedInput("ocr_line outside any ocr_page")
            self.pages[-1]["lines"].append({"words": []})
            self._stack.append("ocr_line")
        elif "ocrx_word" in classes:
            if not self.pages or not self.pages[-1]["lines"]:
                raise MalformedInput("ocrx_word outside any ocr_line")
            path = self._path("ocrx_word")
            self._word = {"bbox": self._bbox(attrs, path), "text": "", "path": path}
            self._stack.append("ocrx_word")
        elif self._stack:
            self._stack.append("other")

    def handle_endtag(self, tag: str) -> None:
        if tag in self._VOID or not self._stack:
            return
        kind = self._stack.pop()
        if kind == "ocrx_word" and self._word is not None:
            text = self._word["text"].strip()
            if not text:
                raise MalformedInput(f"{self._word['path']}: word has no text")
            self.pages[-1]["lines"][-1]["words"].append(
                {"text": text, "bbox": self._word["bbox"]}
            )
            self._word = None

    def handle_data(self, data: str) -> None:
        if self._word is not None:
            self._word["text"] += data


def load_hocr(data: bytes | str, doc_id: str = "doc", sender_id: str = "unknown") -> Document:
    """Parse the hOCR subset into the same Document the JSON loader builds."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    parser = _HocrParser()
    parser.feed(data)
    parser.close()
    if not parser.pages:
        raise EmptyDocument("no ocr_page element found")
    pages = []
    for pi, page in enumerate(parser.pages):
        pl, pt, pr, pb = page["bbox"]
        width, height = pr - pl, pb - pt
        if width <= 0 or height <= 0:
            raise InvalidBox(f"ocr_page[{pi}]: degenerate page bbox {page['bbox']}")
        lines = []
        for line in page["lines"]:
            if line["words"]:
                lines.append(
                    {
                        "words": [
                            {
                                "text": w["text"],
                                "bbox": [
                                    w["bbox"][0] - pl,
                                    w["bbox"][1] - pt,
                                    w["bbox"][2] - pl,
                                    w["bbox"][3] - pt,
                                ],
                            }
                            for w in line["words"]
                        ]
                    }
                )
        if not lines:
            raise EmptyDocument(f"ocr_page[{pi}]: page has no words")
        pages.append({"width": width, "height": height, "lines": lines})
    return load_document({"docId": doc_id, "senderId": sender_id, "pages": pages})
