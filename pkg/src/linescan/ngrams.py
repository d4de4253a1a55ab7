"""Span enumeration over document lines.

A span is (start, length) into the document's reading-order word list, never
crossing a line boundary. Enumeration order is deterministic: by line, then
start position, then length, so downstream tie-breaks are stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .model import Document, NGram

# Spans the classifiers score; labeling may use longer spans when the target
# value itself is long.
DEFAULT_MAX_N = 4


@dataclass(frozen=True, slots=True)
class Span:
    start: int
    length: int

    @property
    def stop(self) -> int:
        return self.start + self.length

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.stop and other.start < self.stop


def line_offsets(doc: Document) -> list[tuple[int, int]]:
    """(start, stop) word-index ranges of each line, in reading order."""
    out: list[tuple[int, int]] = []
    key: tuple[int, int] | None = None
    for i, w in enumerate(doc.words):
        if (w.page, w.line) != key:
            out.append((i, i + 1))
            key = (w.page, w.line)
        else:
            out[-1] = (out[-1][0], i + 1)
    return out


def iter_spans(doc: Document, max_n: int = DEFAULT_MAX_N) -> Iterator[Span]:
    for lo, hi in line_offsets(doc):
        for start in range(lo, hi):
            for n in range(1, min(max_n, hi - start) + 1):
                yield Span(start, n)


def span_text(doc: Document, span: Span) -> str:
    return " ".join(w.text for w in doc.words[span.start : span.stop])


def make_ngram(doc: Document, span: Span) -> NGram:
    return NGram(doc.words[span.start : span.stop])
