"""Core document and field vocabulary shared by the whole pipeline.

Everything here is immutable after construction and safe to share across
threads. Line membership is decided by the ingest layer (input formats carry
line ids); nothing in this module re-clusters words by geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence


class StructuralError(ValueError):
    """A document violates a structural invariant (ordering, duplicate slots)."""


class FieldType(Enum):
    """The eight extracted fields plus the sentinel for everything else."""

    NUMBER = "Number"
    DATE = "Date"
    CURRENCY = "Currency"
    ORDER_ID = "OrderId"
    TOTAL = "Total"
    LINE_TOTAL = "LineTotal"
    TAX_TOTAL = "TaxTotal"
    TAX_PERCENT = "TaxPercent"
    UNDEFINED = "Undefined"


# Target fields in canonical order; UNDEFINED is deliberately not one of them.
TARGET_FIELDS: tuple[FieldType, ...] = (
    FieldType.NUMBER,
    FieldType.DATE,
    FieldType.CURRENCY,
    FieldType.ORDER_ID,
    FieldType.TOTAL,
    FieldType.LINE_TOTAL,
    FieldType.TAX_TOTAL,
    FieldType.TAX_PERCENT,
)

# Syntax family used for parsing/filtering a field's candidate values.
PARSER_KINDS: dict[FieldType, str] = {
    FieldType.NUMBER: "id",
    FieldType.DATE: "date",
    FieldType.CURRENCY: "currency",
    FieldType.ORDER_ID: "id",
    FieldType.TOTAL: "amount",
    FieldType.LINE_TOTAL: "amount",
    FieldType.TAX_TOTAL: "amount",
    FieldType.TAX_PERCENT: "percent",
}

# Fields assigned one-to-one by the assignment solver; the four totals are
# reconciled jointly instead.
INDEPENDENT_FIELDS: tuple[FieldType, ...] = (
    FieldType.NUMBER,
    FieldType.DATE,
    FieldType.CURRENCY,
    FieldType.ORDER_ID,
)
TOTALS_FIELDS: tuple[FieldType, ...] = (
    FieldType.TOTAL,
    FieldType.LINE_TOTAL,
    FieldType.TAX_TOTAL,
    FieldType.TAX_PERCENT,
)


@dataclass(frozen=True, slots=True)
class Word:
    """A positioned token. Coordinates are normalized to [0, 1] page space;
    ``page_width``/``page_height`` keep the original units for features that
    are defined in absolute units."""

    text: str
    page: int
    line: int
    pos_in_line: int
    left: float
    top: float
    right: float
    bottom: float
    page_width: float
    page_height: float

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("word text must be non-empty")
        if not (self.left < self.right and self.top < self.bottom):
            raise ValueError(
                f"degenerate box for {self.text!r}: "
                f"({self.left}, {self.top}, {self.right}, {self.bottom})"
            )
        if self.page_width <= 0 or self.page_height <= 0:
            raise ValueError("page dimensions must be positive")

    @property
    def center(self) -> tuple[float, float]:
        return ((self.left + self.right) / 2.0, (self.top + self.bottom) / 2.0)


def reading_order(words: Iterable[Word]) -> list[Word]:
    """Sort words into reading order: page, then line, then position on line.

    The sort is stable; a duplicate (page, line, pos_in_line) slot is a
    structural error because it would make the order ambiguous.
    """
    ordered = sorted(words, key=lambda w: (w.page, w.line, w.pos_in_line))
    seen: set[tuple[int, int, int]] = set()
    for w in ordered:
        key = (w.page, w.line, w.pos_in_line)
        if key in seen:
            raise StructuralError(f"duplicate word slot page={key[0]} line={key[1]} pos={key[2]}")
        seen.add(key)
    return ordered


@dataclass(frozen=True)
class Document:
    """An ordered word list plus identity. ``sender_id`` names the layout
    (template) the document came from and drives the unseen-template split."""

    doc_id: str
    sender_id: str
    words: tuple[Word, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))
        prev: tuple[int, int, int] | None = None
        lines_per_page: dict[int, set[int]] = {}
        for w in self.words:
            key = (w.page, w.line, w.pos_in_line)
            if prev is not None and key <= prev:
                raise StructuralError(f"words not in reading order at {key}")
            prev = key
            lines_per_page.setdefault(w.page, set()).add(w.line)
        for page, lines in lines_per_page.items():
            if lines != set(range(len(lines))):
                raise StructuralError(f"line indices on page {page} are not contiguous from 0")

    def lines(self) -> list[list[Word]]:
        """Words grouped per (page, line), in reading order."""
        out: list[list[Word]] = []
        key: tuple[int, int] | None = None
        for w in self.words:
            if (w.page, w.line) != key:
                out.append([])
                key = (w.page, w.line)
            out[-1].append(w)
        return out


@dataclass(frozen=True)
class NGram:
    """1..n consecutive words on a single line."""

    words: tuple[Word, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))
        if not self.words:
            raise ValueError("empty n-gram")
        first = self.words[0]
        for i, w in enumerate(self.words):
            if (w.page, w.line) != (first.page, first.line):
                raise ValueError("n-gram words must share a line")
            if w.pos_in_line != first.pos_in_line + i:
                raise ValueError("n-gram words must be consecutive on the line")

    @property
    def text(self) -> str:
        return " ".join(w.text for w in self.words)

    @property
    def page(self) -> int:
        return self.words[0].page

    @property
    def line(self) -> int:
        return self.words[0].line

    @property
    def start(self) -> int:
        return self.words[0].pos_in_line

    def __len__(self) -> int:
        return len(self.words)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (
            self.words[0].left,
            min(w.top for w in self.words),
            self.words[-1].right,
            max(w.bottom for w in self.words),
        )

    def span_key(self) -> tuple[int, int, int, int]:
        """Identity of the span within its document."""
        return (self.page, self.line, self.start, len(self.words))


class Invoice:
    """Canonical field values: amounts "123.45", dates ISO "2016-09-30",
    currency as an uppercase code, percent "25.00", ids verbatim with
    surrounding whitespace stripped. Absent fields simply have no entry."""

    __slots__ = ("_values",)

    def __init__(self, values: Mapping[FieldType, str] | None = None) -> None:
        vals: dict[FieldType, str] = {}
        for f, v in (values or {}).items():
            if f is FieldType.UNDEFINED:
                raise ValueError("invoice cannot carry the Undefined field")
            if v:
                vals[f] = v
        self._values = vals

    def get(self, f: FieldType) -> str:
        return self._values.get(f, "")

    def present(self, f: FieldType) -> bool:
        return f in self._values

    def items(self) -> list[tuple[FieldType, str]]:
        return [(f, self._values[f]) for f in TARGET_FIELDS if f in self._values]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Invoice) and self._values == other._values

    def __hash__(self) -> int:
        return hash(tuple(self.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{f.value}={v!r}" for f, v in self.items())
        return f"Invoice({body})"

    def to_dict(self) -> dict[str, str]:
        return {f.value: v for f, v in self.items()}

    @classmethod
    def from_dict(cls, d: Mapping[str, str]) -> "Invoice":
        by_name = {f.value: f for f in TARGET_FIELDS}
        vals: dict[FieldType, str] = {}
        for name, v in d.items():
            if name not in by_name:
                raise ValueError(f"unknown field {name!r}")
            vals[by_name[name]] = v
        return cls(vals)


OUTSIDE_TAG = "O"


def iob_tags(fields: Sequence[FieldType] = TARGET_FIELDS) -> list[str]:
    """The tag universe for a field configuration: O plus B-/I- per field."""
    tags = [OUTSIDE_TAG]
    for f in fields:
        tags.append(f"B-{f.value}")
        tags.append(f"I-{f.value}")
    return tags


def tag_field(tag: str) -> FieldType | None:
    """Field named by a B-/I- tag, None for O."""
    if tag == OUTSIDE_TAG:
        return None
    return FieldType(tag[2:])


@dataclass(frozen=True)
class LabeledPair:
    """A document together with its validated invoice record."""

    doc: Document
    truth: Invoice
