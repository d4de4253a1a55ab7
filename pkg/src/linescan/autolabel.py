"""Automatic training-label generation from validated invoice records.

A span is labeled with a field when its parsed text equals the field's
recorded value. There is no human span annotation anywhere: when a value
occurs several times in a document every occurrence is labeled, and a span
whose text parses to two fields' values carries both labels.

Id fields compare with whitespace removed, so an id printed with a stray
space inside still labels ("16 2054" against a recorded "162054"). The span
text stays verbatim, which is what the extractor will later produce.
"""

from __future__ import annotations

from .model import Document, FieldType, Invoice, OUTSIDE_TAG, PARSER_KINDS, TARGET_FIELDS
from .ngrams import DEFAULT_MAX_N, Span, iter_spans, line_offsets, span_text
from .parsers import parse_as, strip_spaces

# Labeling widens the span search a little beyond the value's own word count
# to tolerate split or merged tokens.
SEARCH_SLACK = 2


def value_matches(field: FieldType, text: str, truth_value: str) -> bool:
    kind = PARSER_KINDS[field]
    parsed = parse_as(kind, text)
    if parsed is None:
        return False
    if kind == "id":
        return strip_spaces(parsed) == strip_spaces(truth_value)
    return parsed == truth_value


def field_spans(doc: Document, truth: Invoice) -> dict[FieldType, list[Span]]:
    """All spans matching each recorded field value, unresolved for overlap."""
    out: dict[FieldType, list[Span]] = {}
    for field, value in truth.items():
        max_n = len(value.split()) + SEARCH_SLACK
        matches = [s for s in iter_spans(doc, max_n) if value_matches(field, span_text(doc, s), value)]
        if matches:
            out[field] = matches
    return out


def span_labels(
    doc: Document, truth: Invoice, neg_max_n: int = DEFAULT_MAX_N
) -> list[tuple[Span, frozenset[FieldType]]]:
    """Training pairs for span classification, each span exactly once.

    Positive spans carry their matched field set (possibly several fields);
    every other span up to ``neg_max_n`` words carries {Undefined}.
    """
    positive: dict[Span, set[FieldType]] = {}
    for field, spans in field_spans(doc, truth).items():
        for s in spans:
            positive.setdefault(s, set()).add(field)
    undefined = frozenset((FieldType.UNDEFINED,))
    out: list[tuple[Span, frozenset[FieldType]]] = []
    emitted: set[Span] = set()
    for s in iter_spans(doc, neg_max_n):
        out.append((s, frozenset(positive[s]) if s in positive else undefined))
        emitted.add(s)
    for s in sorted(positive.keys() - emitted, key=lambda s: (s.start, s.length)):
        out.append((s, frozenset(positive[s])))
    return out


def _keep_longest(spans: list[Span]) -> list[Span]:
    """Drop same-field overlaps: longest span wins, ties to the leftmost."""
    kept: list[Span] = []
    for s in sorted(spans, key=lambda s: (-s.length, s.start)):
        if not any(s.overlaps(k) for k in kept):
            kept.append(s)
    return sorted(kept, key=lambda s: s.start)


def iob_sequence(doc: Document, truth: Invoice) -> list[frozenset[str]]:
    """Per-word tag sets: B-field on a span's first word, I-field after, {O}
    for words under no span. Spans of different fields may overlap, so a word
    can carry several tags; the targets stay multi-label."""
    tags: list[set[str]] = [set() for _ in doc.words]
    for field, spans in field_spans(doc, truth).items():
        for s in _keep_longest(spans):
            tags[s.start].add(f"B-{field.value}")
            for i in range(s.start + 1, s.stop):
                tags[i].add(f"I-{field.value}")
    return [frozenset(t) if t else frozenset((OUTSIDE_TAG,)) for t in tags]


def chunk_tags(
    doc: Document, tags: list[frozenset[str]] | list[str]
) -> list[tuple[FieldType, Span]]:
    """Group tagged words back into labeled spans.

    Per field, a maximal B-f (I-f)* run becomes one span. Runs cannot cross a
    line boundary (spans live on one line by definition); an I-f with no
    B-f run to continue is noise and is ignored. Output is ordered by
    (start, field order).
    """
    sets = [frozenset((t,)) if isinstance(t, str) else t for t in tags]
    line_of: list[int] = [0] * len(sets)
    for li, (lo, hi) in enumerate(line_offsets(doc)):
        for i in range(lo, hi):
            line_of[i] = li
    chunks: list[tuple[FieldType, Span]] = []
    for field in TARGET_FIELDS:
        b, i_tag = f"B-{field.value}", f"I-{field.value}"
        pos = 0
        while pos < len(sets):
            if b in sets[pos]:
                stop = pos + 1
                while stop < len(sets) and i_tag in sets[stop] and line_of[stop] == line_of[pos]:
                    stop += 1
                chunks.append((field, Span(pos, stop - pos)))
                pos = stop
            else:
                pos += 1
    order = {f: i for i, f in enumerate(TARGET_FIELDS)}
    chunks.sort(key=lambda c: (c[1].start, order[c[0]]))
    return chunks


def chunks_to_tags(chunks: list[tuple[FieldType, Span]], n_words: int) -> list[str]:
    """Single-label tag sequence for non-overlapping chunks; inverse of
    chunk_tags on such input."""
    tags = [OUTSIDE_TAG] * n_words
    for field, span in chunks:
        tags[span.start] = f"B-{field.value}"
        for i in range(span.start + 1, span.stop):
            tags[i] = f"I-{field.value}"
    return tags
