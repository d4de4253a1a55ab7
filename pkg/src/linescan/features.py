"""The span feature table and its five-group context concatenation.

Thirty named features per span in three groups: four text features, numeric
features (rendered with fixed 4-decimal precision so hashing is
deterministic), and boolean features rendered "1"/"0". A classified span's
full vector is its own features plus those of the nearest span in each of
the four page directions, every feature name-prefixed by its group, giving
5 x 30 = 150 named values.

The word-level numeric+boolean subset (26 features) doubles as the sequence
classifier's per-word input, where it is consumed as raw floats instead of
rendered strings.
"""

from __future__ import annotations

import numpy as np

from .lexicons import is_known_city, is_known_country, is_known_zip
from .model import Document
from .ngrams import DEFAULT_MAX_N, Span, iter_spans, line_offsets
from .parsers import has_fraction, parse_amount, parse_date, parse_integer

TEXT_FEATURES: tuple[str, ...] = (
    "RawText",
    "RawTextLastWord",
    "TextOfTwoWordsLeft",
    "TextPatterns",
)
NUMERIC_FEATURES: tuple[str, ...] = (
    "bottomMargin",
    "topMargin",
    "rightMargin",
    "leftMargin",
    "bottomMarginRelative",
    "topMarginRelative",
    "rightMarginRelative",
    "leftMarginRelative",
    "horizontalPosition",
    "verticalPosition",
    "leftAlignment",
    "length",
    "pageHeight",
    "pageWidth",
    "positionOnLine",
    "lineSize",
    "lineWhiteSpace",
)
BOOLEAN_FEATURES: tuple[str, ...] = (
    "hasDigits",
    "isKnownCity",
    "isKnownCountry",
    "isKnownZip",
    "parsesAsAmount",
    "parsesAsDate",
    "parsesAsNumber",
    "LineMathFeatures.isFactor",
    "LineMathFeatures.isProduct",
)
ALL_FEATURES: tuple[str, ...] = TEXT_FEATURES + NUMERIC_FEATURES + BOOLEAN_FEATURES
WORD_NUMERIC_FEATURES: tuple[str, ...] = NUMERIC_FEATURES + BOOLEAN_FEATURES

CONTEXT_GROUPS: tuple[str, ...] = ("own", "top", "bottom", "left", "right")

# Tolerance for the line arithmetic features: half a cent.
MATH_TOLERANCE = 0.005
# leftAlignment tolerance, in the document's original coordinate units.
ALIGN_TOLERANCE = 5.0

ABSENT = "<absent>"
NO_WORD = "<none>"


def text_pattern(s: str) -> str:
    """Character-class skeleton: uppercase X, lowercase x, digit 0, runs of
    whitespace a single space, anything else '?'."""
    out: list[str] = []
    for c in s:
        if c.isspace():
            if not out or out[-1] != " ":
                out.append(" ")
        elif c.isdigit():
            out.append("0")
        elif c.isupper():
            out.append("X")
        elif c.islower():
            out.append("x")
        else:
            out.append("?")
    return "".join(out)


class DocFeatures:
    """Feature tables for one document's spans, computed once and shared.

    Geometry-heavy features are vectorized over all spans; text renderings
    and context lookups are cached so neighbor groups reuse the neighbor's
    own rendering.
    """

    def __init__(self, doc: Document, max_n: int = DEFAULT_MAX_N, spans: list[Span] | None = None):
        self.doc = doc
        self.spans = list(iter_spans(doc, max_n)) if spans is None else list(spans)
        self._index = {s: i for i, s in enumerate(self.spans)}
        self._build_word_arrays()
        self._build_span_arrays()
        self._rendered: list[list[str] | None] = [None] * len(self.spans)
        self._neighbors: np.ndarray | None = None

    def _build_word_arrays(self) -> None:
        words = self.doc.words
        n = len(words)
        self.w_left = np.fromiter((w.left for w in words), float, n)
        self.w_top = np.fromiter((w.top for w in words), float, n)
        self.w_right = np.fromiter((w.right for w in words), float, n)
        self.w_bottom = np.fromiter((w.bottom for w in words), float, n)
        self.w_page = np.fromiter((w.page for w in words), int, n)
        self._line_ranges = line_offsets(self.doc)
        self.w_line = np.empty(n, int)
        for li, (lo, hi) in enumerate(self._line_ranges):
            self.w_line[lo:hi] = li
        # Amount value of each word, NaN when it does not parse.
        self.w_amount = np.full(n, np.nan)
        for i, w in enumerate(words):
            v = parse_amount(w.text)
            if v is not None:
                self.w_amount[i] = float(v)

    def _line_bounds(self, li: int) -> tuple[float, float]:
        lo, hi = self._line_ranges[li]
        return self.w_left[lo], self.w_right[hi - 1]

    def _build_span_arrays(self) -> None:
        words = self.doc.words
        starts = np.fromiter((s.start for s in self.spans), int, len(self.spans))
        stops = np.fromiter((s.stop for s in self.spans), int, len(self.spans))
        n = len(self.spans)
        self.s_left = self.w_left[starts]
        self.s_right = self.w_right[stops - 1]
        self.s_top = np.empty(n)
        self.s_bottom = np.empty(n)
        for i, s in enumerate(self.spans):
            self.s_top[i] = self.w_top[s.start : s.stop].min()
            self.s_bottom[i] = self.w_bottom[s.start : s.stop].max()
        self.s_page = self.w_page[starts]
        self.s_line = self.w_line[starts]
        self.s_cx = (self.s_left + self.s_right) / 2.0
        self.s_cy = (self.s_top + self.s_bottom) / 2.0
        self.s_start = starts
        self.s_stop = stops

        # Gap to the nearest word beyond each edge, among words overlapping
        # the span's projection on the other axis; 1.0 when there is none.
        h_overlap = (self.w_right[None, :] > self.s_left[:, None]) & (
            self.w_left[None, :] < self.s_right[:, None]
        )
        v_overlap = (self.w_bottom[None, :] > self.s_top[:, None]) & (
            self.w_top[None, :] < self.s_bottom[:, None]
        )
        same_page = self.w_page[None, :] == self.s_page[:, None]
        up_gap = self.s_top[:, None] - self.w_bottom[None, :]
        down_gap = self.w_top[None, :] - self.s_bottom[:, None]
        left_gap = self.s_left[:, None] - self.w_right[None, :]
        right_gap = self.w_left[None, :] - self.s_right[:, None]

        def nearest(gap: np.ndarray, overlap: np.ndarray) -> np.ndarray:
            masked = np.where(same_page & overlap & (gap > 0), gap, np.inf)
            best = masked.min(axis=1)
            return np.where(np.isfinite(best), np.clip(best, 0.0, 1.0), 1.0)

        self.s_top_rel = nearest(up_gap, h_overlap)
        self.s_bottom_rel = nearest(down_gap, h_overlap)
        self.s_left_rel = nearest(left_gap, v_overlap)
        self.s_right_rel = nearest(right_gap, v_overlap)

        # Words on the same page whose left edge aligns within tolerance,
        # measured in original units.
        page_w = np.fromiter((w.page_width for w in words), float, len(words))
        left_orig = self.w_left * page_w
        span_left_orig = left_orig[starts]
        align = (
            np.abs(left_orig[None, :] - span_left_orig[:, None]) <= ALIGN_TOLERANCE
        ) & same_page
        self.s_align = align.sum(axis=1)

    def _neighbor_table(self) -> np.ndarray:
        """Nearest span index per direction (4 x n_spans), -1 when absent.

        Directions order: top, bottom, left, right. A neighbor's bbox center
        must lie strictly in the half-plane for its direction, on the same
        page; nearest by squared center distance, ties to the lowest index.
        """
        if self._neighbors is not None:
            return self._neighbors
        n = len(self.spans)
        dx = self.s_cx[None, :] - self.s_cx[:, None]
        dy = self.s_cy[None, :] - self.s_cy[:, None]
        dist = dx * dx + dy * dy
        same_page = self.s_page[None, :] == self.s_page[:, None]
        out = np.full((4, n), -1, int)
        for d, mask in enumerate((dy < 0, dy > 0, dx < 0, dx > 0)):
            cand = np.where(mask & same_page, dist, np.inf)
            best = cand.argmin(axis=1)
            out[d] = np.where(np.isfinite(cand[np.arange(n), best]), best, -1)
        self._neighbors = out
        return out

    def values(self, si: int) -> dict[str, str | float | bool]:
        """The span's own 30 features, by name, as raw values."""
        doc, span = self.doc, self.spans[si]
        words = doc.words[span.start : span.stop]
        text = " ".join(w.text for w in words)
        first = words[0]
        lo, hi = self._line_ranges[self.s_line[si]]
        line_words = doc.words[lo:hi]
        line_left, line_right = self._line_bounds(self.s_line[si])
        extent = line_right - line_left
        widths = sum(w.right - w.left for w in line_words)
        whitespace = max(0.0, 1.0 - widths / extent) if extent > 0 else 0.0

        two_left_pos = first.pos_in_line - 2
        two_left = line_words[two_left_pos].text if two_left_pos >= 0 else NO_WORD

        own_value = parse_amount(text)
        x = float(own_value) if own_value is not None else None
        others = [
            self.w_amount[i]
            for i in range(lo, hi)
            if not (span.start <= i < span.stop) and not np.isnan(self.w_amount[i])
        ]
        is_factor = is_product = False
        if x is not None and others:
            for b in others:
                for c in others:
                    if abs(x * b - c) <= MATH_TOLERANCE:
                        is_factor = True
                    if abs(b * c - x) <= MATH_TOLERANCE:
                        is_product = True

        return {
            "RawText": text,
            "RawTextLastWord": words[-1].text,
            "TextOfTwoWordsLeft": two_left,
            "TextPatterns": text_pattern(text),
            "bottomMargin": 1.0 - self.s_bottom[si],
            "topMargin": self.s_top[si],
            "rightMargin": 1.0 - self.s_right[si],
            "leftMargin": self.s_left[si],
            "bottomMarginRelative": self.s_bottom_rel[si],
            "topMarginRelative": self.s_top_rel[si],
            "rightMarginRelative": self.s_right_rel[si],
            "leftMarginRelative": self.s_left_rel[si],
            "horizontalPosition": self.s_cx[si],
            "verticalPosition": self.s_cy[si],
            "leftAlignment": float(self.s_align[si]),
            "length": float(len(words)),
            "pageHeight": first.page_height,
            "pageWidth": first.page_width,
            "positionOnLine": first.pos_in_line / len(line_words),
            "lineSize": float(len(line_words)),
            "lineWhiteSpace": whitespace,
            "hasDigits": any(c.isdigit() for c in text),
            "isKnownCity": is_known_city(text),
            "isKnownCountry": is_known_country(text),
            "isKnownZip": is_known_zip(text),
            "parsesAsAmount": has_fraction(text),
            "parsesAsDate": parse_date(text) is not None,
            "parsesAsNumber": parse_integer(text) is not None,
            "LineMathFeatures.isFactor": is_factor,
            "LineMathFeatures.isProduct": is_product,
        }

    def rendered(self, si: int) -> list[str]:
        """The own features as "name=value" strings, in canonical order."""
        cached = self._rendered[si]
        if cached is not None:
            return cached
        vals = self.values(si)
        out: list[str] = []
        for name in TEXT_FEATURES:
            out.append(f"{name}={vals[name]}")
        for name in NUMERIC_FEATURES:
            out.append(f"{name}={vals[name]:.4f}")
        for name in BOOLEAN_FEATURES:
            out.append(f"{name}={'1' if vals[name] else '0'}")
        self._rendered[si] = out
        return out

    def tokens(self, si: int) -> list[str]:
        """All 150 context-concatenated feature tokens for one span."""
        out = ["own." + s for s in self.rendered(si)]
        neighbors = self._neighbor_table()
        for d, prefix in enumerate(CONTEXT_GROUPS[1:]):
            ni = neighbors[d, si]
            if ni < 0:
                out.extend(f"{prefix}.{name}={ABSENT}" for name in ALL_FEATURES)
            else:
                out.extend(prefix + "." + s for s in self.rendered(ni))
        return out

    def numeric(self, si: int) -> np.ndarray:
        """The 26 numeric+boolean features as raw floats, canonical order."""
        vals = self.values(si)
        return np.array([float(vals[name]) for name in WORD_NUMERIC_FEATURES])


def word_feature_matrix(doc: Document) -> np.ndarray:
    """Per-word numeric+boolean features, row i for word i: the sequence
    classifier's non-embedding inputs."""
    spans = [Span(i, 1) for i in range(len(doc.words))]
    table = DocFeatures(doc, spans=spans)
    out = np.empty((len(spans), len(WORD_NUMERIC_FEATURES)))
    for i in range(len(spans)):
        out[i] = table.numeric(i)
    return out
