"""From classifier probabilities to a finished invoice record.

Four stages: parser filtering of candidate spans, a one-to-one assignment
of the four independent fields (number, date, currency, order id), an
exhaustive reconciliation of the four totals fields against their two
arithmetic constraints, and deterministic XML emission.

Amounts are compared in integer cents and percentages in integer basis
points, so the epsilon checks are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from itertools import product
from xml.etree import ElementTree
from xml.sax.saxutils import escape

import numpy as np

from . import kernels
from .model import (
    INDEPENDENT_FIELDS,
    PARSER_KINDS,
    TOTALS_FIELDS,
    Document,
    FieldType,
    Invoice,
)
from .ngrams import Span, make_ngram, span_text
from .parsers import parse_as

# Emission order of the output record; totals come last, Total closing.
XML_FIELD_ORDER: tuple[FieldType, ...] = (
    FieldType.NUMBER,
    FieldType.DATE,
    FieldType.CURRENCY,
    FieldType.ORDER_ID,
    FieldType.LINE_TOTAL,
    FieldType.TAX_TOTAL,
    FieldType.TAX_PERCENT,
    FieldType.TOTAL,
)

# Cost of assigning a candidate to a field it cannot parse as. Anything
# above the dummy-column cost 1.0 works: the solver then prefers leaving
# the field empty.
_INVALID_CELL = 2.0
_TIE_EPS = 1e-12


@dataclass(frozen=True)
class PostConfig:
    probability_floor: float = 0.05
    totals_beam: int = 5
    absent_cost: float = 0.5
    violation_cost: float = 1.0
    epsilon_cents: int = 1


@dataclass(frozen=True)
class Candidate:
    span: Span
    field: FieldType
    probability: float
    parsed: str


@dataclass(frozen=True)
class FieldResult:
    value: str
    word_indices: tuple[int, ...]
    # None when the value was computed from the arithmetic constraints
    # rather than read off the page.
    probability: float | None


@dataclass
class Extraction:
    fields: dict[FieldType, FieldResult] = dc_field(default_factory=dict)
    totals_cost: float = 0.0
    totals_consistent: bool = False

    def invoice(self) -> Invoice:
        return Invoice({f: r.value for f, r in self.fields.items()})


def filter_candidates(
    doc: Document,
    per_field: dict[FieldType, list[tuple[Span, float]]],
    config: PostConfig,
) -> dict[FieldType, list[Candidate]]:
    """Drop candidates whose text does not parse as the field's syntax or
    whose probability is under the floor."""
    out: dict[FieldType, list[Candidate]] = {f: [] for f in per_field}
    for f, cands in per_field.items():
        kind = PARSER_KINDS[f]
        for span, p in cands:
            if p < config.probability_floor:
                continue
            parsed = parse_as(kind, span_text(doc, span))
            if parsed is not None:
                out[f].append(Candidate(span, f, p, parsed))
    return out


def _solve(cost: np.ndarray) -> float:
    if cost.shape[0] == 0:
        return 0.0
    cols = kernels.assign_min_cost(cost)
    return float(sum(cost[r, c] for r, c in enumerate(cols)))


def hungarian_assign(cost: np.ndarray) -> list[int]:
    """Minimum-cost column per row; among optimal assignments returns the
    lexicographically smallest (row 0's column minimized first, then row
    1's, and so on). Requires rows <= columns."""
    n_rows, n_cols = cost.shape
    if n_rows > n_cols:
        raise ValueError(f"need at least as many columns as rows, got {cost.shape}")
    best = _solve(cost)
    chosen: list[int] = []
    free = list(range(n_cols))
    prefix = 0.0
    for r in range(n_rows):
        for c in free:
            rest = [x for x in free if x != c]
            total = prefix + cost[r, c] + _solve(cost[r + 1 :, rest])
            if total <= best + _TIE_EPS:
                chosen.append(c)
                free = rest
                prefix += cost[r, c]
                break
    return chosen


def assign_independent(
    candidates: dict[FieldType, list[Candidate]], config: PostConfig
) -> dict[FieldType, Candidate]:
    """One candidate per independent field via the assignment solver; a
    dummy column per field (cost 1.0) models leaving it empty."""
    pool: list[tuple[Span, str]] = []
    seen: dict[Span, int] = {}
    by_cell: dict[tuple[FieldType, int], Candidate] = {}
    for f in INDEPENDENT_FIELDS:
        for cand in candidates.get(f, []):
            ci = seen.setdefault(cand.span, len(seen))
            if ci == len(pool):
                pool.append((cand.span, cand.parsed))
            by_cell[(f, ci)] = cand
    n = len(pool)
    cost = np.full((len(INDEPENDENT_FIELDS), n + len(INDEPENDENT_FIELDS)), 1.0)
    cost[:, :n] = _INVALID_CELL
    for (f, ci), cand in by_cell.items():
        cost[INDEPENDENT_FIELDS.index(f), ci] = 1.0 - cand.probability
    assignment = hungarian_assign(cost)
    out: dict[FieldType, Candidate] = {}
    for fi, f in enumerate(INDEPENDENT_FIELDS):
        ci = assignment[fi]
        cand = by_cell.get((f, ci))
        if ci < n and cand is not None:
            out[f] = cand
    return out


def _cents(canonical: str) -> int:
    whole, frac = canonical.split(".")
    return int(whole) * 100 + int(frac)


def _from_cents(cents: int) -> str:
    return f"{cents // 100}.{cents % 100:02d}"


@dataclass
class TotalsAssignment:
    chosen: dict[FieldType, Candidate]
    computed: dict[FieldType, str]
    cost: float
    consistent: bool


def _violations(values: dict[FieldType, int], config: PostConfig) -> int:
    """Violated arithmetic constraints among those with all operands
    assigned. Values are cents, except TaxPercent in basis points."""
    v = 0
    tot = values.get(FieldType.TOTAL)
    lt = values.get(FieldType.LINE_TOTAL)
    tt = values.get(FieldType.TAX_TOTAL)
    pct = values.get(FieldType.TAX_PERCENT)
    eps = config.epsilon_cents
    if tot is not None and lt is not None and tt is not None:
        if abs(lt + tt - tot) > eps:
            v += 1
    if lt is not None and tt is not None and pct is not None:
        # lt/100 * pct/100 vs tt/100, scaled by 10^4 to stay integral
        if abs(lt * pct - tt * 10_000) > eps * 10_000:
            v += 1
    return v


def assign_totals(
    candidates: dict[FieldType, list[Candidate]], config: PostConfig
) -> TotalsAssignment:
    """Exhaustive search over top-k candidates per totals field plus the
    absent option, minimizing probability cost plus absence and
    constraint-violation penalties. Afterwards a single absent field that
    the other three determine is filled in by computation."""
    options: list[list[Candidate | None]] = []
    for f in TOTALS_FIELDS:
        ranked = sorted(
            candidates.get(f, []), key=lambda c: -c.probability
        )[: config.totals_beam]
        options.append(list(ranked) + [None])

    best_cost = np.inf
    best: tuple[Candidate | None, ...] = (None,) * len(TOTALS_FIELDS)
    for combo in product(*options):
        cost = 0.0
        values: dict[FieldType, int] = {}
        for f, cand in zip(TOTALS_FIELDS, combo):
            if cand is None:
                cost += config.absent_cost
            else:
                cost += 1.0 - cand.probability
                # Canonical two-decimal strings: cents for amounts, basis
                # points for the percent field.
                values[f] = _cents(cand.parsed)
        cost += config.violation_cost * _violations(values, config)
        if cost < best_cost - _TIE_EPS:
            best_cost = cost
            best = combo

    chosen = {f: c for f, c in zip(TOTALS_FIELDS, best) if c is not None}
    values = {f: _cents(c.parsed) for f, c in chosen.items()}
    computed = _complete(values)
    all_present = len(values) + len(computed) == len(TOTALS_FIELDS)
    full = dict(values)
    for f, s in computed.items():
        full[f] = _cents(s)
    consistent = all_present and _violations(full, config) == 0
    return TotalsAssignment(chosen, computed, float(best_cost), consistent)


def _complete(values: dict[FieldType, int]) -> dict[FieldType, str]:
    """Derive the single missing totals field from the other three, when
    the arithmetic allows a valid value."""
    missing = [f for f in TOTALS_FIELDS if f not in values]
    if len(missing) != 1:
        return {}
    tot = values.get(FieldType.TOTAL)
    lt = values.get(FieldType.LINE_TOTAL)
    tt = values.get(FieldType.TAX_TOTAL)
    pct = values.get(FieldType.TAX_PERCENT)
    f = missing[0]
    if f is FieldType.TOTAL:
        return {f: _from_cents(lt + tt)}
    if f is FieldType.TAX_TOTAL:
        if tot - lt < 0:
            return {}
        return {f: _from_cents(tot - lt)}
    if f is FieldType.LINE_TOTAL:
        if tot - tt < 0:
            return {}
        return {f: _from_cents(tot - tt)}
    if lt <= 0:
        return {}
    bp = round(tt * 10_000 / lt)
    if bp < 0 or bp > 10_000:
        return {}
    return {f: _from_cents(bp)}


def extract_invoice(
    doc: Document,
    per_field: dict[FieldType, list[tuple[Span, float]]],
    config: PostConfig | None = None,
) -> Extraction:
    """The full post-processing path from raw per-field span probabilities."""
    config = config or PostConfig()
    candidates = filter_candidates(doc, per_field, config)
    result = Extraction()
    for f, cand in assign_independent(candidates, config).items():
        result.fields[f] = FieldResult(
            cand.parsed, tuple(range(cand.span.start, cand.span.stop)), cand.probability
        )
    totals = assign_totals(candidates, config)
    result.totals_cost = totals.cost
    result.totals_consistent = totals.consistent
    for f, cand in totals.chosen.items():
        result.fields[f] = FieldResult(
            cand.parsed, tuple(range(cand.span.start, cand.span.stop)), cand.probability
        )
    for f, value in totals.computed.items():
        result.fields[f] = FieldResult(value, (), None)
    return result


def oracle_probabilities(
    doc: Document, truth: Invoice
) -> dict[FieldType, list[tuple[Span, float]]]:
    """Classifier output replaced by the labels themselves: probability 1.0
    for every span the labeler marks for a field. Feeds the identical
    post-processing path, which bounds achievable pipeline performance."""
    from .autolabel import field_spans

    return {
        f: [(span, 1.0) for span in spans]
        for f, spans in field_spans(doc, truth).items()
    }


def oracle_extract(doc: Document, truth: Invoice, config: PostConfig | None = None) -> Extraction:
    return extract_invoice(doc, oracle_probabilities(doc, truth), config)


def invoice_xml(inv: Invoice) -> bytes:
    """Deterministic structured rendering: fixed element order, 2-space
    indent, UTF-8 bytes; absent fields are omitted entirely."""
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    present = [(f, inv.get(f)) for f in XML_FIELD_ORDER if inv.present(f)]
    if not present:
        lines.append("<Invoice/>")
    else:
        lines.append("<Invoice>")
        for f, value in present:
            lines.append(f"  <{f.value}>{escape(value)}</{f.value}>")
        lines.append("</Invoice>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_invoice_xml(data: bytes) -> Invoice:
    root = ElementTree.fromstring(data)
    if root.tag != "Invoice":
        raise ValueError(f"unexpected root element {root.tag!r}")
    values: dict[FieldType, str] = {}
    for child in root:
        values[FieldType(child.tag)] = child.text or ""
    return Invoice(values)
