"""Seeded synthetic invoice corpora.

A template fixes everything a sender would keep constant: language, layout
columns, keyword wording, amount/date formats, decorations. Each document
samples field values, renders them into positioned words, and applies the
configured noise. The ground-truth record is produced by the same
arithmetic that prints the page, so noise-free corpora are exactly
recoverable by value matching.

Three independent noise channels, all tracked per document so evaluation
losses can be attributed:
  - OCR character substitution (digits misread as look-alike letters),
  - truth discrepancy (the recorded value differs from every span on the
    page, as happens when a ledger is corrected after scanning),
  - field missing (value words dropped from the page, truth kept).

Generation is a pure function of the spec: template t gets its own RNG
seeded (seed, t), document d of template t gets (seed, t, d).
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .autolabel import field_spans
from .ingest import load_document_file, save_document
from .model import TARGET_FIELDS, Document, FieldType, Invoice, LabeledPair, Word

PAGE_W = 595.0
PAGE_H = 842.0

AMOUNT_FORMATS = ("1,234.56", "1.234,56", "1234.56")
DATE_FORMATS = ("iso", "dot", "slash")
LANGUAGES = ("en", "de", "da")

# Digit -> look-alike letters, applied to document words only.
OCR_SUBSTITUTIONS = {"0": "oO", "1": "lI", "5": "S", "8": "B"}


@dataclass(frozen=True)
class NoiseSpec:
    ocr_char_sub_prob: float = 0.0
    truth_discrepancy_prob: float = 0.0
    field_missing_prob: float = 0.0

    def __post_init__(self) -> None:
        for name in ("ocr_char_sub_prob", "truth_discrepancy_prob", "field_missing_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class CorpusSpec:
    num_templates: int
    docs_per_template: tuple[int, int]
    languages: tuple[str, ...] = LANGUAGES
    seed: int = 0
    noise: NoiseSpec = NoiseSpec()
    words_range: tuple[int, int] = (80, 300)

    def __post_init__(self) -> None:
        if self.num_templates < 1:
            raise ValueError("num_templates must be >= 1")
        lo, hi = self.docs_per_template
        if not 1 <= lo <= hi:
            raise ValueError(f"bad docs_per_template range ({lo}, {hi})")
        if not self.languages or any(l not in LANGUAGES for l in self.languages):
            raise ValueError(f"languages must be a non-empty subset of {LANGUAGES}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        lo, hi = self.words_range
        if not 10 <= lo <= hi:
            raise ValueError(f"bad words_range ({lo}, {hi})")

    def to_dict(self) -> dict:
        return {
            "numTemplates": self.num_templates,
            "docsPerTemplate": list(self.docs_per_template),
            "languages": list(self.languages),
            "seed": self.seed,
            "noise": {
                "ocrCharSubProb": self.noise.ocr_char_sub_prob,
                "truthDiscrepancyProb": self.noise.truth_discrepancy_prob,
                "fieldMissingProb": self.noise.field_missing_prob,
            },
            "wordsRange": list(self.words_range),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusSpec":
        noise = d.get("noise", {})
        return cls(
            num_templates=int(d["numTemplates"]),
            docs_per_template=tuple(d["docsPerTemplate"]),
            languages=tuple(d.get("languages", LANGUAGES)),
            seed=int(d.get("seed", 0)),
            noise=NoiseSpec(
                ocr_char_sub_prob=float(noise.get("ocrCharSubProb", 0.0)),
                truth_discrepancy_prob=float(noise.get("truthDiscrepancyProb", 0.0)),
                field_missing_prob=float(noise.get("fieldMissingProb", 0.0)),
            ),
            words_range=tuple(d.get("wordsRange", (80, 300))),
        )


@dataclass
class NoiseRecord:
    """Which truth fields this document's noise touched. Evaluation losses
    must trace back to these fields (or to totals siblings of them, since
    the totals are arithmetically coupled)."""

    discrepant: list[str] = dc_field(default_factory=list)
    missing: list[str] = dc_field(default_factory=list)
    ocr_hit: list[str] = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {"discrepant": self.discrepant, "missing": self.missing, "ocrHit": self.ocr_hit}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseRecord":
        return cls(list(d.get("discrepant", [])), list(d.get("missing", [])), list(d.get("ocrHit", [])))


@dataclass
class GeneratedPair:
    pair: LabeledPair
    noise: NoiseRecord


# Keyword wording pools. Several entries share their value-adjacent tail
# word across different fields on purpose ("i alt", "MwSt.", "VAT"): the
# word right of the discriminating head is all a narrow context window
# sees, so wide-context models have an edge on unseen templates.
_KEYWORDS: dict[str, dict[str, list[tuple[str, ...]]]] = {
    "en": {
        "Number": [("Invoice", "No."), ("Invoice", "number"), ("Document", "No.")],
        "Date": [("Invoice", "date"), ("Date",), ("Issue", "date")],
        "DueDate": [("Due", "date"), ("Payment", "due")],
        "OrderId": [("Order", "ID"), ("Purchase", "order"), ("Order", "ref.")],
        "Customer": [("Customer", "No."), ("Account", "number")],
        "Currency": [("Currency",)],
        "Total": [("Total",), ("Amount", "due"), ("Total", "amount", "incl.", "VAT")],
        "LineTotal": [("Subtotal",), ("Net", "amount"), ("Total", "amount", "excl.", "VAT")],
        "TaxTotal": [("VAT",), ("Tax", "amount"), ("VAT", "amount")],
        "TaxPercent": [("VAT", "rate"), ("Tax", "rate")],
        "ItemsHeader": [("Description", "Qty", "Price", "Amount")],
    },
    "de": {
        "Number": [("Rechnungsnummer",), ("Rechnungs-Nr.",), ("Rechnung", "Nr.")],
        "Date": [("Rechnungsdatum",), ("Datum",)],
        "DueDate": [("Fällig", "am"), ("Zahlbar", "bis")],
        "OrderId": [("Bestellnummer",), ("Auftrags-Nr.",), ("Bestell", "Nr.")],
        "Customer": [("Kundennummer",), ("Kunden-Nr.",)],
        "Currency": [("Währung",)],
        "Total": [("Gesamtbetrag",), ("Summe",), ("Betrag", "inkl.", "MwSt.")],
        "LineTotal": [("Nettobetrag",), ("Zwischensumme",), ("Betrag", "exkl.", "MwSt.")],
        "TaxTotal": [("MwSt.",), ("Steuerbetrag",)],
        "TaxPercent": [("MwSt.-Satz",), ("Steuersatz",)],
        "ItemsHeader": [("Beschreibung", "Menge", "Preis", "Betrag")],
    },
    "da": {
        "Number": [("Fakturanummer",), ("Faktura", "nr.")],
        "Date": [("Fakturadato",), ("Dato",)],
        "DueDate": [("Forfaldsdato",), ("Betales", "senest")],
        "OrderId": [("Ordrenummer",), ("Ordre", "nr.")],
        "Customer": [("Kundenummer",)],
        "Currency": [("Valuta",)],
        "Total": [("Total",), ("Beløb", "i", "alt"), ("At", "betale")],
        "LineTotal": [("Subtotal",), ("Netto", "i", "alt"), ("Nettobeløb",)],
        "TaxTotal": [("Moms",), ("Moms", "i", "alt"), ("Momsbeløb",)],
        "TaxPercent": [("Momssats",), ("Momsprocent",)],
        "ItemsHeader": [("Beskrivelse", "Antal", "Pris", "Beløb")],
    },
}

_ITEM_WORDS = {
    "en": ["Widget", "Bracket", "Assembly", "Service", "License", "Support", "Panel", "Cable", "Unit", "Fitting"],
    "de": ["Schraube", "Halterung", "Modul", "Wartung", "Lizenz", "Gehäuse", "Kabel", "Einheit", "Platte", "Träger"],
    "da": ["Beslag", "Modul", "Service", "Licens", "Kabel", "Enhed", "Montering", "Plade", "Skinne", "Holder"],
}

_FILLER_SENTENCES = {
    "en": [
        "Payment within 30 days of invoice date.",
        "Please quote the invoice number with your payment.",
        "Thank you for your business.",
        "All prices are stated in the agreed currency.",
        "Goods remain our property until paid in full.",
        "Questions regarding this invoice are welcome at any time.",
    ],
    "de": [
        "Zahlbar innerhalb von 30 Tagen ohne Abzug.",
        "Bitte geben Sie bei Zahlung die Rechnungsnummer an.",
        "Vielen Dank für Ihren Auftrag.",
        "Die Ware bleibt bis zur vollständigen Bezahlung unser Eigentum.",
        "Bei Fragen zu dieser Rechnung stehen wir gerne zur Verfügung.",
    ],
    "da": [
        "Betaling inden 30 dage fra fakturadato.",
        "Angiv venligst fakturanummer ved betaling.",
        "Tak for din ordre.",
        "Varen forbliver vores ejendom indtil fuld betaling.",
        "Kontakt os gerne ved spørgsmål til denne faktura.",
    ],
}

# (zip, city words, country); every entry also exists in the lexicon files
# so the address features fire on generated documents.
_ADDRESSES = {
    "en": [
        ("SW1A 1AA", ("London",), "United Kingdom"),
        ("M1 1AE", ("Manchester",), "United Kingdom"),
        ("EH1 1YZ", ("Edinburgh",), "United Kingdom"),
        ("10001", ("New", "York"), "United States"),
        ("02108", ("Boston",), "United States"),
    ],
    "de": [
        ("10115", ("Berlin",), "Deutschland"),
        ("20095", ("Hamburg",), "Deutschland"),
        ("80337", ("München",), "Deutschland"),
        ("10623", ("Berlin",), "Deutschland"),
    ],
    "da": [
        ("2100", ("København",), "Danmark"),
        ("8000", ("Aarhus",), "Danmark"),
        ("5000", ("Odense",), "Danmark"),
        ("9000", ("Aalborg",), "Danmark"),
    ],
}

_STREETS = {
    "en": ["High Street", "Station Road", "Mill Lane", "Church Street"],
    "de": ["Hauptstraße", "Bahnhofstraße", "Gartenweg", "Lindenallee"],
    "da": ["Nørregade", "Søndergade", "Vestergade", "Havnevej"],
}

_COMPANY_FIRST = ["Nordic", "Baltic", "Alpine", "Metro", "Delta", "Prime", "Atlas", "Crown"]
_COMPANY_SECOND = ["Supplies", "Trading", "Logistics", "Consulting", "Industries", "Systems", "Partners"]
_COMPANY_SUFFIX = {"en": ["Ltd", "Inc"], "de": ["GmbH", "AG"], "da": ["A/S", "ApS"]}

_CURRENCIES = {"en": ["USD", "GBP", "EUR"], "de": ["EUR", "CHF"], "da": ["DKK", "EUR", "SEK", "NOK"]}
_CURRENCY_SYMBOL = {"USD": "$", "EUR": "€", "GBP": "£"}

_ID_PREFIXES = ["PO-", "ORD-", "REF-"]

# Tax rates in basis points; all clear of the small integers that appear
# as item quantities only in value, not by construction.
_TAX_BP = [500, 800, 1000, 1250, 1500, 1900, 2000, 2100, 2500]


@dataclass
class _Tok:
    text: str
    field: FieldType | None = None


def _pick(rng: np.random.Generator, seq):
    return seq[int(rng.integers(len(seq)))]


def format_amount(cents: int, fmt: str) -> str:
    whole, frac = divmod(cents, 100)
    if fmt == "1234.56":
        return f"{whole}.{frac:02d}"
    group, dec = (",", ".") if fmt == "1,234.56" else (".", ",")
    return f"{whole:,}".replace(",", group) + f"{dec}{frac:02d}"


def format_percent(bp: int, fmt: str) -> str:
    dec = "." if fmt in ("1,234.56", "1234.56") else ","
    if bp % 100 == 0:
        return str(bp // 100)
    return f"{bp // 100}{dec}{bp % 100:02d}"


def format_date(d: datetime.date, fmt: str) -> str:
    if fmt == "iso":
        return d.isoformat()
    if fmt == "dot":
        return f"{d.day:02d}.{d.month:02d}.{d.year}"
    return f"{d.month:02d}/{d.day:02d}/{d.year}"


class _Template:
    """Everything a sender keeps constant across its documents."""

    def __init__(self, spec: CorpusSpec, rng: np.random.Generator, index: int):
        self.index = index
        self.sender = f"sender{index:03d}"
        self.language = _pick(rng, spec.languages)
        self.amount_fmt = _pick(rng, AMOUNT_FORMATS)
        self.date_fmt = _pick(rng, DATE_FORMATS)
        kw = _KEYWORDS[self.language]
        self.kw = {key: _pick(rng, variants) for key, variants in kw.items()}
        self.casing = _pick(rng, ("plain", "upper", "title"))
        self.decoration = _pick(rng, ("", ":", ":"))
        self.grouped_number = rng.random() < 0.25
        self.number_split = _pick(rng, (2, 3))
        self.currency = _pick(rng, _CURRENCIES[self.language])
        self.currency_as_symbol = (
            self.currency in _CURRENCY_SYMBOL and rng.random() < 0.3
        )
        self.currency_inline = rng.random() < 0.5
        self.currency_row = (not self.currency_inline) or rng.random() < 0.4
        self.leader_dots = rng.random() < 0.3
        self.id_prefix = _pick(rng, _ID_PREFIXES)
        self.totals_order = [
            ("LineTotal", "TaxPercent", "TaxTotal", "Total")[i]
            for i in rng.permutation(4)
        ]
        meta = ["Number", "Date", "OrderId"]
        if rng.random() < 0.7:
            meta.append("DueDate")
        if rng.random() < 0.6:
            meta.append("Customer")
        self.meta_rows = [meta[i] for i in rng.permutation(len(meta))]
        self.company = [
            _pick(rng, _COMPANY_FIRST),
            _pick(rng, _COMPANY_SECOND),
            _pick(rng, _COMPANY_SUFFIX[self.language]),
        ]
        self.street = _pick(rng, _STREETS[self.language]).split() + [str(int(rng.integers(1, 120)))]
        self.address = _pick(rng, _ADDRESSES[self.language])
        self.n_items = int(rng.integers(2, 6))
        # Layout style
        self.char_w = float(rng.uniform(5.2, 6.4))
        self.leading = float(rng.uniform(13.0, 16.0))
        self.margin_left = float(rng.uniform(40.0, 60.0))
        self.margin_top = float(rng.uniform(40.0, 60.0))
        self.word_h = float(rng.uniform(8.5, 10.5))
        self.gap = float(rng.uniform(4.0, 7.0))

    def n_docs(self, spec: CorpusSpec, rng: np.random.Generator) -> int:
        lo, hi = spec.docs_per_template
        return int(rng.integers(lo, hi + 1))

    def keyword(self, key: str) -> list[str]:
        words = list(self.kw[key])
        if self.casing == "upper":
            words = [w.upper() for w in words]
        elif self.casing == "title":
            words = [w[:1].upper() + w[1:] for w in words]
        if self.decoration:
            words[-1] = words[-1] + self.decoration
        return words

    def render_currency(self) -> str:
        return _CURRENCY_SYMBOL[self.currency] if self.currency_as_symbol else self.currency


def _sample_values(tpl: _Template, rng: np.random.Generator) -> dict:
    """Field values plus the raw pieces the renderer needs."""
    number_digits = "".join(str(int(d)) for d in rng.integers(0, 10, size=6))
    if number_digits[0] == "0":
        number_digits = "1" + number_digits[1:]
    if tpl.grouped_number:
        cut = tpl.number_split
        number_words = [number_digits[:cut], number_digits[cut:]]
        number_truth = " ".join(number_words)
    else:
        number_words = [number_digits]
        number_truth = number_digits
    order_id = tpl.id_prefix + "".join(str(int(d)) for d in rng.integers(0, 10, size=5))
    day0 = datetime.date(2014, 1, 1)
    inv_date = day0 + datetime.timedelta(days=int(rng.integers(0, 4000)))
    due_date = inv_date + datetime.timedelta(days=int(rng.integers(7, 60)))

    items = []
    for _ in range(tpl.n_items):
        qty = int(rng.integers(1, 9))
        price = int(rng.integers(500, 50_000))
        items.append((qty, price, qty * price))
    lt = sum(a for _, _, a in items)
    bp = _pick(rng, _TAX_BP)
    tt = round(lt * bp / 10_000)
    total = lt + tt

    customer = "".join(str(int(d)) for d in rng.integers(0, 10, size=6))
    while customer == number_digits:
        customer = "".join(str(int(d)) for d in rng.integers(0, 10, size=6))

    truth = {
        FieldType.NUMBER: number_truth,
        FieldType.DATE: inv_date.isoformat(),
        FieldType.CURRENCY: tpl.currency,
        FieldType.ORDER_ID: order_id,
        FieldType.TOTAL: f"{total // 100}.{total % 100:02d}",
        FieldType.LINE_TOTAL: f"{lt // 100}.{lt % 100:02d}",
        FieldType.TAX_TOTAL: f"{tt // 100}.{tt % 100:02d}",
        FieldType.TAX_PERCENT: f"{bp // 100}.{bp % 100:02d}",
    }
    return {
        "truth": truth,
        "number_words": number_words,
        "inv_date": inv_date,
        "due_date": due_date,
        "items": items,
        "lt": lt,
        "tt": tt,
        "total": total,
        "bp": bp,
        "customer": customer,
    }


def _build_lines(tpl: _Template, vals: dict, rng: np.random.Generator, words_target: int) -> list[list[_Tok]]:
    """Token lines in reading order; value tokens carry their field tag."""
    amount = lambda cents: format_amount(cents, tpl.amount_fmt)
    lines: list[list[_Tok]] = []

    # Header: company identity and address; fires the lexicon features.
    lines.append([_Tok(w) for w in tpl.company])
    lines.append([_Tok(w) for w in tpl.street])
    zip_code, city, country = tpl.address
    lines.append([_Tok(w) for w in zip_code.split() + list(city)])
    lines.append([_Tok(country)])

    # Meta rows: keyword column plus value column, decoys included.
    for key in tpl.meta_rows:
        row = [_Tok(w) for w in tpl.keyword(key)]
        if key == "Number":
            row += [_Tok(w, FieldType.NUMBER) for w in vals["number_words"]]
        elif key == "Date":
            row.append(_Tok(format_date(vals["inv_date"], tpl.date_fmt), FieldType.DATE))
        elif key == "OrderId":
            row.append(_Tok(vals["truth"][FieldType.ORDER_ID], FieldType.ORDER_ID))
        elif key == "DueDate":
            row.append(_Tok(format_date(vals["due_date"], tpl.date_fmt)))
        else:
            row.append(_Tok(vals["customer"]))
        lines.append(row)
    if tpl.currency_row:
        lines.append(
            [_Tok(w) for w in tpl.keyword("Currency")]
            + [_Tok(tpl.render_currency(), FieldType.CURRENCY)]
        )

    # Items table; row arithmetic holds exactly, grounding the line-math
    # features, and the rows sum to the line total.
    lines.append([_Tok(w) for w in tpl.kw["ItemsHeader"]])
    for qty, price, row_amount in vals["items"]:
        name = [_Tok(_pick(rng, _ITEM_WORDS[tpl.language])) for _ in range(int(rng.integers(1, 3)))]
        lines.append(name + [_Tok(str(qty)), _Tok(amount(price)), _Tok(amount(row_amount))])

    # Totals block in the template's row order.
    field_of = {
        "Total": (FieldType.TOTAL, vals["total"]),
        "LineTotal": (FieldType.LINE_TOTAL, vals["lt"]),
        "TaxTotal": (FieldType.TAX_TOTAL, vals["tt"]),
    }
    for key in tpl.totals_order:
        row = [_Tok(w) for w in tpl.keyword(key)]
        if tpl.leader_dots:
            row.append(_Tok("." * int(rng.integers(6, 14))))
        if key == "TaxPercent":
            pct = format_percent(vals["bp"], tpl.amount_fmt)
            row.append(_Tok(pct + "%", FieldType.TAX_PERCENT))
        else:
            ft, cents = field_of[key]
            if key == "Total" and tpl.currency_inline:
                row.append(_Tok(tpl.render_currency(), FieldType.CURRENCY))
            row.append(_Tok(amount(cents), ft))
        lines.append(row)

    # Filler paragraphs up to the word target, then a closing line.
    sentences = _FILLER_SENTENCES[tpl.language]
    count = sum(len(l) for l in lines)
    while count < words_target:
        sent = _pick(rng, sentences).split()
        lines.append([_Tok(w) for w in sent])
        count += len(sent)
    return lines


def _apply_missing(
    lines: list[list[_Tok]], noise: NoiseSpec, rng: np.random.Generator
) -> list[str]:
    missing: list[str] = []
    if noise.field_missing_prob > 0:
        for f in TARGET_FIELDS:
            if rng.random() < noise.field_missing_prob:
                missing.append(f.value)
    if missing:
        missing_set = {FieldType(v) for v in missing}
        for li, line in enumerate(lines):
            lines[li] = [t for t in line if t.field not in missing_set]
        lines[:] = [l for l in lines if l]
    return missing


def _apply_ocr(lines: list[list[_Tok]], noise: NoiseSpec, rng: np.random.Generator) -> list[str]:
    hit_fields: set[str] = set()
    if noise.ocr_char_sub_prob <= 0:
        return []
    for line in lines:
        for tok in line:
            chars = list(tok.text)
            hit = False
            for i, c in enumerate(chars):
                if c in OCR_SUBSTITUTIONS and rng.random() < noise.ocr_char_sub_prob:
                    options = OCR_SUBSTITUTIONS[c]
                    chars[i] = options[int(rng.integers(len(options)))]
                    hit = True
            if hit:
                tok.text = "".join(chars)
                if tok.field is not None:
                    hit_fields.add(tok.field.value)
    return sorted(hit_fields)


def _layout(tpl: _Template, lines: list[list[_Tok]], doc_id: str) -> Document:
    """Assign coordinates: keyword/value columns for short rows, flowing
    cursor with wrapping for everything else; paginate on overflow."""
    words: list[Word] = []
    page, line_idx = 0, 0
    y = tpl.margin_top
    for line in lines:
        if y + tpl.word_h > PAGE_H - tpl.margin_top:
            page += 1
            line_idx = 0
            y = tpl.margin_top
        x = tpl.margin_left
        pos = 0
        for tok in line:
            w = max(tpl.char_w * len(tok.text), 3.0)
            if x + w > PAGE_W - 20.0:
                break  # drop run-off tokens; layout never produces these for value rows
            # Quantize absolute coordinates to the serializer's precision so a
            # generated document is already canonical: save/load is identity.
            words.append(
                Word(
                    text=tok.text,
                    page=page,
                    line=line_idx,
                    pos_in_line=pos,
                    left=round(x, 4) / PAGE_W,
                    top=round(y, 4) / PAGE_H,
                    right=round(x + w, 4) / PAGE_W,
                    bottom=round(y + tpl.word_h, 4) / PAGE_H,
                    page_width=PAGE_W,
                    page_height=PAGE_H,
                )
            )
            x += w + tpl.gap
            pos += 1
        line_idx += 1
        y += tpl.leading
    return Document(doc_id, tpl.sender, tuple(words))


def _value_in_doc(doc: Document, f: FieldType, value: str) -> bool:
    return bool(field_spans(doc, Invoice({f: value})).get(f))


def _resample_value(
    tpl: _Template, f: FieldType, old: str, doc: Document, rng: np.random.Generator
) -> str | None:
    """A fresh syntactically valid value for f that no span of doc matches."""
    for _ in range(50):
        if f is FieldType.NUMBER:
            cand = "".join(str(int(d)) for d in rng.integers(0, 10, size=6))
            if cand[0] == "0":
                cand = "2" + cand[1:]
        elif f is FieldType.ORDER_ID:
            cand = tpl.id_prefix + "".join(str(int(d)) for d in rng.integers(0, 10, size=5))
        elif f is FieldType.DATE:
            d = datetime.date(2014, 1, 1) + datetime.timedelta(days=int(rng.integers(0, 4000)))
            cand = d.isoformat()
        elif f is FieldType.CURRENCY:
            pool = [c for cs in _CURRENCIES.values() for c in cs]
            cand = pool[int(rng.integers(len(pool)))]
        elif f is FieldType.TAX_PERCENT:
            bp = _TAX_BP[int(rng.integers(len(_TAX_BP)))]
            cand = f"{bp // 100}.{bp % 100:02d}"
        else:
            cents = int(rng.integers(1000, 2_000_000))
            cand = f"{cents // 100}.{cents % 100:02d}"
        if cand != old and not _value_in_doc(doc, f, cand):
            return cand
    return None


def generate_corpus(spec: CorpusSpec) -> list[GeneratedPair]:
    out: list[GeneratedPair] = []
    for ti in range(spec.num_templates):
        trng = np.random.default_rng(np.random.SeedSequence([spec.seed, ti]))
        tpl = _Template(spec, trng, ti)
        n_docs = tpl.n_docs(spec, trng)
        for di in range(n_docs):
            drng = np.random.default_rng(np.random.SeedSequence([spec.seed, ti, di]))
            out.append(_generate_doc(spec, tpl, ti, di, drng))
    return out


def _generate_doc(
    spec: CorpusSpec, tpl: _Template, ti: int, di: int, rng: np.random.Generator
) -> GeneratedPair:
    vals = _sample_values(tpl, rng)
    truth: dict[FieldType, str] = dict(vals["truth"])
    lo, hi = spec.words_range
    words_target = int(rng.integers(lo, hi + 1))
    lines = _build_lines(tpl, vals, rng, words_target)

    record = NoiseRecord()
    record.missing = _apply_missing(lines, spec.noise, rng)
    record.ocr_hit = _apply_ocr(lines, spec.noise, rng)
    doc = _layout(tpl, lines, f"t{ti:03d}_d{di:03d}")

    if spec.noise.truth_discrepancy_prob > 0:
        for f in TARGET_FIELDS:
            if rng.random() < spec.noise.truth_discrepancy_prob:
                new = _resample_value(tpl, f, truth[f], doc, rng)
                if new is not None:
                    truth[f] = new
                    record.discrepant.append(f.value)

    return GeneratedPair(LabeledPair(doc, Invoice(truth)), record)


def save_corpus(generated: list[GeneratedPair], spec: CorpusSpec, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    (out_dir / "docs").mkdir(parents=True, exist_ok=True)
    entries = []
    for g in generated:
        doc = g.pair.doc
        rel = f"docs/{doc.doc_id}.json"
        (out_dir / rel).write_bytes(save_document(doc))
        entries.append(
            {
                "doc": rel,
                "senderId": doc.sender_id,
                "truth": g.pair.truth.to_dict(),
                "noise": g.noise.to_dict(),
            }
        )
    manifest = {"spec": spec.to_dict(), "pairs": entries}
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


@dataclass
class LoadedCorpus:
    spec: CorpusSpec | None
    pairs: list[LabeledPair]
    noise: list[NoiseRecord]


def load_corpus(corpus_dir: str | Path) -> LoadedCorpus:
    corpus_dir = Path(corpus_dir)
    manifest = json.loads((corpus_dir / "manifest.json").read_text(encoding="utf-8"))
    spec = CorpusSpec.from_dict(manifest["spec"]) if "spec" in manifest else None
    pairs: list[LabeledPair] = []
    noise: list[NoiseRecord] = []
    for entry in manifest["pairs"]:
        doc = load_document_file(corpus_dir / entry["doc"])
        pairs.append(LabeledPair(doc, Invoice.from_dict(entry["truth"])))
        noise.append(NoiseRecord.from_dict(entry.get("noise", {})))
    return LoadedCorpus(spec, pairs, noise)


def split_by_document(
    pairs: list, seed: int, ratios: tuple[float, float] = (0.7, 0.1)
) -> tuple[list, list, list]:
    """70/10/20 random partition (by count; remainder goes to test)."""
    order = np.random.default_rng(seed).permutation(len(pairs))
    n_train = int(len(pairs) * ratios[0])
    n_val = int(len(pairs) * ratios[1])
    train = [pairs[i] for i in order[:n_train]]
    val = [pairs[i] for i in order[n_train : n_train + n_val]]
    test = [pairs[i] for i in order[n_train + n_val :]]
    return train, val, test


def split_by_sender(
    pairs: list, seed: int, ratios: tuple[float, float] = (0.7, 0.1), key=None
) -> tuple[list, list, list]:
    """Partition whole senders 70/10/20 so no template crosses sets."""
    if key is None:
        key = lambda p: p.doc.sender_id
    senders = sorted({key(p) for p in pairs})
    order = np.random.default_rng(seed).permutation(len(senders))
    n_train = int(len(senders) * ratios[0])
    n_val = int(len(senders) * ratios[1])
    train_s = {senders[i] for i in order[:n_train]}
    val_s = {senders[i] for i in order[n_train : n_train + n_val]}
    train = [p for p in pairs if key(p) in train_s]
    val = [p for p in pairs if key(p) in val_s]
    test = [p for p in pairs if key(p) not in train_s and key(p) not in val_s]
    return train, val, test
