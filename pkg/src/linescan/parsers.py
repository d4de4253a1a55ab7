"""Typed text parsers used for labeling, candidate filtering, and features.

Each parser returns the canonical string form on success and None on failure:
amounts and percentages as "1234.50", dates as ISO "2016-09-30", currencies as
an uppercase code, free-form ids verbatim with surrounding whitespace removed.

All numeric parsers first repair common OCR character confusions (o/O for 0,
l/I for 1, S for 5, B for 8), but only inside runs that contain at least one
real digit, so ordinary words are never touched.
"""

from __future__ import annotations

import datetime
import re

from .lexicons import CURRENCY_CODES, CURRENCY_SYMBOLS, MONTH_NAMES

_CONFUSION = str.maketrans({"o": "0", "O": "0", "l": "1", "I": "1", "S": "5", "B": "8"})
_RUN_RE = re.compile(r"[0-9oOlISB.,:/-]+")


def repair_digits(text: str) -> str:
    """Substitute confusable letters with digits inside digit-bearing runs."""

    def fix(m: re.Match[str]) -> str:
        run = m.group(0)
        if any(c.isdigit() for c in run):
            return run.translate(_CONFUSION)
        return run

    return _RUN_RE.sub(fix, text)


def strip_spaces(text: str) -> str:
    """Remove all whitespace; used for space-insensitive id comparison."""
    return "".join(text.split())


# Integer part: plain digits, or groups of three joined by a consistent
# "."/","/" " separator with a 1-3 digit leading group.
_PLAIN_INT_RE = re.compile(r"\d+")
_GROUPED_INT_RE = re.compile(r"\d{1,3}(?:([., ])\d{3})+")
# Decimal fraction: one or two digits after the last "." or ",". A separator
# followed by exactly three digits reads as grouping, never as a fraction.
_DEC_SPLIT_RE = re.compile(r"(.+?)([.,])(\d{1,2})")


def _parse_int_part(text: str) -> tuple[int, str | None] | None:
    if _PLAIN_INT_RE.fullmatch(text):
        return int(text), None
    m = _GROUPED_INT_RE.fullmatch(text)
    if m:
        sep = m.group(1)
        if text.count(sep) == sum(not c.isdigit() for c in text):
            return int(text.replace(sep, "")), sep
    return None


def _amount_cents(text: str) -> tuple[int, bool] | None:
    """(value in cents, fraction was spelled out), or None."""
    m = _DEC_SPLIT_RE.fullmatch(text)
    if m:
        parsed = _parse_int_part(m.group(1))
        if parsed is not None and parsed[1] != m.group(2):
            frac = m.group(3)
            return parsed[0] * 100 + int(frac) * (10 if len(frac) == 1 else 1), True
    parsed = _parse_int_part(text)
    if parsed is not None:
        return parsed[0] * 100, False
    return None


def parse_amount(text: str) -> str | None:
    text = repair_digits(text.strip())
    if not text:
        return None
    split = _amount_cents(text)
    if split is None:
        return None
    cents = split[0]
    return f"{cents // 100}.{cents % 100:02d}"


def has_fraction(text: str) -> bool:
    """Whether an amount-parseable string spelled out a decimal fraction."""
    text = repair_digits(text.strip())
    if not text:
        return False
    split = _amount_cents(text)
    return split is not None and split[1]


def parse_integer(text: str) -> str | None:
    """Whole number with optional grouping; canonical form has no grouping."""
    text = repair_digits(text.strip())
    if not text:
        return None
    parsed = _parse_int_part(text)
    return str(parsed[0]) if parsed is not None else None


def parse_percent(text: str) -> str | None:
    text = text.strip()
    if text.endswith("%"):
        text = text[:-1].rstrip()
    value = parse_amount(text)
    if value is None or float(value) > 100.0:
        return None
    return value


_ISO_DATE_RE = re.compile(r"(\d{4})-(\d{1,2})-(\d{1,2})")
_DOT_DATE_RE = re.compile(r"(\d{1,2})\.(\d{1,2})\.(\d{4})")
_SLASH_DATE_RE = re.compile(r"(\d{1,2})/(\d{1,2})/(\d{4})")
_TEXT_DATE_RE = re.compile(r"(\d{1,2})\.?\s+(\S+)\s+(\d{4})")


def _make_date(year: int, month: int, day: int) -> str | None:
    if not 1900 <= year <= 2100:
        return None
    try:
        return datetime.date(year, month, day).isoformat()
    except ValueError:
        return None


def parse_date(text: str) -> str | None:
    text = repair_digits(" ".join(text.split()))
    m = _ISO_DATE_RE.fullmatch(text)
    if m:
        return _make_date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    m = _DOT_DATE_RE.fullmatch(text)
    if m:
        return _make_date(int(m.group(3)), int(m.group(2)), int(m.group(1)))
    # Slash dates read as month/day/year.
    m = _SLASH_DATE_RE.fullmatch(text)
    if m:
        return _make_date(int(m.group(3)), int(m.group(1)), int(m.group(2)))
    m = _TEXT_DATE_RE.fullmatch(text)
    if m:
        month = MONTH_NAMES.get(m.group(2).lower())
        if month is not None:
            return _make_date(int(m.group(3)), month, int(m.group(1)))
    return None


def parse_currency(text: str) -> str | None:
    text = text.strip()
    if text in CURRENCY_SYMBOLS:
        return CURRENCY_SYMBOLS[text]
    # Codes must appear uppercase: "All" is a word, "ALL" is a currency.
    if text in CURRENCY_CODES:
        return text
    return None


def parse_id(text: str) -> str | None:
    text = text.strip()
    return text if text else None


PARSERS = {
    "amount": parse_amount,
    "date": parse_date,
    "currency": parse_currency,
    "percent": parse_percent,
    "id": parse_id,
}


def parse_as(kind: str, text: str) -> str | None:
    return PARSERS[kind](text)
