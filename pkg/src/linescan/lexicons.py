"""Static gazetteers: currency codes, month names, and the city/country/zip
lists backing the lexical features.

City, country, and zip lists ship as data files with one UTF-8 entry per
line; lookups are case-insensitive. They are intentionally modest lists: the
features they back are weak signals and the models must keep working when a
word falls outside them.
"""

from __future__ import annotations

from importlib import resources

# A practical subset of active ISO 4217 codes.
CURRENCY_CODES: frozenset[str] = frozenset(
    """
    AED ALL ARS AUD BGN BHD BRL CAD CHF CLP CNY COP CZK DKK EGP EUR GBP HKD
    HRK HUF IDR ILS INR ISK JPY KRW KWD MAD MXN MYR NOK NZD PEN PHP PLN QAR
    RON RSD RUB SAR SEK SGD THB TRY TWD UAH USD VND ZAR
    """.split()
)

CURRENCY_SYMBOLS: dict[str, str] = {
    "$": "USD",
    "€": "EUR",
    "£": "GBP",
}

# Month number by lowercase name, English/German/Danish.
MONTH_NAMES: dict[str, int] = {}
for _names in (
    "january february march april may june july august september october november december",
    "januar februar märz april mai juni juli august september oktober november dezember",
    "januar februar marts april maj juni juli august september oktober november december",
):
    for _i, _name in enumerate(_names.split(), start=1):
        MONTH_NAMES[_name] = _i


def _load_list(name: str) -> frozenset[str]:
    text = resources.files(__package__).joinpath("data", name).read_text("utf-8")
    return frozenset(line.strip().lower() for line in text.splitlines() if line.strip())


KNOWN_CITIES: frozenset[str] = _load_list("cities.txt")
KNOWN_COUNTRIES: frozenset[str] = _load_list("countries.txt")
KNOWN_ZIPS: frozenset[str] = _load_list("zips.txt")


def is_known_city(text: str) -> bool:
    return text.strip().lower() in KNOWN_CITIES


def is_known_country(text: str) -> bool:
    return text.strip().lower() in KNOWN_COUNTRIES


def is_known_zip(text: str) -> bool:
    return text.strip().lower() in KNOWN_ZIPS
