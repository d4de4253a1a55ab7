import pytest

from linescan.parsers import (
    has_fraction,
    parse_amount,
    parse_as,
    parse_currency,
    parse_date,
    parse_id,
    parse_integer,
    parse_percent,
    repair_digits,
    strip_spaces,
)


class TestRepairDigits:
    def test_confusable_letters_fixed_inside_digit_runs(self):
        assert repair_digits("2ol6") == "2016"
        assert repair_digits("l,2o4.5o") == "1,204.50"
        assert repair_digits("4B39S0") == "483950"

    def test_plain_words_left_alone(self):
        # No digit in the run, so "Solo" and "Bill" keep their letters.
        assert repair_digits("Solo") == "Solo"
        assert repair_digits("Bill") == "Bill"
        assert repair_digits("Invoice") == "Invoice"

    def test_mixed_text_repairs_only_the_numeric_run(self):
        assert repair_digits("Il Bosco 12B") == "Il Bosco 128"


def test_strip_spaces():
    assert strip_spaces("16 2054") == "162054"
    assert strip_spaces(" a\tb\nc ") == "abc"


class TestParseAmount:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("1,234.56", "1234.56"),
            ("1.234,56", "1234.56"),
            ("1234.56", "1234.56"),
            ("1 234,56", "1234.56"),
            ("12,34", "12.34"),
            ("1234", "1234.00"),
            ("0.5", "0.50"),
            ("12.345,67", "12345.67"),
            ("2o4.5o", "204.50"),
        ],
    )
    def test_accepted(self, text, expected):
        assert parse_amount(text) == expected

    def test_separator_followed_by_three_digits_is_grouping(self):
        assert parse_amount("1.234") == "1234.00"
        assert parse_amount("12,345") == "12345.00"

    @pytest.mark.parametrize(
        "text",
        ["", "  ", "abc", "1,23,45", "-12.50", "1.234.56", "1,234.567", "12..50"],
    )
    def test_rejected(self, text):
        assert parse_amount(text) is None

    def test_grouping_must_be_consistent(self):
        assert parse_amount("1,234 567") is None

    def test_has_fraction_distinguishes_grouping_from_decimals(self):
        assert has_fraction("1234.56")
        assert has_fraction("12,34")
        assert not has_fraction("1234")
        assert not has_fraction("1.234")
        assert not has_fraction("x")


class TestParseInteger:
    def test_plain_and_grouped(self):
        assert parse_integer("12") == "12"
        assert parse_integer("1.234") == "1234"
        assert parse_integer("1 234 567") == "1234567"

    def test_leading_zeros_collapse(self):
        assert parse_integer("007") == "7"

    def test_rejects_fractions_and_words(self):
        assert parse_integer("12.5") is None
        assert parse_integer("twelve") is None


class TestParsePercent:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("25%", "25.00"),
            ("25 %", "25.00"),
            ("19", "19.00"),
            ("12,5%", "12.50"),
            ("12.50 %", "12.50"),
            ("100", "100.00"),
            ("0", "0.00"),
        ],
    )
    def test_accepted(self, text, expected):
        assert parse_percent(text) == expected

    def test_rejects_over_hundred_and_junk(self):
        assert parse_percent("101") is None
        assert parse_percent("100.01") is None
        assert parse_percent("%") is None
        assert parse_percent("vat") is None


class TestParseDate:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("2016-09-30", "2016-09-30"),
            ("2016-9-3", "2016-09-03"),
            ("30.09.2016", "2016-09-30"),
            ("3.9.2016", "2016-09-03"),
            ("09/30/2016", "2016-09-30"),
            ("30. September 2016", "2016-09-30"),
            ("1 marts 2017", "2017-03-01"),
            ("5 Mai 2018", "2018-05-05"),
            ("2ol6-o9-3o", "2016-09-30"),
        ],
    )
    def test_accepted(self, text, expected):
        assert parse_date(text) == expected

    def test_slash_dates_read_month_first(self):
        assert parse_date("03/05/2016") == "2016-03-05"
        assert parse_date("30/09/2016") is None

    @pytest.mark.parametrize(
        "text",
        ["31.02.2016", "2016-13-01", "30.09.1899", "30.09.2101", "30 Sep 2016", "someday"],
    )
    def test_rejected(self, text):
        assert parse_date(text) is None


class TestParseCurrency:
    def test_codes_and_symbols(self):
        assert parse_currency("EUR") == "EUR"
        assert parse_currency(" DKK ") == "DKK"
        assert parse_currency("$") == "USD"
        assert parse_currency("€") == "EUR"
        assert parse_currency("£") == "GBP"

    def test_codes_must_be_uppercase(self):
        # "All" is a word; "ALL" is the lek.
        assert parse_currency("ALL") == "ALL"
        assert parse_currency("All") is None
        assert parse_currency("eur") is None

    def test_unknown_rejected(self):
        assert parse_currency("XYZ") is None
        assert parse_currency("") is None


def test_parse_id_strips_and_requires_content():
    assert parse_id("  PO-123 ") == "PO-123"
    assert parse_id("162054") == "162054"
    assert parse_id("") is None
    assert parse_id("   ") is None


def test_parse_as_dispatches_by_kind():
    assert parse_as("amount", "1,234.56") == "1234.56"
    assert parse_as("date", "30.09.2016") == "2016-09-30"
    assert parse_as("currency", "$") == "USD"
    assert parse_as("percent", "25%") == "25.00"
    assert parse_as("id", " x ") == "x"
    with pytest.raises(KeyError):
        parse_as("nope", "x")
