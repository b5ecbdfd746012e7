import pytest

from parishrec.dates import (CalendarError, NumberParseError, NumeralGrammar,
                             find_dates, generate_number, load_relative_rules,
                             match_relative, parse_date, parse_number, tokenize)
from parishrec.model import StructuredDate


class TestParseNumber:
    def test_vigesimal_year_spelling(self):
        assert parse_number("dix huit cent quatre-vingt-dix-neuf") == 1899

    def test_mil_year_spelling(self):
        assert parse_number("mil huit cent quatre-vingt-dix-neuf") == 1899

    def test_both_spellings_of_1800(self):
        assert parse_number("dix huit cent") == parse_number("mil huit cent") == 1800

    def test_atoms(self):
        assert parse_number("neuf") == 9
        assert parse_number("zéro") == 0
        assert parse_number("seize") == 16

    def test_mille_variants(self):
        assert parse_number("mil neuf cent seize") == 1916
        assert parse_number("mille neuf cent seize") == 1916

    def test_et_and_hyphens(self):
        assert parse_number("trente et un") == 31
        assert parse_number("soixante et onze") == 71
        assert parse_number("quatre-vingt-onze") == 91

    def test_premier_is_one(self):
        assert parse_number("premier") == 1

    def test_plural_forms(self):
        assert parse_number("quatre-vingts") == 80
        assert parse_number("deux cents") == 200

    def test_digit_tokens(self):
        assert parse_number("1899") == 1899
        assert parse_number("31") == 31

    def test_unknown_token_position(self):
        with pytest.raises(NumberParseError) as err:
            parse_number(["deux", "bidule"], fuzzy=False)
        assert err.value.position == 1

    def test_double_thousand_rejected(self):
        with pytest.raises(NumberParseError):
            parse_number("cent mil cent mil")

    def test_non_decreasing_addition_rejected(self):
        with pytest.raises(NumberParseError):
            parse_number("un dix")

    def test_bad_cent_multiplier_rejected(self):
        with pytest.raises(NumberParseError):
            parse_number("vingt cent")

    def test_fuzzy_numeral_recovery(self):
        assert parse_number("qatre vingt", fuzzy=True) == 80
        with pytest.raises(NumberParseError):
            parse_number("qatre vingt", fuzzy=False)

    def test_english(self):
        g = NumeralGrammar.english()
        assert parse_number("nineteen hundred and four", g) == 1904
        assert parse_number("eighty seven", g) == 87


class TestGenerateNumber:
    def test_pinned_forms(self):
        assert generate_number(1899) == "mil huit cent quatre-vingt-dix-neuf"
        assert generate_number(80) == "quatre-vingt"
        assert generate_number(0) == "zéro"

    def test_round_trip_sample(self):
        for n in (1, 17, 21, 71, 77, 80, 91, 99, 100, 101, 200, 1000, 1850, 1916, 9999):
            assert parse_number(generate_number(n)) == n

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            generate_number(10000)
        with pytest.raises(ValueError):
            generate_number(-1)


class TestParseDate:
    def test_day_month_no_year(self):
        d = parse_date("le trente et un janvier")
        assert (d.day, d.month, d.year) == (31, 1, None)
        assert not d.complete

    def test_full_french_date(self):
        d = parse_date("le premier mars mil neuf cent seize")
        assert (d.year, d.month, d.day) == (1916, 3, 1)
        assert d.complete

    def test_digit_date(self):
        d = parse_date("le 31 janvier 1899")
        assert (d.year, d.month, d.day) == (1899, 1, 31)

    def test_relative_with_anchor(self):
        d = parse_date("décédée la veille", anchor=StructuredDate(1900, 3, 1))
        assert (d.year, d.month, d.day) == (1900, 2, 28)
        assert d.relative_anchor == "record_date"

    def test_relative_rollover_across_year(self):
        d = parse_date("la veille", anchor=StructuredDate(1900, 1, 1))
        assert (d.year, d.month, d.day) == (1899, 12, 31)

    def test_relative_without_anchor_is_incomplete(self):
        d = parse_date("la veille")
        assert not d.complete
        assert d.relative_anchor == "record_date"

    def test_impossible_date_raises(self):
        with pytest.raises(CalendarError):
            parse_date("le trente février mil neuf cent")

    def test_leap_day_accepted_only_in_leap_years(self):
        assert parse_date("le vingt-neuf février mil neuf cent quatre").complete
        with pytest.raises(CalendarError):
            parse_date("le vingt-neuf février mil neuf cent")

    def test_fuzzy_month(self):
        d = parse_date("le trois janvler mil neuf cent")
        assert (d.year, d.month, d.day) == (1900, 1, 3)

    def test_english_date(self):
        d = parse_date("the third of January 1900")
        assert (d.year, d.month, d.day) == (1900, 1, 3)

    def test_no_date(self):
        d = parse_date("Jean Tremblay cultivateur")
        assert d == StructuredDate()

    def test_historical_month_abbreviation(self):
        d = parse_date("le deux 7bre mil huit cent dix")
        assert (d.year, d.month, d.day) == (1810, 9, 2)


class TestFindDates:
    def test_two_disjoint_full_dates(self):
        text = ("premier mars mil neuf cent nous avons baptisé ... "
                "deux mars mil neuf cent nous avons baptisé ...")
        found = [d for d in find_dates(text) if d.complete]
        assert [(d.year, d.month, d.day) for d in found] == [(1900, 3, 1), (1900, 3, 2)]

    def test_partial_dates_not_complete(self):
        found = find_dates("au mois de janvier il a plu")
        assert len(found) == 1
        assert not found[0].complete

    def test_impossible_day_reported_incomplete(self):
        found = find_dates("le trente février mil neuf cent")
        assert len(found) == 1
        assert not found[0].complete


def test_match_relative_order():
    assert match_relative("il est mort la veille au soir") == ("la veille", -1)
    assert match_relative("décédé avant-hier") == ("avant-hier", -2)
    assert match_relative("rien ici") is None


def test_load_relative_rules(tmp_path):
    path = tmp_path / "rules.tsv"
    path.write_text("le lendemain\t1\nla veille\t-1\n", encoding="utf-8")
    rules = load_relative_rules(path)
    assert ("le lendemain", 1) in rules
    bad = tmp_path / "bad.tsv"
    bad.write_text("trop loin\t99\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_relative_rules(bad)


def test_tokenize_separators():
    assert tokenize("trente-et-un, janvier; l'an") == ["trente", "et", "un", "janvier", "l", "an"]
