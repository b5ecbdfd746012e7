"""Written-out date standardization: numeral words -> numbers -> calendar dates.

Register acts spell dates out in full ("mil huit cent quatre-vingt-dix-neuf"),
sometimes as a digit-free vigesimal composition ("dix huit cent ..." = 18*100),
and sometimes relative to the record date ("la veille"). This module parses
all three into StructuredDate values, and provides a canonical French number
generator used as the round-trip oracle for the parser.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from datetime import date as _date, timedelta

from .model import StructuredDate, days_in_month, fold_text


class NumberParseError(ValueError):
    """Raised for tokens outside the numeral lexicon or ill-formed compositions."""

    def __init__(self, message: str, position: int = -1):
        super().__init__(message if position < 0 else f"{message} (token {position})")
        self.position = position


class CalendarError(ValueError):
    """Raised when a parsed date names an impossible calendar day."""


# ---------------------------------------------------------------------------
# numeral grammar

_FR_ATOMS = {
    "zero": (0, "unit"),
    "un": (1, "unit"), "une": (1, "unit"),
    "premier": (1, "unit"), "premiere": (1, "unit"),
    "deux": (2, "unit"), "trois": (3, "unit"), "quatre": (4, "unit"),
    "cinq": (5, "unit"), "six": (6, "unit"), "sept": (7, "unit"),
    "huit": (8, "unit"), "neuf": (9, "unit"),
    "dix": (10, "teen"), "onze": (11, "teen"), "douze": (12, "teen"),
    "treize": (13, "teen"), "quatorze": (14, "teen"), "quinze": (15, "teen"),
    "seize": (16, "teen"),
    "vingt": (20, "ten"), "vingts": (20, "ten"),
    "trente": (30, "ten"), "quarante": (40, "ten"),
    "cinquante": (50, "ten"), "soixante": (60, "ten"),
    "cent": (100, "scale"), "cents": (100, "scale"),
    "mil": (1000, "scale"), "mille": (1000, "scale"),
}

_EN_ATOMS = {
    "zero": (0, "unit"),
    "one": (1, "unit"), "first": (1, "unit"),
    "two": (2, "unit"), "second": (2, "unit"),
    "three": (3, "unit"), "third": (3, "unit"),
    "four": (4, "unit"), "fourth": (4, "unit"),
    "five": (5, "unit"), "fifth": (5, "unit"),
    "six": (6, "unit"), "sixth": (6, "unit"),
    "seven": (7, "unit"), "seventh": (7, "unit"),
    "eight": (8, "unit"), "eighth": (8, "unit"),
    "nine": (9, "unit"), "ninth": (9, "unit"),
    "ten": (10, "teen"), "tenth": (10, "teen"),
    "eleven": (11, "teen"), "eleventh": (11, "teen"),
    "twelve": (12, "teen"), "twelfth": (12, "teen"),
    "thirteen": (13, "teen"), "thirteenth": (13, "teen"),
    "fourteen": (14, "teen"), "fourteenth": (14, "teen"),
    "fifteen": (15, "teen"), "fifteenth": (15, "teen"),
    "sixteen": (16, "teen"), "sixteenth": (16, "teen"),
    "seventeen": (17, "teen"), "seventeenth": (17, "teen"),
    "eighteen": (18, "teen"), "eighteenth": (18, "teen"),
    "nineteen": (19, "teen"), "nineteenth": (19, "teen"),
    "twenty": (20, "ten"), "twentieth": (20, "ten"),
    "thirty": (30, "ten"), "thirtieth": (30, "ten"),
    "forty": (40, "ten"), "fifty": (50, "ten"), "sixty": (60, "ten"),
    "seventy": (70, "ten"), "eighty": (80, "ten"), "ninety": (90, "ten"),
    "hundred": (100, "scale"), "thousand": (1000, "scale"),
}

# connector words dropped during numeral composition
_FR_CONNECTORS = frozenset({"et"})
_EN_CONNECTORS = frozenset({"and"})


@dataclass(frozen=True)
class NumeralGrammar:
    """Numeral atoms plus the connector words dropped between them."""

    atoms: dict
    connectors: frozenset

    @classmethod
    def french(cls) -> "NumeralGrammar":
        return cls(dict(_FR_ATOMS), _FR_CONNECTORS)

    @classmethod
    def english(cls) -> "NumeralGrammar":
        return cls(dict(_EN_ATOMS), _EN_CONNECTORS)

    @classmethod
    def bilingual(cls) -> "NumeralGrammar":
        atoms = dict(_EN_ATOMS)
        atoms.update(_FR_ATOMS)  # French wins on collisions (six, zero)
        return cls(atoms, _FR_CONNECTORS | _EN_CONNECTORS)

    def number_words(self) -> frozenset:
        return frozenset(self.atoms)


_TOKEN_RE = re.compile(r"\d+[^\W\d_]+|[^\W\d_]+|\d+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Word and digit tokens, hyphens/commas/apostrophes treated as separators."""
    return _TOKEN_RE.findall(text)


def _edit1(a: str, b: str) -> bool:
    # distance <= 1 without a full DP table
    if a == b:
        return True
    la, lb = len(a), len(b)
    if abs(la - lb) > 1:
        return False
    if la == lb:
        return sum(1 for x, y in zip(a, b) if x != y) <= 1
    if la > lb:
        a, b, la, lb = b, a, lb, la
    i = j = 0
    skipped = False
    while i < la and j < lb:
        if a[i] == b[j]:
            i += 1
            j += 1
        elif skipped:
            return False
        else:
            skipped = True
            j += 1
    return True


_DIGIT_ORDINAL_RE = re.compile(r"^(\d+)(?:er|ere|re|eme|e|th|st|nd|rd)$")


def _lookup(token: str, grammar: NumeralGrammar, fuzzy: bool):
    folded = fold_text(token)
    if folded in grammar.atoms:
        return grammar.atoms[folded][0]
    if folded.isdigit():
        return int(folded)
    ordinal = _DIGIT_ORDINAL_RE.match(folded)
    if ordinal:
        return int(ordinal.group(1))
    if fuzzy and len(folded) >= 4:
        hits = sorted(w for w in grammar.atoms if _edit1(folded, w))
        if hits:
            return grammar.atoms[hits[0]][0]
    return None


def parse_number(tokens, grammar: NumeralGrammar | None = None, fuzzy: bool = True) -> int:
    """Value of a written-out number.

    Composition rules: a unit before cent/mille multiplies ("dix huit cent"
    = 18*100); a small unit before vingt multiplies (vigesimal "quatre-vingt");
    otherwise values add and each added value must be smaller than the one
    before it within its group. Violations raise NumberParseError with the
    offending token position.
    """
    if grammar is None:
        grammar = NumeralGrammar.french()
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    values: list[tuple[int, int]] = []  # (value, original position)
    for pos, tok in enumerate(tokens):
        if fold_text(tok) in grammar.connectors:
            continue
        v = _lookup(tok, grammar, fuzzy)
        if v is None:
            raise NumberParseError(f"unknown numeral token {tok!r}", pos)
        values.append((v, pos))
    if not values:
        raise NumberParseError("no numeral tokens")
    if len(values) == 1:
        return values[0][0]

    total = 0          # flushed thousands
    hundreds = 0       # hundreds of the current group
    small = 0          # sub-hundred of the current group
    last_add = None    # magnitude of the last additive value
    thousands_done = False
    for v, pos in values:
        if v >= 1000:
            if thousands_done:
                raise NumberParseError("second thousands scale", pos)
            group = hundreds + small
            total += max(group, 1) * 1000
            hundreds = small = 0
            last_add = None
            thousands_done = True
        elif v == 100:
            if hundreds or small > 19:
                raise NumberParseError("invalid multiplier before 'cent'", pos)
            hundreds = max(small, 1) * 100
            small = 0
            last_add = None
        elif v == 20 and 2 <= small <= 9:
            small *= 20
            last_add = 20
        elif v > 99:
            # a literal digit token can only stand alone
            raise NumberParseError("digit token inside a composition", pos)
        else:
            if small > 0 and last_add is not None and v >= last_add:
                raise NumberParseError("non-decreasing additive sequence", pos)
            small += v
            last_add = v
    return total + hundreds + small


_FR_UNITS = ["zéro", "un", "deux", "trois", "quatre", "cinq", "six", "sept",
             "huit", "neuf", "dix", "onze", "douze", "treize", "quatorze",
             "quinze", "seize"]
_FR_TENS = {20: "vingt", 30: "trente", 40: "quarante", 50: "cinquante", 60: "soixante"}


def _sub_hundred(n: int) -> str:
    if n <= 16:
        return _FR_UNITS[n]
    if n <= 19:
        return "dix-" + _FR_UNITS[n - 10]
    if n < 70:
        tens, unit = divmod(n, 10)
        word = _FR_TENS[tens * 10]
        if unit == 0:
            return word
        if unit == 1:
            return f"{word} et un"
        return f"{word}-{_FR_UNITS[unit]}"
    if n < 80:
        if n == 71:
            return "soixante et onze"
        return "soixante-" + _sub_hundred(n - 60)
    rest = n - 80
    if rest == 0:
        return "quatre-vingt"
    return "quatre-vingt-" + _sub_hundred(rest)


def generate_number(n: int) -> str:
    """Canonical French words for n (register spelling: 'mil' for thousands)."""
    if not (0 <= n <= 9999):
        raise ValueError("generate_number supports 0..9999")
    if n == 0:
        return "zéro"
    parts = []
    thousands, rest = divmod(n, 1000)
    if thousands:
        parts.append("mil" if thousands == 1 else f"{_FR_UNITS[thousands]} mil")
    hundreds, rest = divmod(rest, 100)
    if hundreds:
        parts.append("cent" if hundreds == 1 else f"{_FR_UNITS[hundreds]} cent")
    if rest:
        parts.append(_sub_hundred(rest))
    return " ".join(parts)


# ---------------------------------------------------------------------------
# month lexicons (folded form -> month number)

MONTHS_FR = {
    "janvier": 1, "fevrier": 2, "mars": 3, "avril": 4, "mai": 5, "juin": 6,
    "juillet": 7, "aout": 8, "septembre": 9, "octobre": 10, "novembre": 11,
    "decembre": 12,
    # register abbreviations, incl. the historical numbered months; "sept"
    # is deliberately absent: it is the numeral 7 far more often than September
    "janv": 1, "fev": 2, "avr": 4, "juil": 7, "oct": 10,
    "nov": 11, "dec": 12, "7bre": 9, "8bre": 10, "9bre": 11, "10bre": 12, "xbre": 12,
}

MONTHS_EN = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6,
    "july": 7, "august": 8, "september": 9, "october": 10, "november": 11,
    "december": 12,
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "jun": 6, "jul": 7, "aug": 8,
    "sep": 9, "nov": 11, "dec": 12,
}


def month_lexicon(language: str = "fr") -> dict:
    if language == "fr":
        return dict(MONTHS_FR)
    if language == "en":
        return dict(MONTHS_EN)
    merged = dict(MONTHS_EN)
    merged.update(MONTHS_FR)
    return merged


# ---------------------------------------------------------------------------
# relative dates

DEFAULT_RELATIVE_RULES: tuple[tuple[str, int], ...] = (
    ("la veille", -1),
    ("ce jour", 0),
    ("avant-hier", -2),
    ("hier", -1),
)


def load_relative_rules(path) -> tuple[tuple[str, int], ...]:
    """TSV `phrase<TAB>day offset`, offsets bounded to [-31, 31]."""
    rules = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw or raw.startswith("#"):
                continue
            phrase, offset = raw.split("\t")
            offset = int(offset)
            if not -31 <= offset <= 31:
                raise ValueError(f"relative offset out of range: {raw!r}")
            rules.append((phrase, offset))
    return tuple(rules)


def match_relative(text: str, rules=DEFAULT_RELATIVE_RULES):
    """First matching trigger as (phrase, offset), or None."""
    folded_tokens = [fold_text(t) for t in tokenize(text)]
    for phrase, offset in rules:
        needle = [fold_text(t) for t in tokenize(phrase)]
        for i in range(len(folded_tokens) - len(needle) + 1):
            if folded_tokens[i:i + len(needle)] == needle:
                return phrase, offset
    return None


def shift_date(anchor: StructuredDate, offset_days: int) -> StructuredDate:
    """Anchor plus a day offset, with exact calendar rollover."""
    if not anchor.complete:
        raise CalendarError("relative date needs a complete anchor")
    shifted = _date(anchor.year, anchor.month, anchor.day) + timedelta(days=offset_days)
    return StructuredDate(shifted.year, shifted.month, shifted.day,
                          relative_anchor="record_date")


# ---------------------------------------------------------------------------
# date extraction

# words allowed between a day number and its month, or inside a year run
_SKIP_WORDS = frozenset({"le", "la", "du", "de", "des", "d", "l", "au", "ce",
                         "jour", "an", "the", "of", "on", "in", "day"})


def _parse_run(run: list[str], grammar: NumeralGrammar, fuzzy: bool,
               upper: int | None = None) -> int | None:
    """Longest-suffix-dropping parse of a numeral token run; None if hopeless."""
    work = list(run)
    while work:
        try:
            value = parse_number(work, grammar, fuzzy)
        except NumberParseError:
            work.pop(0)
            continue
        if upper is None or value <= upper:
            return value
        work.pop(0)
    return None


def find_dates(text: str, grammar: NumeralGrammar | None = None,
               months: dict | None = None, fuzzy: bool = True) -> list[StructuredDate]:
    """All (day, month, year) groups found left-to-right; spans never overlap.

    Impossible day/month combinations are returned as-is: StructuredDate
    reports them as incomplete, which is what fusion detection and validation
    key on.
    """
    if grammar is None:
        grammar = NumeralGrammar.bilingual()
    if months is None:
        months = month_lexicon("both")
    tokens = tokenize(text)
    folded = [fold_text(t) for t in tokens]

    def is_number(i: int) -> bool:
        return _lookup(tokens[i], grammar, fuzzy) is not None

    def month_of(i: int):
        if folded[i] in months:
            return months[folded[i]]
        if fuzzy and len(folded[i]) >= 4 and not is_number(i):
            hits = sorted(w for w in months if len(w) >= 4 and _edit1(folded[i], w))
            if hits:
                return months[hits[0]]
        return None

    results = []
    i = 0
    consumed_until = 0
    while i < len(tokens):
        month = month_of(i)
        if month is None:
            i += 1
            continue
        # day: number run walking back from the month, skip words allowed
        day_run: list[str] = []
        j = i - 1
        while j >= consumed_until and len(day_run) < 4:
            if is_number(j):
                day_run.insert(0, tokens[j])
                j -= 1
            elif folded[j] in _SKIP_WORDS or folded[j] in grammar.connectors:
                j -= 1
            else:
                break
        day = _parse_run(day_run, grammar, fuzzy, upper=31)
        # year: number run walking forward from the month; connectors may
        # continue a run ("soixante et un"), skip words only precede it
        year_run: list[str] = []
        j = i + 1
        while j < len(tokens) and len(year_run) < 10:
            if is_number(j):
                year_run.append(tokens[j])
                j += 1
            elif year_run and folded[j] in grammar.connectors \
                    and j + 1 < len(tokens) and is_number(j + 1):
                j += 1
            elif not year_run and (folded[j] in _SKIP_WORDS or folded[j] in grammar.connectors):
                j += 1
            else:
                break
        year = _parse_run(year_run, grammar, fuzzy)
        if year is not None and year < 100:
            year = None  # a stray small number after the month is not a year
        results.append(StructuredDate(year=year, month=month, day=day))
        consumed_until = j if year is not None else i + 1
        i = consumed_until
    return results


def parse_date(text: str, grammar: NumeralGrammar | None = None,
               anchor: StructuredDate | None = None,
               rules=DEFAULT_RELATIVE_RULES,
               months: dict | None = None, fuzzy: bool = True) -> StructuredDate:
    """First date expressed by the text.

    Relative triggers win when a complete anchor is available. Raises
    CalendarError when the text names a day that cannot exist in its month
    ("le trente février ..."). Missing parts are left absent.
    """
    rel = match_relative(text, rules)
    if rel is not None:
        _, offset = rel
        if anchor is not None and anchor.complete:
            return shift_date(anchor, offset)
        return StructuredDate(relative_anchor="record_date")
    found = find_dates(text, grammar, months, fuzzy)
    if not found:
        return StructuredDate()
    first = found[0]
    if first.day is not None and first.month is not None:
        if not (1 <= first.day <= days_in_month(first.month, first.year)):
            raise CalendarError(f"impossible calendar date: {first.iso()} in {text!r}")
    return first


def to_python_date(d: StructuredDate) -> _date:
    if not d.complete:
        raise CalendarError(f"date incomplete: {d.iso()}")
    return _date(d.year, d.month, d.day)


def strip_accents(s: str) -> str:
    return "".join(c for c in unicodedata.normalize("NFD", s) if not unicodedata.combining(c))
