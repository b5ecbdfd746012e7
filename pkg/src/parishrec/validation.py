"""Mould-driven record validation.

Every act type maps to a mould: the ordered roles its entities are expected
to fill, each mandatory or optional. Entities are slotted positionally (the
subject of a birth comes before the father, who comes before the mother),
mandatory gaps invalidate the record, and two whole-record checks run on the
side: fusion (two complete written-out dates betray a missed act boundary)
and special cases (keyword groups whose records cannot be linked downstream).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from . import dates
from .model import (Act, FieldValue, StructuredRecord, ValidityStatus, fold_text)

DEFAULT_MARRIAGEABLE_AGE_YEARS = 12.0

MARRIED_WORDS = frozenset({"epoux", "epouse", "mari", "femme", "veuf", "veuve"})
SINGLE_PHRASES = ("fils de", "fille de", "enfant de")
SUBYEAR_AGE_WORDS = frozenset({"semaine", "semaines", "heure", "heures"})
AGE_PHRASES = ("quelques instants", "quelques minutes")


@dataclass(frozen=True)
class MouldSlot:
    role: str
    tag: str
    mandatory: bool


def _slot(role, tag, mandatory=False):
    return MouldSlot(role, tag, mandatory)


@dataclass(frozen=True)
class Mould:
    mould_id: str
    slots: tuple[MouldSlot, ...]

    def per_roles(self) -> list[str]:
        return [s.role for s in self.slots if s.tag == "PER" and s.role != "witness_names"]

    def mandatory_roles(self) -> list[str]:
        return [s.role for s in self.slots if s.mandatory]

    def legal_roles(self) -> set[str]:
        return {s.role for s in self.slots}


# witness_names doubles as the overflow bucket for surplus PER entities and
# is therefore legal (optional) in every mould.
_COMMON_HEAD = (
    _slot("record_date", "DATE", mandatory=True),
    _slot("record_place", "LOC"),
    _slot("subject_name", "PER", mandatory=True),
    _slot("event_date", "DATE"),
    _slot("subject_age", "TEXT"),
)
_PARENTS = (
    _slot("father_name", "PER", mandatory=True),
    _slot("father_occupation", "OCC"),
    _slot("father_residence", "LOC"),
    _slot("mother_name", "PER", mandatory=True),
    _slot("mother_occupation", "OCC"),
    _slot("mother_residence", "LOC"),
)
_SPOUSE = (
    _slot("spouse_name", "PER", mandatory=True),
    _slot("spouse_occupation", "OCC"),
    _slot("spouse_residence", "LOC"),
)

MOULDS: dict[str, Mould] = {
    "birth": Mould("birth", _COMMON_HEAD + _PARENTS + (
        _slot("godfather_name", "PER"),
        _slot("godfather_occupation", "OCC"),
        _slot("godfather_residence", "LOC"),
        _slot("godmother_name", "PER"),
        _slot("godmother_occupation", "OCC"),
        _slot("godmother_residence", "LOC"),
        _slot("witness_names", "PER"),
    )),
    "death_married": Mould("death_married", _COMMON_HEAD + _SPOUSE + (
        _slot("witness_names", "PER"),
    )),
    "death_single": Mould("death_single", _COMMON_HEAD + _PARENTS + (
        _slot("witness_names", "PER"),
    )),
    "marriage": Mould("marriage", _COMMON_HEAD + _SPOUSE + (
        _slot("witness_names", "PER"),
    )),
}


@dataclass(frozen=True)
class SpecialCaseLexicon:
    indigenous_community: frozenset[str]
    unidentified_subject: frozenset[str]
    immigration: frozenset[str]

    # priority order is fixed: a record matching several groups takes the first
    GROUPS = ("indigenous_community", "unidentified_subject", "immigration")

    def __post_init__(self):
        groups = [getattr(self, g) for g in self.GROUPS]
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                shared = groups[i] & groups[j]
                if shared:
                    raise ValueError(f"keyword groups overlap: {sorted(shared)}")

    @classmethod
    def load(cls, path) -> "SpecialCaseLexicon":
        with open(path, encoding="utf-8") as fh:
            return cls._parse(fh)

    @classmethod
    def shipped_default(cls) -> "SpecialCaseLexicon":
        text = resources.files("parishrec").joinpath("data/special_cases.tsv").read_text("utf-8")
        return cls._parse(text.splitlines())

    @classmethod
    def _parse(cls, lines) -> "SpecialCaseLexicon":
        groups: dict[str, set[str]] = {g: set() for g in cls.GROUPS}
        for raw in lines:
            raw = raw.rstrip("\n")
            if not raw or raw.startswith("#"):
                continue
            group, word = raw.split("\t")
            if group not in groups:
                raise ValueError(f"unknown special-case group {group!r}")
            groups[group].add(fold_text(word))
        return cls(*(frozenset(groups[g]) for g in cls.GROUPS))


_AGE_RE = re.compile(
    r"\bagee?\s+(?:de\s+|d\s+)?((?:[\w-]+\s+){0,4}?)(ans?|mois|semaines?|jours?|heures?)\b")

_UNIT_YEARS = {"an": 1.0, "ans": 1.0, "mois": 1 / 12, "semaine": 7 / 365.25,
               "semaines": 7 / 365.25, "jour": 1 / 365.25, "jours": 1 / 365.25,
               "heure": 1 / 8766, "heures": 1 / 8766}


def parse_age(text: str, grammar: dates.NumeralGrammar | None = None):
    """First declared age as (raw phrase, value, unit, years) or None."""
    folded = fold_text(text)
    m = _AGE_RE.search(folded)
    if not m:
        return None
    number_part, unit = m.group(1).strip(), m.group(2)
    if not number_part:
        return None
    try:
        value = dates.parse_number(number_part, grammar)
    except dates.NumberParseError:
        return None
    return m.group(0), value, unit, value * _UNIT_YEARS[unit]


def pick_death_mould(act: Act, age_floor_years: float = DEFAULT_MARRIAGEABLE_AGE_YEARS,
                     grammar: dates.NumeralGrammar | None = None) -> tuple[str, str]:
    """(mould id, reason) for a death act.

    Married wording wins over single wording when both appear; with no signal
    at all the record defaults to death_single.
    """
    folded = fold_text(act.full_text)
    tokens = set(re.findall(r"[\w-]+", folded))
    married = bool(tokens & MARRIED_WORDS)
    single = any(p in folded for p in SINGLE_PHRASES)
    if not single:
        single = bool(tokens & SUBYEAR_AGE_WORDS) or any(p in folded for p in AGE_PHRASES)
    if not single:
        age = parse_age(act.full_text, grammar)
        single = age is not None and age[3] < age_floor_years
    if married:
        return "death_married", "married wording" if not single else "married wording (overrides single)"
    if single:
        return "death_single", "single wording or age"
    return "death_single", "default"


def entity_id(entity) -> str:
    return f"{entity.line_id}:{entity.char_start}-{entity.char_end}"


def slot_entities(act: Act, mould: Mould) -> StructuredRecord:
    """Positional slotting of the act's entities into the mould's roles.

    Nothing is dropped: entities with no legal slot land in the record's
    overflow (extra PER surfaces go to witness_names first).
    """
    legal = mould.legal_roles()
    per_queue = mould.per_roles()
    slots: dict[str, FieldValue] = {}
    overflow: list[FieldValue] = []
    last_per_prefix: str | None = None
    dates_seen = 0
    per_seen = 0

    def fill(role: str, surface: str, eid: str) -> None:
        if role in slots:
            old = slots[role]
            slots[role] = FieldValue(f"{old.raw}; {surface}", old.standardized,
                                     old.provenance + (eid,))
        else:
            slots[role] = FieldValue(surface, None, (eid,))

    for ent in act.entities:
        eid = entity_id(ent)
        if ent.tag == "PER":
            if per_seen < len(per_queue):
                role = per_queue[per_seen]
                fill(role, ent.surface, eid)
                last_per_prefix = role.removesuffix("_name")
            else:
                fill("witness_names", ent.surface, eid)
                last_per_prefix = None
            per_seen += 1
        elif ent.tag == "DATE":
            if dates_seen == 0:
                fill("record_date", ent.surface, eid)
            elif "event_date" in legal:
                fill("event_date", ent.surface, eid)
            else:
                overflow.append(FieldValue(ent.surface, None, (eid,)))
            dates_seen += 1
        elif ent.tag == "OCC":
            role = f"{last_per_prefix}_occupation" if last_per_prefix else None
            if role in legal:
                fill(role, ent.surface, eid)
            else:
                overflow.append(FieldValue(ent.surface, None, (eid,)))
        elif ent.tag == "LOC":
            if per_seen == 0:
                if "record_place" in legal:
                    fill("record_place", ent.surface, eid)
                else:
                    overflow.append(FieldValue(ent.surface, None, (eid,)))
            else:
                role = f"{last_per_prefix}_residence" if last_per_prefix else None
                if role in legal:
                    fill(role, ent.surface, eid)
                else:
                    overflow.append(FieldValue(ent.surface, None, (eid,)))
        else:
            overflow.append(FieldValue(ent.surface, None, (eid,)))

    return StructuredRecord(act.act_id, mould.mould_id, slots, tuple(overflow))


def detect_fusion(act: Act, grammar: dates.NumeralGrammar | None = None) -> bool:
    """Two or more disjoint complete written-out dates suggest two merged acts."""
    found = dates.find_dates(act.full_text, grammar)
    return sum(1 for d in found if d.complete) >= 2


def detect_special_case(act: Act, lex: SpecialCaseLexicon | None = None) -> str | None:
    if lex is None:
        lex = SpecialCaseLexicon.shipped_default()
    tokens = {fold_text(t) for t in re.findall(r"[\w-]+", act.full_text)}
    for group in lex.GROUPS:
        if tokens & getattr(lex, group):
            return group
    return None


def finalize_status(record: StructuredRecord, mould: Mould, fusion: bool,
                    special: str | None) -> ValidityStatus:
    """Terminal status with fixed precedence: fusion > special case > invalid."""
    if fusion:
        return ValidityStatus("fusion", "multiple complete dates in one text block")
    if special is not None:
        return ValidityStatus("special_case", special)
    for role in mould.mandatory_roles():
        if not record.filled(role):
            return ValidityStatus("invalid", f"missing {role}")
    return ValidityStatus("valid")


def validate_act(act: Act, lex: SpecialCaseLexicon | None = None,
                 age_floor_years: float = DEFAULT_MARRIAGEABLE_AGE_YEARS,
                 grammar: dates.NumeralGrammar | None = None) -> StructuredRecord:
    """Slot, check, and status one classified act.

    Undefined acts cannot be moulded meaningfully; they are slotted with the
    widest mould and always come out invalid("undefined type").
    """
    if act.act_type == "death":
        mould_id, _ = pick_death_mould(act, age_floor_years, grammar)
    elif act.act_type in MOULDS:
        mould_id = act.act_type
    else:
        mould_id = "birth"
    mould = MOULDS[mould_id]
    record = slot_entities(act, mould)

    age = parse_age(act.full_text, grammar)
    if age is not None and "subject_age" in mould.legal_roles() and "subject_age" not in record.slots:
        slots = dict(record.slots)
        slots["subject_age"] = FieldValue(age[0], f"{age[1]} {age[2]}")
        record = StructuredRecord(record.act_id, record.mould, slots, record.overflow)

    if act.act_type == "undefined":
        return record.with_status(ValidityStatus("invalid", "undefined type"))
    fusion = detect_fusion(act, grammar)
    special = detect_special_case(act, lex)
    return record.with_status(finalize_status(record, mould, fusion, special))
