"""Domain types shared across the pipeline.

All types are immutable after construction (frozen dataclasses over tuples)
and safe to share between workers. Invariant checking is reported as data
rather than raised: malformed inputs are a normal occurrence in recognized
corpora and must be describable, not fatal. ``validate_page`` (and the
per-type ``*_violations`` helpers it builds on) return a list of violation
descriptors; an empty list means every invariant holds.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Optional, Union

from . import geometry

PAGE_CLASSES = ("act", "no_act", "unset")
ACT_CLASSES = ("start", "center", "end", "full")
ACT_TYPES = ("birth", "marriage", "death", "undefined")
ENTITY_TAGS = ("PER", "LOC", "DATE", "OCC")
MOULD_IDS = ("birth", "death_married", "death_single", "marriage")
STATUSES = ("valid", "invalid", "fusion", "special_case", "pending")

ROLES = (
    "record_date", "record_place",
    "subject_name", "event_date", "subject_age",
    "father_name", "father_occupation", "father_residence",
    "mother_name", "mother_occupation", "mother_residence",
    "spouse_name", "spouse_occupation", "spouse_residence",
    "godfather_name", "godfather_occupation", "godfather_residence",
    "godmother_name", "godmother_occupation", "godmother_residence",
    "witness_names",
)


@dataclass(frozen=True)
class Polygon:
    """Zone geometry as an ordered ring of (x, y) pixel coordinates."""

    points: tuple[tuple[float, float], ...]

    def __init__(self, points) -> None:
        object.__setattr__(self, "points", tuple((float(x), float(y)) for x, y in points))

    def area(self) -> float:
        return geometry.polygon_area(self.points)

    def bbox(self) -> tuple[float, float, float, float]:
        return geometry.bounding_box(self.points)

    def height(self) -> float:
        return geometry.bbox_height(self.points)

    def width(self) -> float:
        x0, _, x1, _ = self.bbox()
        return x1 - x0

    def violations(self, prefix: str = "polygon") -> list[str]:
        out = []
        if len(self.points) < 3:
            out.append(f"{prefix}.points < 3")
            return out
        if any(x < 0 or y < 0 for x, y in self.points):
            out.append(f"{prefix} has negative coordinates")
        if self.area() <= 0:
            out.append(f"{prefix}.area <= 0")
        if geometry.is_self_intersecting(self.points):
            out.append(f"{prefix} is self-intersecting")
        return out


@dataclass(frozen=True)
class TextLine:
    id: str
    polygon: Polygon
    text: str = ""
    confidence: Optional[float] = None
    is_date_line: Optional[bool] = None
    zone_label: Optional[str] = None  # free-form (e.g. marginalia); no semantics assigned

    def violations(self) -> list[str]:
        out = self.polygon.violations(f"line[{self.id}].polygon")
        if len(self.polygon.points) >= 3 and self.polygon.height() <= 0:
            out.append(f"line[{self.id}].polygon height <= 0")
        if self.confidence is not None and not (0.0 <= self.confidence <= 1.0):
            out.append(f"line[{self.id}].confidence outside [0,1]")
        return out


@dataclass(frozen=True)
class Entity:
    """A tagged span over one line's text; offsets count Unicode scalars."""

    tag: str
    line_id: str
    char_start: int
    char_end: int
    surface: str

    def violations(self, line_text: Optional[str], index: int = 0) -> list[str]:
        name = f"entity[{index}]"
        out = []
        if self.tag not in ENTITY_TAGS:
            out.append(f"{name}.tag unknown: {self.tag!r}")
        if line_text is None:
            out.append(f"{name}.line_id unresolved")
            return out
        if not (0 <= self.char_start < self.char_end <= len(line_text)):
            out.append(f"{name} offsets out of range")
        elif line_text[self.char_start:self.char_end] != self.surface:
            out.append(f"{name}.surface does not equal the text slice")
        return out


@dataclass(frozen=True)
class RecognizedPage:
    """One page of recognized content: geometry, transcriptions, entities."""

    page_id: str
    register_id: str
    width: int
    height: int
    lines: tuple[TextLine, ...] = ()
    entities: tuple[Entity, ...] = ()
    orientation: str = "portrait"
    page_class: str = "unset"

    def __init__(self, page_id, register_id, width, height, lines=(), entities=(),
                 orientation="portrait", page_class="unset") -> None:
        object.__setattr__(self, "page_id", page_id)
        object.__setattr__(self, "register_id", register_id)
        object.__setattr__(self, "width", int(width))
        object.__setattr__(self, "height", int(height))
        object.__setattr__(self, "lines", tuple(lines))
        object.__setattr__(self, "entities", tuple(entities))
        object.__setattr__(self, "orientation", orientation)
        object.__setattr__(self, "page_class", page_class)

    def line_by_id(self, line_id: str) -> Optional[TextLine]:
        for line in self.lines:
            if line.id == line_id:
                return line
        return None

    def with_page_class(self, page_class: str) -> "RecognizedPage":
        return RecognizedPage(self.page_id, self.register_id, self.width, self.height,
                              self.lines, self.entities, self.orientation, page_class)


def validate_page(page: RecognizedPage) -> list[str]:
    """Check every domain invariant of a page; violations are data, not failures."""
    out: list[str] = []
    if page.width <= 0 or page.height <= 0:
        out.append("page dimensions <= 0")
    if page.orientation not in ("portrait", "landscape"):
        out.append(f"page.orientation unknown: {page.orientation!r}")
    if page.page_class not in PAGE_CLASSES:
        out.append(f"page.page_class unknown: {page.page_class!r}")
    seen = set()
    for line in page.lines:
        if line.id in seen:
            out.append(f"duplicate line id {line.id!r}")
        seen.add(line.id)
        out.extend(line.violations())
        if line.polygon.points and page.width > 0 and page.height > 0:
            clipped = geometry.clip_to_rect(line.polygon.points, 0, 0, page.width, page.height)
            if len(line.polygon.points) >= 3 and geometry.polygon_area(clipped) <= 0:
                out.append(f"line[{line.id}].polygon outside page after clipping")
    by_id = {line.id: line.text for line in page.lines}
    for i, ent in enumerate(page.entities):
        out.extend(ent.violations(by_id.get(ent.line_id), i))
    return out


@dataclass(frozen=True)
class ActFragment:
    """A block of lines on one page, positionally tagged start/center/end/full."""

    fragment_id: str
    page_id: str
    act_class: str
    polygon: Polygon
    line_ids: tuple[str, ...]
    sequence_index: int

    def __init__(self, fragment_id, page_id, act_class, polygon, line_ids, sequence_index) -> None:
        object.__setattr__(self, "fragment_id", fragment_id)
        object.__setattr__(self, "page_id", page_id)
        object.__setattr__(self, "act_class", act_class)
        object.__setattr__(self, "polygon", polygon)
        object.__setattr__(self, "line_ids", tuple(line_ids))
        object.__setattr__(self, "sequence_index", int(sequence_index))

    def violations(self) -> list[str]:
        out = []
        if self.act_class not in ACT_CLASSES:
            out.append(f"fragment[{self.fragment_id}].act_class unknown: {self.act_class!r}")
        if not self.line_ids:
            out.append(f"fragment[{self.fragment_id}].line_ids empty")
        return out


@dataclass(frozen=True)
class Act:
    """A merged cross-page act: ordered fragments plus pooled text and entities."""

    act_id: str
    fragments: tuple[ActFragment, ...]
    act_type: str = "undefined"
    full_text: str = ""
    entities: tuple[Entity, ...] = ()
    flags: tuple[str, ...] = ()

    def __init__(self, act_id, fragments, act_type="undefined", full_text="",
                 entities=(), flags=()) -> None:
        object.__setattr__(self, "act_id", act_id)
        object.__setattr__(self, "fragments", tuple(fragments))
        object.__setattr__(self, "act_type", act_type)
        object.__setattr__(self, "full_text", full_text)
        object.__setattr__(self, "entities", tuple(entities))
        object.__setattr__(self, "flags", tuple(flags))

    def violations(self) -> list[str]:
        out = []
        if self.act_type not in ACT_TYPES:
            out.append(f"act[{self.act_id}].act_type unknown: {self.act_type!r}")
        classes = [f.act_class for f in self.fragments]
        if not _valid_class_sequence(classes):
            out.append(f"act[{self.act_id}] fragment class sequence invalid: {classes}")
        return out


def _valid_class_sequence(classes: list[str]) -> bool:
    # legal shapes: [full], or [start, center*, end]; single-fragment orphans
    # keep their original class and are covered by the orphan flag instead
    if classes == ["full"]:
        return True
    if len(classes) == 1 and classes[0] in ACT_CLASSES:
        return True
    return (
        len(classes) >= 2
        and classes[0] == "start"
        and classes[-1] == "end"
        and all(c == "center" for c in classes[1:-1])
    )


def derive_full_text(fragments, pages_by_id) -> str:
    """Recompute an act's text from its fragments' lines, newline-joined.

    Pure function of the fragments; used both when building acts and when
    asserting the Act.full_text invariant.
    """
    parts = []
    for frag in fragments:
        page = pages_by_id[frag.page_id]
        for line_id in frag.line_ids:
            line = page.line_by_id(line_id)
            if line is not None:
                parts.append(line.text)
    return "\n".join(parts)


@dataclass(frozen=True)
class StructuredDate:
    """A (possibly partial) calendar date over the proleptic Gregorian calendar."""

    year: Optional[int] = None
    month: Optional[int] = None
    day: Optional[int] = None
    relative_anchor: Optional[str] = None

    @property
    def complete(self) -> bool:
        if self.year is None or self.month is None or self.day is None:
            return False
        return 1 <= self.month <= 12 and 1 <= self.day <= days_in_month(self.month, self.year)

    def iso(self) -> str:
        y = "????" if self.year is None else f"{self.year:04d}"
        m = "??" if self.month is None else f"{self.month:02d}"
        d = "??" if self.day is None else f"{self.day:02d}"
        return f"{y}-{m}-{d}"


def days_in_month(month: int, year: Optional[int]) -> int:
    """Upper bound on day-of-month; unknown year gets the maximum (Feb -> 29)."""
    if month == 2:
        if year is None:
            return 29
        leap = year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)
        return 29 if leap else 28
    return 30 if month in (4, 6, 9, 11) else 31


@dataclass(frozen=True)
class PersonName:
    first_names: tuple[str, ...] = ()
    last_names: tuple[str, ...] = ()
    corrected: bool = False
    correction_candidates: tuple[tuple[str, float], ...] = ()

    def __init__(self, first_names=(), last_names=(), corrected=False, correction_candidates=()) -> None:
        object.__setattr__(self, "first_names", tuple(first_names))
        object.__setattr__(self, "last_names", tuple(last_names))
        object.__setattr__(self, "corrected", corrected)
        object.__setattr__(self, "correction_candidates",
                           tuple((n, float(s)) for n, s in correction_candidates))

    def violations(self) -> list[str]:
        out = []
        if not self.first_names and not self.last_names:
            out.append("person name has neither first nor last names")
        if self.corrected and not self.correction_candidates:
            out.append("corrected name without correction candidates")
        return out


Standardized = Union[StructuredDate, PersonName, str]


@dataclass(frozen=True)
class FieldValue:
    raw: str
    standardized: Optional[Standardized] = None
    provenance: tuple[str, ...] = ()

    def __init__(self, raw, standardized=None, provenance=()) -> None:
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "standardized", standardized)
        object.__setattr__(self, "provenance", tuple(provenance))


@dataclass(frozen=True)
class ValidityStatus:
    status: str
    reason: str = ""

    def violations(self) -> list[str]:
        out = []
        if self.status not in STATUSES:
            out.append(f"status unknown: {self.status!r}")
        if self.status in ("invalid", "fusion", "special_case") and not self.reason:
            out.append(f"terminal status {self.status!r} without reason")
        return out


@dataclass(frozen=True)
class StructuredRecord:
    """A mould-slotted record ready for export.

    ``slots`` maps roles to field values; ``overflow`` keeps entity-bearing
    values that had no legal slot so that nothing recognized is ever dropped.
    """

    act_id: str
    mould: str
    slots: dict[str, FieldValue] = field(default_factory=dict)
    overflow: tuple[FieldValue, ...] = ()
    status: ValidityStatus = ValidityStatus("pending")

    def __init__(self, act_id, mould, slots=None, overflow=(), status=ValidityStatus("pending")) -> None:
        object.__setattr__(self, "act_id", act_id)
        object.__setattr__(self, "mould", mould)
        object.__setattr__(self, "slots", dict(slots or {}))
        object.__setattr__(self, "overflow", tuple(overflow))
        object.__setattr__(self, "status", status)

    def with_status(self, status: ValidityStatus) -> "StructuredRecord":
        return StructuredRecord(self.act_id, self.mould, self.slots, self.overflow, status)

    def filled(self, role: str) -> bool:
        fv = self.slots.get(role)
        return fv is not None and bool(fv.raw)


def fold_text(s: str) -> str:
    """Lowercase + strip combining marks (NFD); the lexicon lookup form."""
    decomposed = unicodedata.normalize("NFD", s.lower())
    return "".join(c for c in decomposed if not unicodedata.combining(c))
