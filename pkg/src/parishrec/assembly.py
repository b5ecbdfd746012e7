"""Act assembly: date-line tagging, irregular-layout rejection, fragment merging.

Fragments arrive per page tagged start/center/end/full. Merging linearizes
them in reading order and runs bracket matching: full is atomic, start opens,
center continues the innermost open act, end closes it. Anything structurally
unmatched survives as its own act flagged "orphan" so no fragment is lost.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import dates
from .model import (Act, ActFragment, RecognizedPage, TextLine,
                    derive_full_text, fold_text)

DEFAULT_DATE_WORD_COUNT = 3


@dataclass(frozen=True)
class DateLexicon:
    """Folded word sets consulted when counting date-ish tokens on a line."""

    number_words: frozenset[str]
    month_words: frozenset[str]

    @classmethod
    def default(cls) -> "DateLexicon":
        grammar = dates.NumeralGrammar.bilingual()
        return cls(
            number_words=frozenset(grammar.atoms),
            month_words=frozenset(dates.month_lexicon("both")),
        )

    @classmethod
    def load(cls, numbers_path, months_path) -> "DateLexicon":
        def read(path):
            with open(path, encoding="utf-8") as fh:
                return frozenset(fold_text(w.strip()) for w in fh if w.strip() and not w.startswith("#"))
        return cls(read(numbers_path), read(months_path))


def is_date_line(line: "str | object", lex: DateLexicon | None = None,
                 k: int = DEFAULT_DATE_WORD_COUNT) -> bool:
    """True when at least k tokens of the line are numbers or months."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if lex is None:
        lex = DateLexicon.default()
    text = line if isinstance(line, str) else line.text
    hits = 0
    for raw in text.split():
        tok = fold_text(raw.strip(".,;:!?()[]'\"«»"))
        if not tok:
            continue
        if tok.isdigit() or tok in lex.number_words or tok in lex.month_words:
            hits += 1
            if hits >= k:
                return True
    return False


def tag_date_lines(page: RecognizedPage, lex: DateLexicon | None = None,
                   k: int = DEFAULT_DATE_WORD_COUNT) -> RecognizedPage:
    """Copy of the page with is_date_line filled in wherever it was unset."""
    if lex is None:
        lex = DateLexicon.default()
    if all(ln.is_date_line is not None for ln in page.lines):
        return page
    lines = [ln if ln.is_date_line is not None
             else TextLine(ln.id, ln.polygon, ln.text, ln.confidence,
                           is_date_line(ln.text, lex, k), ln.zone_label)
             for ln in page.lines]
    return RecognizedPage(page.page_id, page.register_id, page.width, page.height,
                          lines, page.entities, page.orientation, page.page_class)


@dataclass(frozen=True)
class LayoutGate:
    min_lines: int = 2
    max_lines: int = 80
    min_area_ratio: float = 0.02
    max_area_ratio: float = 0.98

    def __post_init__(self):
        if self.min_lines >= self.max_lines or self.min_area_ratio >= self.max_area_ratio:
            raise ValueError("gate bounds must satisfy min < max")


@dataclass(frozen=True)
class GateDecision:
    keep: bool
    violated: str = ""


def gate_fragment(frag: ActFragment, page: RecognizedPage,
                  gate: LayoutGate | None = None) -> GateDecision:
    """Reject fragments whose line count or page-area share is out of bounds."""
    if gate is None:
        gate = LayoutGate()
    n = len(frag.line_ids)
    if n < gate.min_lines:
        return GateDecision(False, f"line count {n} < min_lines {gate.min_lines}")
    if n > gate.max_lines:
        return GateDecision(False, f"line count {n} > max_lines {gate.max_lines}")
    x0, y0, x1, y1 = frag.polygon.bbox()
    ratio = ((x1 - x0) * (y1 - y0)) / (page.width * page.height)
    if ratio < gate.min_area_ratio:
        return GateDecision(False, f"area ratio {ratio:.4f} < min {gate.min_area_ratio}")
    if ratio > gate.max_area_ratio:
        return GateDecision(False, f"area ratio {ratio:.4f} > max {gate.max_area_ratio}")
    return GateDecision(True)


def _linearize(pages: Sequence[RecognizedPage],
               fragments: Sequence[ActFragment]) -> list[ActFragment]:
    order = {page.page_id: i for i, page in enumerate(pages)}
    unknown = [f.fragment_id for f in fragments if f.page_id not in order]
    if unknown:
        raise ValueError(f"fragments reference unknown pages: {unknown}")
    return sorted(fragments, key=lambda f: (order[f.page_id], f.sequence_index))


def merge_fragments(pages: Sequence[RecognizedPage],
                    fragments: Sequence[ActFragment]) -> list[Act]:
    """Partition fragments into acts by bracket matching in reading order.

    Output acts are ordered by their first fragment's position; every input
    fragment lands in exactly one act.
    """
    pages_by_id = {p.page_id: p for p in pages}
    linear = _linearize(pages, fragments)

    # each pending group is (position of first fragment, fragments so far)
    stack: list[tuple[int, list[ActFragment]]] = []
    groups: list[tuple[int, list[ActFragment], bool]] = []  # (pos, frags, orphan)

    for pos, frag in enumerate(linear):
        if frag.act_class == "full":
            groups.append((pos, [frag], False))
        elif frag.act_class == "start":
            stack.append((pos, [frag]))
        elif frag.act_class == "center":
            if stack:
                stack[-1][1].append(frag)
            else:
                groups.append((pos, [frag], True))
        elif frag.act_class == "end":
            if stack:
                start_pos, frags = stack.pop()
                frags.append(frag)
                groups.append((start_pos, frags, False))
            else:
                groups.append((pos, [frag], True))
        else:
            raise ValueError(f"unknown act class {frag.act_class!r}")

    # unterminated starts (and their centers) survive as orphan acts
    for start_pos, frags in stack:
        groups.append((start_pos, frags, True))

    groups.sort(key=lambda g: g[0])
    acts = []
    for idx, (_, frags, orphan) in enumerate(groups):
        entities = []
        for frag in frags:
            page = pages_by_id[frag.page_id]
            for line_id in frag.line_ids:
                on_line = [e for e in page.entities if e.line_id == line_id]
                entities.extend(sorted(on_line, key=lambda e: e.char_start))
        acts.append(Act(
            act_id=f"act-{idx:04d}",
            fragments=frags,
            full_text=derive_full_text(frags, pages_by_id),
            entities=entities,
            flags=("orphan",) if orphan else (),
        ))
    return acts
