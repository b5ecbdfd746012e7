"""Synthetic register corpus for tests, demos, and the shipped sample.

The generated acts are caricatures, not facsimiles: enough period vocabulary
to exercise every pipeline stage (keywords, written-out dates, entity order,
special cases, fusions) with fully deterministic output for a given seed.
"""
from __future__ import annotations

import random
from pathlib import Path

from . import corpus_io, dates
from .model import ActFragment, Entity, Polygon, RecognizedPage, TextLine

PAGE_W, PAGE_H = 1200, 1800
MARGIN_X, TOP_Y = 100, 120
LINE_H, LINE_GAP = 40, 24

FIRST_M = ["Jean", "Joseph", "Pierre", "Louis", "François", "Georges", "Henri",
           "Charles", "Napoléon", "Étienne", "Alfred", "Olivier"]
FIRST_F = ["Marie", "Anne", "Louise", "Marguerite", "Joséphine", "Émélie",
           "Rosalie", "Adèle", "Célina", "Philomène"]
LAST = ["Tremblay", "Gagnon", "Bouchard", "Simard", "Fortin", "Gauthier",
        "Lavoie", "Morin", "Girard", "Pelletier", "Bergeron", "Caron"]
OCCUPATIONS = ["cultivateur", "forgeron", "journalier", "menuisier", "notaire",
               "navigateur", "charpentier"]
PLACES = ["cette paroisse", "Saint-Fulgence", "Chicoutimi", "La Malbaie",
          "Baie-Saint-Paul", "Les Éboulements"]
MONTH_WORDS = ["janvier", "février", "mars", "avril", "mai", "juin", "juillet",
               "août", "septembre", "octobre", "novembre", "décembre"]


class _LineBuilder:
    def __init__(self):
        self.text = ""
        self.entities = []  # (tag, start, end)

    def add(self, piece: str):
        if self.text and not self.text.endswith(" "):
            self.text += " "
        self.text += piece
        return self

    def add_entity(self, piece: str, tag: str):
        if self.text and not self.text.endswith(" "):
            self.text += " "
        start = len(self.text)
        self.text += piece
        self.entities.append((tag, start, len(self.text)))
        return self


def _date_words(rng: random.Random) -> str:
    day = rng.randint(1, 28)
    month = MONTH_WORDS[rng.randint(0, 11)]
    year = rng.randint(1850, 1916)
    return f"{dates.generate_number(day)} {month} {dates.generate_number(year)}"


def _person(rng: random.Random, female: bool | None = None) -> tuple[str, str]:
    pool = FIRST_F if female else FIRST_M if female is not None else \
        (FIRST_M + FIRST_F)
    return rng.choice(pool), rng.choice(LAST)


def _birth_lines(rng: random.Random, variant: str = "valid") -> list[_LineBuilder]:
    child = rng.choice(FIRST_M + FIRST_F)
    second = rng.choice(FIRST_F)
    f_first, f_last = _person(rng, female=False)
    m_first, m_last = _person(rng, female=True)
    gf_first, gf_last = _person(rng, female=False)
    gm_first, gm_last = _person(rng, female=True)
    lines = [
        _LineBuilder().add("Le").add_entity(_date_words(rng), "DATE").add("de"),
        _LineBuilder().add("nous soussigné avons baptisé")
                      .add_entity(f"{child} {second}", "PER"),
    ]
    third = _LineBuilder().add("fils de").add_entity(f"{f_first} {f_last}", "PER")
    third.add_entity(rng.choice(OCCUPATIONS), "OCC")
    if variant != "missing_mother":
        third.add("et de").add_entity(f"{m_first} {m_last}", "PER")
        third.add("de").add_entity(rng.choice(PLACES), "LOC")
    if variant == "unknown_father":
        third = _LineBuilder().add("né de père inconnu et de") \
            .add_entity(f"{m_first} {m_last}", "PER")
        lines.append(third)
        return lines
    lines.append(third)
    if variant == "missing_mother":
        # stop before the godparents: later PER entities would slide into the
        # mother slot under positional slotting
        return lines
    lines.append(_LineBuilder().add("parrain").add_entity(f"{gf_first} {gf_last}", "PER")
                 .add("marraine").add_entity(f"{gm_first} {gm_last}", "PER"))
    if variant == "fusion":
        lines.append(_LineBuilder().add("Le").add_entity(_date_words(rng), "DATE")
                     .add("nous avons baptisé")
                     .add_entity(rng.choice(FIRST_M), "PER"))
    return lines


def _death_lines(rng: random.Random, married: bool) -> list[_LineBuilder]:
    s_first, s_last = _person(rng)
    lines = [
        _LineBuilder().add("Le").add_entity(_date_words(rng), "DATE"),
        _LineBuilder().add("nous avons inhumé le corps de")
                      .add_entity(f"{s_first} {s_last}", "PER"),
    ]
    if married:
        sp_first, sp_last = _person(rng)
        lines.append(_LineBuilder().add("épouse de")
                     .add_entity(f"{sp_first} {sp_last}", "PER")
                     .add("décédé").add("ce jour"))
    else:
        f_first, f_last = _person(rng, female=False)
        m_first, m_last = _person(rng, female=True)
        lines.append(_LineBuilder().add("fils de")
                     .add_entity(f"{f_first} {f_last}", "PER")
                     .add("et de").add_entity(f"{m_first} {m_last}", "PER"))
        lines.append(_LineBuilder().add("décédé âgé de trois semaines"))
    return lines


def _marriage_lines(rng: random.Random) -> list[_LineBuilder]:
    a_first, a_last = _person(rng, female=False)
    b_first, b_last = _person(rng, female=True)
    return [
        _LineBuilder().add("Le").add_entity(_date_words(rng), "DATE"),
        _LineBuilder().add("après la publication des bans sans opposition ni empêchement"),
        _LineBuilder().add("entre").add_entity(f"{a_first} {a_last}", "PER")
                      .add("et").add_entity(f"{b_first} {b_last}", "PER")
                      .add("avec le consentement de leurs parents"),
    ]


def _undefined_lines(rng: random.Random) -> list[_LineBuilder]:
    return [
        _LineBuilder().add("visite pastorale de monseigneur"),
        _LineBuilder().add("rien à signaler cette semaine"),
    ]


def act_lines(act_type: str, rng: random.Random, variant: str = "valid"):
    if act_type == "birth":
        return _birth_lines(rng, variant)
    if act_type == "death":
        return _death_lines(rng, married=rng.random() < 0.5)
    if act_type == "death_married":
        return _death_lines(rng, married=True)
    if act_type == "death_single":
        return _death_lines(rng, married=False)
    if act_type == "marriage":
        return _marriage_lines(rng)
    return _undefined_lines(rng)


class _RegisterBuilder:
    def __init__(self, register_id: str):
        self.register_id = register_id
        self.pages: list[RecognizedPage] = []
        self.fragments: list[ActFragment] = []
        self._page_lines: list[TextLine] = []
        self._page_entities: list[Entity] = []
        self._page_seq = 0
        self._frag_seq = 0
        self._line_seq = 0
        self._y = TOP_Y

    def _room_for(self, n_lines: int) -> bool:
        return self._y + n_lines * (LINE_H + LINE_GAP) < PAGE_H - TOP_Y

    def flush_page(self, page_class: str = "unset") -> None:
        page_id = f"{self.register_id}-p{self._page_seq:03d}"
        self.pages.append(RecognizedPage(
            page_id, self.register_id, PAGE_W, PAGE_H,
            self._page_lines, self._page_entities, "portrait", page_class))
        self._page_seq += 1
        self._page_lines = []
        self._page_entities = []
        self._frag_seq = 0
        self._y = TOP_Y

    def blank_page(self) -> None:
        if self._page_lines:
            self.flush_page()
        self.flush_page()

    def index_page(self, rng: random.Random) -> None:
        """A narrow column of short lines: plausible index, implausible act."""
        if self._page_lines:
            self.flush_page()
        y = TOP_Y
        for i in range(rng.randint(4, 8)):
            self._add_line(f"{rng.choice(LAST)} folio {i + 1}", [],
                           x0=MARGIN_X, x1=MARGIN_X + 220, y=y)
            y += 3 * (LINE_H + LINE_GAP)
        self._y = y
        self.flush_page()

    def _add_line(self, text, entities, x0, x1, y) -> str:
        line_id = f"{self.register_id}-l{self._line_seq:04d}"
        self._line_seq += 1
        poly = Polygon([(x0, y), (x1, y), (x1, y + LINE_H), (x0, y + LINE_H)])
        self._page_lines.append(TextLine(line_id, poly, text))
        for tag, start, end in entities:
            self._page_entities.append(Entity(tag, line_id, start, end,
                                              text[start:end]))
        return line_id

    def add_act(self, builders, act_class_pair=None) -> None:
        """Lay the act's lines on the current page; optionally split in two."""
        if act_class_pair is None:
            if not self._room_for(len(builders)):
                self.flush_page()
            self._emit_fragment(builders, "full")
        else:
            head, tail = builders[:len(builders) // 2] or builders[:1], \
                builders[len(builders) // 2:]
            if not self._room_for(len(head)):
                self.flush_page()
            self._emit_fragment(head, "start")
            self.flush_page()
            self._emit_fragment(tail, "end")

    def _emit_fragment(self, builders, act_class: str) -> None:
        line_ids = []
        y0 = self._y
        for b in builders:
            line_ids.append(self._add_line(b.text, b.entities,
                                           MARGIN_X, PAGE_W - MARGIN_X, self._y))
            self._y += LINE_H + LINE_GAP
        poly = Polygon([(MARGIN_X - 20, y0 - 10), (PAGE_W - MARGIN_X + 20, y0 - 10),
                        (PAGE_W - MARGIN_X + 20, self._y - LINE_GAP + 10),
                        (MARGIN_X - 20, self._y - LINE_GAP + 10)])
        page_id = f"{self.register_id}-p{self._page_seq:03d}"
        self.fragments.append(ActFragment(
            f"{page_id}-a{self._frag_seq}", page_id, act_class, poly,
            line_ids, self._frag_seq))
        self._frag_seq += 1

    def build(self, parish: str) -> corpus_io.RegisterDocument:
        if self._page_lines:
            self.flush_page()
        return corpus_io.RegisterDocument(self.register_id, self.pages,
                                          self.fragments, parish=parish,
                                          language_hint="fr")


def make_register(register_id: str, rng: random.Random, n_acts: int = 6,
                  with_split: bool = True, with_blank: bool = True,
                  with_index: bool = True) -> corpus_io.RegisterDocument:
    builder = _RegisterBuilder(register_id)
    menu = ["birth", "birth", "death", "marriage", "birth", "death"]
    variants = {0: "missing_mother", 4: "fusion"}
    for i in range(n_acts):
        act_type = menu[i % len(menu)]
        variant = variants.get(i, "valid")
        split = with_split and i == 1
        builder.add_act(act_lines(act_type, rng, variant),
                        act_class_pair=("start", "end") if split else None)
    if rng.random() < 0.5:
        builder.add_act(act_lines("undefined", rng))
    if with_blank:
        builder.blank_page()
    if with_index:
        builder.index_page(rng)
    return builder.build(parish=f"Paroisse {rng.choice(PLACES)}")


def make_corpus(n_registers: int = 10, seed: int = 7,
                acts_per_register: int = 6) -> list[corpus_io.RegisterDocument]:
    rng = random.Random(seed)
    return [make_register(f"R{i:03d}", rng, acts_per_register)
            for i in range(n_registers)]


def make_typed_corpus(counts: dict[str, int], seed: int = 7,
                      acts_per_register: int = 50) -> list[corpus_io.RegisterDocument]:
    """A corpus with an exact number of acts per type (for distribution checks)."""
    rng = random.Random(seed)
    schedule = [t for t in ("birth", "death", "marriage", "undefined")
                for _ in range(counts.get(t, 0))]
    rng.shuffle(schedule)
    docs = []
    for r, base in enumerate(range(0, len(schedule), acts_per_register)):
        builder = _RegisterBuilder(f"T{r:03d}")
        for act_type in schedule[base:base + acts_per_register]:
            builder.add_act(act_lines(act_type, rng))
        docs.append(builder.build(parish="Paroisse test"))
    return docs


def write_corpus(out_dir, docs, format: str = "xml") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    suffix = "jsonl" if format == "jsonl" else "xml"
    paths = []
    for doc in docs:
        path = out / f"{doc.register_id}.{suffix}"
        path.write_bytes(corpus_io.write_register(doc, format))
        paths.append(path)
    return paths


def main() -> None:
    """Regenerate the shipped sample corpus (10 registers, seed 7)."""
    target = Path(__file__).parent / "data" / "sample_corpus"
    for path in write_corpus(target, make_corpus()):
        print(path)


if __name__ == "__main__":
    main()
