"""Shared fixtures: page generators and small document builders."""
from __future__ import annotations

import random

import pytest

from parishrec.model import Act, ActFragment, Polygon, RecognizedPage, TextLine
from parishrec.names import NameThesaurus, VisualCostTable

PAGE_W, PAGE_H = 1200, 1800


def rect(x0, y0, x1, y1) -> Polygon:
    return Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def act_page(rng: random.Random, page_id: str, n: int | None = None,
             register_id: str = "r") -> RecognizedPage:
    """Act-like page: evenly spaced full-width lines, canonical count 20."""
    if n is None:
        n = 20 if rng.random() < 0.8 else rng.choice([18, 19, 21, 22])
    top, bottom = 120, PAGE_H - 120
    step = (bottom - top) / n
    lines = []
    for i in range(n):
        y = top + i * step
        x0 = 100 + rng.uniform(-8, 8)
        x1 = PAGE_W - 100 + rng.uniform(-8, 8)
        lines.append(TextLine(f"{page_id}-l{i}", rect(x0, y, x1, y + step * 0.62)))
    return RecognizedPage(page_id, register_id, PAGE_W, PAGE_H, lines)


def blank_page(rng: random.Random, page_id: str) -> RecognizedPage:
    return RecognizedPage(page_id, "r", PAGE_W, PAGE_H, [])


def index_page(rng: random.Random, page_id: str) -> RecognizedPage:
    lines = []
    for i in range(rng.randint(3, 8)):
        y = 150 + i * 190
        x1 = 100 + rng.uniform(150, 300)
        lines.append(TextLine(f"{page_id}-l{i}", rect(100, y, x1, y + 36)))
    return RecognizedPage(page_id, "r", PAGE_W, PAGE_H, lines)


def cover_page(rng: random.Random, page_id: str) -> RecognizedPage:
    lines = []
    for i in range(rng.randint(1, 3)):
        y = 400 + i * 300
        lines.append(TextLine(f"{page_id}-l{i}", rect(300, y, 900, y + 90)))
    return RecognizedPage(page_id, "r", PAGE_W, PAGE_H, lines)


def no_act_page(rng: random.Random, page_id: str, i: int) -> RecognizedPage:
    return (blank_page, index_page, cover_page)[i % 3](rng, page_id)


def text_act(text: str, act_id: str = "a1", act_type: str = "undefined",
             entities=()) -> Act:
    frag = ActFragment("f1", "p1", "full", rect(0, 0, 100, 100), ("l1",), 0)
    return Act(act_id, (frag,), act_type, text, entities)


def page_with_lines(texts, page_id: str = "p1", register_id: str = "r1",
                    entities=()) -> RecognizedPage:
    lines = [TextLine(f"l{i + 1}", rect(100, 100 + 60 * i, 1100, 140 + 60 * i), t)
             for i, t in enumerate(texts)]
    return RecognizedPage(page_id, register_id, PAGE_W, PAGE_H, lines, entities)


@pytest.fixture(scope="session")
def thesaurus() -> NameThesaurus:
    return NameThesaurus.shipped_sample()


@pytest.fixture(scope="session")
def costs() -> VisualCostTable:
    return VisualCostTable.shipped_default()
