"""Keyword-ratio act typing.

Each act type owns a small set of discriminative keywords; an act's score for
a type is the fraction of that type's keywords present in the text. The table
ships with the French defaults; English tables can be dropped in as config.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .model import ACT_TYPES, Act, fold_text

# "né"/"née" collide with the word "ne" once diacritics fold, so those two
# keywords match diacritic-sensitively; every other keyword folds.
DIACRITIC_SENSITIVE = frozenset({"né", "née"})


def _match_key(word: str) -> str:
    lowered = word.lower()
    return lowered if lowered in DIACRITIC_SENSITIVE else fold_text(word)


@dataclass(frozen=True)
class KeywordTable:
    keywords: dict[str, frozenset[str]]  # act type -> original keywords

    def __post_init__(self):
        seen: dict[str, str] = {}
        for act_type, words in sorted(self.keywords.items()):
            if not words:
                raise ValueError(f"empty keyword set for {act_type!r}")
            for w in sorted(words):
                key = _match_key(w)
                if key in seen and seen[key] != act_type:
                    raise ValueError(f"keyword {w!r} appears under both "
                                     f"{seen[key]!r} and {act_type!r}")
                seen[key] = act_type

    def match_sets(self) -> dict[str, frozenset[str]]:
        return {t: frozenset(_match_key(w) for w in ws) for t, ws in self.keywords.items()}

    @classmethod
    def shipped_default(cls) -> "KeywordTable":
        table = {}
        for act_type in ("birth", "marriage", "death"):
            text = resources.files("parishrec").joinpath(f"data/keywords/{act_type}.txt").read_text("utf-8")
            table[act_type] = frozenset(w.strip() for w in text.splitlines() if w.strip())
        return cls(table)

    @classmethod
    def load(cls, paths: dict[str, str]) -> "KeywordTable":
        """One plain-text file per act type, one keyword per line."""
        table = {}
        for act_type, path in paths.items():
            with open(path, encoding="utf-8") as fh:
                table[act_type] = frozenset(w.strip() for w in fh if w.strip())
        return cls(table)

    def default_min_score(self) -> float:
        return 1.0 / max(len(ws) for ws in self.keywords.values())


def _text_tokens(text: str) -> tuple[set[str], set[str]]:
    """(folded tokens, lowercased-but-accented tokens) with punctuation stripped."""
    folded, accented = set(), set()
    for raw in text.split():
        tok = raw.strip(".,;:!?()[]'\"«»")
        if not tok:
            continue
        accented.add(tok.lower())
        folded.add(fold_text(tok))
    return folded, accented


def classify_text(text: str, table: KeywordTable,
                  min_score: float | None = None) -> tuple[str, dict[str, float]]:
    """(act type, per-type scores); undefined when no unique type clears the floor."""
    if min_score is None:
        min_score = table.default_min_score()
    folded, accented = _text_tokens(text)
    scores = {}
    for act_type, words in table.keywords.items():
        hits = 0
        for w in words:
            key = _match_key(w)
            present = key in accented if w.lower() in DIACRITIC_SENSITIVE else key in folded
            hits += present
        scores[act_type] = hits / len(words)
    top = max(scores.values())
    winners = [t for t, s in scores.items() if s == top]
    if len(winners) == 1 and top >= min_score:
        return winners[0], scores
    return "undefined", scores


def classify_act(act: Act, table: KeywordTable,
                 min_score: float | None = None) -> tuple[str, dict[str, float]]:
    return classify_text(act.full_text, table, min_score)


def merged_type(fragment_types) -> str:
    """Type of a merged act: the first fragment's type, falling back in order."""
    types = list(fragment_types)
    if not types:
        raise ValueError("empty fragment type list")
    for t in types:
        if t not in ACT_TYPES:
            raise ValueError(f"unknown act type {t!r}")
        if t != "undefined":
            return t
    return "undefined"
