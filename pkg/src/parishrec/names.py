"""Name standardization: first/last splitting and recognition-noise correction.

Splitting uses a thesaurus of names with first/last usage counts; correction
builds a Levenshtein candidate pool from the same thesaurus and re-scores it
with a weighted edit distance whose substitution costs reflect how easily
handwritten character groups are confused (rn/m, cl/d, ...). The re-scoring
is a best-first search over edit states and returns the exact minimum cost.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from importlib import resources

from .model import PersonName, fold_text

DEFAULT_RADIUS = 2
DEFAULT_ACCEPT_THRESHOLD = 1.0


@dataclass(frozen=True)
class ThesaurusEntry:
    name: str
    count_first: int
    count_last: int
    variant_class: str = ""

    @property
    def p_first(self) -> float | None:
        total = self.count_first + self.count_last
        return None if total == 0 else self.count_first / total


class NameThesaurus:
    """Name -> (usage counts, variant class) lookup, folded-key indexed."""

    def __init__(self, entries):
        self.entries: dict[str, ThesaurusEntry] = {}
        self._classes: dict[str, list[str]] = {}
        for e in entries:
            self.entries[fold_text(e.name)] = e
            if e.variant_class:
                self._classes.setdefault(e.variant_class, []).append(e.name)
        for members in self._classes.values():
            members.sort(key=lambda name: (fold_text(name), name))

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, name: str) -> ThesaurusEntry | None:
        return self.entries.get(fold_text(name))

    def __contains__(self, name: str) -> bool:
        return fold_text(name) in self.entries

    def p_first(self, name: str) -> float | None:
        entry = self.lookup(name)
        return None if entry is None else entry.p_first

    def names(self):
        return [e.name for e in self.entries.values()]

    def variant_class_members(self, name: str) -> list[str]:
        entry = self.lookup(name)
        if entry is None or not entry.variant_class:
            return []
        return list(self._classes[entry.variant_class])

    @classmethod
    def load(cls, path) -> "NameThesaurus":
        """TSV: name, count_first, count_last, variant_class_id (may be empty)."""
        entries = []
        with open(path, encoding="utf-8") as fh:
            entries = cls._parse(fh)
        return cls(entries)

    @classmethod
    def shipped_sample(cls) -> "NameThesaurus":
        """The bundled non-authoritative sample built from public name lists."""
        text = resources.files("parishrec").joinpath("data/thesaurus_sample.tsv").read_text("utf-8")
        return cls(cls._parse(text.splitlines()))

    @staticmethod
    def _parse(lines):
        entries = []
        for raw in lines:
            raw = raw.rstrip("\n")
            if not raw or raw.startswith("#"):
                continue
            parts = raw.split("\t")
            name, cf, cl = parts[0], int(parts[1]), int(parts[2])
            if cf < 0 or cl < 0:
                raise ValueError(f"negative count for {name!r}")
            variant = parts[3] if len(parts) > 3 else ""
            entries.append(ThesaurusEntry(name, cf, cl, variant))
        return entries


def levenshtein(a: str, b: str, limit: int | None = None) -> int:
    """Unit-cost edit distance; stops early at limit+1 when a limit is given."""
    if a == b:
        return 0
    if len(a) > len(b):
        a, b = b, a
    if limit is not None and len(b) - len(a) > limit:
        return limit + 1
    prev = list(range(len(a) + 1))
    for j, cb in enumerate(b, start=1):
        cur = [j]
        for i, ca in enumerate(a, start=1):
            cur.append(min(prev[i] + 1, cur[i - 1] + 1, prev[i - 1] + (ca != cb)))
        if limit is not None and min(cur) > limit:
            return limit + 1
        prev = cur
    return prev[-1]


def candidate_pool(name: str, thesaurus: NameThesaurus, radius: int = DEFAULT_RADIUS) -> set[str]:
    """Thesaurus names within `radius` unit edits of `name` (folded comparison)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    folded = fold_text(name)
    pool = set()
    for key, entry in thesaurus.entries.items():
        if abs(len(key) - len(folded)) > radius:
            continue
        if levenshtein(folded, key, limit=radius) <= radius:
            pool.add(entry.name)
    return pool


class VisualCostTable:
    """Substitution costs for visually confusable character groups.

    Pairs are symmetric with cost in [0,1]; any unlisted substitution costs 1
    (0 for identical characters) and insert/delete cost 1. Multi-character
    groups (rn -> m) apply as one operation at their listed cost.
    """

    INDEL = 1.0

    def __init__(self, pairs: dict[tuple[str, str], float] | None = None):
        self.pairs: dict[tuple[str, str], float] = {}
        for (a, b), cost in (pairs or {}).items():
            if not 0.0 <= cost <= 1.0:
                raise ValueError(f"cost outside [0,1] for pair {(a, b)!r}")
            self.pairs[(a, b)] = cost
            self.pairs[(b, a)] = cost
        self.max_source_len = max((len(a) for a, _ in self.pairs), default=1)
        # cheapest way to change string length by one unit; keeps the search
        # heuristic admissible even when a group pair shrinks text cheaply
        unit = self.INDEL
        for (a, b), cost in self.pairs.items():
            gap = abs(len(a) - len(b))
            if gap:
                unit = min(unit, cost / gap)
        self.min_length_unit_cost = unit

    def single_sub(self, a: str, b: str) -> float:
        if a == b:
            return 0.0
        return self.pairs.get((a, b), 1.0)

    @classmethod
    def load(cls, path) -> "VisualCostTable":
        with open(path, encoding="utf-8") as fh:
            return cls(cls._parse(fh))

    @classmethod
    def shipped_default(cls) -> "VisualCostTable":
        text = resources.files("parishrec").joinpath("data/visual_costs.tsv").read_text("utf-8")
        return cls(cls._parse(text.splitlines()))

    @staticmethod
    def _parse(lines) -> dict[tuple[str, str], float]:
        pairs = {}
        for raw in lines:
            raw = raw.rstrip("\n")
            if not raw or raw.startswith("#"):
                continue
            a, b, cost = raw.split("\t")
            pairs[(a, b)] = float(cost)
        return pairs


def visual_distance(source: str, target: str, costs: VisualCostTable) -> float:
    """Exact minimal weighted edit cost from source to target.

    Best-first search over (chars consumed from source, chars produced of
    target); the remaining-length-difference heuristic is admissible, so the
    first time the goal state is popped its cost is the true minimum.
    """
    src = source.lower()
    tgt = target.lower()
    n, m = len(src), len(tgt)
    k = costs.min_length_unit_cost

    def h(i: int, j: int) -> float:
        return abs((n - i) - (m - j)) * k

    best: dict[tuple[int, int], float] = {(0, 0): 0.0}
    heap: list[tuple[float, int, int]] = [(h(0, 0), 0, 0)]
    while heap:
        f, i, j = heapq.heappop(heap)
        g = best.get((i, j))
        if g is None or f > g + h(i, j) + 1e-12:
            continue
        if i == n and j == m:
            return g

        def push(ni: int, nj: int, cost: float) -> None:
            ng = g + cost
            if ng < best.get((ni, nj), float("inf")) - 1e-15:
                best[(ni, nj)] = ng
                heapq.heappush(heap, (ng + h(ni, nj), ni, nj))

        if i < n and j < m:
            push(i + 1, j + 1, costs.single_sub(src[i], tgt[j]))
        if i < n:
            push(i + 1, j, costs.INDEL)
        if j < m:
            push(i, j + 1, costs.INDEL)
        for (a, b), cost in costs.pairs.items():
            if len(a) == 1 and len(b) == 1:
                continue  # covered by single_sub
            if src.startswith(a, i) and tgt.startswith(b, j):
                push(i + len(a), j + len(b), cost)
    raise RuntimeError("unreachable: goal state not reached")


@dataclass(frozen=True)
class CorrectionResult:
    best: tuple[tuple[str, float], ...]
    accepted: bool
    radius_used: int

    @property
    def ambiguous(self) -> bool:
        if len(self.best) < 2:
            return False
        return abs(self.best[0][1] - self.best[1][1]) < 1e-12


def correct_name(name: str, pool, costs: VisualCostTable,
                 accept_threshold: float = DEFAULT_ACCEPT_THRESHOLD,
                 radius_used: int = DEFAULT_RADIUS) -> CorrectionResult:
    """Score every pool candidate by visual edit cost, cheapest first.

    Ties at the minimum are all retained; downstream treats such results as
    ambiguous. An empty pool is a rejection, not an error.
    """
    scored = sorted(
        ((cand, visual_distance(name, cand, costs)) for cand in pool),
        key=lambda pair: (pair[1], pair[0]),
    )
    accepted = bool(scored) and scored[0][1] <= accept_threshold
    return CorrectionResult(tuple(scored), accepted, radius_used)


def canonicalize_variant(name: str, thesaurus: NameThesaurus) -> str:
    """Representative (lexicographically smallest) member of the variant class."""
    members = thesaurus.variant_class_members(name)
    return members[0] if members else name


def _rejoin_linebreaks(raw: str) -> str:
    # a hyphen at end of line splits one name in two; plain newlines separate words
    return raw.replace("-\n", "").replace("\n", " ")


def split_name(raw: str, thesaurus: NameThesaurus,
               act_type: str | None = None, role: str | None = None) -> PersonName:
    """Split a raw PER surface into first and last names.

    The first token is always a first name. Later tokens follow the thesaurus
    first-name probability (unknown names default to last). Act-type priors
    override: the subject of a birth carries only first names, the subject of
    a death ends with exactly one last name.
    """
    if not raw:
        raise ValueError("empty name")
    tokens = [t for t in _rejoin_linebreaks(raw).split(" ") if t]
    if act_type == "birth" and role == "subject_name":
        return PersonName(first_names=tokens)
    if act_type in ("death", "death_married", "death_single") and role == "subject_name" and len(tokens) >= 2:
        return PersonName(first_names=tokens[:-1], last_names=tokens[-1:])
    first = [tokens[0]]
    last = []
    for tok in tokens[1:]:
        p = thesaurus.p_first(tok)
        if p is not None and p >= 0.5:
            first.append(tok)
        else:
            last.append(tok)
    return PersonName(first_names=first, last_names=last)


def standardize_person(raw: str, thesaurus: NameThesaurus, costs: VisualCostTable,
                       act_type: str | None = None, role: str | None = None,
                       radius: int = DEFAULT_RADIUS,
                       accept_threshold: float = DEFAULT_ACCEPT_THRESHOLD,
                       correct_unknown: bool = True) -> PersonName:
    """Full treatment of one PER surface: split, then correct unknown tokens."""
    name = split_name(raw, thesaurus, act_type, role)
    if not correct_unknown:
        return name
    corrected = False
    candidates: list[tuple[str, float]] = []

    def fix(tokens):
        nonlocal corrected
        out = []
        for tok in tokens:
            if tok in thesaurus:
                out.append(tok)
                continue
            pool = candidate_pool(tok, thesaurus, radius)
            result = correct_name(tok, pool, costs, accept_threshold, radius)
            if result.accepted and not result.ambiguous:
                out.append(result.best[0][0])
                corrected = True
                candidates.extend(result.best[:3])
            else:
                out.append(tok)
                if result.best:
                    candidates.extend(result.best[:3])
        return out

    first = fix(name.first_names)
    last = fix(name.last_names)
    if not corrected:
        return name
    return PersonName(first_names=first, last_names=last,
                      corrected=True, correction_candidates=candidates)
