"""One-class page classification from line-geometry features.

Act pages are geometrically homogeneous, so the detector is trained on act
pages only and flags everything unusual (covers, indexes, blanks) as no-act.
Features never touch pixels: they are exact polygon/grid intersections, so a
model file plus a seed reproduces identical scores on any platform.

Both detectors are implemented here rather than wrapped from a library: the
model files must carry their trees/training points verbatim, fitting must be
a pure function of (data order, seed), and scoring must match the textbook
formulas that the test oracles recompute directly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import geometry
from .model import RecognizedPage

FEATURE_KINDS = ("projection", "line_density", "line_count")
EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class GridSpec:
    rows: int
    columns: int

    def __post_init__(self):
        if self.rows < 1 or self.columns < 1 or self.rows * self.columns > 10_000:
            raise ValueError(f"bad grid {self.rows}x{self.columns}")


@dataclass(frozen=True)
class FeatureVector:
    kind: str
    values: tuple[float, ...]
    spec: GridSpec

    def __post_init__(self):
        expected = self.spec.rows + self.spec.columns if self.kind == "projection" \
            else self.spec.rows * self.spec.columns
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if len(self.values) != expected:
            raise ValueError(f"{self.kind} vector must have length {expected}, "
                             f"got {len(self.values)}")
        if self.kind == "line_density" and any(not 0.0 <= v <= 1.0 for v in self.values):
            raise ValueError("density values must lie in [0,1]")
        if self.kind == "line_count" and any(v < 0 for v in self.values):
            raise ValueError("count values must be >= 0")


def split_landscape(page: RecognizedPage) -> list[RecognizedPage]:
    """A landscape double page becomes two portrait pages cut at width/2."""
    if page.orientation != "landscape":
        return [page]
    half = page.width // 2
    out = []
    for side, (x0, x1) in (("L", (0, half)), ("R", (half, page.width))):
        lines = []
        for line in page.lines:
            clipped = geometry.clip_to_rect(line.polygon.points, x0, 0, x1, page.height)
            if geometry.polygon_area(clipped) <= 0:
                continue
            shifted = [(x - x0, y) for x, y in clipped]
            lines.append(type(line)(line.id, type(line.polygon)(shifted), line.text,
                                    line.confidence, line.is_date_line, line.zone_label))
        kept = {ln.id for ln in lines}
        out.append(RecognizedPage(
            page_id=f"{page.page_id}/{side}", register_id=page.register_id,
            width=x1 - x0, height=page.height, lines=lines,
            entities=[e for e in page.entities if e.line_id in kept],
            orientation="portrait", page_class=page.page_class))
    return out


def extract_features(page: RecognizedPage, kind: str, spec: GridSpec) -> FeatureVector:
    """Grid features of a page's line polygons; cells are row-major.

    line_density: covered fraction of each cell (clamped to 1 when lines
    overlap). line_count: number of line polygons with positive overlap per
    cell. projection: row then column sums of the density grid, each half
    normalized by its own maximum.
    """
    if page.width <= 0 or page.height <= 0:
        raise ValueError(f"page {page.page_id!r} has degenerate dimensions")
    rows, cols = spec.rows, spec.columns
    cell_w = page.width / cols
    cell_h = page.height / rows
    cell_area = cell_w * cell_h

    density = np.zeros((rows, cols))
    counts = np.zeros((rows, cols))
    for line in page.lines:
        pts = line.polygon.points
        if len(pts) < 3:
            continue
        x0, y0, x1, y1 = geometry.bounding_box(pts)
        c_lo = max(0, int(x0 // cell_w))
        c_hi = min(cols - 1, int(x1 // cell_w))
        r_lo = max(0, int(y0 // cell_h))
        r_hi = min(rows - 1, int(y1 // cell_h))
        for r in range(r_lo, r_hi + 1):
            for c in range(c_lo, c_hi + 1):
                overlap = geometry.rect_overlap_area(
                    pts, c * cell_w, r * cell_h, (c + 1) * cell_w, (r + 1) * cell_h)
                if overlap > 0:
                    density[r, c] += overlap / cell_area
                    counts[r, c] += 1
    np.clip(density, 0.0, 1.0, out=density)

    if kind == "line_count":
        return FeatureVector(kind, tuple(counts.ravel().tolist()), spec)
    if kind == "line_density":
        return FeatureVector(kind, tuple(density.ravel().tolist()), spec)
    if kind == "projection":
        row_sums = density.sum(axis=1)
        col_sums = density.sum(axis=0)
        if row_sums.max() > 0:
            row_sums = row_sums / row_sums.max()
        if col_sums.max() > 0:
            col_sums = col_sums / col_sums.max()
        return FeatureVector(kind, tuple(row_sums.tolist()) + tuple(col_sums.tolist()), spec)
    raise ValueError(f"unknown feature kind {kind!r}")


# ---------------------------------------------------------------------------
# isolation forest

def average_path_length(n: int) -> float:
    """c(n): expected path length of an unsuccessful BST search over n points."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    harmonic = math.log(n - 1) + EULER_GAMMA
    return 2.0 * harmonic - 2.0 * (n - 1) / n


@dataclass(frozen=True)
class TreeNode:
    feature: int
    value: float
    left: "TreeNode | Leaf"
    right: "TreeNode | Leaf"


@dataclass(frozen=True)
class Leaf:
    depth: int
    size: int


def _build_tree(data: np.ndarray, depth: int, max_depth: int, rng: np.random.Generator):
    m = data.shape[0]
    if m <= 1 or depth >= max_depth:
        return Leaf(depth, m)
    lo = data.min(axis=0)
    hi = data.max(axis=0)
    splittable = np.flatnonzero(hi > lo)
    if splittable.size == 0:
        return Leaf(depth, m)
    feature = int(rng.choice(splittable))
    value = float(rng.uniform(lo[feature], hi[feature]))
    mask = data[:, feature] < value
    if not mask.any() or mask.all():
        # uniform draw landed on the boundary; the node is as good as a leaf
        return Leaf(depth, m)
    return TreeNode(feature, value,
                    _build_tree(data[mask], depth + 1, max_depth, rng),
                    _build_tree(data[~mask], depth + 1, max_depth, rng))


def _path_length(tree, x: np.ndarray) -> float:
    node = tree
    while isinstance(node, TreeNode):
        node = node.left if x[node.feature] < node.value else node.right
    return node.depth + average_path_length(node.size)


@dataclass(frozen=True)
class IsolationForestModel:
    trees: tuple
    subsample_size: int
    num_trees: int
    seed: int
    kind: str
    spec: GridSpec


def if_fit(features: Sequence[FeatureVector], num_trees: int = 100,
           subsample: int = 256, seed: int | None = None) -> IsolationForestModel:
    """Fit isolation trees on uniform subsamples.

    The seed is mandatory: reproducibility of page classification across the
    corpus is part of the pipeline contract, so wall-clock seeding is not
    an option.
    """
    if seed is None:
        raise ValueError("an explicit seed is required")
    if len(features) < 2:
        raise ValueError("need at least 2 training vectors")
    kinds = {f.kind for f in features}
    specs = {f.spec for f in features}
    if len(kinds) != 1 or len(specs) != 1:
        raise ValueError(f"mixed feature kinds/specs: {kinds} {specs}")
    data = np.asarray([f.values for f in features], dtype=float)
    n = min(subsample, len(features))
    if n < 2:
        raise ValueError("subsample must keep at least 2 points")
    max_depth = math.ceil(math.log2(n))
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(num_trees):
        idx = rng.choice(len(features), size=n, replace=False)
        trees.append(_build_tree(data[idx], 0, max_depth, rng))
    return IsolationForestModel(tuple(trees), n, num_trees, seed,
                                kinds.pop(), specs.pop())


def if_score(model: IsolationForestModel, x: FeatureVector) -> float:
    """Anomaly score 2^(-E[h(x)]/c(n)); always strictly inside (0,1)."""
    if x.kind != model.kind or x.spec != model.spec:
        raise ValueError(f"feature mismatch: model {model.kind}/{model.spec}, "
                         f"query {x.kind}/{x.spec}")
    vec = np.asarray(x.values, dtype=float)
    mean_path = sum(_path_length(t, vec) for t in model.trees) / len(model.trees)
    return 2.0 ** (-mean_path / average_path_length(model.subsample_size))


# ---------------------------------------------------------------------------
# local outlier factor

@dataclass(frozen=True)
class LofModel:
    training: tuple[tuple[float, ...], ...]
    k: int
    k_distances: tuple[float, ...]
    lrds: tuple[float, ...]
    kind: str
    spec: GridSpec


def _neighborhood(dists: np.ndarray, k: int, skip: int | None = None):
    """(k-distance, neighbor indices) with distance ties all included."""
    order = [i for i in np.argsort(dists, kind="stable") if i != skip]
    k_dist = float(dists[order[k - 1]])
    members = [i for i in order if dists[i] <= k_dist]
    return k_dist, members


def lof_fit(features: Sequence[FeatureVector], k: int) -> LofModel:
    if not 1 <= k < len(features):
        raise ValueError("need 1 <= k < number of training points")
    kinds = {f.kind for f in features}
    specs = {f.spec for f in features}
    if len(kinds) != 1 or len(specs) != 1:
        raise ValueError(f"mixed feature kinds/specs: {kinds} {specs}")
    data = np.asarray([f.values for f in features], dtype=float)
    m = len(data)
    # per-row distances keep identical points at exactly 0 (tie semantics)
    pairwise = np.empty((m, m))
    for i in range(m):
        pairwise[i] = np.sqrt(((data - data[i]) ** 2).sum(axis=1))
    if pairwise.max() == 0:
        raise ValueError("all training points identical: local density undefined")

    k_dists = []
    neighborhoods = []
    for i in range(m):
        k_dist, members = _neighborhood(pairwise[i], k, skip=i)
        k_dists.append(k_dist)
        neighborhoods.append(members)
    lrds = []
    for i in range(m):
        reach = [max(k_dists[j], pairwise[i, j]) for j in neighborhoods[i]]
        mean_reach = sum(reach) / len(reach)
        lrds.append(math.inf if mean_reach == 0 else 1.0 / mean_reach)
    return LofModel(tuple(map(tuple, data.tolist())), k, tuple(k_dists),
                    tuple(lrds), kinds.pop(), specs.pop())


def _lrd_ratio(num: float, den: float) -> float:
    if math.isinf(num) and math.isinf(den):
        return 1.0
    if math.isinf(den):
        return 0.0
    return num / den


def lof_score(model: LofModel, x: FeatureVector) -> float:
    """Classic LOF of a query against the training set; ~1 means inlier."""
    if x.kind != model.kind or x.spec != model.spec:
        raise ValueError(f"feature mismatch: model {model.kind}/{model.spec}, "
                         f"query {x.kind}/{x.spec}")
    data = np.asarray(model.training, dtype=float)
    vec = np.asarray(x.values, dtype=float)
    dists = np.sqrt(((data - vec) ** 2).sum(axis=1))
    k_dist, members = _neighborhood(dists, model.k)
    reach = [max(model.k_distances[j], float(dists[j])) for j in members]
    mean_reach = sum(reach) / len(reach)
    lrd_x = math.inf if mean_reach == 0 else 1.0 / mean_reach
    return sum(_lrd_ratio(model.lrds[j], lrd_x) for j in members) / len(members)


# ---------------------------------------------------------------------------
# page classification and model files

IF_THRESHOLD = 0.5
LOF_THRESHOLD = 1.5


def default_threshold(model) -> float:
    return IF_THRESHOLD if isinstance(model, IsolationForestModel) else LOF_THRESHOLD


def score_page(page: RecognizedPage, model) -> float:
    halves = split_landscape(page)
    scorer = if_score if isinstance(model, IsolationForestModel) else lof_score
    return min(scorer(model, extract_features(h, model.kind, model.spec)) for h in halves)


def classify_page(page: RecognizedPage, model, threshold: float | None = None):
    """(class, score): no_act iff the anomaly score exceeds the threshold.

    A landscape page is split in two and judged by its more act-like half.
    """
    if threshold is None:
        threshold = default_threshold(model)
    score = score_page(page, model)
    return ("no_act" if score > threshold else "act"), score


# model file schema, version 1

def model_to_json(model) -> str:
    def encode_tree(node):
        if isinstance(node, Leaf):
            return {"depth": node.depth, "size": node.size}
        return {"feature": node.feature, "value": node.value,
                "left": encode_tree(node.left), "right": encode_tree(node.right)}

    common = {"schema_version": "1", "kind": model.kind,
              "rows": model.spec.rows, "columns": model.spec.columns}
    if isinstance(model, IsolationForestModel):
        common.update({"algorithm": "isolation_forest", "seed": model.seed,
                       "num_trees": model.num_trees, "subsample_size": model.subsample_size,
                       "trees": [encode_tree(t) for t in model.trees]})
    else:
        common.update({"algorithm": "lof", "k": model.k,
                       "training": [list(p) for p in model.training],
                       "k_distances": list(model.k_distances),
                       "lrds": ["inf" if math.isinf(v) else v for v in model.lrds]})
    return json.dumps(common, sort_keys=True)


def model_from_json(text: str):
    doc = json.loads(text)
    if doc.get("schema_version") != "1":
        raise ValueError(f"unsupported model schema {doc.get('schema_version')!r}")
    spec = GridSpec(doc["rows"], doc["columns"])

    def decode_tree(node):
        if "feature" in node:
            return TreeNode(node["feature"], node["value"],
                            decode_tree(node["left"]), decode_tree(node["right"]))
        return Leaf(node["depth"], node["size"])

    if doc["algorithm"] == "isolation_forest":
        return IsolationForestModel(tuple(decode_tree(t) for t in doc["trees"]),
                                    doc["subsample_size"], doc["num_trees"],
                                    doc["seed"], doc["kind"], spec)
    if doc["algorithm"] == "lof":
        lrds = tuple(math.inf if v == "inf" else float(v) for v in doc["lrds"])
        return LofModel(tuple(map(tuple, doc["training"])), doc["k"],
                        tuple(doc["k_distances"]), lrds, doc["kind"], spec)
    raise ValueError(f"unknown algorithm {doc['algorithm']!r}")


# ---------------------------------------------------------------------------
# configuration search

GRID_SEARCH_SPECS = (GridSpec(8, 6), GridSpec(16, 12), GridSpec(32, 24))


def grid_search(train_pages: Sequence[RecognizedPage],
                labeled_pages: Sequence[tuple[RecognizedPage, str]],
                detector: str = "isolation_forest",
                kinds: Sequence[str] = FEATURE_KINDS,
                specs: Sequence[GridSpec] = GRID_SEARCH_SPECS,
                seed: int = 42, num_trees: int = 100,
                subsample: int = 256, k: int = 10):
    """Pick the (kind, grid) with the best no-act/act F1 on labeled pages.

    Ties go to the shorter feature vector. Returns (best config dict, table of
    every configuration's precision/recall/F1).
    """
    table = []
    for kind in kinds:
        for spec in specs:
            train = [extract_features(p, kind, spec) for p in train_pages]
            if detector == "isolation_forest":
                model = if_fit(train, num_trees=num_trees, subsample=subsample, seed=seed)
            else:
                model = lof_fit(train, k=min(k, len(train) - 1))
            predicted = [(classify_page(p, model)[0], label) for p, label in labeled_pages]
            stats = f1_table(predicted)
            vec_len = spec.rows + spec.columns if kind == "projection" else spec.rows * spec.columns
            table.append({"kind": kind, "spec": spec, "vector_length": vec_len,
                          "model": model, **stats})
    best = max(table, key=lambda row: (row["f1"], -row["vector_length"]))
    return best, table


def f1_table(pairs: Sequence[tuple[str, str]]) -> dict:
    """Per-class precision/recall/F1 for (predicted, expected) page classes."""
    out = {}
    for cls in ("act", "no_act"):
        tp = sum(1 for p, g in pairs if p == cls and g == cls)
        fp = sum(1 for p, g in pairs if p == cls and g != cls)
        fn = sum(1 for p, g in pairs if p != cls and g == cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out[cls] = {"precision": precision, "recall": recall, "f1": f1,
                    "support": tp + fn}
    correct = sum(1 for p, g in pairs if p == g)
    out["accuracy"] = correct / len(pairs) if pairs else 0.0
    # headline F1: support-weighted mean over the two classes
    total = sum(out[c]["support"] for c in ("act", "no_act"))
    out["f1"] = (sum(out[c]["f1"] * out[c]["support"] for c in ("act", "no_act")) / total
                 if total else 0.0)
    return out
