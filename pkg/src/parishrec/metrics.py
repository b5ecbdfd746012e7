"""Evaluation metrics: CER/WER, alignment-based entity recognition, IoU/AP.

The entity metric tolerates recognition noise: ground-truth text and system
text are aligned character by character, each ground-truth entity is projected
through the alignment onto the system text, matched with an overlapping
predicted entity of the same tag, and counted as recognized when the surface
edit distance stays below 30% of the ground-truth surface length.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

from shapely.geometry import Polygon as ShapelyPolygon
from shapely.ops import unary_union

from .model import Polygon

NER_THRESHOLD = 0.30
MAP_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance over characters or tokens."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def cer(reference: str, hypothesis: str) -> float:
    """Character error rate: edit distance over reference length."""
    if not reference:
        if hypothesis:
            warnings.warn("empty reference with non-empty hypothesis: "
                          "normalizing by 1", stacklevel=2)
            return float(len(hypothesis))
        return 0.0
    return edit_distance(reference, hypothesis) / len(reference)


def wer(reference: str, hypothesis: str) -> float:
    """Word error rate: CER at whitespace-token level."""
    ref_tokens = reference.split()
    hyp_tokens = hypothesis.split()
    if not ref_tokens:
        if hyp_tokens:
            warnings.warn("empty reference with non-empty hypothesis: "
                          "normalizing by 1", stacklevel=2)
            return float(len(hyp_tokens))
        return 0.0
    return edit_distance(ref_tokens, hyp_tokens) / len(ref_tokens)


@dataclass(frozen=True)
class EditScript:
    """Character alignment: ops are (op, ref index | None, hyp index | None)."""

    ops: tuple[tuple[str, int | None, int | None], ...]
    cost: int


def align_chars(reference: str, hypothesis: str) -> EditScript:
    """One optimal alignment, deterministic.

    Equal-cost alternatives resolve left to right with the preference
    match > substitute > delete > insert.
    """
    n, m = len(reference), len(hypothesis)
    # suffix[i][j] = distance between reference[i:] and hypothesis[j:]
    suffix = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n, -1, -1):
        for j in range(m, -1, -1):
            if i == n:
                suffix[i][j] = m - j
            elif j == m:
                suffix[i][j] = n - i
            else:
                suffix[i][j] = min(suffix[i + 1][j + 1] + (reference[i] != hypothesis[j]),
                                   suffix[i + 1][j] + 1,
                                   suffix[i][j + 1] + 1)
    ops: list[tuple[str, int | None, int | None]] = []
    i = j = 0
    while i < n or j < m:
        here = suffix[i][j]
        if i < n and j < m and reference[i] == hypothesis[j] and suffix[i + 1][j + 1] == here:
            ops.append(("match", i, j))
            i, j = i + 1, j + 1
        elif i < n and j < m and suffix[i + 1][j + 1] + 1 == here:
            ops.append(("substitute", i, j))
            i, j = i + 1, j + 1
        elif i < n and suffix[i + 1][j] + 1 == here:
            ops.append(("delete", i, None))
            i += 1
        else:
            ops.append(("insert", None, j))
            j += 1
    return EditScript(tuple(ops), suffix[0][0])


def project_span(script: EditScript, start: int, end: int) -> tuple[int, int]:
    """Image of reference span [start, end) in hypothesis coordinates.

    A fully deleted span projects to an empty span at the position where its
    context survives.
    """
    hyp_positions = [j for op, i, j in script.ops
                     if i is not None and start <= i < end and j is not None]
    if hyp_positions:
        return min(hyp_positions), max(hyp_positions) + 1
    anchor = 0
    for op, i, j in script.ops:
        if i is not None and i >= start:
            break
        if j is not None:
            anchor = j + 1
    return anchor, anchor


@dataclass(frozen=True)
class NerScores:
    precision: float
    recall: float
    f1: float
    recognized: int
    gt_count: int
    pred_count: int


def ner_eval(gt_entities: Sequence[tuple[str, int, int]], gt_text: str,
             pred_entities: Sequence[tuple[str, int, int]], pred_text: str,
             threshold: float = NER_THRESHOLD) -> NerScores:
    """Alignment-based entity recognition scores.

    Entities are (tag, start, end) spans over their own text. A ground-truth
    entity is recognized when a same-tag predicted entity overlaps its
    projected span and the surface edit distance is under `threshold` of the
    ground-truth surface length. Every prediction left unmatched counts
    against precision.
    """
    spans = sorted(gt_entities, key=lambda e: (e[1], e[2]))
    for (_, s1, e1), (_, s2, _) in zip(spans, spans[1:]):
        if s2 < e1:
            raise ValueError("overlapping ground-truth entities")
    script = align_chars(gt_text, pred_text)
    available = list(range(len(pred_entities)))
    recognized = 0
    for tag, start, end in gt_entities:
        surface = gt_text[start:end]
        p_start, p_end = project_span(script, start, end)
        best_idx, best_overlap = None, 0
        for idx in available:
            p_tag, ps, pe = pred_entities[idx]
            if p_tag != tag:
                continue
            overlap = min(p_end, pe) - max(p_start, ps)
            if overlap > best_overlap:
                best_idx, best_overlap = idx, overlap
        matched_surface = ""
        if best_idx is not None:
            _, ps, pe = pred_entities[best_idx]
            matched_surface = pred_text[ps:pe]
            available.remove(best_idx)
        if not surface:
            continue
        if edit_distance(surface, matched_surface) / len(surface) < threshold:
            recognized += 1
    precision = recognized / len(pred_entities) if pred_entities else 0.0
    recall = recognized / len(gt_entities) if gt_entities else 0.0
    f1 = (2 * precision * recall / (precision + recall)) if precision + recall else 0.0
    return NerScores(precision, recall, f1, recognized, len(gt_entities), len(pred_entities))


# ---------------------------------------------------------------------------
# zone detection metrics

def _shapely(p: Polygon) -> ShapelyPolygon:
    poly = ShapelyPolygon(p.points)
    if not poly.is_valid or poly.area <= 0:
        raise ValueError("degenerate polygon")
    return poly


def iou(a: Polygon, b: Polygon) -> float:
    """Intersection over union of two zones."""
    pa, pb = _shapely(a), _shapely(b)
    inter = pa.intersection(pb).area
    union = pa.union(pb).area
    return inter / union if union > 0 else 0.0


def corpus_iou(gt: Sequence[Polygon], pred: Sequence[Polygon]) -> float:
    """Area IoU of the union of ground-truth zones vs the union of predictions."""
    if not gt and not pred:
        return 1.0
    if not gt or not pred:
        return 0.0
    gt_union = unary_union([_shapely(p) for p in gt])
    pred_union = unary_union([_shapely(p) for p in pred])
    union = gt_union.union(pred_union).area
    return gt_union.intersection(pred_union).area / union if union > 0 else 0.0


def _match_predictions(gt: Sequence[Polygon], pred: Sequence[tuple[Polygon, float]],
                       iou_threshold: float) -> list[bool]:
    """Greedy matching in descending score order; ties keep input order."""
    order = sorted(range(len(pred)), key=lambda i: (-pred[i][1], i))
    taken = [False] * len(gt)
    hit = [False] * len(pred)
    for idx in order:
        poly, _ = pred[idx]
        best_gt, best_iou = None, 0.0
        for g, gt_poly in enumerate(gt):
            if taken[g]:
                continue
            value = iou(gt_poly, poly)
            if value >= iou_threshold and value > best_iou:
                best_gt, best_iou = g, value
        if best_gt is not None:
            taken[best_gt] = True
            hit[idx] = True
    return [hit[i] for i in order]


def average_precision(gt: Sequence[Polygon], pred: Sequence[tuple[Polygon, float]],
                      iou_threshold: float = 0.5) -> float:
    """Area under the all-point-interpolated precision/recall curve."""
    if not gt:
        return 1.0 if not pred else 0.0
    if not pred:
        return 0.0
    hits = _match_predictions(gt, pred, iou_threshold)
    precisions, recalls = [], []
    tp = 0
    for rank, hit in enumerate(hits, start=1):
        tp += hit
        precisions.append(tp / rank)
        recalls.append(tp / len(gt))
    ap = 0.0
    prev_recall = 0.0
    for rank in range(len(hits)):
        # precision envelope: best precision at this recall or beyond
        envelope = max(precisions[rank:])
        ap += (recalls[rank] - prev_recall) * envelope
        prev_recall = recalls[rank]
    return ap


@dataclass(frozen=True)
class DetectionEval:
    iou: float
    ap_by_threshold: dict[float, float]
    mean_ap: float

    @property
    def ap50(self) -> float:
        return self.ap_by_threshold[0.50]

    @property
    def ap75(self) -> float:
        return self.ap_by_threshold[0.75]


def evaluate_detection(gt: Sequence[Polygon], pred: Sequence[tuple[Polygon, float]],
                       thresholds: Sequence[float] = MAP_THRESHOLDS) -> DetectionEval:
    ap_by = {t: average_precision(gt, pred, t) for t in thresholds}
    mean_ap = sum(ap_by.values()) / len(ap_by) if ap_by else 0.0
    return DetectionEval(corpus_iou(gt, [p for p, _ in pred]), ap_by, mean_ap)
