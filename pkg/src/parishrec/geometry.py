"""Plane geometry helpers for line and zone polygons.

Everything here is exact arithmetic on vertex lists; no rasterization is
involved, so results are identical across platforms.
"""
from __future__ import annotations

from typing import Sequence

Point = tuple[float, float]


def polygon_area(points: Sequence[Point]) -> float:
    """Unsigned shoelace area of a closed polygon (closure implied)."""
    n = len(points)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return abs(acc) / 2.0


def bounding_box(points: Sequence[Point]) -> tuple[float, float, float, float]:
    """(min_x, min_y, max_x, max_y) of the vertex list."""
    if not points:
        raise ValueError("empty point list")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return min(xs), min(ys), max(xs), max(ys)


def bbox_height(points: Sequence[Point]) -> float:
    _, min_y, _, max_y = bounding_box(points)
    return max_y - min_y


def clip_to_rect(points: Sequence[Point], x0: float, y0: float, x1: float, y1: float) -> list[Point]:
    """Sutherland-Hodgman clip of a polygon against an axis-aligned rectangle.

    For a non-convex subject the output may contain coincident bridge edges;
    those cancel in the shoelace sum, so ``polygon_area`` of the result is
    still the exact clipped area.
    """
    if x1 <= x0 or y1 <= y0:
        raise ValueError("degenerate clip rectangle")

    def clip_edge(poly: list[Point], inside, intersect) -> list[Point]:
        out: list[Point] = []
        m = len(poly)
        for i in range(m):
            cur = poly[i]
            prev = poly[i - 1]
            if inside(cur):
                if not inside(prev):
                    out.append(intersect(prev, cur))
                out.append(cur)
            elif inside(prev):
                out.append(intersect(prev, cur))
        return out

    def x_cross(a: Point, b: Point, x: float) -> Point:
        t = (x - a[0]) / (b[0] - a[0])
        return (x, a[1] + t * (b[1] - a[1]))

    def y_cross(a: Point, b: Point, y: float) -> Point:
        t = (y - a[1]) / (b[1] - a[1])
        return (a[0] + t * (b[0] - a[0]), y)

    poly = list(points)
    poly = clip_edge(poly, lambda p: p[0] >= x0, lambda a, b: x_cross(a, b, x0))
    if not poly:
        return []
    poly = clip_edge(poly, lambda p: p[0] <= x1, lambda a, b: x_cross(a, b, x1))
    if not poly:
        return []
    poly = clip_edge(poly, lambda p: p[1] >= y0, lambda a, b: y_cross(a, b, y0))
    if not poly:
        return []
    poly = clip_edge(poly, lambda p: p[1] <= y1, lambda a, b: y_cross(a, b, y1))
    return poly


def rect_overlap_area(points: Sequence[Point], x0: float, y0: float, x1: float, y1: float) -> float:
    """Exact area of polygon ∩ rectangle."""
    return polygon_area(clip_to_rect(points, x0, y0, x1, y1))


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def _segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool:
    d1 = _orient(c, d, a)
    d2 = _orient(c, d, b)
    d3 = _orient(a, b, c)
    d4 = _orient(a, b, d)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _on_segment(c, d, a):
        return True
    if d2 == 0 and _on_segment(c, d, b):
        return True
    if d3 == 0 and _on_segment(a, b, c):
        return True
    if d4 == 0 and _on_segment(a, b, d):
        return True
    return False


def is_self_intersecting(points: Sequence[Point]) -> bool:
    """True if any two non-adjacent edges of the closed polygon intersect.

    O(n^2) pairwise test; line polygons have a handful of vertices, so this
    beats pulling in a sweep line.
    """
    n = len(points)
    if n < 4:
        return False
    edges = [(points[i], points[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            # skip adjacent edges (shared endpoint) incl. the wrap-around pair
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return True
    return False
