"""Rectangle helpers for box-model geometry, all in CSS px.

A rectangle is a plain ``(x, y, w, h)`` tuple so it survives JSON
round-trips untouched.
"""

from __future__ import annotations

from typing import Sequence

Rect = tuple[float, float, float, float]


def rect_from_quad(quad: Sequence[float]) -> Rect:
    """Convert an 8-number quad (x1,y1,...,x4,y4) to an axis-aligned rect."""
    if len(quad) != 8:
        raise ValueError(f"quad must have 8 numbers, got {len(quad)}")
    xs = [float(quad[i]) for i in range(0, 8, 2)]
    ys = [float(quad[i]) for i in range(1, 8, 2)]
    x, y = min(xs), min(ys)
    return (x, y, max(xs) - x, max(ys) - y)


def area(rect: Rect) -> float:
    return max(0.0, rect[2]) * max(0.0, rect[3])


def intersection(a: Rect, b: Rect) -> Rect | None:
    """Overlapping region of two rects, or None when the overlap has zero area."""
    x = max(a[0], b[0])
    y = max(a[1], b[1])
    x2 = min(a[0] + a[2], b[0] + b[2])
    y2 = min(a[1] + a[3], b[1] + b[3])
    if x2 <= x or y2 <= y:
        return None
    return (x, y, x2 - x, y2 - y)


def intersection_area(a: Rect, b: Rect) -> float:
    inter = intersection(a, b)
    return 0.0 if inter is None else area(inter)


def contains(outer: Rect, inner: Rect, eps: float = 1e-6) -> bool:
    """Point-set containment: every point of inner lies inside outer."""
    return (
        inner[0] >= outer[0] - eps
        and inner[1] >= outer[1] - eps
        and inner[0] + inner[2] <= outer[0] + outer[2] + eps
        and inner[1] + inner[3] <= outer[1] + outer[3] + eps
    )


def intersects_positively(a: Rect, b: Rect) -> bool:
    """True when the rects share a region of strictly positive area."""
    return intersection(a, b) is not None
