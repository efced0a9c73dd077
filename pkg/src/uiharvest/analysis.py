"""Composition statistics and quality metrics over stored screens.

Covers multi-label role categorization (an element inherits the role of
every singleton ancestor above it), per-screen and corpus composition
averages, WCAG 44x44 target-size flagging, leaf occlusion, responsiveness
fractions, and per-screen class percentile ranks.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .devices import DeviceProfile, profiles_by_name
from .errors import EmptyCorpusError
from .geometry import Rect, area, intersection_area, intersects_positively
from .store import AxNode, PageSample

INTERACTABLE_LABELS = frozenset({"link", "button"})
WCAG_MIN_TARGET_PX = 44.0
DEFAULT_OCCLUSION_THRESHOLD = 0.20

# Label vocabulary used for class-frequency work: the ten most common
# computed roles over a large crawl, most frequent first.
DEFAULT_CLASSES = (
    "text",
    "link",
    "paragraph",
    "generic",
    "image",
    "heading",
    "listitem",
    "list",
    "textbox",
    "button",
)


class AxTreeIndex:
    """Parent/child lookups over one screen's accessibility nodes."""

    def __init__(self, nodes: Sequence[AxNode]):
        self.nodes = list(nodes)
        self.by_id = {node.node_id: node for node in self.nodes}
        self._child_count: Counter[int] = Counter()
        for node in self.nodes:
            if node.parent_id is not None:
                self._child_count[node.parent_id] += 1

    def parent(self, node: AxNode) -> AxNode | None:
        if node.parent_id is None:
            return None
        return self.by_id.get(node.parent_id)

    def child_count(self, node_id: int) -> int:
        return self._child_count[node_id]

    def leaves(self) -> list[AxNode]:
        return [node for node in self.nodes if self._child_count[node.node_id] == 0]


def element_labels(node: AxNode, tree: Sequence[AxNode] | AxTreeIndex) -> set[str]:
    """The node's role plus the roles of its maximal singleton-parent chain.

    Walking upward stops at the first ancestor that has more than one
    child, so a link wrapping exactly one image labels the image as both
    image and link, while a link with two children labels neither child.
    """
    index = tree if isinstance(tree, AxTreeIndex) else AxTreeIndex(tree)
    labels = {node.role}
    current = node
    while True:
        parent = index.parent(current)
        if parent is None or index.child_count(parent.node_id) != 1:
            break
        labels.add(parent.role)
        current = parent
    return labels


def screen_label_counts(
    sample: PageSample,
    classes: Sequence[str] | None = None,
) -> Counter[str]:
    """Per-class element counts for one screen (multi-label, optionally filtered)."""
    index = AxTreeIndex(sample.axtree)
    counts: Counter[str] = Counter()
    allowed = set(classes) if classes is not None else None
    for node in sample.axtree:
        for label in element_labels(node, index):
            if allowed is None or label in allowed:
                counts[label] += 1
    return counts


def normalized_frequencies(counts: Mapping[str, int], classes: Sequence[str]) -> dict[str, float]:
    total = sum(counts.get(c, 0) for c in classes)
    if total == 0:
        return {c: 0.0 for c in classes}
    return {c: counts.get(c, 0) / total for c in classes}


@dataclass
class CompositionStats:
    screens: int
    class_counts: Counter
    avg_elements: float
    avg_visible: float
    avg_clickable: float

    def top_classes(self, n: int = 10) -> list[tuple[str, int]]:
        return self.class_counts.most_common(n)


def composition_stats(
    corpus: Iterable[PageSample],
    profiles: Mapping[str, DeviceProfile] | None = None,
) -> CompositionStats:
    """Corpus frequency table plus per-screen element/visible/clickable averages."""
    profiles = profiles if profiles is not None else profiles_by_name()
    class_counts: Counter[str] = Counter()
    screens = 0
    elements = visible = clickable = 0
    for sample in corpus:
        screens += 1
        profile = profiles.get(sample.device)
        if profile is None:
            raise KeyError(f"unknown device profile {sample.device!r}")
        viewport: Rect = (0.0, 0.0, float(profile.viewport_width), float(profile.viewport_height))
        index = AxTreeIndex(sample.axtree)
        for node in sample.axtree:
            labels = element_labels(node, index)
            class_counts.update(labels)
            elements += 1
            if node.boxes is not None and intersects_positively(node.boxes.content, viewport):
                visible += 1
            if node.clickable or labels & INTERACTABLE_LABELS:
                clickable += 1
    if screens == 0:
        raise EmptyCorpusError("composition_stats needs at least one screen")
    return CompositionStats(
        screens=screens,
        class_counts=class_counts,
        avg_elements=elements / screens,
        avg_visible=visible / screens,
        avg_clickable=clickable / screens,
    )


@dataclass
class SmallTargetReport:
    flagged: list[int]
    interactable: int
    unmeasured: int


def small_target_report(sample: PageSample) -> SmallTargetReport:
    """Interactable nodes whose border box misses the 44x44 minimum."""
    index = AxTreeIndex(sample.axtree)
    flagged: list[int] = []
    interactable = unmeasured = 0
    for node in sample.axtree:
        if not (element_labels(node, index) & INTERACTABLE_LABELS):
            continue
        interactable += 1
        if node.boxes is None:
            unmeasured += 1
            continue
        _, _, w, h = node.boxes.border
        if w < WCAG_MIN_TARGET_PX or h < WCAG_MIN_TARGET_PX:
            flagged.append(node.node_id)
    return SmallTargetReport(flagged=flagged, interactable=interactable, unmeasured=unmeasured)


@dataclass
class OcclusionReport:
    overlap_pairs: list[tuple[int, int]]
    occluded: list[int]


def _z_index(node: AxNode) -> float | None:
    raw = node.style.get("z-index")
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        return None  # "auto" and friends: not captured


def _occludee(a: AxNode, b: AxNode) -> AxNode:
    """The leaf that loses an overlap: painted earlier, unless z-index says otherwise."""
    za, zb = _z_index(a), _z_index(b)
    if za is not None and zb is not None and za != zb:
        return a if za < zb else b
    return a if a.dom_index < b.dom_index else b


def occlusion_report(
    sample: PageSample,
    threshold: float = DEFAULT_OCCLUSION_THRESHOLD,
) -> OcclusionReport:
    """Overlapping leaf pairs and leaves occluded by more than ``threshold``.

    Interval sweep over x: leaves sorted by left edge; each leaf is compared
    only against earlier leaves whose x-interval still reaches it.
    """
    index = AxTreeIndex(sample.axtree)
    leaves = [node for node in index.leaves() if node.boxes is not None]
    order = sorted(leaves, key=lambda n: (n.boxes.border[0], n.node_id))
    pairs: list[tuple[int, int]] = []
    occluded: set[int] = set()
    active: list[AxNode] = []
    for node in order:
        rect = node.boxes.border
        still_active = []
        for other in active:
            other_rect = other.boxes.border
            if other_rect[0] + other_rect[2] <= rect[0]:
                continue  # x-interval exhausted; drop from the sweep
            still_active.append(other)
            if not intersects_positively(rect, other_rect):
                continue
            pairs.append(tuple(sorted((node.node_id, other.node_id))))
            loser = _occludee(node, other)
            own = area(loser.boxes.border)
            if own > 0 and intersection_area(rect, other_rect) / own > threshold:
                occluded.add(loser.node_id)
        still_active.append(node)
        active = still_active
    return OcclusionReport(overlap_pairs=sorted(pairs), occluded=sorted(occluded))


@dataclass
class ResponsivenessReport:
    content_width_ok: float | None
    has_viewport_meta: float | None
    measured_width: int
    measured_meta: int
    unmeasured: int


def responsiveness_report(corpus: Iterable[PageSample]) -> ResponsivenessReport:
    """Corpus fractions of the two responsiveness booleans over measured screens."""
    width_ok = width_total = meta_ok = meta_total = unmeasured = 0
    for sample in corpus:
        probe = sample.probe
        if probe is None or (probe.content_width_ok is None and probe.has_viewport_meta is None):
            unmeasured += 1
            continue
        if probe.content_width_ok is not None:
            width_total += 1
            width_ok += bool(probe.content_width_ok)
        if probe.has_viewport_meta is not None:
            meta_total += 1
            meta_ok += bool(probe.has_viewport_meta)
    return ResponsivenessReport(
        content_width_ok=(width_ok / width_total) if width_total else None,
        has_viewport_meta=(meta_ok / meta_total) if meta_total else None,
        measured_width=width_total,
        measured_meta=meta_total,
        unmeasured=unmeasured,
    )


@dataclass
class ClassPercentileProfile:
    screen_id: str
    frequencies: dict[str, float]
    ranks: dict[str, float]


def corpus_frequency_rows(
    corpus: Sequence[PageSample],
    classes: Sequence[str],
) -> list[dict[str, float]]:
    return [
        normalized_frequencies(screen_label_counts(sample, classes), classes)
        for sample in corpus
    ]


def percentile_profile(
    sample: PageSample,
    corpus: Sequence[PageSample],
    classes: Sequence[str] = DEFAULT_CLASSES,
) -> ClassPercentileProfile:
    """Percentile rank of this screen's class mix against the corpus.

    For each class, the rank is 100 times the fraction of corpus screens
    whose normalized frequency of that class is strictly below this
    screen's, so a corpus-maximal screen over 10 screens ranks 90.
    """
    if not corpus:
        raise EmptyCorpusError("percentile_profile needs a non-empty corpus")
    rows = corpus_frequency_rows(corpus, classes)
    mine = normalized_frequencies(screen_label_counts(sample, classes), classes)
    ranks = {}
    for c in classes:
        below = sum(1 for row in rows if row[c] < mine[c])
        ranks[c] = 100.0 * below / len(rows)
    return ClassPercentileProfile(screen_id=sample.sample_id, frequencies=mine, ranks=ranks)


@dataclass
class ScreenQuality:
    sample_id: str
    small_target_count: int
    interactable_count: int
    overlap_pair_count: int
    occluded_gt20_count: int
    content_width_ok: bool | None
    has_viewport_meta: bool | None
    element_count: int
    mean_bbox_area: float | None


@dataclass
class QualityReport:
    per_screen: list[ScreenQuality]
    fraction_screens_with_overlap: float
    fraction_small_interactables: float
    fraction_responsive_width: float | None
    fraction_viewport_meta: float | None
    mean_bbox_area: float

    def to_json(self) -> dict:
        return {
            "aggregates": {
                "screens": len(self.per_screen),
                "fraction_screens_with_overlap": self.fraction_screens_with_overlap,
                "fraction_small_interactables": self.fraction_small_interactables,
                "fraction_responsive_width": self.fraction_responsive_width,
                "fraction_viewport_meta": self.fraction_viewport_meta,
                "mean_bbox_area": self.mean_bbox_area,
            },
            "per_screen": [vars(row) for row in self.per_screen],
        }


def quality_report(
    corpus: Sequence[PageSample],
    threshold: float = DEFAULT_OCCLUSION_THRESHOLD,
) -> QualityReport:
    """Run all three quality metric families over a corpus."""
    if not corpus:
        raise EmptyCorpusError("quality_report needs at least one screen")
    rows: list[ScreenQuality] = []
    area_total = 0.0
    area_count = 0
    small_total = interactable_total = overlap_screens = 0
    for sample in corpus:
        small = small_target_report(sample)
        occl = occlusion_report(sample, threshold)
        areas = [
            area(node.boxes.border) for node in sample.axtree if node.boxes is not None
        ]
        area_total += sum(areas)
        area_count += len(areas)
        small_total += len(small.flagged)
        interactable_total += small.interactable
        overlap_screens += bool(occl.overlap_pairs)
        probe = sample.probe
        rows.append(
            ScreenQuality(
                sample_id=sample.sample_id,
                small_target_count=len(small.flagged),
                interactable_count=small.interactable,
                overlap_pair_count=len(occl.overlap_pairs),
                occluded_gt20_count=len(occl.occluded),
                content_width_ok=None if probe is None else probe.content_width_ok,
                has_viewport_meta=None if probe is None else probe.has_viewport_meta,
                element_count=len(sample.axtree),
                mean_bbox_area=(sum(areas) / len(areas)) if areas else None,
            )
        )
    resp = responsiveness_report(corpus)
    return QualityReport(
        per_screen=rows,
        fraction_screens_with_overlap=overlap_screens / len(rows),
        fraction_small_interactables=(
            small_total / interactable_total if interactable_total else 0.0
        ),
        fraction_responsive_width=resp.content_width_ok,
        fraction_viewport_meta=resp.has_viewport_meta,
        mean_bbox_area=(area_total / area_count) if area_count else 0.0,
    )
