"""Frequency-based resampling for class-balanced training subsets.

Classes are drawn with weight inversely proportional to their total
element count; a sample is then drawn (without replacement) with weight
equal to its normalized frequency of the drawn class. Two guards make the
loop total: classes with zero total count never enter the class draw, and
a class whose remaining samples all lack it is masked and redrawn.

Randomness contract: one ``rng.random()`` scanned against cumulative class
weights (vocabulary order), then one ``rng.random()`` scanned against
cumulative per-sample frequencies (remaining-sample order).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .analysis import (
    DEFAULT_CLASSES,
    occlusion_report,
    screen_label_counts,
)
from .errors import EmptyTableError, ExhaustedCorpusError, SubsetSizeError
from .geometry import area
from .store import PageSample

INF_RATIO = math.inf


@dataclass
class ClassFrequencyTable:
    """Per-class totals, per-sample normalized frequencies, and class weights."""

    classes: list[str]
    totals: dict[str, int]  # total element count per class over the corpus
    rows: dict[str, dict[str, float]]  # sample_id -> normalized class frequency
    counts: dict[str, dict[str, int]]  # sample_id -> raw class counts
    weights: dict[str, float]  # class -> 1/total, zero-total classes excluded

    def labeled_ids(self) -> list[str]:
        return [sid for sid, row in self.rows.items() if any(v > 0 for v in row.values())]


def build_frequency_table(
    samples: Iterable[PageSample],
    label_fn: Callable[[PageSample], dict[str, int]] | None = None,
    classes: Sequence[str] = DEFAULT_CLASSES,
) -> ClassFrequencyTable:
    """Count labeled elements per class and per sample.

    ``label_fn`` maps a sample to its per-class element counts; the default
    counts multi-label roles (singleton-parent propagation) restricted to
    the given vocabulary.
    """
    classes = list(classes)
    if label_fn is None:
        label_fn = lambda sample: dict(screen_label_counts(sample, classes))
    totals = {c: 0 for c in classes}
    rows: dict[str, dict[str, float]] = {}
    counts: dict[str, dict[str, int]] = {}
    n_samples = 0
    for sample in samples:
        n_samples += 1
        raw = label_fn(sample)
        sample_counts = {c: int(raw.get(c, 0)) for c in classes}
        counts[sample.sample_id] = sample_counts
        total = sum(sample_counts.values())
        for c in classes:
            totals[c] += sample_counts[c]
        rows[sample.sample_id] = {
            c: (sample_counts[c] / total if total else 0.0) for c in classes
        }
    if n_samples == 0 or all(v == 0 for v in totals.values()):
        raise EmptyTableError("no labeled elements in the corpus")
    weights = {c: 1.0 / totals[c] for c in classes if totals[c] > 0}
    return ClassFrequencyTable(
        classes=classes, totals=totals, rows=rows, counts=counts, weights=weights
    )


def _cumulative_pick(rng: random.Random, items: Sequence, weights: Sequence[float]):
    total = sum(weights)
    pick = rng.random() * total
    acc = 0.0
    chosen = len(items) - 1
    for i, w in enumerate(weights):
        acc += w
        if pick < acc:
            chosen = i
            break
    return chosen


def resample_split(
    n: int,
    table: ClassFrequencyTable,
    samples: Sequence[PageSample] | None = None,
    rng: random.Random | None = None,
    exclude: Callable[[PageSample], bool] | None = None,
) -> list[str]:
    """Draw ``n`` distinct sample ids, biased toward rare classes.

    ``exclude`` drops defect-flagged samples from eligibility before any
    draw. Deterministic for a fixed (table, seed, exclusion) triple.
    """
    rng = rng if rng is not None else random.Random()
    excluded: set[str] = set()
    if exclude is not None:
        if samples is None:
            raise ValueError("an exclude predicate needs the samples")
        excluded = {s.sample_id for s in samples if exclude(s)}
    remaining = [sid for sid in table.labeled_ids() if sid not in excluded]
    if n > len(remaining):
        raise SubsetSizeError(f"requested {n} of {len(remaining)} eligible samples")
    chosen: list[str] = []
    while len(chosen) < n:
        masked: set[str] = set()
        while True:
            live = [c for c in table.classes if c in table.weights and c not in masked]
            if not live:
                raise ExhaustedCorpusError("every class is exhausted")
            idx = _cumulative_pick(rng, live, [table.weights[c] for c in live])
            cls = live[idx]
            weights = [table.rows[sid][cls] for sid in remaining]
            if sum(weights) > 0:
                break
            masked.add(cls)
        idx = _cumulative_pick(rng, remaining, weights)
        chosen.append(remaining.pop(idx))
    return chosen


def default_defect_filter(sample: PageSample) -> bool:
    """True when a screen shows a likely visual defect.

    Flags zero-area leaves, any leaf occluded beyond the 20% threshold,
    and fully transparent elements.
    """
    report = occlusion_report(sample)
    if report.occluded:
        return True
    from .analysis import AxTreeIndex  # local import keeps module load light

    index = AxTreeIndex(sample.axtree)
    for node in index.leaves():
        if node.boxes is not None and area(node.boxes.border) == 0.0:
            return True
    for node in sample.axtree:
        if node.style.get("opacity") == "0":
            return True
    return False


@dataclass
class ChangeRatioReport:
    """Per-class change ratios between an original and a resampled subset."""

    screen_ratio: dict[str, float]
    element_ratio: dict[str, float]

    @staticmethod
    def _encode(value: float) -> float | str:
        return "inf" if math.isinf(value) else value

    def to_json(self) -> dict:
        return {
            "screen_ratio": {c: self._encode(v) for c, v in self.screen_ratio.items()},
            "element_ratio": {c: self._encode(v) for c, v in self.element_ratio.items()},
        }

    def to_csv_rows(self) -> list[list[str]]:
        rows = [["class", "screen_ratio", "element_ratio"]]
        for c in self.screen_ratio:
            rows.append([c, str(self.screen_ratio[c]), str(self.element_ratio[c])])
        return rows


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return 1.0 if numerator == 0 else INF_RATIO
    return numerator / denominator


def change_ratio_report(
    original_ids: Sequence[str],
    resampled_ids: Sequence[str],
    table: ClassFrequencyTable,
) -> ChangeRatioReport:
    """Per-class screen-presence and mean-element-count ratios.

    A class absent from the original but present in the resampled subset
    reports an infinity sentinel; absent from both reports 1 (no change).
    """
    screen_ratio = {}
    element_ratio = {}
    for c in table.classes:
        orig_screens = sum(1 for sid in original_ids if table.counts[sid][c] > 0)
        new_screens = sum(1 for sid in resampled_ids if table.counts[sid][c] > 0)
        screen_ratio[c] = _ratio(new_screens, orig_screens)
        orig_mean = (
            sum(table.counts[sid][c] for sid in original_ids) / len(original_ids)
            if original_ids
            else 0.0
        )
        new_mean = (
            sum(table.counts[sid][c] for sid in resampled_ids) / len(resampled_ids)
            if resampled_ids
            else 0.0
        )
        element_ratio[c] = _ratio(new_mean, orig_mean)
    return ChangeRatioReport(screen_ratio=screen_ratio, element_ratio=element_ratio)
