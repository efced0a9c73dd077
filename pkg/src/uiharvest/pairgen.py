"""Same-screen / new-screen pair construction from stored captures.

Same-screen pairs come from revisits of one URL at different times and
from simulated scrolling (two viewport-sized windows of one full-page
capture). New-screen pairs come from same-domain different-path sampling
and from cross-domain sampling. The four sources are drawn with equal
probability so labels balance at 50/50. Near-identical same-pairs are
filtered with a 64-bit difference hash when building test-split output.

Pairing is always same-device; refs are ``sample_id`` for whole captures
and ``sample_id#top=PX`` for scroll crops.
"""

from __future__ import annotations

import io
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence
from urllib.parse import urlsplit

from PIL import Image

from .devices import DeviceProfile, profiles_by_name
from .errors import EmptyCorpusError, ImageDecodeError
from .store import DatasetStore, PageSample

SAME = "same"
DIFFERENT = "different"
REVISIT = "revisit"
SCROLL = "scroll"
SAME_DOMAIN_DIFF_PATH = "same_domain_diff_path"
CROSS_DOMAIN = "cross_domain"
PROVENANCES = (REVISIT, SCROLL, SAME_DOMAIN_DIFF_PATH, CROSS_DOMAIN)
SAME_PROVENANCES = frozenset({REVISIT, SCROLL})

DUP_THRESHOLD_BITS = 4


@dataclass(frozen=True)
class PairExample:
    a_ref: str
    b_ref: str
    label: str
    provenance: str
    phash_distance: int | None = None

    def __post_init__(self) -> None:
        if self.a_ref == self.b_ref:
            raise ValueError("pair references must differ")
        same = self.provenance in SAME_PROVENANCES
        if (self.label == SAME) != same:
            raise ValueError(f"label {self.label!r} inconsistent with {self.provenance!r}")

    def to_json(self) -> dict:
        return {
            "a_ref": self.a_ref,
            "b_ref": self.b_ref,
            "label": self.label,
            "provenance": self.provenance,
            "phash_distance": self.phash_distance,
        }


@dataclass(frozen=True)
class ScrollCrop:
    sample_id: str
    window_top: int
    width: int
    height: int

    @property
    def ref(self) -> str:
        return f"{self.sample_id}#top={self.window_top}"


def scroll_window_tops(page_height: int, viewport_height: int, stride: int | None = None) -> list[int]:
    """Window top offsets: multiples of stride plus a bottom-flush final window."""
    if viewport_height <= 0:
        raise ValueError("viewport_height must be positive")
    if page_height <= viewport_height:
        return [0]
    stride = stride if stride is not None else max(1, viewport_height // 2)
    tops = list(range(0, page_height - viewport_height + 1, stride))
    final = page_height - viewport_height
    if tops[-1] != final:
        tops.append(final)
    return tops


def scroll_windows(
    sample: PageSample,
    page_height: int,
    profile: DeviceProfile,
    stride: int | None = None,
) -> list[ScrollCrop]:
    """Viewport-sized windows simulating scroll positions on a full page."""
    height = min(profile.viewport_height, page_height)
    return [
        ScrollCrop(sample.sample_id, top, profile.viewport_width, height)
        for top in scroll_window_tops(page_height, profile.viewport_height, stride)
    ]


# -- perceptual hashing --------------------------------------------------------


def _as_image(img) -> Image.Image:
    if isinstance(img, Image.Image):
        return img
    try:
        if isinstance(img, (bytes, bytearray)):
            loaded = Image.open(io.BytesIO(img))
        else:
            loaded = Image.open(Path(img))
        loaded.load()
        return loaded
    except Exception as exc:
        raise ImageDecodeError(f"cannot decode image: {exc}") from exc


def dhash64(img) -> int:
    """64-bit difference hash: 9x8 grayscale, horizontal gradient sign bits."""
    gray = _as_image(img).convert("L").resize((9, 8), Image.Resampling.LANCZOS)
    pixels = gray.tobytes()  # row-major luma bytes
    value = 0
    bit = 0
    for row in range(8):
        offset = row * 9
        for col in range(8):
            if pixels[offset + col] > pixels[offset + col + 1]:
                value |= 1 << bit
            bit += 1
    return value


def phash_distance(img_a, img_b) -> int:
    """Hamming distance between the difference hashes of two images."""
    return (dhash64(img_a) ^ dhash64(img_b)).bit_count()


# -- corpus view ---------------------------------------------------------------


def _url_path(url: str) -> str:
    return urlsplit(url).path or "/"


class PairCorpus:
    """Groupings over a sample set that pair generation draws from.

    ``image_loader(sample, which)`` must return a PIL image for
    ``which in {"viewport", "fullpage"}``.
    """

    def __init__(
        self,
        samples: Iterable[PageSample],
        image_loader: Callable[[PageSample, str], Image.Image],
        profiles: dict[str, DeviceProfile] | None = None,
    ):
        self.samples = list(samples)
        self.load_image = image_loader
        self.profiles = profiles if profiles is not None else profiles_by_name()
        self.by_id = {s.sample_id: s for s in self.samples}

        self.revisit_groups: dict[tuple[str, str], list[PageSample]] = {}
        by_url_device: dict[tuple[str, str], list[PageSample]] = {}
        for s in self.samples:
            by_url_device.setdefault((s.url, s.device), []).append(s)
        for key, group in by_url_device.items():
            if len({s.captured_at for s in group}) >= 2:
                self.revisit_groups[key] = sorted(group, key=lambda s: s.captured_at)

        self.domain_groups: dict[tuple[str, str], list[PageSample]] = {}
        for s in self.samples:
            self.domain_groups.setdefault((s.registrable_domain, s.device), []).append(s)
        self.diff_path_groups = {
            key: group
            for key, group in self.domain_groups.items()
            if len({_url_path(s.url) for s in group}) >= 2
        }

        self.device_domains: dict[str, dict[str, list[PageSample]]] = {}
        for s in self.samples:
            self.device_domains.setdefault(s.device, {}).setdefault(
                s.registrable_domain, []
            ).append(s)
        self.cross_domain_devices = [
            device for device, domains in sorted(self.device_domains.items()) if len(domains) >= 2
        ]

        self._page_heights: dict[str, int] = {}

    def page_height(self, sample: PageSample) -> int:
        """Full-page height in CSS px (image pixels divided by device scale)."""
        cached = self._page_heights.get(sample.sample_id)
        if cached is None:
            scale = self.profiles[sample.device].device_scale
            cached = round(self.load_image(sample, "fullpage").height / scale)
            self._page_heights[sample.sample_id] = cached
        return cached

    def scrollable_ids(self) -> list[str]:
        out = []
        for s in sorted(self.samples, key=lambda s: s.sample_id):
            profile = self.profiles.get(s.device)
            if profile is None:
                continue
            if self.page_height(s) > profile.viewport_height:
                out.append(s.sample_id)
        return out

    def crop(self, sample: PageSample, top: int) -> Image.Image:
        """Viewport-sized window at a CSS-px top, cut in image pixel space."""
        profile = self.profiles[sample.device]
        img = self.load_image(sample, "fullpage")
        scale = profile.device_scale
        height_px = min(round(profile.viewport_height * scale), img.height)
        top_px = min(round(top * scale), max(0, img.height - height_px))
        return img.crop((0, top_px, img.width, top_px + height_px))


def store_image_loader(store: DatasetStore) -> Callable[[PageSample, str], Image.Image]:
    def load(sample: PageSample, which: str) -> Image.Image:
        return _as_image(store.image_path(sample, which))

    return load


# -- generation ----------------------------------------------------------------


@dataclass
class PairGenResult:
    pairs: list[PairExample]
    warnings: list[str] = field(default_factory=list)


def generate_pairs(
    corpus: PairCorpus,
    count: int,
    rng: random.Random,
    *,
    filter_near_duplicates: bool = False,
    dup_threshold: int = DUP_THRESHOLD_BITS,
    max_attempt_factor: int = 50,
) -> PairGenResult:
    """Draw labeled pairs with balanced same/different probability.

    Provenances draw at 0.25 each; sources the corpus cannot supply are
    dropped with a warning and the rest reweighted. With
    ``filter_near_duplicates`` (test-split mode), same-screen pairs whose
    difference-hash distance is at or below ``dup_threshold`` are
    discarded and redrawn.
    """
    warnings: list[str] = []
    available: list[str] = []
    scrollable = corpus.scrollable_ids()
    supply = {
        REVISIT: bool(corpus.revisit_groups),
        SCROLL: bool(scrollable),
        SAME_DOMAIN_DIFF_PATH: bool(corpus.diff_path_groups),
        CROSS_DOMAIN: bool(corpus.cross_domain_devices),
    }
    for provenance in PROVENANCES:
        if supply[provenance]:
            available.append(provenance)
        else:
            warnings.append(f"provenance {provenance} unavailable in this corpus; reweighted")
    if not available:
        raise EmptyCorpusError("corpus supports no pair provenance at all")

    revisit_keys = sorted(corpus.revisit_groups)
    diff_path_keys = sorted(corpus.diff_path_groups)

    def build_revisit() -> PairExample | None:
        key = revisit_keys[rng.randrange(len(revisit_keys))]
        a, b = rng.sample(corpus.revisit_groups[key], 2)
        if a.captured_at == b.captured_at:
            return None
        return PairExample(a.sample_id, b.sample_id, SAME, REVISIT)

    def build_scroll() -> PairExample | None:
        sid = scrollable[rng.randrange(len(scrollable))]
        sample = corpus.by_id[sid]
        profile = corpus.profiles[sample.device]
        tops = scroll_window_tops(corpus.page_height(sample), profile.viewport_height)
        if len(tops) < 2:
            return None
        top_a, top_b = rng.sample(tops, 2)
        crop = ScrollCrop(sid, top_a, profile.viewport_width, profile.viewport_height)
        crop_b = ScrollCrop(sid, top_b, profile.viewport_width, profile.viewport_height)
        return PairExample(crop.ref, crop_b.ref, SAME, SCROLL)

    def build_same_domain() -> PairExample | None:
        key = diff_path_keys[rng.randrange(len(diff_path_keys))]
        group = corpus.diff_path_groups[key]
        a = group[rng.randrange(len(group))]
        others = [s for s in group if _url_path(s.url) != _url_path(a.url)]
        if not others:
            return None
        b = others[rng.randrange(len(others))]
        return PairExample(a.sample_id, b.sample_id, DIFFERENT, SAME_DOMAIN_DIFF_PATH)

    def build_cross_domain() -> PairExample | None:
        device = corpus.cross_domain_devices[rng.randrange(len(corpus.cross_domain_devices))]
        domains = sorted(corpus.device_domains[device])
        dom_a, dom_b = rng.sample(domains, 2)
        group_a = corpus.device_domains[device][dom_a]
        group_b = corpus.device_domains[device][dom_b]
        a = group_a[rng.randrange(len(group_a))]
        b = group_b[rng.randrange(len(group_b))]
        return PairExample(a.sample_id, b.sample_id, DIFFERENT, CROSS_DOMAIN)

    builders = {
        REVISIT: build_revisit,
        SCROLL: build_scroll,
        SAME_DOMAIN_DIFF_PATH: build_same_domain,
        CROSS_DOMAIN: build_cross_domain,
    }

    def pair_images(pair: PairExample):
        def resolve(ref: str) -> Image.Image:
            if "#top=" in ref:
                sid, _, top = ref.partition("#top=")
                return corpus.crop(corpus.by_id[sid], int(top))
            return corpus.load_image(corpus.by_id[ref], "viewport")

        return resolve(pair.a_ref), resolve(pair.b_ref)

    pairs: list[PairExample] = []
    attempts = 0
    max_attempts = max(count, 1) * max_attempt_factor
    while len(pairs) < count and attempts < max_attempts:
        attempts += 1
        provenance = available[rng.randrange(len(available))]
        pair = builders[provenance]()
        if pair is None:
            continue
        if pair.label == SAME and filter_near_duplicates:
            img_a, img_b = pair_images(pair)
            distance = phash_distance(img_a, img_b)
            if distance <= dup_threshold:
                continue
            pair = PairExample(pair.a_ref, pair.b_ref, pair.label, pair.provenance, distance)
        pairs.append(pair)
    if len(pairs) < count:
        warnings.append(
            f"requested {count} pairs but only {len(pairs)} could be generated"
        )
    return PairGenResult(pairs=pairs, warnings=warnings)
