"""On-disk dataset layout, sample schema, and deterministic domain splits.

Layout (the dataset's public contract, schema_version 1):

    root/manifest.json
    root/<split>/<domain>/<url_hash>/<device>/<ts>/
        meta.json       sample metadata incl. probe report and timings
        axtree.json     list of accessibility nodes
        viewport.<ext>  viewport screenshot
        fullpage.<ext>  full-page screenshot

Samples are written atomically (temp dir + rename), so a crashed writer
leaves at most an ignorable directory under root/.tmp. Splits are decided
per registrable domain by hashing, which keeps the 70/10/20 partition
stable as the crawl grows and pins all pages of one site to one split.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import shutil
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

from .domains import registrable_domain
from .errors import (
    CorruptSampleError,
    SampleNotFoundError,
    SampleValidationError,
    StorageError,
    SubsetSizeError,
)
from .geometry import Rect

SCHEMA_VERSION = 1
SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.70, 0.10, 0.20)

STYLE_KEYS = (
    "font-size",
    "font-weight",
    "color",
    "background-color",
    "display",
    "position",
    "z-index",
    "visibility",
    "opacity",
)


class BoxSet(NamedTuple):
    """The four box-model rectangles, innermost first."""

    content: Rect
    padding: Rect
    border: Rect
    margin: Rect


@dataclass
class AxNode:
    """One accessibility-tree node with geometry and captured style."""

    node_id: int
    parent_id: int | None
    role: str
    name: str | None
    dom_index: int
    boxes: BoxSet | None
    style: dict[str, str] = field(default_factory=dict)
    clickable: bool = False

    def to_json(self) -> dict:
        boxes = None
        if self.boxes is not None:
            boxes = {
                "content": list(self.boxes.content),
                "padding": list(self.boxes.padding),
                "border": list(self.boxes.border),
                "margin": list(self.boxes.margin),
            }
        return {
            "node_id": self.node_id,
            "parent_id": self.parent_id,
            "role": self.role,
            "name": self.name,
            "dom_index": self.dom_index,
            "boxes": boxes,
            "style": self.style,
            "clickable": self.clickable,
        }

    @classmethod
    def from_json(cls, data: dict) -> "AxNode":
        boxes = None
        if data.get("boxes") is not None:
            raw = data["boxes"]
            boxes = BoxSet(
                tuple(raw["content"]),
                tuple(raw["padding"]),
                tuple(raw["border"]),
                tuple(raw["margin"]),
            )
        return cls(
            node_id=int(data["node_id"]),
            parent_id=None if data.get("parent_id") is None else int(data["parent_id"]),
            role=data["role"],
            name=data.get("name"),
            dom_index=int(data["dom_index"]),
            boxes=boxes,
            style=dict(data.get("style", {})),
            clickable=bool(data.get("clickable", False)),
        )


@dataclass
class ProbeReport:
    """Outputs of the in-page probe scripts; fields are null when a probe failed."""

    overlays_dismissed: int | None = None
    content_width_ok: bool | None = None
    has_viewport_meta: bool | None = None
    links: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "overlays_dismissed": self.overlays_dismissed,
            "content_width_ok": self.content_width_ok,
            "has_viewport_meta": self.has_viewport_meta,
            "links": list(self.links),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ProbeReport":
        return cls(
            overlays_dismissed=data.get("overlays_dismissed"),
            content_width_ok=data.get("content_width_ok"),
            has_viewport_meta=data.get("has_viewport_meta"),
            links=list(data.get("links", [])),
        )


def sample_id_for(url: str, device: str, captured_at: str) -> str:
    """Content hash identifying one (URL, device, timestamp) capture."""
    digest = hashlib.blake2b(
        f"{url}\n{device}\n{captured_at}".encode("utf-8"), digest_size=16
    )
    return digest.hexdigest()


@dataclass
class PageSample:
    """One capture of one URL under one device profile."""

    sample_id: str
    url: str
    registrable_domain: str
    device: str
    captured_at: str  # UTC ISO-8601
    viewport_image_ref: str
    fullpage_image_ref: str
    fullpage_truncated: bool
    axtree: list[AxNode]
    probe: ProbeReport | None = None
    timings: dict[str, float] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        url: str,
        device: str,
        captured_at: str,
        axtree: list[AxNode],
        *,
        fullpage_truncated: bool = False,
        probe: ProbeReport | None = None,
        timings: dict[str, float] | None = None,
        image_ext: str = "jpg",
    ) -> "PageSample":
        from .frontier import normalize_url  # late import to avoid a cycle

        domain = normalize_url(url).registrable_domain
        return cls(
            sample_id=sample_id_for(url, device, captured_at),
            url=url,
            registrable_domain=domain,
            device=device,
            captured_at=captured_at,
            viewport_image_ref=f"viewport.{image_ext}",
            fullpage_image_ref=f"fullpage.{image_ext}",
            fullpage_truncated=fullpage_truncated,
            axtree=axtree,
            probe=probe,
            timings=dict(timings or {}),
        )

    def meta_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "sample_id": self.sample_id,
            "url": self.url,
            "registrable_domain": self.registrable_domain,
            "device": self.device,
            "captured_at": self.captured_at,
            "viewport_image_ref": self.viewport_image_ref,
            "fullpage_image_ref": self.fullpage_image_ref,
            "fullpage_truncated": self.fullpage_truncated,
            "probe": None if self.probe is None else self.probe.to_json(),
            "timings": self.timings,
        }

    def axtree_json(self) -> list[dict]:
        return [node.to_json() for node in self.axtree]


def assign_split(domain: str, salt: str, ratios: tuple[float, float, float] = DEFAULT_RATIOS) -> str:
    """Deterministic train/val/test choice by hashing salt and domain."""
    if not domain:
        raise ValueError("registrable_domain must be non-empty")
    digest = hashlib.blake2b(f"{salt}\x00{domain}".encode("utf-8"), digest_size=8)
    u = int.from_bytes(digest.digest(), "big") / 2**64
    if u < ratios[0]:
        return "train"
    if u < ratios[0] + ratios[1]:
        return "val"
    return "test"


def _validate_axtree(nodes: list[AxNode]) -> None:
    if not nodes:
        raise SampleValidationError("axtree is empty")
    by_id = {}
    roots = 0
    for node in nodes:
        if node.node_id in by_id:
            raise SampleValidationError(f"duplicate node_id {node.node_id}")
        by_id[node.node_id] = node
        if node.parent_id is None:
            roots += 1
    if roots != 1:
        raise SampleValidationError(f"expected exactly one root, found {roots}")
    for node in nodes:
        if node.parent_id is not None and node.parent_id not in by_id:
            raise SampleValidationError(
                f"node {node.node_id} references missing parent {node.parent_id}"
            )
        if node.boxes is not None:
            for rect in node.boxes:
                if rect[2] < 0 or rect[3] < 0:
                    raise SampleValidationError(
                        f"node {node.node_id} has negative box dimensions"
                    )
    # cycle check: walking up from any node must terminate at the root
    for node in nodes:
        seen = set()
        cur = node
        while cur.parent_id is not None:
            if cur.node_id in seen:
                raise SampleValidationError(f"parent cycle through node {cur.node_id}")
            seen.add(cur.node_id)
            cur = by_id[cur.parent_id]


class DatasetStore:
    """Filesystem-backed sample store with a manifest of splits and subsets."""

    def __init__(
        self,
        root: str | Path,
        *,
        salt: str = "uiharvest-v1",
        ratios: tuple[float, float, float] = DEFAULT_RATIOS,
        create: bool = True,
    ):
        self.root = Path(root)
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1")
        manifest_path = self.root / "manifest.json"
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
            self.salt = manifest["salt"]
            self.ratios = tuple(manifest["ratios"])
            self.subsets: dict[str, list[str]] = dict(manifest.get("subsets", {}))
        else:
            if not create:
                raise StorageError(f"no dataset at {self.root}")
            self.salt = salt
            self.ratios = ratios
            self.subsets = {}
            self.root.mkdir(parents=True, exist_ok=True)
            self._write_manifest()
        self._index: dict[str, Path] = {}
        self._indexed = False

    # -- manifest ----------------------------------------------------------

    def _write_manifest(self) -> None:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "ratios": list(self.ratios),
            "salt": self.salt,
            "subsets": self.subsets,
        }
        tmp = self.root / "manifest.json.tmp"
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
        os.replace(tmp, self.root / "manifest.json")

    # -- writing -----------------------------------------------------------

    def split_for(self, domain: str) -> str:
        return assign_split(domain, self.salt, self.ratios)

    def sample_dir(self, sample: PageSample) -> Path:
        url_hash = hashlib.blake2b(sample.url.encode("utf-8"), digest_size=8).hexdigest()
        ts = sample.captured_at.replace(":", "").replace("+", "_")
        return (
            self.root
            / self.split_for(sample.registrable_domain)
            / sample.registrable_domain
            / url_hash
            / sample.device
            / ts
        )

    def put_sample(
        self,
        sample: PageSample,
        viewport_image: bytes,
        fullpage_image: bytes,
    ) -> str:
        """Write one sample atomically; idempotent on sample_id."""
        _validate_axtree(sample.axtree)
        final_dir = self.sample_dir(sample)
        if final_dir.exists():
            return sample.sample_id
        tmp_root = self.root / ".tmp"
        tmp_root.mkdir(parents=True, exist_ok=True)
        tmp_dir = tmp_root / f"{sample.sample_id}-{uuid.uuid4().hex[:8]}"
        try:
            tmp_dir.mkdir()
            (tmp_dir / "meta.json").write_text(
                json.dumps(sample.meta_json(), indent=1, sort_keys=True), encoding="utf-8"
            )
            (tmp_dir / "axtree.json").write_text(
                json.dumps(sample.axtree_json(), sort_keys=True), encoding="utf-8"
            )
            (tmp_dir / sample.viewport_image_ref).write_bytes(viewport_image)
            (tmp_dir / sample.fullpage_image_ref).write_bytes(fullpage_image)
            final_dir.parent.mkdir(parents=True, exist_ok=True)
            os.replace(tmp_dir, final_dir)
        except OSError as exc:
            shutil.rmtree(tmp_dir, ignore_errors=True)
            raise StorageError(f"failed to store sample {sample.sample_id}: {exc}") from exc
        if self._indexed:
            self._index[sample.sample_id] = final_dir
        return sample.sample_id

    # -- reading -----------------------------------------------------------

    def _iter_sample_dirs(self, split: str | None = None) -> Iterator[Path]:
        splits = [split] if split else list(SPLITS)
        for name in splits:
            split_dir = self.root / name
            if not split_dir.is_dir():
                continue
            for meta in sorted(split_dir.glob("*/*/*/*/meta.json")):
                yield meta.parent

    def _build_index(self) -> None:
        self._index = {}
        for sample_dir in self._iter_sample_dirs():
            try:
                meta = json.loads((sample_dir / "meta.json").read_text(encoding="utf-8"))
                self._index[meta["sample_id"]] = sample_dir
            except (OSError, ValueError, KeyError):
                continue  # unreadable entries surface via load_sample
        self._indexed = True

    def _load_from_dir(self, sample_dir: Path) -> PageSample:
        meta_path = sample_dir / "meta.json"
        axtree_path = sample_dir / "axtree.json"
        for required in (meta_path, axtree_path):
            if not required.exists():
                raise CorruptSampleError(f"missing {required}")
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            axtree_raw = json.loads(axtree_path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise CorruptSampleError(f"unreadable JSON under {sample_dir}: {exc}") from exc
        axtree = [AxNode.from_json(entry) for entry in axtree_raw]
        _validate_axtree(axtree)
        for ref_key in ("viewport_image_ref", "fullpage_image_ref"):
            ref = meta.get(ref_key)
            if not ref or not (sample_dir / ref).exists():
                raise CorruptSampleError(f"missing {sample_dir / (ref or ref_key)}")
        probe = None if meta.get("probe") is None else ProbeReport.from_json(meta["probe"])
        return PageSample(
            sample_id=meta["sample_id"],
            url=meta["url"],
            registrable_domain=meta["registrable_domain"],
            device=meta["device"],
            captured_at=meta["captured_at"],
            viewport_image_ref=meta["viewport_image_ref"],
            fullpage_image_ref=meta["fullpage_image_ref"],
            fullpage_truncated=bool(meta["fullpage_truncated"]),
            axtree=axtree,
            probe=probe,
            timings=dict(meta.get("timings", {})),
        )

    def load_sample(self, sample_id: str) -> PageSample:
        if not self._indexed or sample_id not in self._index:
            self._build_index()
        sample_dir = self._index.get(sample_id)
        if sample_dir is None:
            raise SampleNotFoundError(f"no sample {sample_id} under {self.root}")
        return self._load_from_dir(sample_dir)

    def image_path(self, sample: PageSample, which: str = "fullpage") -> Path:
        if not self._indexed:
            self._build_index()
        sample_dir = self._index.get(sample.sample_id)
        if sample_dir is None:
            raise SampleNotFoundError(f"no sample {sample.sample_id} under {self.root}")
        ref = sample.fullpage_image_ref if which == "fullpage" else sample.viewport_image_ref
        return sample_dir / ref

    def iter_samples(self, split: str | None = None) -> Iterator[PageSample]:
        for sample_dir in self._iter_sample_dirs(split):
            yield self._load_from_dir(sample_dir)

    def sample_ids(self, split: str | None = None) -> list[str]:
        ids = []
        for sample_dir in self._iter_sample_dirs(split):
            meta = json.loads((sample_dir / "meta.json").read_text(encoding="utf-8"))
            ids.append(meta["sample_id"])
        return ids

    def stats(self) -> dict:
        per_split = {name: 0 for name in SPLITS}
        domains = set()
        for name in SPLITS:
            for sample_dir in self._iter_sample_dirs(name):
                per_split[name] += 1
                domains.add(sample_dir.parent.parent.parent.name)
        return {
            "samples": sum(per_split.values()),
            "per_split": per_split,
            "domains": len(domains),
            "subsets": {name: len(ids) for name, ids in self.subsets.items()},
        }

    # -- subsets -----------------------------------------------------------

    def make_subset(self, name: str, n: int, rng: random.Random) -> list[str]:
        """Uniform sample without replacement from the train split."""
        train_ids = sorted(self.sample_ids("train"))
        if n > len(train_ids):
            raise SubsetSizeError(f"requested {n} of {len(train_ids)} train samples")
        chosen = sorted(rng.sample(train_ids, n))
        self.subsets[name] = chosen
        self._write_manifest()
        return chosen
