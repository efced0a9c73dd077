"""Crawl worker: renders a leased URL under each device profile.

The worker drives a browser session (real sessions speak the remote
debugging protocol; tests substitute fakes) through a fixed device order
until the per-URL time budget runs out. Each device capture produces a
PageSample: two screenshots, the parsed accessibility tree with box-model
geometry and computed style, probe outputs, and phase timings.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Protocol, Sequence

import requests
from PIL import Image

from .coordinator import CrawlResult, TaskLease
from .devices import DeviceProfile, default_profiles, profiles_by_name
from .errors import (
    AxTreeParseError,
    BrowserUnreachableError,
    DeviceCaptureError,
    MalformedUrlError,
    RejectedSchemeError,
    ScreenshotError,
)
from .frontier import normalize_url
from .geometry import rect_from_quad
from .store import STYLE_KEYS, AxNode, BoxSet, DatasetStore, PageSample, ProbeReport

FULLPAGE_HEIGHT_CAP_PX = 20_000
BUDGET_GRACE_SECS = 10.0


@dataclass(frozen=True)
class CaptureBudget:
    """Per-URL time budget; devices are attempted in order until it expires."""

    total_secs: float = 360.0
    per_device_nav_secs: float = 45.0
    settle_quiescence_secs: float = 2.0
    fullpage_height_cap: int = FULLPAGE_HEIGHT_CAP_PX


class BrowserSession(Protocol):
    """What the worker needs from a browser; one page/tab per session."""

    def set_device(self, profile: DeviceProfile) -> None: ...

    def navigate(self, url: str, timeout_secs: float) -> None: ...

    def settle(self, quiescence_secs: float, max_wait_secs: float) -> None: ...

    def evaluate(self, script: str): ...

    def viewport_screenshot(self) -> bytes: ...

    def fullpage_screenshot(self, height_cap: int) -> tuple[bytes, bool]: ...

    def axtree_payload(self) -> dict: ...

    def close(self) -> None: ...


@dataclass
class ProbeScripts:
    """Sources of the three injected probe scripts, evaluated verbatim."""

    dismiss_overlays: str
    measure_responsiveness: str
    collect_links: str

    FILENAMES = (
        "dismiss_overlays.js",
        "measure_responsiveness.js",
        "collect_links.js",
    )

    @classmethod
    def load_dir(cls, directory: str | Path) -> "ProbeScripts":
        directory = Path(directory)
        texts = []
        for name in cls.FILENAMES:
            path = directory / name
            if not path.exists():
                raise FileNotFoundError(f"probe script missing: {path}")
            texts.append(path.read_text(encoding="utf-8"))
        return cls(*texts)


# -- accessibility payload parsing ----------------------------------------


def _resolve_parent(raw_id: str | None, raw_by_id: dict, kept_ids: dict) -> int | None:
    """Nearest non-ignored ancestor's new id, skipping ignored links."""
    current = raw_id
    while current is not None:
        if current in kept_ids:
            return kept_ids[current]
        parent = raw_by_id.get(current, {}).get("parentId")
        current = parent
    return None


def _parse_boxes(entry) -> BoxSet | None:
    try:
        return BoxSet(
            rect_from_quad(entry["content"]),
            rect_from_quad(entry["padding"]),
            rect_from_quad(entry["border"]),
            rect_from_quad(entry["margin"]),
        )
    except (KeyError, TypeError, ValueError):
        return None


def _is_clickable(raw: dict) -> bool:
    for prop in raw.get("properties", []) or []:
        if prop.get("name") == "clickable":
            value = prop.get("value", {})
            return bool(value.get("value", False))
    return False


def parse_axtree(payload: dict) -> list[AxNode]:
    """Turn raw tree + geometry + style payloads into AxNodes.

    Ignored accessibility objects are dropped (children reattach to the
    nearest kept ancestor). Nodes with missing or malformed geometry keep
    null boxes rather than failing the capture.
    """
    if not isinstance(payload, dict):
        raise AxTreeParseError("payload is not an object")
    tree = payload.get("axtree")
    if not isinstance(tree, dict) or not isinstance(tree.get("nodes"), list):
        raise AxTreeParseError("payload is missing the accessibility tree")
    raw_nodes = tree["nodes"]
    geometry = payload.get("geometry", {}) or {}
    styles = payload.get("styles", {}) or {}

    raw_by_id = {str(raw.get("nodeId")): raw for raw in raw_nodes}
    kept_ids: dict[str, int] = {}
    kept_raw: list[dict] = []
    for raw in raw_nodes:
        if raw.get("ignored"):
            continue
        kept_ids[str(raw.get("nodeId"))] = len(kept_raw)
        kept_raw.append(raw)

    nodes: list[AxNode] = []
    for new_id, raw in enumerate(kept_raw):
        backend_id = raw.get("backendDOMNodeId")
        backend_key = None if backend_id is None else str(backend_id)
        boxes = None
        if backend_key is not None and backend_key in geometry:
            boxes = _parse_boxes(geometry[backend_key])
        style_entry = styles.get(backend_key, {}) if backend_key is not None else {}
        style = {k: str(style_entry[k]) for k in STYLE_KEYS if k in style_entry}
        name_value = (raw.get("name") or {}).get("value")
        nodes.append(
            AxNode(
                node_id=new_id,
                parent_id=_resolve_parent(raw.get("parentId"), raw_by_id, kept_ids),
                role=(raw.get("role") or {}).get("value") or "unknown",
                name=name_value if name_value else None,
                dom_index=new_id,
                boxes=boxes,
                style=style,
                clickable=_is_clickable(raw),
            )
        )
    return nodes


# -- capture ----------------------------------------------------------------


def _utcnow_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def _expect_viewport_pixels(image_bytes: bytes, profile: DeviceProfile) -> None:
    width, height = Image.open(io.BytesIO(image_bytes)).size
    expected = (
        round(profile.viewport_width * profile.device_scale),
        round(profile.viewport_height * profile.device_scale),
    )
    if (width, height) != expected:
        raise ScreenshotError(
            f"viewport screenshot is {width}x{height}, expected {expected[0]}x{expected[1]}"
        )


@dataclass
class CaptureArtifacts:
    sample: PageSample
    viewport_image: bytes
    fullpage_image: bytes
    links: list[str]


def _run_probes(session: BrowserSession, probes: ProbeScripts) -> tuple[ProbeReport, list[str]]:
    report = ProbeReport()
    try:
        report.overlays_dismissed = int(session.evaluate(probes.dismiss_overlays))
    except Exception:
        report.overlays_dismissed = None
    try:
        values = session.evaluate(probes.measure_responsiveness)
        report.content_width_ok = bool(values["content_width_ok"])
        report.has_viewport_meta = bool(values["has_viewport_meta"])
    except Exception:
        report.content_width_ok = None
        report.has_viewport_meta = None
    links: list[str] = []
    try:
        links = [str(href) for href in session.evaluate(probes.collect_links)]
        report.links = links
    except Exception:
        report.links = []
    return report, links


def capture_page(
    session: BrowserSession,
    url: str,
    profile: DeviceProfile,
    budget: CaptureBudget,
    *,
    deadline: float | None = None,
    clock: Callable[[], float] = time.monotonic,
    probes: ProbeScripts | None = None,
    timestamper: Callable[[], str] = _utcnow_iso,
) -> CaptureArtifacts:
    """Capture one (URL, device) sample; raises DeviceCaptureError on failure."""
    started = clock()
    if deadline is None:
        deadline = started + budget.total_secs
    timings: dict[str, float] = {}

    session.set_device(profile)
    nav_window = min(budget.per_device_nav_secs, deadline - clock())
    if nav_window <= 0:
        raise DeviceCaptureError("no time left in the URL budget")
    t = clock()
    session.navigate(url, nav_window)
    timings["navigate_ms"] = (clock() - t) * 1000.0

    t = clock()
    settle_window = min(budget.per_device_nav_secs, max(0.0, deadline - clock()))
    session.settle(budget.settle_quiescence_secs, settle_window)
    timings["settle_ms"] = (clock() - t) * 1000.0

    probe_report = None
    links: list[str] = []
    if probes is not None:
        t = clock()
        probe_report, links = _run_probes(session, probes)
        timings["probes_ms"] = (clock() - t) * 1000.0

    t = clock()
    viewport_image = session.viewport_screenshot()
    _expect_viewport_pixels(viewport_image, profile)
    fullpage_image, truncated = session.fullpage_screenshot(budget.fullpage_height_cap)
    timings["screenshots_ms"] = (clock() - t) * 1000.0

    t = clock()
    axtree = parse_axtree(session.axtree_payload())
    timings["axtree_ms"] = (clock() - t) * 1000.0
    timings["total_ms"] = (clock() - started) * 1000.0

    sample = PageSample.build(
        url,
        profile.name,
        timestamper(),
        axtree,
        fullpage_truncated=truncated,
        probe=probe_report,
        timings=timings,
    )
    return CaptureArtifacts(sample, viewport_image, fullpage_image, links)


def _resolve_links(raw_links: Sequence[str], base_url: str) -> list[str]:
    resolved: list[str] = []
    seen: set[str] = set()
    for href in raw_links:
        try:
            record = normalize_url(href, base=base_url)
        except (MalformedUrlError, RejectedSchemeError):
            continue
        if record.url not in seen:
            seen.add(record.url)
            resolved.append(record.url)
    return resolved


def crawl_url(
    session: BrowserSession,
    lease: TaskLease,
    budget: CaptureBudget,
    *,
    profiles: dict[str, DeviceProfile] | None = None,
    clock: Callable[[], float] = time.monotonic,
    probes: ProbeScripts | None = None,
    timestamper: Callable[[], str] = _utcnow_iso,
) -> tuple[CrawlResult, list[CaptureArtifacts]]:
    """Capture the leased URL on every planned device within the budget."""
    profiles = profiles if profiles is not None else profiles_by_name()
    started = clock()
    deadline = started + budget.total_secs
    artifacts: list[CaptureArtifacts] = []
    links: list[str] = []
    seen_links: set[str] = set()
    per_device_status: dict[str, str] = {}
    unreachable = False

    for name in lease.device_plan:
        profile = profiles.get(name)
        if profile is None:
            per_device_status[name] = "error"
            continue
        if clock() >= deadline:
            per_device_status[name] = "skipped"
            continue
        try:
            captured = capture_page(
                session,
                lease.url,
                profile,
                budget,
                deadline=deadline,
                clock=clock,
                probes=probes,
                timestamper=timestamper,
            )
        except BrowserUnreachableError:
            per_device_status[name] = "error"
            unreachable = True
            break
        except DeviceCaptureError:
            per_device_status[name] = "error"
            continue
        artifacts.append(captured)
        per_device_status[name] = "ok"
        for url in _resolve_links(captured.links, lease.url):
            if url not in seen_links:
                seen_links.add(url)
                links.append(url)

    captured_count = sum(1 for s in per_device_status.values() if s == "ok")
    if captured_count == len(lease.device_plan):
        status = "ok"
    elif captured_count > 0:
        status = "partial"
    elif unreachable or clock() < deadline:
        status = "nav_error"
    else:
        status = "timeout"
    result = CrawlResult(
        lease_id=lease.lease_id,
        status=status,
        discovered_urls=links,
        sample_refs=[a.sample.sample_id for a in artifacts],
        per_device_status=per_device_status,
    )
    return result, artifacts


class WorkerClient:
    """Lease-crawl-upload loop against a coordinator over HTTP."""

    def __init__(
        self,
        coordinator_url: str,
        session_factory: Callable[[], BrowserSession],
        store: DatasetStore,
        *,
        worker_id: str = "worker-1",
        budget: CaptureBudget | None = None,
        profiles: dict[str, DeviceProfile] | None = None,
        probes: ProbeScripts | None = None,
        clock: Callable[[], float] = time.monotonic,
        timestamper: Callable[[], str] = _utcnow_iso,
    ):
        self.coordinator_url = coordinator_url.rstrip("/")
        self.session_factory = session_factory
        self.store = store
        self.worker_id = worker_id
        self.budget = budget or CaptureBudget()
        self.profiles = profiles if profiles is not None else profiles_by_name()
        self.probes = probes
        self.clock = clock
        self.timestamper = timestamper

    def _lease(self) -> TaskLease | None:
        response = requests.post(
            f"{self.coordinator_url}/v1/lease",
            json={"worker_id": self.worker_id},
            timeout=30,
        )
        if response.status_code == 204:
            return None
        response.raise_for_status()
        return TaskLease.from_json(response.json())

    def _submit(self, result: CrawlResult) -> bool:
        response = requests.post(
            f"{self.coordinator_url}/v1/result", json=result.to_json(), timeout=30
        )
        response.raise_for_status()
        return bool(response.json().get("accepted"))

    def run_once(self) -> bool:
        """Process one lease; returns False when the frontier is exhausted."""
        lease = self._lease()
        if lease is None:
            return False
        try:
            session = self.session_factory()
        except Exception:
            self._submit(
                CrawlResult(
                    lease_id=lease.lease_id,
                    status="nav_error",
                    per_device_status={name: "error" for name in lease.device_plan},
                )
            )
            return True
        try:
            result, artifacts = crawl_url(
                session,
                lease,
                self.budget,
                profiles=self.profiles,
                clock=self.clock,
                probes=self.probes,
                timestamper=self.timestamper,
            )
        finally:
            try:
                session.close()
            except Exception:
                pass
        for captured in artifacts:
            self.store.put_sample(
                captured.sample, captured.viewport_image, captured.fullpage_image
            )
        self._submit(result)
        return True

    def run(self, max_leases: int | None = None) -> int:
        """Run until the frontier drains (or max_leases); returns leases done."""
        done = 0
        while max_leases is None or done < max_leases:
            if not self.run_once():
                break
            done += 1
        return done
