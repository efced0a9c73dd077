"""Crawl coordinator: leases URLs to workers and ingests their results.

All frontier mutations run inside one lock (single-writer), so any number
of worker clients can lease and submit concurrently. Leases carry a TTL;
an expired lease requeues its URL and late submissions for it are
rejected idempotently. State (frontier + open leases) snapshots to a
single JSON file via write-temp-then-rename.

HTTP surface (JSON bodies):
    POST /v1/lease   {"worker_id": ...} -> 200 TaskLease | 204 empty
    POST /v1/result  CrawlResult        -> 200 {"accepted": bool} | 410 stale
    GET  /v1/stats                      -> counters
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable

from .devices import default_profiles
from .errors import MalformedUrlError, RejectedSchemeError, SnapshotError, StaleLeaseError
from .frontier import Frontier, FrontierConfig, normalize_url

DEFAULT_LEASE_TTL_SECS = 480.0  # 8 min: outlives the 6-min page budget
SNAPSHOT_EVERY_COMPLETIONS = 500

RESULT_STATUSES = ("ok", "partial", "timeout", "nav_error")


@dataclass
class TaskLease:
    lease_id: str
    url: str
    device_plan: list[str]
    issued_at: float
    expires_at: float

    def to_json(self) -> dict:
        return {
            "lease_id": self.lease_id,
            "url": self.url,
            "device_plan": list(self.device_plan),
            "issued_at": self.issued_at,
            "expires_at": self.expires_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "TaskLease":
        return cls(
            lease_id=data["lease_id"],
            url=data["url"],
            device_plan=list(data["device_plan"]),
            issued_at=float(data["issued_at"]),
            expires_at=float(data["expires_at"]),
        )


@dataclass
class CrawlResult:
    lease_id: str
    status: str
    discovered_urls: list[str] = field(default_factory=list)
    sample_refs: list[str] = field(default_factory=list)
    per_device_status: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if self.status not in RESULT_STATUSES:
            raise ValueError(f"unknown result status {self.status!r}")
        has_samples = bool(self.sample_refs)
        if has_samples != (self.status in ("ok", "partial")):
            raise ValueError(
                f"sample_refs {'present' if has_samples else 'absent'} "
                f"contradicts status {self.status!r}"
            )

    def to_json(self) -> dict:
        return {
            "lease_id": self.lease_id,
            "status": self.status,
            "discovered_urls": list(self.discovered_urls),
            "sample_refs": list(self.sample_refs),
            "per_device_status": dict(self.per_device_status),
        }

    @classmethod
    def from_json(cls, data: dict) -> "CrawlResult":
        return cls(
            lease_id=data["lease_id"],
            status=data["status"],
            discovered_urls=list(data.get("discovered_urls", [])),
            sample_refs=list(data.get("sample_refs", [])),
            per_device_status=dict(data.get("per_device_status", {})),
        )


class CrawlCoordinator:
    """Serializes all frontier mutations behind one lock."""

    def __init__(
        self,
        frontier: Frontier,
        *,
        lease_ttl_secs: float = DEFAULT_LEASE_TTL_SECS,
        device_plan: list[str] | None = None,
        snapshot_path: str | Path | None = None,
        snapshot_every: int = SNAPSHOT_EVERY_COMPLETIONS,
        clock: Callable[[], float] = time.time,
    ):
        self._lock = threading.Lock()
        self.frontier = frontier
        self.lease_ttl_secs = lease_ttl_secs
        self.device_plan = device_plan or [p.name for p in default_profiles()]
        self.snapshot_path = Path(snapshot_path) if snapshot_path else None
        self.snapshot_every = snapshot_every
        self.clock = clock
        self._open: dict[str, TaskLease] = {}
        self._closed_leases: set[str] = set()
        self.completed = 0
        self.malformed_discoveries = 0

    # -- lease lifecycle ---------------------------------------------------

    def _expire_stale_locked(self, now: float) -> None:
        expired = [lease for lease in self._open.values() if lease.expires_at <= now]
        for lease in expired:
            del self._open[lease.lease_id]
            self._closed_leases.add(lease.lease_id)
            self.frontier.release(lease.url)

    def lease_task(self, worker_id: str) -> TaskLease | None:
        now = self.clock()
        with self._lock:
            self._expire_stale_locked(now)
            record = self.frontier.next_url()
            if record is None:
                return None
            lease = TaskLease(
                lease_id=uuid.uuid4().hex,
                url=record.url,
                device_plan=list(self.device_plan),
                issued_at=now,
                expires_at=now + self.lease_ttl_secs,
            )
            self._open[lease.lease_id] = lease
            return lease

    def submit_result(self, result: CrawlResult) -> bool:
        """Close a lease. False for duplicate/expired leases (idempotent).

        Raises StaleLeaseError for a lease id that was never issued.
        """
        result.validate()
        now = self.clock()
        with self._lock:
            self._expire_stale_locked(now)
            lease = self._open.pop(result.lease_id, None)
            if lease is None:
                if result.lease_id in self._closed_leases:
                    return False
                raise StaleLeaseError(f"lease {result.lease_id} was never issued")
            self._closed_leases.add(result.lease_id)
            self.frontier.mark_visited(lease.url)
            for raw in result.discovered_urls:
                try:
                    record = normalize_url(raw, base=lease.url)
                except (MalformedUrlError, RejectedSchemeError):
                    self.malformed_discoveries += 1
                    continue
                self.frontier.enqueue(record)
            self.completed += 1
            if (
                self.snapshot_path is not None
                and self.completed % self.snapshot_every == 0
            ):
                self._snapshot_locked(self.snapshot_path)
            return True

    # -- introspection -----------------------------------------------------

    def stats(self) -> dict:
        with self._lock:
            counts = self.frontier.counts()
            return {
                "visited": counts["visited"],
                "queued": counts["queued"],
                "leased": counts["leased"],
                "open_leases": len(self._open),
                "completed": self.completed,
                "malformed_discoveries": self.malformed_discoveries,
                "per_host_queued": self.frontier.per_host_queued(),
            }

    def open_leases(self) -> list[TaskLease]:
        with self._lock:
            return list(self._open.values())

    # -- persistence -------------------------------------------------------

    def _snapshot_locked(self, path: Path) -> None:
        payload = {
            "schema_version": 1,
            "frontier": self.frontier.dumps(),
            "leases": [lease.to_json() for lease in self._open.values()],
            "closed_lease_ids": sorted(self._closed_leases),
            "completed": self.completed,
        }
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_text(json.dumps(payload), encoding="utf-8")
            os.replace(tmp, path)
        except OSError as exc:
            raise SnapshotError(f"snapshot to {path} failed: {exc}") from exc

    def snapshot_state(self, path: str | Path | None = None) -> None:
        path = Path(path) if path else self.snapshot_path
        if path is None:
            raise SnapshotError("no snapshot path configured")
        with self._lock:
            self._snapshot_locked(path)

    @classmethod
    def restore(
        cls,
        path: str | Path,
        config: FrontierConfig | None = None,
        *,
        rng=None,
        clock: Callable[[], float] = time.time,
        **kwargs,
    ) -> "CrawlCoordinator":
        """Rebuild coordinator state from a snapshot.

        Open leases are reattached; any leased URL whose lease is missing
        or already expired returns to the queue.
        """
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
        frontier = Frontier.loads(payload["frontier"], config, rng)
        coordinator = cls(frontier, clock=clock, snapshot_path=path, **kwargs)
        coordinator._closed_leases = set(payload.get("closed_lease_ids", []))
        coordinator.completed = int(payload.get("completed", 0))
        now = clock()
        live_urls = set()
        for entry in payload.get("leases", []):
            lease = TaskLease.from_json(entry)
            if lease.expires_at > now:
                coordinator._open[lease.lease_id] = lease
                live_urls.add(lease.url)
            else:
                coordinator._closed_leases.add(lease.lease_id)
        for url in frontier.leased_urls():
            if url not in live_urls:
                frontier.release(url)
        return coordinator


# -- HTTP layer ------------------------------------------------------------


def _make_handler(coordinator: CrawlCoordinator):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send_json(self, status: int, payload: dict | None) -> None:
            body = b"" if payload is None else json.dumps(payload).encode("utf-8")
            self.send_response(status)
            if body:
                self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            if body:
                self.wfile.write(body)

        def _read_json(self) -> dict:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length) if length else b"{}"
            return json.loads(raw or b"{}")

        def do_GET(self):
            if self.path == "/v1/stats":
                self._send_json(200, coordinator.stats())
            else:
                self._send_json(404, {"error": "not found"})

        def do_POST(self):
            try:
                body = self._read_json()
            except ValueError:
                self._send_json(400, {"error": "invalid JSON"})
                return
            if self.path == "/v1/lease":
                lease = coordinator.lease_task(str(body.get("worker_id", "")))
                if lease is None:
                    self._send_json(204, None)
                else:
                    self._send_json(200, lease.to_json())
            elif self.path == "/v1/result":
                try:
                    result = CrawlResult.from_json(body)
                    accepted = coordinator.submit_result(result)
                except StaleLeaseError as exc:
                    self._send_json(410, {"error": "stale-lease", "detail": str(exc)})
                except (KeyError, ValueError) as exc:
                    self._send_json(400, {"error": "bad result", "detail": str(exc)})
                else:
                    self._send_json(200, {"accepted": accepted})
            else:
                self._send_json(404, {"error": "not found"})

    return Handler


class CoordinatorServer:
    """ThreadingHTTPServer wrapper with clean startup/shutdown."""

    def __init__(self, coordinator: CrawlCoordinator, host: str = "127.0.0.1", port: int = 0):
        self.coordinator = coordinator
        self.httpd = ThreadingHTTPServer((host, port), _make_handler(coordinator))
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "CoordinatorServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
        if self.coordinator.snapshot_path is not None:
            self.coordinator.snapshot_state()
