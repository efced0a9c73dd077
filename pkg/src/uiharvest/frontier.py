"""URL frontier implementing the diversity-weighted, host-uniform crawl policy.

The frontier keeps one queue per hostname. A lease draw first picks a
hostname uniformly at random among hosts with queued URLs, then picks a
URL within that host with probability proportional to its weight. A URL's
weight is ``max(p_min, 1 - similarity)`` where similarity is the longest
common path-segment prefix ratio against same-host visited URLs, so
self-similar URL families (crawler traps) lose within-host priority while
host uniformity caps any single site's share of the crawl.

Randomness contract (relied on by the deterministic replay tests):
host selection consumes one ``rng.randrange(len(hosts))`` over the
lexicographically sorted non-empty hosts; URL selection consumes one
``rng.random()`` scanned against cumulative weights in queue order;
a revisit lottery consumes one ``rng.random()`` per enqueue of a
visited URL.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable
from urllib.parse import parse_qsl, urlencode, urljoin, urlsplit

from .domains import registrable_domain
from .errors import MalformedUrlError, RejectedSchemeError, SnapshotError

QUEUED = "queued"
LEASED = "leased"
VISITED = "visited"
_STATES = (QUEUED, LEASED, VISITED)

_ALLOWED_SCHEMES = {"http", "https"}
_DEFAULT_PORTS = {"http": 80, "https": 443}


@dataclass
class UrlRecord:
    """One normalized URL plus its frontier state and sampling weight."""

    url: str
    host: str
    registrable_domain: str
    path_segments: tuple[str, ...]
    state: str = QUEUED
    weight: float = 1.0


@dataclass
class FrontierConfig:
    p_min: float = 0.05
    max_queued_per_host: int = 1000
    seed_urls: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not (0.0 < self.p_min <= 1.0):
            raise ValueError("p_min must be in (0, 1]")
        if self.max_queued_per_host < 1:
            raise ValueError("max_queued_per_host must be >= 1")


def normalize_url(raw: str, base: str | None = None) -> UrlRecord:
    """Parse raw text into a normalized UrlRecord.

    Lowercases scheme and host, strips default ports, drops the fragment,
    keeps the path case-sensitive, and sorts query parameters by key so
    equivalent faceted URLs share one identity. Relative URLs resolve
    against ``base``.
    """
    if raw is None or not raw.strip():
        raise MalformedUrlError("empty URL")
    text = raw.strip()
    try:
        if base:
            text = urljoin(base, text)
        parts = urlsplit(text)
    except ValueError as exc:
        raise MalformedUrlError(f"unparseable URL {raw!r}: {exc}") from exc
    scheme = parts.scheme.lower()
    if not scheme:
        raise MalformedUrlError(f"relative URL without base: {raw!r}")
    if scheme not in _ALLOWED_SCHEMES:
        raise RejectedSchemeError(f"scheme {scheme!r} is not crawlable: {raw!r}")
    try:
        host = parts.hostname
        port = parts.port
    except ValueError as exc:
        raise MalformedUrlError(f"bad host/port in {raw!r}: {exc}") from exc
    if not host:
        raise MalformedUrlError(f"URL has no hostname: {raw!r}")
    netloc = host
    if port is not None and port != _DEFAULT_PORTS[scheme]:
        netloc = f"{host}:{port}"
    path = parts.path or "/"
    query = ""
    if parts.query:
        pairs = sorted(parse_qsl(parts.query, keep_blank_values=True))
        query = urlencode(pairs)
    url = f"{scheme}://{netloc}{path}"
    if query:
        url += f"?{query}"
    segments = tuple(seg for seg in path.split("/") if seg)
    if query:
        segments += (query,)
    return UrlRecord(
        url=url,
        host=netloc,
        registrable_domain=registrable_domain(host),
        path_segments=segments,
    )


def path_similarity(candidate: UrlRecord, visited_same_host: Iterable[UrlRecord]) -> float:
    """Max common-prefix ratio of path segments against same-host visited URLs.

    Returns 0 when nothing on the host was visited; two empty paths count
    as identical (similarity 1).
    """
    cand = candidate.path_segments
    best = 0.0
    for visited in visited_same_host:
        other = visited.path_segments
        if not cand and not other:
            return 1.0
        denom = max(len(cand), len(other))
        lcp = 0
        for a, b in zip(cand, other):
            if a != b:
                break
            lcp += 1
        ratio = lcp / denom
        if ratio > best:
            best = ratio
            if best >= 1.0:
                break
    return best


def url_weight(similarity: float, cfg: FrontierConfig) -> float:
    """Sampling weight for a URL given its similarity to the visited set."""
    if not (0.0 <= similarity <= 1.0):
        raise ValueError("similarity must be in [0, 1]")
    return max(cfg.p_min, 1.0 - similarity)


class Frontier:
    """Per-host queues with weighted in-host sampling and a visited set.

    Not internally thread-safe: the coordinator serializes all mutations.
    """

    def __init__(self, config: FrontierConfig | None = None, rng: random.Random | None = None):
        self.config = config or FrontierConfig()
        self._rng = rng if rng is not None else random.Random()
        self._records: dict[str, UrlRecord] = {}
        self._queues: dict[str, list[UrlRecord]] = {}
        self._visited_by_host: dict[str, list[UrlRecord]] = {}
        self.rejected_seeds = 0
        for seed in self.config.seed_urls:
            try:
                self.enqueue(normalize_url(seed))
            except (MalformedUrlError, RejectedSchemeError):
                self.rejected_seeds += 1

    # -- policy -----------------------------------------------------------

    def enqueue(self, record: UrlRecord) -> bool:
        """Store a normalized record unless policy rejects it.

        Rejections: already queued or leased; host queue full; or the URL
        was visited and the revisit lottery (one uniform draw against the
        freshly computed weight, floored at p_min) fails.
        """
        existing = self._records.get(record.url)
        if existing is not None and existing.state in (QUEUED, LEASED):
            return False
        queue = self._queues.setdefault(record.host, [])
        if len(queue) >= self.config.max_queued_per_host:
            return False
        sim = path_similarity(record, self._visited_by_host.get(record.host, ()))
        weight = url_weight(sim, self.config)
        if existing is not None:  # visited before: revisit lottery
            if self._rng.random() >= weight:
                return False
            self._visited_by_host[existing.host].remove(existing)
            existing.state = QUEUED
            existing.weight = weight
            queue.append(existing)
            return True
        record.state = QUEUED
        record.weight = weight
        self._records[record.url] = record
        queue.append(record)
        return True

    def next_url(self, rng: random.Random | None = None) -> UrlRecord | None:
        """Lease one URL: uniform host pick, then weight-proportional URL pick."""
        rng = rng if rng is not None else self._rng
        hosts = sorted(host for host, queue in self._queues.items() if queue)
        if not hosts:
            return None
        host = hosts[rng.randrange(len(hosts))]
        queue = self._queues[host]
        total = sum(rec.weight for rec in queue)
        pick = rng.random() * total
        chosen = len(queue) - 1
        acc = 0.0
        for i, rec in enumerate(queue):
            acc += rec.weight
            if pick < acc:
                chosen = i
                break
        record = queue.pop(chosen)
        record.state = LEASED
        return record

    def mark_visited(self, url: str) -> None:
        """Transition a known URL to visited (normally from leased)."""
        record = self._records[url]
        if record.state == QUEUED:
            self._queues[record.host].remove(record)
        if record.state != VISITED:
            record.state = VISITED
            self._visited_by_host.setdefault(record.host, []).append(record)

    def release(self, url: str) -> None:
        """Requeue a leased URL (lease expiry); weight is preserved."""
        record = self._records[url]
        if record.state != LEASED:
            return
        record.state = QUEUED
        self._queues.setdefault(record.host, []).append(record)

    # -- introspection ----------------------------------------------------

    def record(self, url: str) -> UrlRecord | None:
        return self._records.get(url)

    def counts(self) -> dict[str, int]:
        states = {QUEUED: 0, LEASED: 0, VISITED: 0}
        for record in self._records.values():
            states[record.state] += 1
        return states

    def per_host_queued(self) -> dict[str, int]:
        return {host: len(queue) for host, queue in self._queues.items() if queue}

    def leased_urls(self) -> list[str]:
        return [r.url for r in self._records.values() if r.state == LEASED]

    def __len__(self) -> int:
        return len(self._records)

    # -- snapshot format: "state \t weight \t url" per line ---------------

    def dumps(self) -> str:
        """Serialize as line-delimited ``state \\t weight \\t url`` records.

        Queued records come first in per-host queue order so a reload
        reproduces the same within-host draw order.
        """
        lines = []
        for host in sorted(self._queues):
            for rec in self._queues[host]:
                lines.append(f"{rec.state}\t{rec.weight!r}\t{rec.url}")
        for rec in sorted(self._records.values(), key=lambda r: r.url):
            if rec.state != QUEUED:
                lines.append(f"{rec.state}\t{rec.weight!r}\t{rec.url}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def loads(
        cls,
        text: str,
        config: FrontierConfig | None = None,
        rng: random.Random | None = None,
    ) -> "Frontier":
        frontier = cls(config or FrontierConfig(), rng)
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                state, weight_text, url = line.split("\t", 2)
                weight = float(weight_text)
            except ValueError as exc:
                raise SnapshotError(f"bad snapshot line {lineno}: {line!r}") from exc
            if state not in _STATES:
                raise SnapshotError(f"unknown state {state!r} on line {lineno}")
            record = normalize_url(url)
            record.state = state
            record.weight = weight
            frontier._records[record.url] = record
            if state == QUEUED:
                frontier._queues.setdefault(record.host, []).append(record)
            elif state == VISITED:
                frontier._visited_by_host.setdefault(record.host, []).append(record)
        return frontier

    def snapshot(self, path: str | Path) -> None:
        """Atomically write the snapshot (temp file + rename)."""
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_text(self.dumps(), encoding="utf-8")
            os.replace(tmp, path)
        except OSError as exc:
            raise SnapshotError(f"snapshot to {path} failed: {exc}") from exc

    @classmethod
    def load(
        cls,
        path: str | Path,
        config: FrontierConfig | None = None,
        rng: random.Random | None = None,
    ) -> "Frontier":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
        return cls.loads(text, config, rng)
