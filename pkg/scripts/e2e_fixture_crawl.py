#!/usr/bin/env python3
"""End-to-end crawl of the local fixture site with a live browser.

Stands up the fixture site and a coordinator in-process, runs one worker
against a real remote-debugging browser endpoint, then checks:
  - 20 URLs x 6 profiles produce at least 110 samples within budget
  - viewport images match profile dimensions exactly
  - the cookie-banner fixture reports overlays_dismissed == 1
  - the responsiveness fixtures report (true,true) / (false,.) / (.,false)
  - total runtime under 15 minutes

Needs a Chromium-family browser. Either pass --browser-endpoint for one
already running with --remote-debugging-port, or let the script launch
the binary named by --browser-bin (default: try common names).

Exit codes: 0 all checks pass, 1 a check failed, 3 no browser available.
"""

from __future__ import annotations

import argparse
import random
import shutil
import subprocess
import sys
import time
from pathlib import Path

import requests

sys.path.insert(0, str(Path(__file__).resolve().parent))
from fixture_site import serve as serve_fixture_site

from uiharvest.cdp import CdpSession
from uiharvest.coordinator import CoordinatorServer, CrawlCoordinator
from uiharvest.devices import default_profiles
from uiharvest.frontier import Frontier, FrontierConfig, normalize_url
from uiharvest.pairgen import _as_image
from uiharvest.store import DatasetStore
from uiharvest.worker import CaptureBudget, ProbeScripts, WorkerClient

BROWSER_NAMES = ("chromium", "chromium-browser", "google-chrome", "chrome", "headless_shell")


def launch_browser(binary: str | None, port: int) -> subprocess.Popen | None:
    candidates = [binary] if binary else list(BROWSER_NAMES)
    for name in candidates:
        path = shutil.which(name) if name else None
        if not path:
            continue
        proc = subprocess.Popen(
            [
                path,
                "--headless=new",
                f"--remote-debugging-port={port}",
                "--no-sandbox",
                "--disable-gpu",
                "--no-first-run",
            ],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        for _ in range(50):
            try:
                requests.get(f"http://127.0.0.1:{port}/json/version", timeout=1)
                return proc
            except requests.RequestException:
                time.sleep(0.2)
        proc.terminate()
    return None


def check(name: str, ok: bool, details: str = "") -> bool:
    print(f"  [{'PASS' if ok else 'FAIL'}] {name}" + (f" ({details})" if details else ""))
    return ok


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--browser-endpoint", help="already-running debugging URL")
    parser.add_argument("--browser-bin", help="browser binary to launch")
    parser.add_argument("--debug-port", type=int, default=9555)
    parser.add_argument("--dataset", default="e2e-dataset")
    parser.add_argument(
        "--probes",
        default=str(Path(__file__).resolve().parent.parent / "probes" / "dist"),
        help="directory holding the three compiled probe scripts",
    )
    parser.add_argument("--budget-secs", type=float, default=360.0)
    args = parser.parse_args()

    browser_proc = None
    endpoint = args.browser_endpoint
    if not endpoint:
        browser_proc = launch_browser(args.browser_bin, args.debug_port)
        if browser_proc is None:
            print("no browser binary found and no --browser-endpoint given", file=sys.stderr)
            return 3
        endpoint = f"http://127.0.0.1:{args.debug_port}"

    site = serve_fixture_site(0)
    site_port = site.server_address[1]
    import threading

    threading.Thread(target=site.serve_forever, daemon=True).start()
    base = f"http://127.0.0.1:{site_port}"

    frontier = Frontier(FrontierConfig(p_min=0.05), random.Random(0))
    frontier.enqueue(normalize_url(f"{base}/"))
    coordinator = CrawlCoordinator(frontier)
    coord_server = CoordinatorServer(coordinator, port=0).start()

    probes = None
    if Path(args.probes).is_dir():
        probes = ProbeScripts.load_dir(args.probes)
    else:
        print(f"  note: probes dir {args.probes} missing; probe checks will fail")

    store = DatasetStore(args.dataset, salt="e2e")
    worker = WorkerClient(
        coord_server.address,
        lambda: CdpSession(endpoint),
        store,
        budget=CaptureBudget(total_secs=args.budget_secs),
        probes=probes,
    )

    started = time.monotonic()
    leases = worker.run(max_leases=20)
    elapsed = time.monotonic() - started

    samples = list(store.iter_samples())
    ok = True
    ok &= check("leases completed", leases >= 1, f"{leases} leases")
    ok &= check(
        "sample volume", len(samples) >= min(110, leases * 6),
        f"{len(samples)} samples from {leases} URLs",
    )

    profiles = {p.name: p for p in default_profiles()}
    dims_ok = True
    for sample in samples:
        profile = profiles[sample.device]
        image = _as_image(store.image_path(sample, "viewport"))
        expected = (
            round(profile.viewport_width * profile.device_scale),
            round(profile.viewport_height * profile.device_scale),
        )
        if image.size != expected:
            dims_ok = False
            break
    ok &= check("viewport dimensions exact", dims_ok)

    def probe_for(path_suffix: str):
        hits = [s for s in samples if s.url.endswith(path_suffix) and s.probe]
        return hits[0].probe if hits else None

    banner = probe_for("/cookie-banner")
    ok &= check(
        "cookie banner dismissed",
        banner is not None and banner.overlays_dismissed == 1,
        f"probe={banner and banner.overlays_dismissed}",
    )
    meta = probe_for("/viewport-meta")
    ok &= check(
        "viewport-meta fixture (true,true)",
        meta is not None and meta.content_width_ok is True and meta.has_viewport_meta is True,
    )
    overflow = [
        s.probe
        for s in samples
        if s.url.endswith("/overflow") and s.probe and s.device.startswith("phone")
    ]
    ok &= check(
        "overflow fixture (false,.) on phone",
        bool(overflow) and overflow[0].content_width_ok is False,
    )
    nometa = probe_for("/no-meta")
    ok &= check(
        "no-meta fixture (.,false)",
        nometa is not None and nometa.has_viewport_meta is False,
    )
    ok &= check("runtime < 15 min", elapsed < 900, f"{elapsed:.0f}s")

    coord_server.stop()
    site.shutdown()
    if browser_proc is not None:
        browser_proc.terminate()
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
