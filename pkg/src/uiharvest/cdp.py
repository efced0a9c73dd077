"""Remote-debugging browser session over the DevTools-style WebSocket protocol.

One CdpSession owns one page target. Commands are JSON messages with
incrementing ids; events arriving between responses are buffered for the
settle logic (network quiescence tracking). Geometry and computed style
are fetched per accessibility node and merged into the payload shape that
``worker.parse_axtree`` consumes.
"""

from __future__ import annotations

import base64
import json
import threading
import time
from typing import Any

import requests

from .devices import DeviceProfile
from .errors import BrowserUnreachableError, NavigationError, ScreenshotError
from .store import STYLE_KEYS

try:
    from websockets.sync.client import connect as ws_connect
except ImportError:  # pragma: no cover - optional at runtime
    ws_connect = None

DEFAULT_COMMAND_TIMEOUT_SECS = 30.0


class CdpSession:
    """A live page session; create one per leased URL and close it after."""

    def __init__(self, browser_endpoint: str, command_timeout: float = DEFAULT_COMMAND_TIMEOUT_SECS):
        if ws_connect is None:
            raise BrowserUnreachableError("the websockets package is not installed")
        self.endpoint = browser_endpoint.rstrip("/")
        self.command_timeout = command_timeout
        self._next_id = 1
        self._inflight_requests: set[str] = set()
        self._last_network_activity = time.monotonic()
        self._lock = threading.Lock()
        try:
            created = requests.put(
                f"{self.endpoint}/json/new?about:blank", timeout=10
            )
            if created.status_code >= 400:  # older browsers want GET
                created = requests.get(
                    f"{self.endpoint}/json/new?about:blank", timeout=10
                )
            created.raise_for_status()
            target = created.json()
            self.target_id = target["id"]
            self._ws = ws_connect(
                target["webSocketDebuggerUrl"], max_size=64 * 1024 * 1024
            )
        except Exception as exc:
            raise BrowserUnreachableError(
                f"cannot open a page on {browser_endpoint}: {exc}"
            ) from exc
        for domain in ("Page", "DOM", "CSS", "Network", "Accessibility", "Runtime"):
            self._call(f"{domain}.enable")

    # -- protocol plumbing -------------------------------------------------

    def _handle_event(self, message: dict) -> None:
        method = message.get("method", "")
        params = message.get("params", {})
        if method == "Network.requestWillBeSent":
            self._inflight_requests.add(params.get("requestId", ""))
            self._last_network_activity = time.monotonic()
        elif method in ("Network.loadingFinished", "Network.loadingFailed"):
            self._inflight_requests.discard(params.get("requestId", ""))
            self._last_network_activity = time.monotonic()
        elif method == "Page.loadEventFired":
            self._load_fired = True

    def _call(self, method: str, params: dict | None = None, timeout: float | None = None) -> dict:
        timeout = timeout if timeout is not None else self.command_timeout
        with self._lock:
            message_id = self._next_id
            self._next_id += 1
            self._ws.send(json.dumps({"id": message_id, "method": method, "params": params or {}}))
            deadline = time.monotonic() + timeout
            while True:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError(f"{method} timed out after {timeout}s")
                message = json.loads(self._ws.recv(timeout=remaining))
                if message.get("id") == message_id:
                    if "error" in message:
                        raise RuntimeError(f"{method}: {message['error'].get('message')}")
                    return message.get("result", {})
                self._handle_event(message)

    def _pump_events(self, duration: float) -> None:
        deadline = time.monotonic() + duration
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return
            try:
                with self._lock:
                    message = json.loads(self._ws.recv(timeout=remaining))
            except TimeoutError:
                return
            self._handle_event(message)

    # -- BrowserSession surface ---------------------------------------------

    def set_device(self, profile: DeviceProfile) -> None:
        self._call(
            "Emulation.setDeviceMetricsOverride",
            {
                "width": profile.viewport_width,
                "height": profile.viewport_height,
                "deviceScaleFactor": profile.device_scale,
                "mobile": profile.is_mobile,
            },
        )
        self._call("Network.setUserAgentOverride", {"userAgent": profile.user_agent})

    def navigate(self, url: str, timeout_secs: float) -> None:
        self._load_fired = False
        try:
            result = self._call("Page.navigate", {"url": url}, timeout=timeout_secs)
        except TimeoutError as exc:
            raise NavigationError(f"navigation to {url} timed out") from exc
        if result.get("errorText"):
            raise NavigationError(f"navigation to {url} failed: {result['errorText']}")
        deadline = time.monotonic() + timeout_secs
        while not self._load_fired:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                # nav timeout with a DOM present still counts as arrived
                if self._has_dom():
                    return
                raise NavigationError(f"load event never fired for {url}")
            self._pump_events(min(0.25, remaining))

    def _has_dom(self) -> bool:
        try:
            return bool(self.evaluate("document && document.readyState !== 'loading'"))
        except Exception:
            return False

    def settle(self, quiescence_secs: float, max_wait_secs: float) -> None:
        deadline = time.monotonic() + max_wait_secs
        while time.monotonic() < deadline:
            quiet_for = time.monotonic() - self._last_network_activity
            if not self._inflight_requests and quiet_for >= quiescence_secs:
                return
            self._pump_events(0.2)

    def evaluate(self, script: str) -> Any:
        result = self._call(
            "Runtime.evaluate",
            {"expression": script, "returnByValue": True, "awaitPromise": True},
        )
        if result.get("exceptionDetails"):
            raise RuntimeError(result["exceptionDetails"].get("text", "script failed"))
        return result.get("result", {}).get("value")

    def viewport_screenshot(self) -> bytes:
        try:
            result = self._call(
                "Page.captureScreenshot", {"format": "jpeg", "quality": 80}
            )
            return base64.b64decode(result["data"])
        except Exception as exc:
            raise ScreenshotError(f"viewport screenshot failed: {exc}") from exc

    def fullpage_screenshot(self, height_cap: int) -> tuple[bytes, bool]:
        try:
            metrics = self._call("Page.getLayoutMetrics")
            content = metrics.get("cssContentSize") or metrics.get("contentSize")
            page_height = int(content["height"])
            width = int(content["width"])
            height = min(page_height, height_cap)
            result = self._call(
                "Page.captureScreenshot",
                {
                    "format": "jpeg",
                    "quality": 80,
                    "captureBeyondViewport": True,
                    "clip": {"x": 0, "y": 0, "width": width, "height": height, "scale": 1},
                },
            )
            return base64.b64decode(result["data"]), page_height > height_cap
        except Exception as exc:
            raise ScreenshotError(f"full-page screenshot failed: {exc}") from exc

    def axtree_payload(self) -> dict:
        tree = self._call("Accessibility.getFullAXTree")
        nodes = tree.get("nodes", [])
        backend_ids = sorted(
            {n["backendDOMNodeId"] for n in nodes if "backendDOMNodeId" in n}
        )
        geometry: dict[str, dict] = {}
        styles: dict[str, dict] = {}
        node_ids: dict[int, int] = {}
        if backend_ids:
            try:
                pushed = self._call(
                    "DOM.pushNodesByBackendIdsToFrontend", {"backendNodeIds": backend_ids}
                )
                node_ids = dict(zip(backend_ids, pushed.get("nodeIds", [])))
            except RuntimeError:
                node_ids = {}
        for backend_id in backend_ids:
            try:
                box = self._call("DOM.getBoxModel", {"backendNodeId": backend_id})["model"]
                geometry[str(backend_id)] = {
                    "content": box["content"],
                    "padding": box["padding"],
                    "border": box["border"],
                    "margin": box["margin"],
                }
            except (RuntimeError, KeyError):
                pass  # detached or unrendered node: null boxes downstream
            dom_node_id = node_ids.get(backend_id)
            if not dom_node_id:
                continue
            try:
                computed = self._call(
                    "CSS.getComputedStyleForNode", {"nodeId": dom_node_id}
                ).get("computedStyle", [])
            except RuntimeError:
                continue
            wanted = {
                entry["name"]: entry["value"]
                for entry in computed
                if entry.get("name") in STYLE_KEYS
            }
            if wanted:
                styles[str(backend_id)] = wanted
        return {"axtree": {"nodes": nodes}, "geometry": geometry, "styles": styles}

    def close(self) -> None:
        try:
            self._ws.close()
        except Exception:
            pass
        try:
            requests.get(f"{self.endpoint}/json/close/{self.target_id}", timeout=5)
        except Exception:
            pass


def connect_browser(endpoint: str) -> CdpSession:
    """Open a fresh page session on a running browser's debugging endpoint."""
    return CdpSession(endpoint)
