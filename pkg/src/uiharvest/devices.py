"""Simulated device profiles.

Six defaults: the four most common desktop resolutions, a tablet, and a
phone. Capture order is fixed (desktops first, then tablet, then phone)
so budget accounting is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

_DESKTOP_UA = (
    "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 "
    "(KHTML, like Gecko) Chrome/120.0 Safari/537.36"
)
_TABLET_UA = (
    "Mozilla/5.0 (iPad; CPU OS 16_0 like Mac OS X) AppleWebKit/605.1.15 "
    "(KHTML, like Gecko) Version/16.0 Mobile/15E148 Safari/604.1"
)
_PHONE_UA = (
    "Mozilla/5.0 (Linux; Android 13; Pixel 7) AppleWebKit/537.36 "
    "(KHTML, like Gecko) Chrome/120.0 Mobile Safari/537.36"
)


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    viewport_width: int
    viewport_height: int
    device_scale: float
    user_agent: str
    is_mobile: bool

    def __post_init__(self) -> None:
        if self.viewport_width <= 0 or self.viewport_height <= 0:
            raise ValueError("viewport dimensions must be positive")


def default_profiles() -> list[DeviceProfile]:
    """The 6 built-in profiles, in capture order."""
    return [
        DeviceProfile("desktop-1920x1080", 1920, 1080, 1.0, _DESKTOP_UA, False),
        DeviceProfile("desktop-1366x768", 1366, 768, 1.0, _DESKTOP_UA, False),
        DeviceProfile("desktop-1536x864", 1536, 864, 1.0, _DESKTOP_UA, False),
        DeviceProfile("desktop-1280x720", 1280, 720, 1.0, _DESKTOP_UA, False),
        DeviceProfile("tablet-768x1024", 768, 1024, 2.0, _TABLET_UA, True),
        DeviceProfile("phone-390x844", 390, 844, 3.0, _PHONE_UA, True),
    ]


def profiles_by_name(profiles: list[DeviceProfile] | None = None) -> dict[str, DeviceProfile]:
    profiles = profiles if profiles is not None else default_profiles()
    mapping = {p.name: p for p in profiles}
    if len(mapping) != len(profiles):
        raise ValueError("device profile names must be unique")
    return mapping


def load_profiles(path: str | Path) -> list[DeviceProfile]:
    """Load profiles from a JSON file: a list of DeviceProfile objects."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    profiles = [
        DeviceProfile(
            name=entry["name"],
            viewport_width=int(entry["viewport_width"]),
            viewport_height=int(entry["viewport_height"]),
            device_scale=float(entry.get("device_scale", 1.0)),
            user_agent=entry.get("user_agent", _DESKTOP_UA),
            is_mobile=bool(entry.get("is_mobile", False)),
        )
        for entry in raw
    ]
    profiles_by_name(profiles)  # uniqueness check
    return profiles
