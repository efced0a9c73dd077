import io
import random

import pytest
from PIL import Image

from uiharvest.store import AxNode, BoxSet, DatasetStore, PageSample, ProbeReport


def expand(rect, by):
    x, y, w, h = rect
    return (x - by, y - by, w + 2 * by, h + 2 * by)


def boxes_for(rect, padding=0.0, border=0.0, margin=0.0):
    """Build a nested BoxSet around a content rect."""
    content = tuple(float(v) for v in rect)
    pad = expand(content, padding)
    bor = expand(pad, border)
    mar = expand(bor, margin)
    return BoxSet(content, pad, bor, mar)


def make_node(
    node_id,
    parent_id=None,
    role="generic",
    *,
    rect=None,
    dom_index=None,
    name=None,
    style=None,
    clickable=False,
    padding=0.0,
    border=0.0,
    margin=0.0,
):
    return AxNode(
        node_id=node_id,
        parent_id=parent_id,
        role=role,
        name=name,
        dom_index=node_id if dom_index is None else dom_index,
        boxes=None if rect is None else boxes_for(rect, padding, border, margin),
        style=dict(style or {}),
        clickable=clickable,
    )


def flat_screen(rects_and_roles, root_rect=(0, 0, 1000, 2000)):
    """A root node plus one leaf child per entry of (rect, role[, style])."""
    nodes = [make_node(0, None, "RootWebArea", rect=root_rect)]
    for i, entry in enumerate(rects_and_roles, start=1):
        rect, role = entry[0], entry[1]
        style = entry[2] if len(entry) > 2 else None
        nodes.append(make_node(i, 0, role, rect=rect, style=style))
    return nodes


def noise_image_bytes(width, height, seed, fmt="PNG"):
    """Deterministic random-noise image; distinct seeds hash far apart."""
    rng = random.Random(seed)
    img = Image.new("RGB", (width, height))
    img.putdata(
        [(rng.randrange(256), rng.randrange(256), rng.randrange(256)) for _ in range(width * height)]
    )
    buf = io.BytesIO()
    img.save(buf, fmt)
    return buf.getvalue()


def gradient_image_bytes(width, height, fmt="PNG"):
    img = Image.new("L", (width, height))
    img.putdata([(x * 7 + y * 13) % 256 for y in range(height) for x in range(width)])
    buf = io.BytesIO()
    img.save(buf, fmt)
    return buf.getvalue()


def make_sample(
    url,
    device="phone-390x844",
    captured_at="2026-08-01T00:00:00+00:00",
    axtree=None,
    probe=None,
    truncated=False,
    image_ext="png",
):
    return PageSample.build(
        url,
        device,
        captured_at,
        axtree if axtree is not None else flat_screen([((0, 0, 100, 50), "text")]),
        fullpage_truncated=truncated,
        probe=probe,
        timings={"nav": 120.0, "shot": 40.0},
        image_ext=image_ext,
    )


@pytest.fixture
def store(tmp_path):
    return DatasetStore(tmp_path / "dataset", salt="test-salt")


@pytest.fixture
def rng():
    return random.Random(12345)


def put_simple(store, sample, *, seed=0, width=60, height=90):
    viewport = noise_image_bytes(width, height, seed)
    fullpage = noise_image_bytes(width, height * 3, seed + 1)
    return store.put_sample(sample, viewport, fullpage)


__all__ = [
    "boxes_for",
    "expand",
    "flat_screen",
    "gradient_image_bytes",
    "make_node",
    "make_sample",
    "noise_image_bytes",
    "put_simple",
    "ProbeReport",
]
