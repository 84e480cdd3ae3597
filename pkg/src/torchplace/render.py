"""Binary PPM rendering of heightmaps and torch layouts.

One tile is ``scale`` x ``scale`` pixels. Colours:

* walls: white
* floor without a layout: grey, lighter for higher elevation
* floor with a layout: amber, brighter for higher light level
* torches: pure red; tiles below the minimum light level: pure blue
"""
from __future__ import annotations

import numpy as np

from .geometry import LightParams, TorchLayout
from .heightmap import Heightmap

WALL_RGB = (255, 255, 255)
TORCH_RGB = (255, 0, 0)
DARK_RGB = (0, 0, 255)


def render_rgb(hmap: Heightmap, layout: TorchLayout | None = None,
               params: LightParams = LightParams()) -> np.ndarray:
    """(height, width, 3) uint8 image, one pixel per tile."""
    img = np.zeros((hmap.height, hmap.width, 3), dtype=np.uint8)
    img[hmap.walls] = WALL_RGB
    z = hmap.elevation
    top = max(1, int(z.max()))
    sites = hmap.index.ordering
    for k, (i, j) in enumerate(sites):
        if layout is None:
            g = 40 + (160 * int(z[i, j])) // top
            img[i, j] = (g, g, g)
            continue
        if layout.selection[k]:
            img[i, j] = TORCH_RGB
        elif layout.light[k] < params.l_min:
            img[i, j] = DARK_RGB
        else:
            v = (255 * int(layout.light[k])) // params.l_torch
            img[i, j] = (v, (v * 4) // 5, (v * 3) // 10)
    return img


def to_ppm(img: np.ndarray, scale: int = 1) -> bytes:
    if scale > 1:
        img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)
    h, w, _ = img.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    """Parse a binary PPM as written by ``to_ppm``."""
    fields = []
    pos = 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1
    if fields[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = int(fields[1]), int(fields[2])
    return np.frombuffer(data[pos:pos + w * h * 3], dtype=np.uint8).reshape(h, w, 3)


def count_color(img: np.ndarray, rgb) -> int:
    return int(np.all(img == np.array(rgb, dtype=np.uint8), axis=-1).sum())
