"""Compound-figure segmentation by recursive gutter cuts.

A gutter is a near-background band of rows or columns: low variance and a
high fraction of near-white pixels. The widest interior band is cut first;
recursion stops when no band of at least min_gutter_px remains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .images import RasterImage


@dataclass
class SplitConfig:
    bg_intensity: float = 240.0   # pixel counts as background at or above this
    bg_fraction: float = 0.98     # fraction of band pixels that must be background
    max_gutter_var: float = 200.0 # per-line intensity variance ceiling
    min_gutter_px: int = 8
    min_panel_frac: float = 0.02


@dataclass
class PanelBox:
    rect: tuple[int, int, int, int]  # (x0, y0, x1, y1), half-open
    area_fraction: float

    @property
    def width(self) -> int:
        return self.rect[2] - self.rect[0]

    @property
    def height(self) -> int:
        return self.rect[3] - self.rect[1]

    def contains(self, x: float, y: float) -> bool:
        x0, y0, x1, y1 = self.rect
        return x0 <= x < x1 and y0 <= y < y1

    @property
    def center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.rect
        return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)


def _gutter_lines(region: np.ndarray, cfg: SplitConfig, axis: int) -> np.ndarray:
    # axis=0 marks gutter rows, axis=1 gutter columns
    other = 1 - axis
    bg = (region >= cfg.bg_intensity).mean(axis=other) >= cfg.bg_fraction
    low_var = region.var(axis=other) <= cfg.max_gutter_var
    return bg & low_var


def _runs(mask: np.ndarray):
    runs = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(mask)))
    return runs


def _trim(gray: np.ndarray, rect, cfg: SplitConfig):
    """Shrink the rect past any background margins; None if all background."""
    x0, y0, x1, y1 = rect
    region = gray[y0:y1, x0:x1]
    rows = _gutter_lines(region, cfg, axis=0)
    cols = _gutter_lines(region, cfg, axis=1)
    top = int(np.argmax(~rows)) if not rows.all() else len(rows)
    if top == len(rows):
        return None
    bottom = len(rows) - int(np.argmax(~rows[::-1]))
    left = int(np.argmax(~cols))
    right = len(cols) - int(np.argmax(~cols[::-1]))
    return (x0 + left, y0 + top, x0 + right, y0 + bottom)


def _widest_interior_run(mask: np.ndarray, min_px: int):
    best = None
    for start, end in _runs(mask):
        if start == 0 or end == len(mask):
            continue  # border margins are trimmed, not cut
        if end - start < min_px:
            continue
        if best is None or end - start > best[1] - best[0]:
            best = (start, end)
    return best


def _recurse(gray: np.ndarray, rect, cfg: SplitConfig, out: list):
    rect = _trim(gray, rect, cfg)
    if rect is None:
        return
    x0, y0, x1, y1 = rect
    region = gray[y0:y1, x0:x1]
    h_run = _widest_interior_run(_gutter_lines(region, cfg, axis=0), cfg.min_gutter_px)
    v_run = _widest_interior_run(_gutter_lines(region, cfg, axis=1), cfg.min_gutter_px)

    h_width = (h_run[1] - h_run[0]) if h_run else 0
    v_width = (v_run[1] - v_run[0]) if v_run else 0
    if h_width == 0 and v_width == 0:
        out.append(rect)
        return
    if h_width >= v_width:
        a, b = h_run
        _recurse(gray, (x0, y0, x1, y0 + a), cfg, out)
        _recurse(gray, (x0, y0 + b, x1, y1), cfg, out)
    else:
        a, b = v_run
        _recurse(gray, (x0, y0, x0 + a, y1), cfg, out)
        _recurse(gray, (x0 + b, y0, x1, y1), cfg, out)


def reading_order(rects: list[tuple[int, int, int, int]]) -> list[tuple[int, int, int, int]]:
    """Top-to-bottom bands, left-to-right within a band."""
    ordered = []
    remaining = sorted(rects, key=lambda r: (r[1], r[0]))
    while remaining:
        top = remaining[0]
        band = [r for r in remaining if r[1] < top[3]]
        band.sort(key=lambda r: (r[0], r[1]))
        ordered.extend(band)
        remaining = [r for r in remaining if r not in band]
    return ordered


def split_panels(image: RasterImage, cfg: SplitConfig | None = None) -> list[PanelBox]:
    """Segment a figure into panels; degenerate inputs come back whole."""
    cfg = cfg or SplitConfig()
    w, h = image.width, image.height
    total = float(w * h)
    whole = [PanelBox((0, 0, w, h), 1.0)]
    if w < 2 * cfg.min_gutter_px or h < 2 * cfg.min_gutter_px:
        return whole
    gray = image.gray()
    rects: list[tuple[int, int, int, int]] = []
    _recurse(gray, (0, 0, w, h), cfg, rects)
    rects = [r for r in rects
             if (r[2] - r[0]) * (r[3] - r[1]) / total >= cfg.min_panel_frac]
    if not rects:
        return whole
    return [PanelBox(r, (r[2] - r[0]) * (r[3] - r[1]) / total)
            for r in reading_order(rects)]
