"""Synthetic slender-object scenes for the desk-scale post-processing experiment.

Each scene is a binary ground truth plus a soft "rough mask" imitating a
weak segmentation network: confident on most of the object, low confidence
(below 0.5) across gaps and breaks, and spuriously confident inside holes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

SIZE = 64
FG_CONF = 0.9
BG_CONF = 0.1
JITTER = 0.04


@dataclass(frozen=True)
class Scene:
    name: str
    truth: np.ndarray
    rough: np.ndarray


def _grid(size: int = SIZE):
    return np.mgrid[0:size, 0:size].astype(np.float64)


def _segment(p0, p1, width: float, size: int = SIZE) -> np.ndarray:
    """Pixels within ``width/2`` of the segment p0-p1 (row, col)."""
    yy, xx = _grid(size)
    p0 = np.asarray(p0, float)
    d = np.asarray(p1, float) - p0
    t = np.clip(((yy - p0[0]) * d[0] + (xx - p0[1]) * d[1]) / (d @ d), 0.0, 1.0)
    dist = np.hypot(yy - p0[0] - t * d[0], xx - p0[1] - t * d[1])
    return dist <= width / 2.0


def _disk(center, radius: float, size: int = SIZE) -> np.ndarray:
    yy, xx = _grid(size)
    return np.hypot(yy - center[0], xx - center[1]) <= radius


def _ring(center, radius: float, width: float, size: int = SIZE) -> np.ndarray:
    yy, xx = _grid(size)
    r = np.hypot(yy - center[0], xx - center[1])
    return np.abs(r - radius) <= width / 2.0


def _angle_window(center, start: float, stop: float, size: int = SIZE) -> np.ndarray:
    yy, xx = _grid(size)
    ang = np.degrees(np.arctan2(yy - center[0], xx - center[1])) % 360.0
    return (ang >= start) & (ang < stop)


def _rough(truth: np.ndarray, weak: np.ndarray, weak_conf: float, spurious=None, spurious_conf=0.6):
    m = np.where(truth, FG_CONF, BG_CONF)
    m[weak & truth] = weak_conf
    if spurious is not None:
        m[spurious & ~truth] = spurious_conf
    # jitter that never flips a pixel across 0.5
    rng = np.random.default_rng(int(truth.sum()) + 7919 * int(weak.sum()))
    return np.clip(m + rng.uniform(-JITTER, JITTER, m.shape), 0.0, 1.0)


def _box(r0, r1, c0, c1, size: int = SIZE) -> np.ndarray:
    out = np.zeros((size, size), bool)
    out[r0:r1, c0:c1] = True
    return out


def make_scenes() -> List[Scene]:
    """The fixed ten-scene suite: four lines, three rings, three holed blobs."""
    scenes = []

    truth = _segment((32, 6), (32, 57), 1)
    scenes.append(Scene("line_horizontal", truth, _rough(truth, _box(0, 64, 28, 34), 0.4)))

    truth = _segment((8, 8), (55, 55), 1)
    scenes.append(Scene("line_diagonal", truth, _rough(truth, _box(26, 34, 0, 64), 0.4)))

    truth = _segment((5, 20), (58, 44), 2)
    weak = _box(14, 20, 0, 64) | _box(40, 46, 0, 64)
    scenes.append(Scene("line_two_gaps", truth, _rough(truth, weak, 0.42)))

    truth = _segment((10, 6), (30, 57), 1) | _segment((30, 57), (56, 30), 1)
    scenes.append(Scene("polyline", truth, _rough(truth, _box(0, 64, 36, 44), 0.4)))

    c = (32, 32)
    truth = _ring(c, 20, 1.2)
    scenes.append(Scene("ring_one_break", truth, _rough(truth, _angle_window(c, 30, 60), 0.4)))

    truth = _ring(c, 16, 1.2)
    weak = _angle_window(c, 100, 130) | _angle_window(c, 250, 280)
    scenes.append(Scene("ring_two_breaks", truth, _rough(truth, weak, 0.4)))

    truth = _ring((30, 34), 22, 2.0)
    scenes.append(Scene("ring_wide_break", truth, _rough(truth, _angle_window((30, 34), 200, 240), 0.42)))

    truth = _disk(c, 20) & ~_disk(c, 5)
    scenes.append(Scene("blob_hole", truth, _rough(truth, np.zeros_like(truth), 0.9, _disk(c, 5), 0.6)))

    truth = _disk((32, 22), 14) & ~_disk((32, 22), 4) | (_disk((32, 46), 12) & ~_disk((32, 46), 3))
    holes = _disk((32, 22), 4) | _disk((32, 46), 3)
    scenes.append(Scene("two_blobs_holes", truth, _rough(truth, np.zeros_like(truth), 0.9, holes, 0.6)))

    truth = _box(10, 54, 10, 54) & ~_box(24, 40, 24, 40)
    scenes.append(Scene("square_frame", truth, _rough(truth, np.zeros_like(truth), 0.9, _box(24, 40, 24, 40), 0.6)))

    return [Scene(s.name, s.truth.astype(np.float64), s.rough) for s in scenes]
