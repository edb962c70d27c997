"""Classical gray-scale morphology and the morphological skeleton.

Images are 2-D ``float64`` numpy arrays. Max/min are taken over the
in-domain part of the structuring element only, which is the same as
padding with -inf (dilation) or +inf (erosion).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

SHAPES = ("square", "disk")


def as_image(u, name: str = "image") -> np.ndarray:
    """Validate ``u`` as a finite, non-empty 2-D image and return a float64 copy."""
    arr = np.array(u, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "images") -> None:
    if np.shape(a) != np.shape(b):
        raise ValueError(f"size mismatch between {what}: {np.shape(a)} vs {np.shape(b)}")


@dataclass(frozen=True)
class StructuringElement:
    """Finite set of integer ``(dy, dx)`` offsets containing the origin."""

    offsets: Tuple[Tuple[int, int], ...]
    shape: str
    radius: int

    def __post_init__(self):
        if (0, 0) not in self.offsets:
            raise ValueError("structuring element must contain the origin")
        if len(set(self.offsets)) != len(self.offsets):
            raise ValueError("structuring element offsets must be distinct")

    def __len__(self) -> int:
        return len(self.offsets)

    @property
    def reach(self) -> int:
        return max(max(abs(dy), abs(dx)) for dy, dx in self.offsets)

    @classmethod
    def parse(cls, text: str) -> "StructuringElement":
        """Build from a ``shape:radius`` string such as ``square:1``."""
        try:
            shape, radius = text.split(":")
            r = int(radius)
        except ValueError:
            raise ValueError(f"element must look like 'square:1', got {text!r}") from None
        return make_element(shape, r)

    def __str__(self) -> str:
        return f"{self.shape}:{self.radius}"


def make_element(shape: str, radius: int) -> StructuringElement:
    """Square (Chebyshev ball) or disk (Euclidean ball) of the given radius."""
    if shape not in SHAPES:
        raise ValueError(f"unknown element shape {shape!r}; expected one of {SHAPES}")
    if int(radius) != radius or radius < 0:
        raise ValueError(f"radius must be a nonnegative integer, got {radius!r}")
    r = int(radius)
    rng = range(-r, r + 1)
    if shape == "square":
        offsets = tuple((dy, dx) for dy in rng for dx in rng)
    else:
        offsets = tuple((dy, dx) for dy in rng for dx in rng if dy * dy + dx * dx <= r * r)
    return StructuringElement(offsets, shape, r)


def shifted_stack(u: np.ndarray, element: StructuringElement, fill: float) -> np.ndarray:
    """Stack of ``u(x + z)`` for every offset ``z``; out-of-domain entries get ``fill``.

    Returns an array of shape ``(len(element), H, W)``.
    """
    r = element.reach
    h, w = u.shape
    padded = np.pad(u, r, mode="constant", constant_values=fill)
    out = np.empty((len(element), h, w), dtype=np.float64)
    for k, (dy, dx) in enumerate(element.offsets):
        out[k] = padded[r + dy : r + dy + h, r + dx : r + dx + w]
    return out


def domain_count(shape: Tuple[int, int], element: StructuringElement) -> np.ndarray:
    """Number of in-domain offsets ``|B(x)|`` at every pixel."""
    ones = np.ones(shape)
    return np.sum(shifted_stack(ones, element, 0.0), axis=0)


def dilate(u, element: StructuringElement) -> np.ndarray:
    u = as_image(u)
    return np.max(shifted_stack(u, element, -np.inf), axis=0)


def erode(u, element: StructuringElement) -> np.ndarray:
    u = as_image(u)
    return np.min(shifted_stack(u, element, np.inf), axis=0)


def erode_n(u, element: StructuringElement, j: int) -> np.ndarray:
    """Erode ``j`` times in succession; ``j == 0`` returns a copy of ``u``."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    out = as_image(u)
    for _ in range(j):
        out = erode(out, element)
    return out


def opening(u, element: StructuringElement) -> np.ndarray:
    return dilate(erode(u, element), element)


def skeleton_levels(u, element: StructuringElement, levels: int) -> list:
    """Per-level residues ``e_j - dilate(erode(e_j))`` with ``e_j`` the j-fold erosion."""
    if levels < 0:
        raise ValueError("levels must be nonnegative")
    e = as_image(u)
    out = []
    for _ in range(levels + 1):
        nxt = erode(e, element)
        out.append(e - dilate(nxt, element))
        e = nxt
    return out


def classic_skeleton(u, element: StructuringElement, levels: int) -> np.ndarray:
    """Morphological skeleton summed over levels ``0..levels``, clamped to [0, 1]."""
    total = np.sum(skeleton_levels(u, element, levels), axis=0)
    return np.clip(total, 0.0, 1.0)


def default_levels(u, element: StructuringElement, cap: int = 10) -> int:
    """Smallest J with an identically zero (J+1)-fold erosion, capped at ``cap``."""
    e = as_image(u)
    for j in range(cap + 1):
        e = erode(e, element)
        if not np.any(e):
            return j
    return cap
