"""Log-sum-exp (smooth) morphology and the smooth morphological skeleton.

Smooth dilation at temperature ``alpha`` is

    D(u)(x) = alpha * log(sum_{z in B(x)} exp(u(x + z) / alpha))

and smooth erosion is ``E(u) = -D(-u)``. Both are differentiable; their
Jacobians are the softmax / softmin kernels over the window, which is all
the reverse pass of the skeleton needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .morph_core import (
    StructuringElement,
    as_image,
    check_same_shape,
    make_element,
    shifted_stack,
)


@dataclass(frozen=True)
class SmoothParams:
    alpha: float = 0.05
    levels: int = 5
    element: StructuringElement = field(default_factory=lambda: make_element("square", 1))

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if int(self.levels) != self.levels or self.levels < 0:
            raise ValueError(f"levels must be a nonnegative integer, got {self.levels}")


def _check_alpha(alpha: float) -> None:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")


def _lse(stack: np.ndarray, alpha: float) -> np.ndarray:
    # max-shifted; -inf entries (out of domain) contribute exp(-inf) = 0
    m = np.max(stack, axis=0)
    with np.errstate(under="ignore"):
        s = np.sum(np.exp((stack - m) / alpha), axis=0)
    return m + alpha * np.log(s)


def smooth_dilate(u, p: SmoothParams) -> np.ndarray:
    u = as_image(u)
    _check_alpha(p.alpha)
    return _lse(shifted_stack(u, p.element, -np.inf), p.alpha)


def smooth_erode(u, p: SmoothParams) -> np.ndarray:
    u = as_image(u)
    _check_alpha(p.alpha)
    return -_lse(shifted_stack(-u, p.element, -np.inf), p.alpha)


def _kernel_stack(u: np.ndarray, p: SmoothParams, sign: float) -> np.ndarray:
    """Softmax (sign=+1) or softmin (sign=-1) weights, shape ``(|B|, H, W)``.

    Entry ``[k, x]`` is the weight of pixel ``x + offsets[k]`` in the window
    at ``x``; out-of-domain entries are exactly zero.
    """
    _check_alpha(p.alpha)
    stack = shifted_stack(sign * u, p.element, -np.inf)
    m = np.max(stack, axis=0)
    with np.errstate(under="ignore"):
        e = np.exp((stack - m) / p.alpha)
    return e / np.sum(e, axis=0)


def dilation_kernel(u, p: SmoothParams, x: Tuple[int, int]) -> dict:
    """Softmax weights of the window at pixel ``x``, keyed by in-domain offset."""
    u = as_image(u)
    k = _kernel_stack(u, p, 1.0)
    h, w = u.shape
    row, col = x
    out = {}
    for idx, (dy, dx) in enumerate(p.element.offsets):
        if 0 <= row + dy < h and 0 <= col + dx < w:
            out[(dy, dx)] = float(k[idx, row, col])
    return out


def erosion_kernel(u, p: SmoothParams, x: Tuple[int, int]) -> dict:
    """Softmin counterpart of :func:`dilation_kernel`."""
    u = as_image(u)
    k = _kernel_stack(u, p, -1.0)
    h, w = u.shape
    row, col = x
    return {
        (dy, dx): float(k[idx, row, col])
        for idx, (dy, dx) in enumerate(p.element.offsets)
        if 0 <= row + dy < h and 0 <= col + dx < w
    }


def _correlate_adjoint(kernels: np.ndarray, s: np.ndarray, element: StructuringElement) -> np.ndarray:
    # out(y) = sum_z kernels[z, y - z] * s(y - z)
    r = element.reach
    h, w = s.shape
    acc = np.zeros((h + 2 * r, w + 2 * r))
    for k, (dy, dx) in enumerate(element.offsets):
        acc[r + dy : r + dy + h, r + dx : r + dx + w] += kernels[k] * s
    return acc[r : r + h, r : r + w]


def smooth_dilate_vjp(v: np.ndarray, s: np.ndarray, p: SmoothParams) -> np.ndarray:
    """Transpose of the Jacobian of :func:`smooth_dilate` at ``v`` applied to ``s``."""
    return _correlate_adjoint(_kernel_stack(v, p, 1.0), s, p.element)


def smooth_erode_vjp(v: np.ndarray, s: np.ndarray, p: SmoothParams) -> np.ndarray:
    """Transpose of the Jacobian of :func:`smooth_erode` at ``v`` applied to ``s``."""
    return _correlate_adjoint(_kernel_stack(v, p, -1.0), s, p.element)


def _relu(t: np.ndarray) -> np.ndarray:
    return np.maximum(t, 0.0)


def _heaviside(t: np.ndarray) -> np.ndarray:
    # H(0) = 0
    return (t > 0).astype(np.float64)


def project_unit(u) -> np.ndarray:
    """Clamp to [0, 1] written as ``relu(1 - relu(1 - u))``."""
    u = np.asarray(u, dtype=np.float64)
    return _relu(1.0 - _relu(1.0 - u))


@dataclass(frozen=True)
class SkeletonTape:
    """Everything recorded during one forward smooth-skeleton pass.

    ``erosions`` holds ``e^0 = u, e^1, ..., e^{J+1}``; ``dilations[j]`` is
    ``D(e^{j+1})`` and ``levels[j] = e^j - dilations[j]``.
    """

    params: SmoothParams
    erosions: List[np.ndarray]
    dilations: List[np.ndarray]
    levels: List[np.ndarray]
    total: np.ndarray
    result: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.total.shape

    def replay(self) -> np.ndarray:
        """Recompute the forward pass from the recorded input."""
        return smooth_skeleton(self.erosions[0], self.params)[0]


def smooth_skeleton(u, p: SmoothParams) -> Tuple[np.ndarray, SkeletonTape]:
    u = as_image(u)
    erosions = [u]
    for _ in range(p.levels + 1):
        erosions.append(smooth_erode(erosions[-1], p))
    dilations = [smooth_dilate(erosions[j + 1], p) for j in range(p.levels + 1)]
    levels = [erosions[j] - dilations[j] for j in range(p.levels + 1)]
    total = np.sum(levels, axis=0)
    result = project_unit(total)
    for arr in erosions + dilations + levels + [total, result]:
        arr.flags.writeable = False
    return result, SkeletonTape(p, erosions, dilations, levels, total, result)


def smooth_skeleton_vjp(tape: SkeletonTape, cotangent) -> np.ndarray:
    """Reverse-mode derivative of the smooth skeleton applied to ``cotangent``."""
    d = np.asarray(cotangent, dtype=np.float64)
    check_same_shape(d, tape.total, "tape and cotangent")
    p = tape.params
    inner = 1.0 - tape.total
    g_total = d * _heaviside(1.0 - _relu(inner)) * _heaviside(inner)

    # each level e^j - D(e^{j+1}) receives g_total
    g_e = [np.zeros_like(g_total) for _ in tape.erosions]
    for j in range(p.levels + 1):
        g_e[j] += g_total
        g_e[j + 1] -= smooth_dilate_vjp(tape.erosions[j + 1], g_total, p)
    for i in range(len(tape.erosions) - 1, 0, -1):
        g_e[i - 1] += smooth_erode_vjp(tape.erosions[i - 1], g_e[i], p)
    return g_e[0]
