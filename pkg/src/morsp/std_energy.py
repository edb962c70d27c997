"""Binary soft threshold dynamics energy.

The boundary-length surrogate is ``lambda * <u, f * (1 - u)>`` with a
truncated, unit-sum Gaussian ``f``. Absolute constants of the continuous
kernel are absorbed into ``lambda``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

ENTROPY_EPS = 1e-7


@dataclass(frozen=True)
class GaussianKernel:
    size: int
    sigma: float
    weights: np.ndarray


def make_gaussian(size: int, sigma: float) -> GaussianKernel:
    """Sample a Gaussian on the ``size x size`` integer grid and normalize it."""
    if int(size) != size or size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be a positive odd integer, got {size!r}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    r = size // 2
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
    w = np.exp(-(yy**2 + xx**2) / (2.0 * sigma**2)) / (2.0 * np.pi * sigma**2)
    w = w / w.sum()
    w.flags.writeable = False
    return GaussianKernel(int(size), float(sigma), w)


def convolve(u: np.ndarray, f: GaussianKernel) -> np.ndarray:
    """``f * u`` with replicate-edge borders."""
    # the kernel is symmetric, so correlation and convolution coincide
    return ndimage.correlate(np.asarray(u, dtype=np.float64), f.weights, mode="nearest")


def td_regularizer(u, f: GaussianKernel, lam: float) -> float:
    u = np.asarray(u, dtype=np.float64)
    return float(lam * np.sum(u * convolve(1.0 - u, f)))


def td_subgradient(u, f: GaussianKernel, lam: float) -> np.ndarray:
    """``lambda * f * (1 - 2u)``, the linearization used by the DC step."""
    u = np.asarray(u, dtype=np.float64)
    return lam * convolve(1.0 - 2.0 * u, f)


def binary_entropy(u) -> float:
    """``<u, ln u> + <1 - u, ln(1 - u)>`` with ``u`` clamped away from {0, 1}."""
    v = np.clip(np.asarray(u, dtype=np.float64), ENTROPY_EPS, 1.0 - ENTROPY_EPS)
    return float(np.sum(v * np.log(v) + (1.0 - v) * np.log1p(-v)))


def fidelity(u, o) -> float:
    return float(-np.sum(np.asarray(o) * np.asarray(u)))


def total_energy(u, o, f: GaussianKernel, cfg, skel_g) -> float:
    """Full model energy: fidelity + entropy + TD regularizer + skeleton cost.

    ``cfg`` is a :class:`morsp.solver.SolverConfig`; ``skel_g`` is the
    precomputed smooth skeleton of the prior.
    """
    from .solver import skeleton_cost

    return (
        fidelity(u, o)
        + cfg.gamma * binary_entropy(u)
        + td_regularizer(u, f, cfg.lam)
        + skeleton_cost(u, skel_g, cfg.smooth_params)
    )
