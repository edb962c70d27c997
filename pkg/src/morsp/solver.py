"""Skeleton-prior mask refinement by operator splitting.

The model couples soft threshold dynamics with a skeleton-matching cost
through an auxiliary variable ``w`` and an L1 penalty, whose dual variable
``q`` lives in the unit ball of the max-norm. Each outer iteration takes
one projected ascent step on ``q``, one descent step on ``w`` and a
closed-form sigmoid update of ``u``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from .morph_core import StructuringElement, as_image, check_same_shape, make_element
from .smooth_morph import SmoothParams, smooth_skeleton, smooth_skeleton_vjp
from .std_energy import GaussianKernel, make_gaussian, td_subgradient, total_energy

logger = logging.getLogger(__name__)


class SolverDivergence(FloatingPointError):
    """Raised when an iterate becomes non-finite."""

    def __init__(self, iteration: int, variable: str):
        super().__init__(f"non-finite {variable} at iteration {iteration}")
        self.iteration = iteration
        self.variable = variable


@dataclass(frozen=True)
class SolverConfig:
    gamma: float = 1.0
    lam: float = 1.0
    alpha: float = 0.05
    eta: float = 1.0
    iota: float = 1e-2
    kernel_size: int = 5
    sigma: float = 1.0
    levels: int = 5
    max_iter: int = 20
    tol: float = 1e-4
    element: StructuringElement = field(default_factory=lambda: make_element("square", 1))

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.lam >= 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.eta >= 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")
        if not self.iota > 0:
            raise ValueError(f"iota must be positive, got {self.iota}")
        if int(self.kernel_size) != self.kernel_size or self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be a positive odd integer, got {self.kernel_size}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if int(self.levels) != self.levels or self.levels < 0:
            raise ValueError(f"levels must be a nonnegative integer, got {self.levels}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")

    @property
    def smooth_params(self) -> SmoothParams:
        return SmoothParams(self.alpha, self.levels, self.element)

    def kernel(self) -> GaussianKernel:
        return make_gaussian(self.kernel_size, self.sigma)

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = str(v) if isinstance(v, StructuringElement) else v
        return out

    def updated(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass
class SolverState:
    u: np.ndarray
    w: np.ndarray
    q: np.ndarray
    p: np.ndarray
    iter: int = 0
    energy_trace: List[float] = field(default_factory=list)
    residual_trace: List[float] = field(default_factory=list)
    # per-iteration audit values: max |q| and the (min, max) of u
    q_norm_trace: List[float] = field(default_factory=list)
    u_range_trace: List[Tuple[float, float]] = field(default_factory=list)


def skeleton_cost(w, skel_g, p: SmoothParams) -> float:
    """Half squared distance between the smooth skeleton of ``w`` and ``skel_g``."""
    w = as_image(w, "w")
    check_same_shape(w, skel_g, "w and skeleton")
    s, _ = smooth_skeleton(w, p)
    return 0.5 * float(np.sum((s - skel_g) ** 2))


def skeleton_cost_grad(w, skel_g, p: SmoothParams) -> np.ndarray:
    w = as_image(w, "w")
    check_same_shape(w, skel_g, "w and skeleton")
    s, tape = smooth_skeleton(w, p)
    return smooth_skeleton_vjp(tape, s - skel_g)


def update_q(q, w, u) -> np.ndarray:
    """One projected ascent step on the dual variable (unit step)."""
    check_same_shape(q, w, "q and w")
    check_same_shape(w, u, "w and u")
    return np.clip(np.asarray(q) + (np.asarray(w) - np.asarray(u)), -1.0, 1.0)


def update_w(w, q_next, skel_g, cfg: SolverConfig) -> np.ndarray:
    """One explicit gradient step on ``C(w) + eta <q, w>``; ``w`` is not clamped."""
    check_same_shape(w, q_next, "w and q")
    grad = skeleton_cost_grad(w, skel_g, cfg.smooth_params)
    return np.asarray(w) - cfg.iota * (grad + cfg.eta * np.asarray(q_next))


def update_u(o, p, q_next, cfg: SolverConfig) -> np.ndarray:
    """Closed-form minimizer of the entropic per-pixel subproblem."""
    if not cfg.gamma > 0:
        raise ValueError("gamma must be positive")
    check_same_shape(o, p, "o and p")
    check_same_shape(p, q_next, "p and q")
    u = expit((np.asarray(o) - np.asarray(p) + cfg.eta * np.asarray(q_next)) / cfg.gamma)
    # keep strictly inside (0, 1) even where expit saturates in float64
    tiny = np.finfo(np.float64).tiny
    return np.clip(u, tiny, np.nextafter(1.0, 0.0))


def init_state(o, skel_g) -> SolverState:
    o = as_image(o, "o")
    skel_g = as_image(skel_g, "skeleton")
    check_same_shape(o, skel_g, "feature map and skeleton prior")
    u0 = expit(o)
    w0 = 0.5 * (u0 + skel_g)
    q0 = np.clip(w0 - u0, -1.0, 1.0)
    return SolverState(u=u0, w=w0, q=q0, p=np.zeros_like(o))


def refine(
    o,
    skeleton_prior,
    cfg: Optional[SolverConfig] = None,
    prior_is_skeleton: bool = False,
) -> Tuple[np.ndarray, SolverState]:
    """Refine the soft segmentation of feature map ``o`` toward a skeleton prior.

    Parameters
    ----------
    o : array_like
        Feature map (logits); ``sigmoid(o)`` is the starting segmentation.
    skeleton_prior : array_like
        Prior mask in [0, 1]. Its smooth skeleton is computed once and
        used as the fixed target. With ``prior_is_skeleton=True`` it is
        taken as the target skeleton directly.
    cfg : SolverConfig, optional
        Hyperparameters; defaults are the published initial values.

    Returns
    -------
    u : ndarray
        Final soft segmentation, strictly inside (0, 1).
    state : SolverState
        Final iterates plus energy, residual and invariant traces.
    """
    cfg = cfg or SolverConfig()
    o = as_image(o, "o")
    prior = as_image(skeleton_prior, "skeleton prior")
    check_same_shape(o, prior, "feature map and skeleton prior")
    if prior.min() < 0 or prior.max() > 1:
        raise ValueError("skeleton prior must lie in [0, 1]")

    sp = cfg.smooth_params
    skel_g = prior if prior_is_skeleton else smooth_skeleton(prior, sp)[0]
    f = cfg.kernel()
    state = init_state(o, skel_g)

    for t in range(cfg.max_iter):
        q = update_q(state.q, state.w, state.u)
        w = update_w(state.w, q, skel_g, cfg)
        p = td_subgradient(state.u, f, cfg.lam)
        u = update_u(o, p, q, cfg)
        for name, arr in (("q", q), ("w", w), ("p", p), ("u", u)):
            if not np.all(np.isfinite(arr)):
                raise SolverDivergence(t + 1, name)

        residual = float(np.max(np.abs(u - state.u)))
        state.q, state.w, state.p, state.u = q, w, p, u
        state.iter = t + 1
        state.residual_trace.append(residual)
        state.energy_trace.append(total_energy(u, o, f, cfg, skel_g))
        state.q_norm_trace.append(float(np.max(np.abs(q))))
        state.u_range_trace.append((float(u.min()), float(u.max())))
        logger.debug("iter %d residual %.3e energy %.6f", t + 1, residual, state.energy_trace[-1])
        if residual < cfg.tol:
            break
    return state.u, state
