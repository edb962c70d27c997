"""Independent numerical oracles.

Finite differences for the skeleton derivatives, a brute-force grid search
for the per-pixel ``u`` subproblem, the smooth/classical sandwich audit and
the L1 / max-norm duality check. None of these share code paths with the
quantities they verify beyond the forward operators themselves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .morph_core import as_image, dilate, domain_count, erode
from .smooth_morph import SmoothParams, smooth_dilate, smooth_erode, smooth_skeleton, smooth_skeleton_vjp
from .solver import SolverConfig, skeleton_cost, skeleton_cost_grad, update_u

FD_STEP = 1e-5
KINK_MARGIN = 0.05


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    max_abs_error: float
    worst_pixel: Tuple[int, int]
    step: float
    samples: int

    def format(self) -> str:
        return (
            f"max_rel_error={self.max_rel_error:.3e}\n"
            f"max_abs_error={self.max_abs_error:.3e}\n"
            f"worst_pixel={self.worst_pixel[0]},{self.worst_pixel[1]}\n"
            f"step={self.step:g}\n"
            f"samples={self.samples}"
        )


def finite_diff(fn: Callable[[np.ndarray], float], u, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar functional, one pixel at a time."""
    if not step > 0:
        raise ValueError("step must be positive")
    u = as_image(u)
    grad = np.empty_like(u)
    work = u.copy()
    for idx in np.ndindex(u.shape):
        work[idx] = u[idx] + step
        plus = fn(work)
        work[idx] = u[idx] - step
        minus = fn(work)
        work[idx] = u[idx]
        if not (np.isfinite(plus) and np.isfinite(minus)):
            raise FloatingPointError(f"non-finite functional value at pixel {idx}")
        grad[idx] = (plus - minus) / (2.0 * step)
    return grad


def directional_diff(fn: Callable[[np.ndarray], np.ndarray], u, direction, step: float = FD_STEP) -> np.ndarray:
    """Central difference of an image-valued map along ``direction``."""
    u = as_image(u)
    d = np.asarray(direction, dtype=np.float64)
    return (fn(u + step * d) - fn(u - step * d)) / (2.0 * step)


def kink_mask(total: np.ndarray, margin: float = KINK_MARGIN) -> np.ndarray:
    """Pixels whose pre-projection skeleton value is within ``margin`` of 0 or 1."""
    return (np.abs(total) < margin) | (np.abs(total - 1.0) < margin)


def compare(analytic, reference, step: float = FD_STEP, samples: int = 1) -> GradCheckReport:
    """Max-norm relative error of ``analytic`` against ``reference``."""
    a = np.atleast_2d(np.asarray(analytic, dtype=np.float64))
    b = np.atleast_2d(np.asarray(reference, dtype=np.float64))
    diff = np.abs(a - b)
    worst = np.unravel_index(int(np.argmax(diff)), diff.shape)
    scale = max(float(np.max(np.abs(b))), float(np.max(np.abs(a))), 1e-12)
    return GradCheckReport(
        max_rel_error=float(diff.max() / scale),
        max_abs_error=float(diff.max()),
        worst_pixel=(int(worst[0]), int(worst[1])),
        step=step,
        samples=samples,
    )


def merge_reports(reports) -> GradCheckReport:
    reports = list(reports)
    worst = max(reports, key=lambda r: r.max_rel_error)
    return GradCheckReport(
        max_rel_error=worst.max_rel_error,
        max_abs_error=max(r.max_abs_error for r in reports),
        worst_pixel=worst.worst_pixel,
        step=worst.step,
        samples=sum(r.samples for r in reports),
    )


def check_skeleton_vjp(u, p: SmoothParams, cotangent, step: float = FD_STEP, vjp=smooth_skeleton_vjp) -> GradCheckReport:
    """Full-gradient check of ``<cotangent, S(u)>`` with kink pixels masked out.

    Zeroing the cotangent wherever the pre-projection sum sits near a ReLU
    kink makes the checked functional smooth around ``u``.
    """
    u = as_image(u)
    _, tape = smooth_skeleton(u, p)
    d = np.where(kink_mask(tape.total), 0.0, np.asarray(cotangent, dtype=np.float64))
    analytic = vjp(tape, d)
    reference = finite_diff(lambda v: float(np.sum(d * smooth_skeleton(v, p)[0])), u, step)
    return compare(analytic, reference, step)


def check_skeleton_vjp_directional(u, p: SmoothParams, cotangent, direction, step: float = FD_STEP) -> GradCheckReport:
    """Adjoint identity ``<vjp(d), v> == <d, J v>`` with ``J v`` by finite differences."""
    u = as_image(u)
    _, tape = smooth_skeleton(u, p)
    d = np.where(kink_mask(tape.total), 0.0, np.asarray(cotangent, dtype=np.float64))
    lhs = float(np.sum(smooth_skeleton_vjp(tape, d) * direction))
    jv = directional_diff(lambda v: smooth_skeleton(v, p)[0], u, direction, step)
    rhs = float(np.sum(d * jv))
    return compare([[lhs]], [[rhs]], step)


def check_cost_grad(w, skel_g, p: SmoothParams, step: float = FD_STEP, grad_fn=skeleton_cost_grad) -> GradCheckReport:
    analytic = grad_fn(w, skel_g, p)
    reference = finite_diff(lambda v: skeleton_cost(v, skel_g, p), w, step)
    return compare(analytic, reference, step)


def dual_l1_check(y, n_random: int = 100, rng: Optional[np.random.Generator] = None) -> Tuple[float, float]:
    """``(||y||_1, <sign(y), y>)``; also asserts weak duality for random feasible ``q``."""
    y = np.asarray(y, dtype=np.float64)
    l1 = float(np.sum(np.abs(y)))
    attained = float(np.sum(np.sign(y) * y))
    rng = rng or np.random.default_rng(0)
    for _ in range(n_random):
        q = rng.uniform(-1.0, 1.0, y.shape)
        ip = float(np.sum(q * y))
        if ip > l1 * (1 + 1e-12) + 1e-12:
            raise AssertionError(f"weak duality violated: <q, y> = {ip} > ||y||_1 = {l1}")
    return l1, attained


def sandwich_audit(u, p: SmoothParams) -> float:
    """Worst violation of ``D <= D_alpha <= D + alpha ln|B(x)|`` and the erosion analogue."""
    u = as_image(u)
    slack = p.alpha * np.log(domain_count(u.shape, p.element))
    d, ds = dilate(u, p.element), smooth_dilate(u, p)
    e, es = erode(u, p.element), smooth_erode(u, p)
    violation = np.maximum.reduce([d - ds, ds - d - slack, es - e, e - slack - es])
    return float(max(violation.max(), 0.0))


def subproblem_objective(u, o: float, p: float, q: float, cfg: SolverConfig):
    """Per-pixel strictly convex objective minimized by the ``u`` update."""
    u = np.asarray(u, dtype=np.float64)
    lin = -o + p - cfg.eta * q
    return lin * u + cfg.gamma * (u * np.log(u) + (1.0 - u) * np.log1p(-u))


def pixel_subproblem_oracle(o: float, p: float, q: float, cfg: SolverConfig, n: int = 10_000) -> float:
    """Grid-search minimizer of the per-pixel objective on [1e-6, 1 - 1e-6]."""
    grid = np.linspace(1e-6, 1.0 - 1e-6, n)
    return float(grid[np.argmin(subproblem_objective(grid, o, p, q, cfg))])


def random_interior_image(rng: np.random.Generator, shape=(12, 12), low: float = 0.1, high: float = 0.9) -> np.ndarray:
    return rng.uniform(low, high, shape)


def run_suite(seed: int = 0, alpha: float = 0.05, n_images: int = 4, size: int = 10, corrupt: bool = False) -> Tuple[bool, dict]:
    """Run every oracle once and return ``(ok, reports)``.

    ``corrupt`` perturbs the analytic skeleton gradient; it exists so the
    checker itself can be shown to fail.
    """
    rng = np.random.default_rng(seed)
    vjp = smooth_skeleton_vjp
    grad_fn = skeleton_cost_grad
    if corrupt:
        def vjp(tape, d):
            return 1.01 * smooth_skeleton_vjp(tape, d) + 1e-3

        def grad_fn(w, g, p):
            return 1.01 * skeleton_cost_grad(w, g, p)

    vjp_reports, cost_reports = [], []
    for k in range(n_images):
        p = SmoothParams(alpha, k % 3)
        u = random_interior_image(rng, (size, size))
        vjp_reports.append(check_skeleton_vjp(u, p, rng.standard_normal(u.shape), vjp=vjp))
        skel_g = smooth_skeleton(rng.uniform(0, 1, u.shape), p)[0]
        cost_reports.append(check_cost_grad(u, skel_g, p, grad_fn=grad_fn))

    sandwich = max(sandwich_audit(rng.uniform(-1, 1, (size, size)), SmoothParams(alpha)) for _ in range(10))

    duality_gap = 0.0
    for _ in range(5):
        y = rng.standard_normal((size, size))
        l1, attained = dual_l1_check(y, rng=rng)
        duality_gap = max(duality_gap, abs(l1 - attained))

    cfg = SolverConfig()
    sub_gap = 0.0
    for _ in range(50):
        o, pp, q = rng.normal(0, 3), rng.normal(0, 1), rng.uniform(-1, 1)
        closed = float(update_u(np.array([[o]]), np.array([[pp]]), np.array([[q]]), cfg)[0, 0])
        grid_u = pixel_subproblem_oracle(o, pp, q, cfg)
        gap = float(subproblem_objective(closed, o, pp, q, cfg) - subproblem_objective(grid_u, o, pp, q, cfg))
        sub_gap = max(sub_gap, gap)

    reports = {
        "skeleton_vjp": merge_reports(vjp_reports),
        "skeleton_cost_grad": merge_reports(cost_reports),
        "sandwich_violation": sandwich,
        "dual_l1_gap": duality_gap,
        "subproblem_gap": sub_gap,
    }
    ok = (
        reports["skeleton_vjp"].max_rel_error <= 1e-3
        and reports["skeleton_cost_grad"].max_rel_error <= 1e-3
        and sandwich <= 1e-10
        and duality_gap == 0.0
        and sub_gap <= 1e-8
    )
    return ok, reports
