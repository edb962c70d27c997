"""Show how the smooth operators approach the classical ones as alpha shrinks."""

import numpy as np

from morsp.morph_core import classic_skeleton, dilate, make_element
from morsp.numcheck import sandwich_audit
from morsp.scenes import _ring
from morsp.smooth_morph import SmoothParams, smooth_dilate, smooth_skeleton

ALPHAS = (0.5, 0.2, 0.1, 0.05, 0.02, 0.01)


def main():
    el = make_element("square", 1)
    rng = np.random.default_rng(0)
    u = rng.random((32, 32))
    ring = _ring((32, 32), 15, 1.2).astype(float)
    ref = classic_skeleton(ring, el, 5)
    print(f"{'alpha':>6} {'max dilation gap':>17} {'bound':>8} {'violation':>10} {'skeleton err':>13}")
    for a in ALPHAS:
        p = SmoothParams(a)
        gap = np.max(smooth_dilate(u, p) - dilate(u, el))
        s, _ = smooth_skeleton(ring, p)
        print(f"{a:>6.2f} {gap:>17.5f} {a * np.log(9):>8.5f} {sandwich_audit(u, p):>10.1e} {np.abs(s - ref).max():>13.4f}")


if __name__ == "__main__":
    main()
