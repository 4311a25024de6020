#!/usr/bin/env python3
"""Cross-check the two capacity pipelines on one ellipsoid and report timing.

Usage: python3 scripts/verify_ellipsoid.py [axes] [kmax] [K]

Defaults reproduce the desk-scale benchmark: E(1, 1.61803398875) with
kmax = 20 at truncation K = 64.  Prints one row per capacity index with
the two values, their difference, and the wall-clock total.
"""

import sys
import time

from capax.capacities import verify_equality
from capax.domains import EllipsoidSpec


def main(argv):
    axes = tuple(float(s) for s in (argv[1] if len(argv) > 1
                                    else "1.0,1.61803398875").split(","))
    kmax = int(argv[2]) if len(argv) > 2 else 20
    K = int(argv[3]) if len(argv) > 3 else 64
    dom = EllipsoidSpec(axes)
    t0 = time.time()
    rows = verify_equality(dom, kmax, K=K)
    dt = time.time() - t0
    print(f"# E{axes}  kmax={kmax}  K={K}")
    print(f"{'k':>3} {'c_eh':>22} {'c_gh':>22} {'diff':>10} status")
    for r in rows:
        print(f"{r.k:3d} {r.c_eh:22.16g} {r.c_gh:22.16g} {r.diff:10.2e} "
              f"{'PASS' if r.passed else 'FAIL'}")
    print(f"# total {dt:.1f}s")
    return 0 if all(r.passed for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
