#!/usr/bin/env python3
"""Solve all periodic orbits of an admissible profile and tabulate indices.

Usage: python3 scripts/orbit_census.py [axes] [slope] [K]

For each orbit prints the closed-orbit label (multiplier, axis), action,
both index routes (eigenvalue count vs crossing count), and the residual
gradient norm.  A disagreement between the two index columns indicates a
discretization problem and is worth reporting.
"""

import sys

from capax.action import ActionContext
from capax.capacities import choose_slope
from capax.domains import EllipsoidSpec, ProfileParams, admissible_profile
from capax.orbits import solve_quadratic_orbits


def main(argv):
    axes = tuple(float(s) for s in (argv[1] if len(argv) > 1
                                    else "1.0,1.61803398875").split(","))
    dom = EllipsoidSpec(axes)
    slope = float(argv[2]) if len(argv) > 2 else choose_slope(dom, 10)
    K = int(argv[3]) if len(argv) > 3 else 24
    H = admissible_profile(dom, slope, ProfileParams(delta=1e-9))
    orbits = solve_quadratic_orbits(ActionContext(H, K))
    print(f"# E{axes}  slope={slope:.6g}  K={K}")
    print(f"{'label':>8} {'action':>20} {'rel':>4} {'cz':>4} {'|grad|':>9}")
    bad = 0
    for o in orbits:
        label = "const" if o.is_constant else f"({o.reebLabel[0]},{o.reebLabel[1]})"
        flag = ""
        if o.relIndex != o.czIndex:
            flag, bad = "  <-- index mismatch", bad + 1
        print(f"{label:>8} {o.actionValue:20.14g} {o.relIndex:4d} "
              f"{o.czIndex:4d} {o.gradNorm:9.1e}{flag}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
