#!/usr/bin/env python3
"""Break a circle of orbits with a time-dependent perturbation (n = 1).

An unperturbed radial Hamiltonian on the disk carries its short orbit as a
whole circle of critical loops.  Adding a small time-dependent linear term
eta*cos(2*pi*t)*Re(z) isolates two critical loops out of the circle, one of
index d and one of index d+1.  This script refines both, builds the
filtered complex with the ridge stabilizer, and checks that the boundary
operator cancels the pair's contribution the way a circle's Morse complex
must: d^2 = 0 and one surviving homology class in each adjacent degree.
"""

import sys
import time

import numpy as np

from capax.action import ActionContext
from capax.complexes import (build_complex, check_d_squared,
                             circle_family_stabilizer, homology_ranks)
from capax.domains import (EllipsoidSpec, PerturbedHamiltonian, ProfileParams,
                           admissible_profile)
from capax.orbits import _family_orbit_loop, refine_orbit

ETA = 1e-2
TWO_PI = 2 * np.pi


def pert_value(t, z):
    z = np.asarray(z, dtype=complex)
    return ETA * np.cos(TWO_PI * np.asarray(t)) * z[..., 0].real


def pert_grad(t, z):
    z = np.asarray(z, dtype=complex)
    g = np.zeros_like(z)
    g[..., 0] = ETA * np.cos(TWO_PI * np.asarray(t))
    return g


def pert_hess(t, z):
    z = np.asarray(z, dtype=complex)
    m = 2 * z.shape[-1]
    return np.zeros(z.shape[:-1] + (m, m))


def main(argv):
    K = int(argv[1]) if len(argv) > 1 else 24
    base = admissible_profile(EllipsoidSpec((1.0,)), 1.5,
                              ProfileParams(delta=0.3))
    ctx = ActionContext(PerturbedHamiltonian(base, pert_value, pert_grad,
                                             pert_hess), K)
    base_ctx = ActionContext(base, K)
    family = _family_orbit_loop(base_ctx, base.windows[0])
    orbits = []
    for phase in (1.0, -1.0):
        o = refine_orbit(ctx, phase * family)
        orbits.append(o)
        print(f"phase {phase:+.0f}: action {o.actionValue:.8f} "
              f"rel {o.relIndex} cz {o.czIndex} |grad| {o.gradNorm:.1e}")
    t0 = time.time()
    cx = build_complex(ctx, orbits, (2 * base.epsilon, 1.4), seed_delta=1e-2,
                       flow_tol=3e-4, flow_dt=2.0, dt_max=2.0, budget=30000,
                       bin_tol=1e-4, min_drop=5e-4, accept_increase=np.inf,
                       stabilizer=circle_family_stabilizer(base_ctx, family))
    print(f"complex built in {time.time() - t0:.1f}s, "
          f"verified={cx.verified}, d^2=0: {check_d_squared(cx)}")
    ranks = {d: r for d, r in homology_ranks(cx).items() if r > 0}
    print(f"homology ranks: {ranks}")
    return 0 if ranks == {2: 1, 3: 1} and check_d_squared(cx) else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
