"""The two capacity pipelines and their cross-verification.

The spectral route finds c_k as the level where the count of nonpositive
directions of the level-c quadratic form on positive modes reaches k; the
level is resolved to machine precision as the root of the k-th smallest
eigenvalue, which is piecewise linear and decreasing in c.

The orbit route reads c_k off the filtered Morse complex of an admissible
profile: c_k is the action of the generator in degree n - 1 + 2k.  The two
routes share no code past the action functional itself; their agreement on
ellipsoids is the headline verification target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .action import ActionContext
from .complexes import build_complex, eigencount_block, kappa_c
from .domains import (EllipsoidSpec, ProfileParams, admissible_profile,
                      check_nondegenerate_below, quadratic_model,
                      reeb_spectrum)
from .errors import InputError, NumericalDegeneracyError
from .orbits import solve_quadratic_orbits

TWO_PI = 2.0 * math.pi

GH_COLLAR = 1e-10        # gauge width of the capacity-grade profile collar


@dataclass(frozen=True)
class CapacitySequence:
    """c_k for 1 <= k <= kmax; +inf past the slope-limited range."""

    values: dict                     # k -> float (math.inf allowed)
    method: str                      # "EH" or "GH"
    domain: EllipsoidSpec
    slope: float

    def __post_init__(self):
        ks = sorted(self.values)
        vals = [self.values[k] for k in ks]
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise NumericalDegeneracyError(
                f"{self.method} capacity sequence is not nondecreasing")

    def as_rows(self):
        return [(k, self.values[k]) for k in sorted(self.values)]


def choose_slope(dom: EllipsoidSpec, kmax: int) -> float:
    """1.1 times the kmax-th spectrum value, nudged off Spec and 2 pi Z."""
    scale = dom.a[0]
    cutoff = dom.a[-1] * (kmax + 2)
    spec = reeb_spectrum(dom, cutoff)
    while len(spec.entries) < kmax:
        cutoff *= 2
        spec = reeb_spectrum(dom, cutoff)
    L = 1.1 * spec.entries[kmax - 1][0]
    spec_hi = reeb_spectrum(dom, 2 * L + 1)

    def clear(c):
        d = min(abs(c - v) for v, _, _ in spec_hi.entries)
        kk = round(c / TWO_PI)
        if kk >= 1:
            d = min(d, abs(c - TWO_PI * kk))
        return d

    while clear(L) < 1e-6 * scale:
        L *= 1.0 + 1e-4
    return L


def capacity_eh(ctx: ActionContext, kmax: int) -> CapacitySequence:
    """Spectral pipeline: per-k root of the k-th eigenvalue of the level
    form on positive modes.  Values at or past the slope report +inf."""
    if ctx.H.kind != "quadraticModel":
        raise InputError("spectral capacities need the quadratic model")
    dom = ctx.H.domain
    L = ctx.H.slope
    eigs = eigencount_block(ctx)
    lo = 1e-9 * dom.a[0]
    ev_hi = eigs(L)
    count_hi = int(np.sum(ev_hi <= 0)) // 2   # exact Re/Im pairs
    values = {}
    for k in range(1, kmax + 1):
        if k > count_hi:
            values[k] = math.inf
            continue

        def fk(c, k=k):
            return float(np.sort(eigs(c))[2 * k - 2])

        if fk(lo) <= 0:
            raise NumericalDegeneracyError("lower bracket already nonpositive")
        root = brentq(fk, lo, L, xtol=1e-15 * max(1.0, L), rtol=8.9e-16)
        values[k] = float(root)
    return CapacitySequence(values=values, method="EH", domain=dom, slope=L)


def gh_context(dom: EllipsoidSpec, slope: float, K: int,
               m: int = 0) -> ActionContext:
    """Action context over the capacity-grade admissible profile."""
    H = admissible_profile(dom, slope, ProfileParams(delta=GH_COLLAR))
    return ActionContext(H, K, m)


def capacity_gh(ctx: ActionContext, kmax: int) -> CapacitySequence:
    """Orbit pipeline: c_k = action of the degree-(n - 1 + 2k) generator."""
    if ctx.H.kind != "admissibleProfile":
        raise InputError("orbit capacities need an admissible profile")
    dom = ctx.H.domain
    n = dom.n
    orbits = solve_quadratic_orbits(ctx)
    top = max(o.actionValue for o in orbits)
    cx = build_complex(ctx, orbits, (2 * ctx.H.epsilon, top + 1.0))
    values = {}
    by_degree = {}
    for g in cx.generators:
        if g.czIndex != g.relIndex:
            raise NumericalDegeneracyError(
                f"index routes disagree on {g.reebLabel}: "
                f"{g.relIndex} vs {g.czIndex}")
        by_degree.setdefault(g.relIndex, []).append(g.actionValue)
    for k in range(1, kmax + 1):
        d = n - 1 + 2 * k
        acts = by_degree.get(d, [])
        if len(acts) > 1:
            raise NumericalDegeneracyError(
                f"degree {d} carries {len(acts)} generators")
        values[k] = acts[0] if acts else math.inf
    return CapacitySequence(values=values, method="GH", domain=dom,
                            slope=ctx.H.slope)


def capacity_gh_multiset(dom: EllipsoidSpec, kmax: int,
                         slope: float) -> CapacitySequence:
    """Explicit-multiplicity fallback for rationally resonant ellipsoids.

    Coincident orbit families cannot be separated by the nondegenerate
    pipeline; degrees are assigned by sorted multiset rank (ties broken by
    smaller axis first), the documented convention whose equivalence with
    the homological grading is unverified on resonant domains.
    """
    spec = reeb_spectrum(dom, slope)
    vals = [v for v, _, _ in spec.entries if v < slope]
    values = {k: (vals[k - 1] if k <= len(vals) else math.inf)
              for k in range(1, kmax + 1)}
    return CapacitySequence(values=values, method="GH", domain=dom,
                            slope=slope)


@dataclass(frozen=True)
class VerifyRow:
    k: int
    c_eh: float
    c_gh: float
    diff: float
    passed: bool
    label: tuple = None


def verify_equality(dom: EllipsoidSpec, kmax: int, tol: float = 1e-6,
                    K: int = 64, m: int = 0, slope: float = None) -> list:
    """Per-k comparison of the two pipelines on one ellipsoid.

    Demands pairwise-separated spectrum values below the slope; resonant
    domains are rejected rather than silently answered.
    """
    L = slope if slope is not None else choose_slope(dom, kmax)
    spec = check_nondegenerate_below(dom, L)
    ctx_eh = ActionContext(quadratic_model(dom, L, eps=1e-4 * dom.a[0]), K, m)
    seq_eh = capacity_eh(ctx_eh, kmax)
    seq_gh = capacity_gh(gh_context(dom, L, K, m), kmax)
    rows = []
    for k in range(1, kmax + 1):
        a, b = seq_eh.values[k], seq_gh.values[k]
        if math.isinf(a) and math.isinf(b):
            diff, ok = 0.0, True
        elif math.isinf(a) or math.isinf(b):
            diff, ok = math.inf, False
        else:
            diff = abs(a - b)
            ok = diff <= tol * (1.0 + min(a, b))
        label = spec.entries[k - 1][1:] if k <= len(spec.entries) else None
        rows.append(VerifyRow(k=k, c_eh=a, c_gh=b, diff=diff, passed=ok,
                              label=label))
    return rows


@dataclass(frozen=True)
class AxiomRow:
    check: str
    k: int
    lhs: float
    rhs: float
    passed: bool


def axiom_checks(domA: EllipsoidSpec, domB: EllipsoidSpec, kmax: int,
                 K: int = 32, scalings=(0.5, 2.0, 3.0),
                 rel_tol: float = 1e-8) -> list:
    """Monotonicity under inclusion and conformality under a -> r^2 a.

    Both pipelines are exercised; the spectral one is held to round-off
    (1e-10 relative), the orbit one to rel_tol, reflecting the profile
    collar offset it carries.
    """
    rows = []

    def seq_pair(dom, kmax):
        L = choose_slope(dom, kmax)
        eh = capacity_eh(ActionContext(
            quadratic_model(dom, L, eps=1e-4 * dom.a[0]), K), kmax)
        gh = capacity_gh(gh_context(dom, L, K), kmax)
        return eh, gh

    if domA.n == domB.n and domB.contains(domA):
        ehA, ghA = seq_pair(domA, kmax)
        ehB, ghB = seq_pair(domB, kmax)
        for k in range(1, kmax + 1):
            rows.append(AxiomRow("monotone-EH", k, ehA.values[k], ehB.values[k],
                                 ehA.values[k] <= ehB.values[k] * (1 + 1e-10)))
            rows.append(AxiomRow("monotone-GH", k, ghA.values[k], ghB.values[k],
                                 ghA.values[k] <= ghB.values[k] * (1 + rel_tol)))
    ehA, ghA = seq_pair(domA, kmax)
    for r in scalings:
        ehS, ghS = seq_pair(domA.scaled(r * r), kmax)
        for k in range(1, kmax + 1):
            a, b = r * r * ehA.values[k], ehS.values[k]
            okE = (math.isinf(a) and math.isinf(b)) or \
                (abs(a - b) <= 1e-10 * (1 + abs(b)))
            rows.append(AxiomRow(f"conformal-EH-r{r}", k, a, b, okE))
            a, b = r * r * ghA.values[k], ghS.values[k]
            okG = (math.isinf(a) and math.isinf(b)) or \
                (abs(a - b) <= rel_tol * (1 + abs(b)))
            rows.append(AxiomRow(f"conformal-GH-r{r}", k, a, b, okG))
    return rows
