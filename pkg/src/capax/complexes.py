"""Filtered Morse complex of the action functional, with exact homology.

Generators are the orbit families (or, after a symmetry-breaking
perturbation, isolated critical loops) whose action lies in a window
(eps, c].  The boundary operator counts signed negative-gradient
trajectories between generators of adjacent relative index; coefficients
are exact rationals, and the executable soundness check is boundary o
boundary = 0 over Q.

Trajectory signs come from determinant transport: the full negative
eigenframe of the source is pushed along the trajectory by the linearized
flow (orientation-preserving QR renormalization), and at arrival its
orientation is compared with [incoming direction, negative frame of the
target].  Any globally consistent convention gives the same homology; this
one is fixed so results are reproducible.

Also here: the two spectral-invariant counters.  kappa_c counts the
degree-tower generators below a level; ind_eh_count counts nonpositive
directions of the level-c quadratic form on the positive-mode subspace.
The coherence of the two counts across random regular levels is one of the
package's primary verification targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg
import sympy

from .action import (ActionContext, action, coeffs_to_loop, grad_action,
                     hessian_form, loop_to_coeffs)
from .domains import EllipsoidSpec, pure_quadratic
from .errors import (ConvergenceError, InputError, NumericalDegeneracyError)
from .loops import FourierLoop, h12_norm
from .orbits import PeriodicOrbit

__all__ = [
    "FilteredMorseComplex", "SublevelMap", "build_complex", "homology_ranks",
    "sublevel_map", "kappa_c", "ind_eh_count", "eigencount_block",
    "ekappa_plus_modes",
]


@dataclass(frozen=True)
class FilteredMorseComplex:
    """Generators sorted by (relIndex, actionValue); rational boundary."""

    generators: tuple                 # of PeriodicOrbit
    boundary: dict                    # (row, col) -> Fraction, d(g_col) entry
    window: tuple                     # (eps, c)
    verified: bool = True             # False if a trajectory went unresolved

    def degree_of(self, i: int) -> int:
        return self.generators[i].relIndex

    def degrees(self):
        return sorted({g.relIndex for g in self.generators})

    def boundary_matrix(self, d: int) -> sympy.Matrix:
        """The map from degree-d chains to degree-(d-1) chains, exact."""
        rows = [i for i, g in enumerate(self.generators) if g.relIndex == d - 1]
        cols = [j for j, g in enumerate(self.generators) if g.relIndex == d]
        M = sympy.zeros(len(rows), len(cols))
        for a, i in enumerate(rows):
            for b, j in enumerate(cols):
                q = self.boundary.get((i, j), Fraction(0))
                M[a, b] = sympy.Rational(q.numerator, q.denominator)
        return M

    def to_json_obj(self):
        gens = []
        for g in self.generators:
            label = list(g.reebLabel) if g.reebLabel else None
            gens.append({"action": g.actionValue, "degree": g.relIndex,
                         "czIndex": g.czIndex, "label": label})
        bnd = [[i, j, q.numerator, q.denominator]
               for (i, j), q in sorted(self.boundary.items()) if q != 0]
        return {"generators": gens, "boundary": bnd,
                "window": list(self.window), "verified": self.verified}


@dataclass(frozen=True)
class SublevelMap:
    """Map on filtered homology induced by a sublevel inclusion L1 <= L2."""

    L1: float
    L2: float
    matrices: dict                    # degree -> sympy.Matrix

    def rank(self, d: int) -> int:
        M = self.matrices.get(d)
        return int(M.rank()) if M is not None else 0

    def compose(self, other: "SublevelMap") -> "SublevelMap":
        """self o other, requiring other.L2 == self.L1."""
        if abs(other.L2 - self.L1) > 1e-12:
            raise InputError("sublevel maps not composable")
        degs = set(self.matrices) | set(other.matrices)
        out = {}
        for d in degs:
            A = self.matrices.get(d)
            B = other.matrices.get(d)
            if A is None or B is None:
                continue
            out[d] = A * B
        return SublevelMap(other.L1, self.L2, out)


# ---------------------------------------------------------------------------
# boundary construction


def _negative_frame(M: np.ndarray, nu: float):
    ev, V = np.linalg.eigh(M)
    neg = ev < -nu
    return V[:, neg], ev


def _record_flow(ctx: ActionContext, x0: FourierLoop, tol: float,
                 budget: int, dt: float, dt_max: float = None,
                 stabilizer=None, accept_increase: float = 1e-12,
                 min_drop: float = 0.0, capture=None,
                 capture_radius: float = 0.05):
    """Flow to convergence recording (coeff vector, dt) per accepted step.

    An optional stabilizer is applied after every accepted step; it is the
    hook through which saddle connections along a broken orbit family are
    kept on the ridge (the connecting trajectory is measure zero inside the
    unstable manifold, so raw shooting necessarily escapes).  Stabilized
    runs keep a residual gradient floor, so termination can instead happen
    by capture: entering a ball around one of the listed target points.
    Returns (endpoint, path, captured index or None).
    """
    from .action import _semigroup_step
    if dt_max is None:
        dt_max = dt
    x = x0.with_truncation(ctx.K)
    path = [(loop_to_coeffs(ctx, x), 0.0)]
    step = dt
    a_init = action(ctx, x)
    for _ in range(budget):
        if capture:
            u = path[-1][0]
            dists = [np.linalg.norm(u - c) for _, c in capture]
            if min(dists) < capture_radius:
                return x, path, capture[int(np.argmin(dists))][0]
        g = grad_action(ctx, x)
        if h12_norm(g) <= tol and action(ctx, x) <= a_init - min_drop:
            return x, path, None
        a0 = action(ctx, x)
        for _ in range(60):
            cand = _semigroup_step(ctx, x, g, step)
            if stabilizer is not None:
                cand = stabilizer(cand)
            if action(ctx, cand) <= a0 + accept_increase:
                x = cand
                path.append((loop_to_coeffs(ctx, x), step))
                step = min(step * 1.3, dt_max)
                break
            step *= 0.5
        else:
            raise ConvergenceError("shooting flow stalled")
    raise ConvergenceError("shooting flow exhausted budget")


def _qr_pos(V: np.ndarray):
    """Orientation-preserving orthonormalization (diag(R) forced positive)."""
    Q, R = np.linalg.qr(V)
    flip = np.sign(np.diag(R))
    flip[flip == 0] = 1.0
    return Q * flip


def _transport_sign(ctx: ActionContext, path, F0: np.ndarray,
                    target_coeffs: np.ndarray, F_target: np.ndarray,
                    station_time: float = 20.0,
                    chunk_exponent: float = 15.0) -> int:
    """Orientation of the transported source frame at the target.

    The frame obeys V' = -Hess(u(t)) V; it is integrated with frozen-Hessian
    exponentials over path segments, in the Hessian eigenbasis with the
    overall growth factored out, re-orthonormalizing after every short chunk
    so the frame never collapses onto the dominant unstable directions.  All
    renormalizations preserve orientation exactly, so the final sign is that
    of det([incoming direction, target frame]^T V).
    """
    V = _qr_pos(F0)
    pos = 0
    while pos < len(path) - 1:
        start = pos
        t_acc = 0.0
        while pos < len(path) - 1 and t_acc < station_time:
            pos += 1
            t_acc += path[pos][1]
        M = hessian_form(ctx, coeffs_to_loop(ctx, path[start][0]))
        lam, U = np.linalg.eigh(M)
        spread = float(lam.max() - lam.min())
        dt_c = chunk_exponent / max(spread, 1e-6)
        W = U.T @ V
        remaining = t_acc
        while remaining > 1e-15:
            d = min(dt_c, remaining)
            W = np.exp(-d * (lam - lam.min()))[:, None] * W
            W = _qr_pos(W)
            remaining -= d
        V = U @ W
    d = path[-1][0] - target_coeffs
    nd = np.linalg.norm(d)
    if nd < 1e-14:
        d = path[-2][0] - target_coeffs
        nd = np.linalg.norm(d)
    d = d / nd
    B = np.column_stack([d, F_target])
    G = V.T @ B
    det = np.linalg.det(G)
    if abs(det) < 1e-8:
        raise NumericalDegeneracyError(
            f"trajectory orientation ill-conditioned (det {det:.2e})")
    return 1 if det > 0 else -1


def build_complex(ctx: ActionContext, orbits, window,
                  seed_delta: float = 1e-4, flow_tol: float = 1e-9,
                  budget: int = 100000, bin_tol: float = 1e-4,
                  flow_dt: float = 0.2, dt_max: float = None,
                  stabilizer=None, accept_increase: float = 1e-12,
                  min_drop: float = 0.0,
                  capture_radius: float = 0.05) -> FilteredMorseComplex:
    """Assemble the filtered complex over the action window (eps, c].

    Boundary entries between generators of adjacent index are counted by
    shooting: seeds leave the source along its most marginal unstable
    direction (the broken-family direction after a symmetry-breaking
    perturbation, which is where adjacent-index trajectories live for the
    radial models in scope), flow to convergence, and are binned to the
    nearest generator.
    """
    eps, cmax = window
    for o in orbits:
        if o.is_constant and not (o.actionValue < eps):
            raise InputError("window floor must sit above constant actions")
        if (not o.is_constant) and not (o.actionValue > eps):
            raise InputError("window floor must sit below non-constant actions")
    gens = tuple(sorted((o for o in orbits if eps < o.actionValue <= cmax),
                        key=lambda o: (o.relIndex, o.actionValue)))
    boundary = {}
    verified = True
    by_index = {}
    for i, g in enumerate(gens):
        by_index.setdefault(g.relIndex, []).append(i)

    pairs = [(j, i) for j, gj in enumerate(gens) for i, gi in enumerate(gens)
             if gj.relIndex == gi.relIndex + 1 and gj.actionValue > gi.actionValue]
    if not pairs:
        return FilteredMorseComplex(gens, boundary, tuple(window), verified)

    frames = {}
    hessians = {}
    for i, g in enumerate(gens):
        M = hessian_form(ctx, g.loop)
        nu = 1e-8 * float(np.linalg.norm(M, 2))
        F, ev = _negative_frame(M, nu)
        frames[i] = (F, ev, nu)
        hessians[i] = M

    counted = {}
    for j, _ in pairs:
        if j in counted:
            continue
        F, ev, nu = frames[j]
        neg_ev = ev[ev < -nu]
        # most marginal unstable direction carries the adjacent-index flows
        k_marginal = int(np.argmax(neg_ev))
        v = F[:, k_marginal]
        src = loop_to_coeffs(ctx, gens[j].loop)
        targets = [(i, loop_to_coeffs(ctx, gens[i].loop))
                   for i in by_index.get(gens[j].relIndex - 1, [])]
        for sgn_seed in (+1.0, -1.0):
            seed = coeffs_to_loop(ctx, src + sgn_seed * seed_delta * v)
            try:
                end, path, hit = _record_flow(
                    ctx, seed, flow_tol, budget, flow_dt, dt_max=dt_max,
                    stabilizer=stabilizer, accept_increase=accept_increase,
                    min_drop=min_drop, capture=targets,
                    capture_radius=capture_radius)
            except ConvergenceError:
                verified = False
                continue
            if hit is not None:
                i_best = hit
            else:
                a_end = action(ctx, end)
                dists = [abs(a_end - g.actionValue) for g in gens]
                i_best = int(np.argmin(dists))
                if dists[i_best] > bin_tol:
                    verified = False
                    continue
            if gens[i_best].relIndex != gens[j].relIndex - 1:
                raise NumericalDegeneracyError(
                    f"trajectory connects index {gens[j].relIndex} to "
                    f"{gens[i_best].relIndex}; expected difference 1")
            tgt = loop_to_coeffs(ctx, gens[i_best].loop)
            s = _transport_sign(ctx, path, F, tgt, frames[i_best][0])
            key = (i_best, j)
            boundary[key] = boundary.get(key, Fraction(0)) + Fraction(s)
        counted[j] = True

    boundary = {k: v for k, v in boundary.items() if v != 0}
    return FilteredMorseComplex(gens, boundary, tuple(window), verified)


def check_d_squared(cx: FilteredMorseComplex) -> bool:
    """Exact over Q: composed boundary vanishes in every degree."""
    for d in cx.degrees():
        A = cx.boundary_matrix(d)
        B = cx.boundary_matrix(d + 1)
        if A.cols and B.cols and not (A * B).is_zero_matrix:
            return False
    return True


def circle_family_stabilizer(base_ctx: ActionContext, family_loop: FourierLoop):
    """Ridge projection for shooting along a perturbation-broken orbit circle.

    A connecting trajectory between the two critical points of a broken
    S^1 family is measure zero inside the source's unstable manifold, so raw
    shooting escapes along the normal unstable bundle.  This returns a
    per-step corrector that removes the deviation components lying in the
    negative eigenspace of the unperturbed family Hessian at the nearest
    circle point (the family tangent itself is excluded by the eigenvalue
    margin).  The corrected flow shadows the true connection; orientation
    transport along it gives the same signs by homotopy stability.
    """
    K, n = base_ctx.K, base_ctx.n
    c0 = loop_to_coeffs(base_ctx, family_loop)
    M0 = hessian_form(base_ctx, family_loop)
    lam, U = np.linalg.eigh(M0)
    nu = 1e-8 * float(np.max(np.abs(lam)))
    F0 = U[:, lam < -nu]
    mags = np.abs(family_loop.modes)
    flat = int(np.argmax(mags))
    mstar, istar = flat // n - K, flat % n
    if mstar == 0:
        raise InputError("family loop looks constant")
    ks = np.arange(-K, K + 1)

    def shift(mat, s):
        comp = mat.reshape(2 * K + 1, 2 * n, -1)
        zc = comp[:, :n, :] + 1j * comp[:, n:, :]
        zc = np.exp(TWO_PI_J * ks * s)[:, None, None] * zc
        out = np.concatenate([zc.real, zc.imag], axis=1)
        return out.reshape(mat.shape)

    def stab(loop: FourierLoop) -> FourierLoop:
        z = loop.mode(mstar)[istar]
        s = float(np.angle(z)) / (TWO_PI * mstar)
        u = loop_to_coeffs(base_ctx, loop)
        cs = shift(c0[:, None], s)[:, 0]
        Fs = shift(F0, s)
        d = u - cs
        u2 = cs + d - Fs @ (Fs.T @ d)
        return coeffs_to_loop(base_ctx, u2)

    return stab


TWO_PI = 2.0 * math.pi
TWO_PI_J = 2j * math.pi


# ---------------------------------------------------------------------------
# homology and sublevel maps


def homology_ranks(cx: FilteredMorseComplex) -> dict:
    if not check_d_squared(cx):
        raise NumericalDegeneracyError("boundary does not square to zero")
    ranks = {}
    for d in cx.degrees():
        dim_d = sum(1 for g in cx.generators if g.relIndex == d)
        r_d = cx.boundary_matrix(d).rank()
        r_up = cx.boundary_matrix(d + 1).rank()
        ranks[d] = dim_d - r_d - r_up
    return {d: r for d, r in ranks.items() if r > 0 or True}


def _sub_indices(cx: FilteredMorseComplex, L: float):
    return [i for i, g in enumerate(cx.generators) if g.actionValue <= L]


def _homology_basis(cx: FilteredMorseComplex, sub, d: int):
    """Cycle representatives spanning H_d of the subcomplex on `sub`."""
    chain = [i for i in sub if cx.generators[i].relIndex == d]
    below = [i for i in sub if cx.generators[i].relIndex == d - 1]
    above = [i for i in sub if cx.generators[i].relIndex == d + 1]
    if not chain:
        return chain, []
    D = sympy.zeros(max(len(below), 1), len(chain))
    for a, i in enumerate(below):
        for b, j in enumerate(chain):
            q = cx.boundary.get((i, j), Fraction(0))
            D[a, b] = sympy.Rational(q.numerator, q.denominator)
    Dup = sympy.zeros(len(chain), max(len(above), 1))
    for a, j in enumerate(chain):
        for b, i in enumerate(above):
            q = cx.boundary.get((j, i), Fraction(0))
            Dup[a, b] = sympy.Rational(q.numerator, q.denominator)
    cycles = D.nullspace() if below else [sympy.Matrix(sympy.eye(len(chain))[:, c])
                                          for c in range(len(chain))]
    if not cycles:
        return chain, []
    Z = sympy.Matrix.hstack(*cycles)
    Bmat = Dup if above else sympy.zeros(len(chain), 1)
    # pick cycle columns extending the boundary image to a basis of Z + B
    picked = []
    cur = Bmat
    cur_rank = cur.rank()
    for c in range(Z.cols):
        cand = sympy.Matrix.hstack(cur, Z[:, c])
        r = cand.rank()
        if r > cur_rank:
            picked.append(Z[:, c])
            cur = cand
            cur_rank = r
    return chain, picked


def sublevel_map(cx: FilteredMorseComplex, L1: float, L2: float) -> SublevelMap:
    """Homology map induced by including the L1-sublevel into the L2 one."""
    if L1 > L2:
        raise InputError("need L1 <= L2")
    for L in (L1, L2):
        for g in cx.generators:
            if abs(g.actionValue - L) < 1e-12 * (1 + abs(L)):
                raise InputError(
                    f"level {L} sits on a generator action {g.actionValue}; "
                    f"nudge it off by more than 1e-12")
    subA = _sub_indices(cx, L1)
    subB = _sub_indices(cx, L2)
    matrices = {}
    for d in cx.degrees():
        chainA, basisA = _homology_basis(cx, subA, d)
        chainB, basisB = _homology_basis(cx, subB, d)
        if not basisA and not basisB:
            continue
        above_B = [i for i in subB if cx.generators[i].relIndex == d + 1]
        DupB = sympy.zeros(max(len(chainB), 1), max(len(above_B), 1))
        for a, j in enumerate(chainB):
            for b, i in enumerate(above_B):
                q = cx.boundary.get((j, i), Fraction(0))
                DupB[a, b] = sympy.Rational(q.numerator, q.denominator)
        cols = []
        posB = {g: a for a, g in enumerate(chainB)}
        HB = (sympy.Matrix.hstack(*basisB) if basisB
              else sympy.zeros(max(len(chainB), 1), 0))
        solve_mat = sympy.Matrix.hstack(HB, DupB) if above_B else HB
        for z in basisA:
            vec = sympy.zeros(max(len(chainB), 1), 1)
            for a, g in enumerate(chainA):
                vec[posB[g]] = z[a]
            if solve_mat.cols == 0:
                if not vec.is_zero_matrix:
                    raise NumericalDegeneracyError("inclusion not a cycle map")
                cols.append(sympy.zeros(0, 1))
                continue
            sol, params = solve_mat.gauss_jordan_solve(vec)
            sol = sol.subs({p: 0 for p in params})
            cols.append(sol[:HB.cols, :])
        nrows = HB.cols
        M = sympy.zeros(nrows, len(basisA))
        for c, col in enumerate(cols):
            for r in range(nrows):
                M[r, c] = col[r]
        matrices[d] = M
    return SublevelMap(float(L1), float(L2), matrices)


# ---------------------------------------------------------------------------
# spectral counters


def kappa_c(cx: FilteredMorseComplex, c: float) -> int:
    """Largest tower power visible at level c: the count of non-constant
    generators of degree n - 1 + 2j with action <= c."""
    return sum(1 for g in cx.generators
               if (not g.is_constant) and g.actionValue <= c)


@lru_cache(maxsize=32)
def _unit_pluspart(a: tuple, K: int, m: int) -> np.ndarray:
    """E+ block of the compact Hessian part for the unit-slope quadratic."""
    dom = EllipsoidSpec(a)
    ctx = ActionContext(pure_quadratic(dom, 1.0), K, m)
    M = hessian_form(ctx, FourierLoop.zero(dom.n, K))
    D = ctx.dim
    n = dom.n
    plus = np.arange((K + 1) * 2 * n, D)
    C = np.eye(len(plus)) - M[np.ix_(plus, plus)]   # compact part alone
    return C


def eigencount_block(ctx_or_dom, K: int = None, m: int = None):
    """Return a function c -> sorted eigenvalues of the level-c form on E+."""
    if isinstance(ctx_or_dom, ActionContext):
        dom, K, m = ctx_or_dom.H.domain, ctx_or_dom.K, ctx_or_dom.m
    else:
        dom = ctx_or_dom
        m = m if m is not None else 4 * K
    C = _unit_pluspart(tuple(dom.a), K, m)

    def eigs(c: float) -> np.ndarray:
        return np.linalg.eigvalsh(np.eye(C.shape[0]) - c * C)

    return eigs


def ind_eh_count(ctx: ActionContext, c: float) -> int:
    """Nonpositive-direction count of the level-c quadratic form on E+.

    Numerically the eigencount of the action Hessian of the comparison
    quadratic at level c, restricted to the positive-mode block of the
    truncation; a value of c within 1e-9 (relative) of a spectrum value
    leaves a near-zero eigenvalue and is rejected as a boundary case.

    The block is a real matrix, so each complex mode shows up as an exact
    eigenvalue pair; the count is reported in complex units.
    """
    if c <= 0:
        raise InputError("level must be positive")
    ev = eigencount_block(ctx)(c)
    if np.any(np.abs(ev) < 1e-9):
        raise NumericalDegeneracyError(
            f"level {c} is a boundary case: eigenvalue {ev[np.argmin(np.abs(ev))]:.2e}")
    neg = int(np.sum(ev < 0))
    if neg % 2:
        raise NumericalDegeneracyError("unpaired negative eigenvalue")
    return neg // 2


# ---------------------------------------------------------------------------
# the nested min-max test family


def ekappa_plus_modes(n: int, kappa: int):
    """Mode-coordinate pairs (k, j) spanning the positive part of the
    kappa-th min-max family: full modes 1..l-1 plus the first p coordinates
    of mode l, where kappa = n(l - 1) + p with 1 <= p <= n."""
    if kappa < 1:
        raise InputError("kappa must be >= 1")
    l = (kappa - 1) // n + 1
    p = kappa - n * (l - 1)
    out = [(k, j) for k in range(1, l) for j in range(n)]
    out += [(l, j) for j in range(p)]
    return out
