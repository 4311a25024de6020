"""Periodic orbits of radial Hamiltonians and their two index computations.

Non-constant 1-periodic orbits of an admissible profile live at the collar
levels where the period map f' equals a spectrum value T = m a_i; the orbit
is z_i(t) = e^{2 pi i m t} c with |c|^2 = q a_i / pi, a circle family under
time shift.  Indices:

  * relative Morse index: negative eigenvalue count of the truncated action
    Hessian minus the dimension of the truncated H^- (modes k <= -1 plus the
    minus half of the zero-mode splitting), after removing the known
    circle-family kernel direction;
  * Conley-Zehnder index: crossing count of the linearized Hamiltonian flow
    Phi' = J Hess H(x(t)) Phi in the constant trivialization, with the
    half-signature endpoint term at t = 0.  For transversally nondegenerate
    circle families the degenerate t = 1 endpoint is dropped; this is the
    grading under which the k-th spectrum value carries degree n - 1 + 2k.

The two routines are algorithmically independent and must agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .action import (ActionContext, action, coeffs_to_loop, grad_action,
                     hessian_form, loop_to_coeffs)
from .errors import (ConvergenceError, InputError, NumericalDegeneracyError)
from .loops import FourierLoop, h12_norm

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PeriodicOrbit:
    """One critical point (or circle family) of the action functional."""

    loop: FourierLoop
    actionValue: float
    gradNorm: float
    relIndex: int
    czIndex: int
    nondegenerate: bool
    reebLabel: tuple = None      # (multiplier m, axis i) or None for constants
    nondegMargin: float = 0.0

    @property
    def is_constant(self) -> bool:
        return self.reebLabel is None


@dataclass(frozen=True)
class FredholmPairDim:
    """Relative dimension dim(V cap W-perp) - dim(V-perp cap W)."""

    V: np.ndarray
    W: np.ndarray
    value: int


def relative_dim(V: np.ndarray, W: np.ndarray,
                 threshold: float = 1e-9) -> FredholmPairDim:
    """Rank-revealing relative dimension of two subspaces, columns = bases."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if V.shape[0] != W.shape[0]:
        raise InputError("subspaces live in different ambient dimensions")
    Vo = np.linalg.qr(V)[0] if V.shape[1] else V
    Wo = np.linalg.qr(W)[0] if W.shape[1] else W
    if V.shape[1] and W.shape[1]:
        sv = np.linalg.svd(Wo.T @ Vo, compute_uv=False)
        if np.any((sv > threshold) & (sv < 10 * threshold)):
            raise NumericalDegeneracyError(
                "relative dimension: singular value within 10x of threshold")
        r = int(np.sum(sv > threshold))
    else:
        r = 0
    value = (V.shape[1] - r) - (W.shape[1] - r)
    return FredholmPairDim(V=Vo, W=Wo, value=value)


# -- eigenvalue-count index --------------------------------------------------


def _eigen_census(ctx: ActionContext, x: FourierLoop, expect_family: bool):
    M = hessian_form(ctx, x)
    ev = np.linalg.eigvalsh(M)
    nu = 1e-8 * float(np.max(np.abs(ev)))
    near = np.abs(ev) <= nu
    n_near = int(np.sum(near))
    expected_kernel = 1 if expect_family else 0
    if n_near != expected_kernel:
        raise NumericalDegeneracyError(
            f"Hessian has {n_near} eigenvalues within margin {nu:.3e}, "
            f"expected {expected_kernel}")
    neg = int(np.sum(ev < -nu))
    margin = float(np.min(np.abs(ev[~near]))) if np.any(~near) else 0.0
    return neg, margin, nu


def relative_morse_index(ctx: ActionContext, x: FourierLoop,
                         is_family: bool = True) -> int:
    """Negative eigencount of the truncated Hessian relative to H^-."""
    base = 2 * ctx.n * ctx.K + ctx.zsplit.minus_basis.shape[1]
    neg, _, _ = _eigen_census(ctx, x, expect_family=is_family)
    return neg - base


# -- crossing-form index -----------------------------------------------------


def _J_matrix(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def _signature(A: np.ndarray, tol: float) -> int:
    ev = np.linalg.eigvalsh(0.5 * (A + A.T))
    return int(np.sum(ev > tol) - np.sum(ev < -tol))


def linearized_flow(ctx: ActionContext, x: FourierLoop, rtol=1e-12, atol=1e-12):
    """Solve Phi' = J Hess H(x(t)) Phi, Phi(0) = I, with dense output."""
    n = ctx.n
    J = _J_matrix(n)
    xt = x.with_truncation(ctx.K)
    ks = np.arange(-ctx.K, ctx.K + 1)

    def S_of(t):
        z = np.exp(TWO_PI * 1j * ks * t) @ xt.modes
        return ctx.H.hess_real(z, t)

    def rhs(t, y):
        Phi = y.reshape(2 * n, 2 * n)
        return (J @ S_of(t) @ Phi).ravel()

    sol = solve_ivp(rhs, (0.0, 1.0), np.eye(2 * n).ravel(), method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"linearized flow integration failed: {sol.message}")

    def Phi(t):
        return sol.sol(t).reshape(2 * n, 2 * n)

    return Phi, S_of


def cz_index_crossing(ctx: ActionContext, x: FourierLoop,
                      is_family: bool = True, samples: int = None) -> int:
    """Conley-Zehnder index by regularized crossing counting.

    Crossings are the interior times where Phi(t) - I is singular.  With a
    one-dimensional kernel the determinant of Phi(t) - I changes sign
    transversally, so crossings are bracketed as sign changes on a grid and
    refined by bisection to machine precision; each contributes the
    signature of Hess H(x(t)) restricted to the kernel.  The t = 0 endpoint
    contributes half the full signature.  A transversally nondegenerate
    family must show exactly a 1-dimensional kernel at t = 1, which is not
    counted; any wider endpoint kernel is an error.

    A smallest-singular-value sweep backstops the determinant scan: a
    near-singular time that no sign change explains signals an even-order
    crossing the method cannot grade, and is reported as a degeneracy
    instead of silently folded in.
    """
    n = ctx.n
    Phi, S_of = linearized_flow(ctx, x)
    I2 = np.eye(2 * n)

    def gdet(t):
        return float(np.linalg.det(Phi(t) - I2))

    def smin(t):
        return float(np.linalg.svd(Phi(t) - I2, compute_uv=False)[-1])

    index = 0.5 * _signature(S_of(0.0), tol=1e-12)
    if abs(index - round(index)) > 1e-9 and not is_family:
        raise NumericalDegeneracyError("odd endpoint signature at t = 0")

    if samples is None:
        # crossing density grows with the rotation budget of the flow
        rot = np.linalg.norm(S_of(0.0), 2) / TWO_PI
        samples = int(max(4096, 1024 * math.ceil(rot + 1)))
    ts = np.linspace(0.0, 1.0, samples + 1)
    gs = np.array([gdet(t) for t in ts])
    svals = np.array([smin(t) for t in ts])
    scale = float(np.max(svals))

    roots = []
    for i in range(1, samples + 1):
        if gs[i - 1] == 0.0 or gs[i] == 0.0:
            continue
        if np.sign(gs[i - 1]) == np.sign(gs[i]):
            continue
        t_star = float(brentq(gdet, ts[i - 1], ts[i], xtol=1e-14, rtol=8.9e-16))
        roots.append(t_star)

    for t_star in roots:
        if t_star < 1e-9 or t_star > 1.0 - 1e-7:
            continue
        A = Phi(t_star) - I2
        sv = np.linalg.svd(A, compute_uv=False)
        V = np.linalg.svd(A)[2]
        ker_dim = max(1, int(np.sum(sv < 1e-6 * max(scale, 1.0))))
        Kv = V[-ker_dim:].T
        Gamma = Kv.T @ S_of(t_star) @ Kv
        sig = _signature(Gamma, tol=1e-10 * np.linalg.norm(S_of(t_star), 2))
        index += sig

    # even-kernel crossings: the determinant touches zero quadratically at
    # times where a rotation block returns to the identity, so they leave
    # no sign change; locate them as refined singular-value dips instead
    touches = []
    for i in range(1, samples):
        if not (svals[i] <= svals[i - 1] and svals[i] <= svals[i + 1]):
            continue
        if svals[i] >= 0.1 * max(scale, 1.0):
            continue
        res = minimize_scalar(lambda t: smin(t) ** 2,
                              bounds=(ts[i - 1], ts[i + 1]),
                              method="bounded", options={"xatol": 1e-12})
        t_m, v_m = float(res.x), math.sqrt(max(float(res.fun), 0.0))
        if v_m >= 1e-8 * max(scale, 1.0):
            continue
        if t_m < 1e-9 or t_m > 1.0 - 1e-7:
            continue
        if any(abs(t_m - r) <= 1e-7 for r in roots):
            continue
        if any(abs(t_m - r) <= 1e-9 for r in touches):
            continue
        touches.append(t_m)
        A = Phi(t_m) - I2
        sv = np.linalg.svd(A, compute_uv=False)
        V = np.linalg.svd(A)[2]
        ker_dim = int(np.sum(sv < 1e-6 * max(scale, 1.0)))
        if ker_dim < 2:
            # an odd-kernel crossing always flips the determinant sign; a
            # dip here means two crossings fused below grid resolution
            raise NumericalDegeneracyError(
                f"unresolvable crossing cluster near t = {t_m:.9f}")
        Kv = V[-ker_dim:].T
        Gamma = Kv.T @ S_of(t_m) @ Kv
        index += _signature(Gamma, tol=1e-10 * np.linalg.norm(S_of(t_m), 2))

    # endpoint census
    end_sv = np.linalg.svd(Phi(1.0) - np.eye(2 * n), compute_uv=False)
    end_ker = int(np.sum(end_sv < 1e-6 * max(scale, 1.0)))
    if is_family:
        if end_ker != 1:
            raise NumericalDegeneracyError(
                f"family orbit has endpoint kernel dimension {end_ker}, expected 1")
    elif end_ker != 0:
        raise NumericalDegeneracyError(
            "nondegenerate orbit has a crossing at t = 1")

    if abs(index - round(index)) > 1e-9:
        raise NumericalDegeneracyError(f"non-integer crossing index {index}")
    return int(round(index))


# -- orbit enumeration and refinement ---------------------------------------


def _family_orbit_loop(ctx: ActionContext, window) -> FourierLoop:
    i = window.axis - 1
    amp = math.sqrt(window.level * ctx.H.domain.a[i] / math.pi)
    c = np.zeros(ctx.n, dtype=complex)
    c[i] = amp
    return FourierLoop.single_mode(ctx.n, ctx.K, window.multiplier, c)


def solve_quadratic_orbits(ctx: ActionContext,
                           with_indices: bool = True) -> list:
    """Enumerate the 1-periodic orbits of a radial model Hamiltonian.

    For an admissible profile: one circle family per spectrum value below
    the slope (at its collar window) plus the constant orbit at the origin.
    For the quadratic model (slope off the spectrum) only the constant
    representative at the origin exists.
    """
    H = ctx.H
    if H.kind not in ("admissibleProfile", "quadraticModel"):
        raise InputError("orbit enumeration needs a radial model Hamiltonian")
    orbits = []

    origin = FourierLoop.constant(np.zeros(ctx.n), K=ctx.K)
    g0 = h12_norm(grad_action(ctx, origin))
    a0 = action(ctx, origin)
    if H.kind == "admissibleProfile":
        if with_indices:
            rel0 = relative_morse_index(ctx, origin, is_family=False)
            cz0 = cz_index_crossing(ctx, origin, is_family=False)
            _, margin0, _ = _eigen_census(ctx, origin, expect_family=False)
        else:
            rel0 = cz0 = ctx.n
            margin0 = 0.0
        orbits.append(PeriodicOrbit(loop=origin, actionValue=a0, gradNorm=g0,
                                    relIndex=rel0, czIndex=cz0,
                                    nondegenerate=True, reebLabel=None,
                                    nondegMargin=margin0))
        for r, w in enumerate(H.windows, start=1):
            loop = _family_orbit_loop(ctx, w)
            g = h12_norm(grad_action(ctx, loop))
            a = action(ctx, loop)
            if with_indices:
                neg, margin, _ = _eigen_census(ctx, loop, expect_family=True)
                rel = neg - (2 * ctx.n * ctx.K + ctx.zsplit.minus_basis.shape[1])
                cz = cz_index_crossing(ctx, loop, is_family=True)
            else:
                rel = cz = ctx.n - 1 + 2 * r
                margin = 0.0
            orbits.append(PeriodicOrbit(loop=loop, actionValue=a, gradNorm=g,
                                        relIndex=rel, czIndex=cz,
                                        nondegenerate=True,
                                        reebLabel=(w.multiplier, w.axis),
                                        nondegMargin=margin))
    else:
        # flat interior: the constant family is degenerate as individual
        # loops; report the origin representative, unverified
        orbits.append(PeriodicOrbit(loop=origin, actionValue=a0, gradNorm=g0,
                                    relIndex=0, czIndex=0, nondegenerate=False,
                                    reebLabel=None))
    orbits.sort(key=lambda o: (o.actionValue, o.relIndex))
    return orbits


def refine_orbit(ctx: ActionContext, guess: FourierLoop,
                 tol: float = 1e-10, max_iter: int = 40) -> PeriodicOrbit:
    """Newton refinement on the gradient, tolerant of circle-family kernels.

    The Hessian solve uses a pseudo-inverse so the time-shift direction is
    simply not moved along; convergence to a different critical value than
    the guess's neighborhood is flagged as a basin escape.
    """
    ctx.check(guess)
    x = guess.with_truncation(ctx.K)
    a_start = action(ctx, x)
    res = h12_norm(grad_action(ctx, x))
    for _ in range(max_iter):
        if res <= tol:
            break
        M = hessian_form(ctx, x)
        g = loop_to_coeffs(ctx, grad_action(ctx, x))
        step = np.linalg.lstsq(M, -g, rcond=1e-10)[0]
        cand = x + coeffs_to_loop(ctx, step)
        res_new = h12_norm(grad_action(ctx, cand))
        tries = 0
        while res_new > res and tries < 30:
            step *= 0.5
            cand = x + coeffs_to_loop(ctx, step)
            res_new = h12_norm(grad_action(ctx, cand))
            tries += 1
        if res_new >= res and res > tol:
            raise ConvergenceError(
                f"Newton stalled at residual {res:.3e} (tol {tol:.1e})")
        x, res = cand, res_new
    else:
        if res > tol:
            raise ConvergenceError(
                f"Newton did not reach {tol:.1e} in {max_iter} iterations")
    a_end = action(ctx, x)
    if abs(a_end - a_start) > 0.1 * (1.0 + abs(a_start)):
        raise ConvergenceError(
            f"basin escape: action moved {a_start:.6g} -> {a_end:.6g}")
    # autonomous non-constant orbits come in time-shift circles; a
    # time-dependent Hamiltonian isolates its critical loops
    nonconstant = h12_norm(x - FourierLoop.constant(x.mode(0), ctx.K)) > 1e-6
    is_family = nonconstant and not ctx.H.time_dependent
    neg, margin, _ = _eigen_census(ctx, x, expect_family=is_family)
    rel = neg - (2 * ctx.n * ctx.K + ctx.zsplit.minus_basis.shape[1])
    cz = cz_index_crossing(ctx, x, is_family=is_family)
    label = None
    if nonconstant and getattr(ctx.H, "windows", ()):
        w = min(ctx.H.windows, key=lambda w: abs(w.value - a_end))
        if abs(w.value - a_end) < 0.4:
            label = (w.multiplier, w.axis)
    return PeriodicOrbit(loop=x, actionValue=a_end, gradNorm=res,
                         relIndex=rel, czIndex=cz, nondegenerate=True,
                         reebLabel=label, nondegMargin=margin)
