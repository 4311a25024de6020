"""The Hamiltonian action functional on the truncated loop space.

A_H(x) = (1/2)(|x+|^2 - |x-|^2) - int_0^1 H(t, x(t)) dt, with the H^{1/2}
norms of the positive/negative spectral parts.  The gradient with respect to
the H^{1/2} inner product is

    grad A(x) = P+ x - P- x - j* grad H(x(.)),

whose zeros are exactly the truncated 1-periodic Hamiltonian orbits.  The
negative-gradient flow is integrated in semigroup form: the diagonal +-1
operator L (extended over the zero modes by the chosen splitting) is
integrated exactly, the nonlinear remainder by one explicit quadrature per
step, with step rejection whenever the action fails to decrease.

Coordinates: the truncation carries the h12-orthonormal real basis
e_{k,c} / sqrt(w_k), w_k = 2 pi |k| (w_0 = 1), c running over the 2n real
coordinates (Re z_1..Re z_n, Im z_1..Im z_n) of mode k.  Flat index
(K + k) * 2n + c.  All dense matrices below live in this basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domains import HamiltonianSpec
from .errors import ConvergenceError, DimensionMismatchError, InputError
from .loops import (TWO_PI, FourierLoop, ZeroModeSplit, eval_grid, from_grid,
                    h12_norm, jstar, split)


@dataclass(frozen=True)
class ActionContext:
    """Hamiltonian + discretization: truncation K, quadrature grid m >= 2K+1."""

    H: object                       # HamiltonianSpec or PerturbedHamiltonian
    K: int
    m: int = 0
    zsplit: ZeroModeSplit = None

    def __post_init__(self):
        if self.m == 0:
            object.__setattr__(self, "m", 4 * self.K)
        if self.m < 2 * self.K + 1:
            raise InputError(f"grid {self.m} < 2K+1 = {2 * self.K + 1}")
        if self.zsplit is None:
            object.__setattr__(self, "zsplit", ZeroModeSplit.default(self.n))

    @property
    def n(self) -> int:
        return self.H.domain.n

    @property
    def dim(self) -> int:
        return 2 * self.n * (2 * self.K + 1)

    def times(self) -> np.ndarray:
        return np.arange(self.m) / self.m

    def check(self, x: FourierLoop):
        if x.n != self.n:
            raise DimensionMismatchError(f"loop n={x.n}, context n={self.n}")


def action(ctx: ActionContext, x: FourierLoop) -> float:
    ctx.check(x)
    s = split(x.with_truncation(ctx.K))
    quad = 0.5 * (h12_norm(s.plus) ** 2 - h12_norm(s.minus) ** 2)
    vals = ctx.H.value(eval_grid(x.with_truncation(ctx.K), ctx.m), ctx.times())
    return quad - float(np.mean(vals))


def grad_action(ctx: ActionContext, x: FourierLoop) -> FourierLoop:
    ctx.check(x)
    xt = x.with_truncation(ctx.K)
    g = ctx.H.grad(eval_grid(xt, ctx.m), ctx.times())
    gh = jstar(from_grid(g, ctx.K))
    s = split(xt)
    return s.plus - s.minus - gh


# -- coordinates in the orthonormal basis -----------------------------------


def _weights(ctx: ActionContext) -> np.ndarray:
    k = np.arange(-ctx.K, ctx.K + 1, dtype=float)
    w = TWO_PI * np.abs(k)
    w[ctx.K] = 1.0
    return w


def loop_to_coeffs(ctx: ActionContext, x: FourierLoop) -> np.ndarray:
    """Coordinates of a loop in the h12-orthonormal basis, flat (dim,)."""
    xt = x.with_truncation(ctx.K)
    sw = np.sqrt(_weights(ctx))
    comp = np.concatenate([xt.modes.real, xt.modes.imag], axis=1)  # (2K+1, 2n)
    return (sw[:, None] * comp).ravel()


def coeffs_to_loop(ctx: ActionContext, v: np.ndarray) -> FourierLoop:
    sw = np.sqrt(_weights(ctx))
    comp = np.asarray(v, dtype=float).reshape(2 * ctx.K + 1, 2 * ctx.n)
    comp = comp / sw[:, None]
    modes = comp[:, :ctx.n] + 1j * comp[:, ctx.n:]
    return FourierLoop(ctx.n, ctx.K, modes)


def quadratic_part_diagonal(ctx: ActionContext) -> np.ndarray:
    """Diagonal of the +-1 quadratic part (0 on the k = 0 block)."""
    k = np.arange(-ctx.K, ctx.K + 1)
    return np.repeat(np.sign(k).astype(float), 2 * ctx.n)


def hessian_form(ctx: ActionContext, x: FourierLoop) -> np.ndarray:
    """Dense symmetric Hessian of A_H at x in the orthonormal basis.

    Equals diag(sign k) minus the h12-representation of the compact
    quadratic form int <Hess H(x(t)) xi(t), eta(t)> dt.
    """
    ctx.check(x)
    n, K, m = ctx.n, ctx.K, ctx.m
    zvals = eval_grid(x.with_truncation(K), m)
    S = ctx.H.hess_real(zvals, ctx.times())            # (m, 2n, 2n)
    t = ctx.times()
    D = ctx.dim
    R = np.zeros((m, 2 * n, D))
    for k in range(-K, K + 1):
        th = TWO_PI * k * t
        c, s = np.cos(th), np.sin(th)
        base = (K + k) * 2 * n
        for j in range(n):
            R[:, j, base + j] = c
            R[:, n + j, base + j] = s
            R[:, j, base + n + j] = -s
            R[:, n + j, base + n + j] = c
    T = np.einsum("gab,gbd->gad", S, R)
    Rf = R.reshape(m * 2 * n, D)
    Tf = T.reshape(m * 2 * n, D)
    Mb = (Rf.T @ Tf) / m
    sw = np.repeat(np.sqrt(_weights(ctx)), 2 * n)
    Mb = Mb / np.outer(sw, sw)
    M = np.diag(quadratic_part_diagonal(ctx)) - Mb
    return 0.5 * (M + M.T)


def hessian_apply(ctx: ActionContext, M: np.ndarray, xi: FourierLoop) -> FourierLoop:
    """Apply a hessian_form matrix to a loop, returning a loop."""
    return coeffs_to_loop(ctx, M @ loop_to_coeffs(ctx, xi))


# -- semigroup flow ----------------------------------------------------------


def _zero_block(ctx: ActionContext):
    B = np.hstack([ctx.zsplit.plus_basis, ctx.zsplit.minus_basis])
    lam = np.concatenate([np.ones(ctx.zsplit.plus_basis.shape[1]),
                          -np.ones(ctx.zsplit.minus_basis.shape[1])])
    return B, np.linalg.inv(B), lam


def _phi(dt: float, lam: np.ndarray) -> np.ndarray:
    # (1 - e^{-dt lam}) / lam, the exact variation-of-constants weight
    return np.where(lam == 0, dt, -np.expm1(-dt * lam) / np.where(lam == 0, 1.0, lam))


def _semigroup_step(ctx: ActionContext, x: FourierLoop, g: FourierLoop,
                    dt: float) -> FourierLoop:
    """u+ = e^{-dt L} u - phi(dt, L) (grad A(u) - L u), exact in L."""
    K, n = ctx.K, ctx.n
    k = np.arange(-K, K + 1)
    sgn = np.sign(k).astype(float)
    nb = g.modes - sgn[:, None] * x.modes        # grad A - L x, modewise
    lam = sgn[:, None] * np.ones((1, n))
    new = np.exp(-dt * lam) * x.modes - _phi(dt, lam) * nb
    # zero mode: L acts as +-1 through the chosen splitting of R^{2n}
    B, Binv, lam0 = _zero_block(ctx)
    x0 = np.concatenate([x.modes[K].real, x.modes[K].imag])
    g0 = np.concatenate([g.modes[K].real, g.modes[K].imag])
    c_x = Binv @ x0
    c_nb = Binv @ g0 - lam0 * c_x
    c_new = np.exp(-dt * lam0) * c_x - _phi(dt, lam0) * c_nb
    r0 = B @ c_new
    new[K] = r0[:n] + 1j * r0[n:]
    return FourierLoop(n, K, new)


def flow_step(ctx: ActionContext, x: FourierLoop, dt: float) -> FourierLoop:
    """One accepted step of the negative-gradient semigroup flow.

    The step is rejected and halved while the action increases by more than
    1e-12; persistent rejection raises ConvergenceError.
    """
    if dt <= 0:
        raise InputError("dt must be positive")
    ctx.check(x)
    x = x.with_truncation(ctx.K)
    a0 = action(ctx, x)
    g = grad_action(ctx, x)
    for _ in range(60):
        cand = _semigroup_step(ctx, x, g, dt)
        if action(ctx, cand) <= a0 + 1e-12:
            return cand
        dt *= 0.5
    raise ConvergenceError("flow step rejected after 60 halvings")


def flow_to_critical(ctx: ActionContext, x: FourierLoop, dt: float = 0.2,
                     tol: float = 1e-9, budget: int = 100000) -> FourierLoop:
    """Integrate the flow until the gradient norm drops below tol."""
    x = x.with_truncation(ctx.K)
    step = dt
    for _ in range(budget):
        g = grad_action(ctx, x)
        if h12_norm(g) <= tol:
            return x
        a0 = action(ctx, x)
        accepted = False
        for _ in range(60):
            cand = _semigroup_step(ctx, x, g, step)
            if action(ctx, cand) <= a0 + 1e-12:
                x = cand
                accepted = True
                step = min(step * 1.3, dt)
                break
            step *= 0.5
        if not accepted:
            raise ConvergenceError("flow stalled: step underflow")
    raise ConvergenceError(f"flow did not reach tol {tol} within {budget} steps")
