import numpy as np
import pytest

from capax.action import (ActionContext, action, coeffs_to_loop, flow_step,
                          flow_to_critical, grad_action, hessian_apply,
                          hessian_form, loop_to_coeffs)
from capax.domains import (EllipsoidSpec, ProfileParams, admissible_profile,
                           pure_quadratic, quadratic_model)
from capax.errors import InputError
from capax.loops import FourierLoop, h12_inner, h12_norm
from oracles import fd_directional, fd_second_directional, random_loop

TAU = 1.61803398875


def _ctx(K=12, beta=4.3):
    dom = EllipsoidSpec((1.0, TAU))
    return ActionContext(quadratic_model(dom, beta, eps=1e-3), K)


def test_grid_guard():
    dom = EllipsoidSpec((1.0,))
    with pytest.raises(InputError):
        ActionContext(quadratic_model(dom, 4.3, 1e-3), K=8, m=10)


def test_action_of_single_positive_mode():
    # the quadratic part of e^{2 pi i t} v is +pi |v|^2
    dom = EllipsoidSpec((1.0,))
    H = pure_quadratic(dom, 2.3)
    ctx = ActionContext(H, 8)
    v = np.array([0.5 + 0.0j])
    x = FourierLoop.single_mode(1, 8, 1, v)
    q = dom.gauge(np.array([0.5 + 0.0j]))
    expected = np.pi * 0.25 - 2.3 * (q - 1.0)
    assert np.isclose(action(ctx, x), expected, rtol=1e-12)


def test_negative_mode_action_sign():
    dom = EllipsoidSpec((1.0,))
    ctx = ActionContext(pure_quadratic(dom, 2.3), 8)
    v = np.array([0.5 + 0.0j])
    plus = action(ctx, FourierLoop.single_mode(1, 8, 1, v))
    minus = action(ctx, FourierLoop.single_mode(1, 8, -1, v))
    assert np.isclose(plus - minus, 2 * np.pi * 0.25, rtol=1e-12)


def test_gradient_matches_finite_differences():
    ctx = _ctx()
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = random_loop(rng, 2, ctx.K, scale=0.6)
        g = grad_action(ctx, x)
        for _ in range(3):
            d = random_loop(rng, 2, ctx.K, scale=1.0)
            fd = fd_directional(lambda y: action(ctx, y), x, d, 1e-6)
            assert np.isclose(h12_inner(g, d), fd, rtol=2e-6, atol=1e-9)


def test_hessian_form_matches_finite_differences():
    ctx = _ctx(K=6)
    rng = np.random.default_rng(5)
    x = random_loop(rng, 2, ctx.K, scale=0.6)
    M = hessian_form(ctx, x)
    assert np.allclose(M, M.T, atol=1e-12)
    for _ in range(4):
        d = random_loop(rng, 2, ctx.K)
        e = random_loop(rng, 2, ctx.K)
        lhs = loop_to_coeffs(ctx, d) @ M @ loop_to_coeffs(ctx, e)
        fd = fd_second_directional(lambda y: action(ctx, y), x, d, e, 1e-4)
        assert np.isclose(lhs, fd, rtol=2e-5, atol=1e-7)


def test_hessian_apply_consistent_with_form():
    ctx = _ctx(K=6)
    rng = np.random.default_rng(11)
    x = random_loop(rng, 2, ctx.K, scale=0.5)
    M = hessian_form(ctx, x)
    xi = random_loop(rng, 2, ctx.K)
    out = hessian_apply(ctx, M, xi)
    expected = M @ loop_to_coeffs(ctx, xi)
    assert np.allclose(loop_to_coeffs(ctx, out), expected, atol=1e-10)


def test_coeffs_round_trip_preserves_h12_norm():
    ctx = _ctx(K=8)
    rng = np.random.default_rng(2)
    x = random_loop(rng, 2, ctx.K)
    v = loop_to_coeffs(ctx, x)
    assert np.isclose(np.linalg.norm(v), h12_norm(x), rtol=1e-12)
    back = coeffs_to_loop(ctx, v)
    assert np.allclose(back.modes, x.modes, atol=1e-12)


def test_flow_step_decreases_action():
    # non-constant critical loops are saddles, so convergence is only
    # expected from seeds in the attracting positive-mode cone
    dom = EllipsoidSpec((1.0,))
    ctx = ActionContext(quadratic_model(dom, 0.5, eps=1e-3), 8)
    x = FourierLoop.single_mode(1, 8, 1, np.array([0.3 + 0.1j]))
    y = flow_step(ctx, x, 0.2)
    assert action(ctx, y) < action(ctx, x)


def test_flow_to_critical_reaches_constant():
    dom = EllipsoidSpec((1.0,))
    ctx = ActionContext(quadratic_model(dom, 0.5, eps=1e-3), 8)
    x = FourierLoop.single_mode(1, 8, 1, np.array([0.3 + 0.1j]))
    y = flow_to_critical(ctx, x, tol=1e-10)
    assert h12_norm(grad_action(ctx, y)) < 1e-10
    assert h12_norm(y) < 1e-6
