"""End-to-end acceptance checks, one test (and one printed line) each.

Run with `pytest -s tests/test_acceptance.py` to see the pass/fail lines.
"""

import math
import time

import numpy as np
import pytest

from capax.action import (ActionContext, action, grad_action, hessian_apply,
                          hessian_form, loop_to_coeffs)
from capax.capacities import (axiom_checks, capacity_eh, capacity_gh,
                              choose_slope, gh_context, verify_equality)
from capax.cli import main as cli_main
from capax.complexes import (build_complex, check_d_squared,
                             circle_family_stabilizer, ekappa_plus_modes,
                             homology_ranks, ind_eh_count, kappa_c,
                             sublevel_map)
from capax.domains import (EllipsoidSpec, PerturbedHamiltonian, ProfileParams,
                           admissible_profile, quadratic_model, reeb_spectrum,
                           spectral_gap)
from capax.loops import FourierLoop, h12_inner, h12_norm
from capax.orbits import (_family_orbit_loop, cz_index_crossing, refine_orbit,
                          relative_morse_index, solve_quadratic_orbits)
from oracles import (capacity_oracle, fd_directional, homology_rank_oracle,
                     random_loop, spectrum_multiset)

TAU = 1.61803398875
TWO_PI = 2 * np.pi


def _report(num, ok, detail):
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


# shared corpora -------------------------------------------------------------


@pytest.fixture(scope="module")
def corpus():
    """Solved orbits for the two nondegenerate benchmark ellipsoids."""
    out = []
    for a, beta, K in (((1.0, TAU), 6.7, 24), ((1.0, 1.3, 2.1), 6.45, 16)):
        dom = EllipsoidSpec(a)
        H = admissible_profile(dom, beta, ProfileParams(delta=1e-9))
        ctx = ActionContext(H, K)
        out.append((dom, ctx, solve_quadratic_orbits(ctx)))
    return out


@pytest.fixture(scope="module")
def tau_complex(corpus):
    dom, ctx, orbits = corpus[0]
    top = max(o.actionValue for o in orbits)
    return dom, ctx, build_complex(ctx, orbits, (2 * ctx.H.epsilon, top + 0.1))


def test_criterion_01_equality_at_desk_scale():
    t0 = time.time()
    dom = EllipsoidSpec((1.0, TAU))
    rows = verify_equality(dom, 20, tol=1e-6, K=64)
    oracle = capacity_oracle(dom.a, 20)
    ok = all(r.passed for r in rows)
    worst = 0.0
    for r, ov in zip(rows, oracle):
        worst = max(worst, abs(r.c_eh - ov) / ov, abs(r.c_gh - ov) / ov)
    ok = ok and worst < 1e-6
    elapsed = time.time() - t0
    ok = ok and elapsed <= 120.0
    _report(1, ok, f"20 capacities, both pipelines, max oracle deviation "
                   f"{worst:.2e}, {elapsed:.0f}s")


def test_criterion_02_min_max_family_containment():
    t0 = time.time()
    n, K = 2, 8
    axes = (1.0, 1.01)
    B = EllipsoidSpec(axes)
    rng = np.random.default_rng(2024)
    per_kappa = 834
    checked, worst = 0, -math.inf
    for kappa in range(1, 13):
        l = (kappa - 1) // n + 1
        p = kappa - n * (l - 1)
        a_val = l * axes[p - 1]
        ctx = ActionContext(quadratic_model(B, a_val, eps=1e-8), K)
        pairs = ekappa_plus_modes(n, kappa)
        for _ in range(per_kappa):
            modes = np.zeros((2 * K + 1, n), dtype=complex)
            scale = rng.uniform(0.05, 2.0)
            for k, j in pairs:
                modes[K + k, j - 1] = scale * (rng.standard_normal()
                                               + 1j * rng.standard_normal())
            # free zero and negative parts
            modes[K, :] = 0.3 * (rng.standard_normal(n)
                                 + 1j * rng.standard_normal(n))
            neg = rng.standard_normal((K, n)) + 1j * rng.standard_normal((K, n))
            modes[:K, :] += 0.3 * neg / (1.0 + np.arange(K, 0, -1)[:, None])
            x = FourierLoop(n, K, modes)
            worst = max(worst, action(ctx, x) - a_val)
            checked += 1
    elapsed = time.time() - t0
    ok = worst <= 1e-9 and elapsed <= 10.0
    _report(2, ok, f"{checked} samples across kappa=1..12, max excess "
                   f"{worst:.2e}, {elapsed:.1f}s")


def test_criterion_03_gradient_and_hessian_fidelity():
    dom = EllipsoidSpec((1.0, TAU))
    ctx = ActionContext(quadratic_model(dom, 4.3, eps=1e-3), 64)
    rng = np.random.default_rng(99)
    worst_g, worst_h = 0.0, 0.0
    for _ in range(100):
        x = random_loop(rng, 2, ctx.K, scale=0.6)
        d = random_loop(rng, 2, ctx.K)
        g = grad_action(ctx, x)
        fd = fd_directional(lambda y: action(ctx, y), x, d, 1e-6)
        den = max(abs(fd), 1e-8)
        worst_g = max(worst_g, abs(h12_inner(g, d) - fd) / den)
        M = hessian_form(ctx, x)
        hv = loop_to_coeffs(ctx, hessian_apply(ctx, M, d))
        fd_hv = loop_to_coeffs(
            ctx, (1.0 / 2e-5) * (grad_action(ctx, x + 1e-5 * d)
                                 - grad_action(ctx, x - 1e-5 * d)))
        worst_h = max(worst_h, np.linalg.norm(hv - fd_hv)
                      / max(np.linalg.norm(fd_hv), 1e-8))
    ok = worst_g < 1e-6 and worst_h < 1e-5
    _report(3, ok, f"100 points, K=64: grad dev {worst_g:.2e}, "
                   f"Hessian-vector dev {worst_h:.2e}")


def test_criterion_04_index_agreement_and_K_stability(corpus):
    checked = 0
    agree = True
    for dom, ctx, orbits in corpus:
        for o in orbits:
            agree = agree and (o.relIndex == o.czIndex)
            if not o.is_constant:
                checked += 1
        # K doubling on a spread of non-constant orbits per domain
        ctx2 = ActionContext(ctx.H, 2 * ctx.K)
        for o in [o for o in orbits if not o.is_constant][::3]:
            o2 = refine_orbit(ctx2, o.loop.with_truncation(2 * ctx.K))
            agree = agree and o2.relIndex == o.relIndex \
                and o2.czIndex == o.czIndex
    ok = agree and checked >= 20
    _report(4, ok, f"{checked} non-constant orbits, both routes, "
                   f"stable under K doubling")


def test_criterion_05_action_period_bound(corpus):
    ok = True
    worst = 0.0
    for dom, ctx, orbits in corpus:
        beta = ctx.H.slope
        bound = min(1.0 / beta, spectral_gap(dom, beta) / 3.0)
        for o in orbits:
            if o.is_constant:
                ok = ok and o.actionValue < ctx.H.epsilon
            else:
                dev = abs(o.actionValue - o.reebLabel[0] * dom.a[o.reebLabel[1] - 1])
                worst = max(worst, dev)
                ok = ok and dev < bound
    _report(5, ok, f"max |action - period| = {worst:.2e} within bound")


def test_criterion_06_morse_complex_soundness(corpus, tau_complex):
    ok = True
    # unperturbed complexes on both benchmark domains
    for dom, ctx, orbits in corpus:
        top = max(o.actionValue for o in orbits)
        cx = build_complex(ctx, orbits, (2 * ctx.H.epsilon, top + 0.1))
        ok = ok and cx.verified and check_d_squared(cx)
        ranks = {d: r for d, r in homology_ranks(cx).items() if r > 0}
        ok = ok and ranks == homology_rank_oracle(dom.a, dom.n, cx.window)

    # the perturbed circle-family instance, n = 1
    eta = 1e-2
    dom = EllipsoidSpec((1.0,))
    base = admissible_profile(dom, 1.5, ProfileParams(delta=0.3))

    def pv(t, z):
        z = np.asarray(z, dtype=complex)
        return eta * np.cos(TWO_PI * np.asarray(t)) * z[..., 0].real

    def pg(t, z):
        z = np.asarray(z, dtype=complex)
        g = np.zeros_like(z)
        g[..., 0] = eta * np.cos(TWO_PI * np.asarray(t))
        return g

    def ph(t, z):
        z = np.asarray(z, dtype=complex)
        m = 2 * z.shape[-1]
        return np.zeros(z.shape[:-1] + (m, m))

    ctx = ActionContext(PerturbedHamiltonian(base, pv, pg, ph), 24)
    base_ctx = ActionContext(base, 24)
    fam = _family_orbit_loop(base_ctx, base.windows[0])
    orbs = [refine_orbit(ctx, s * fam) for s in (1.0, -1.0)]
    stab = circle_family_stabilizer(base_ctx, fam)
    cx = build_complex(ctx, orbs, (2 * base.epsilon, 1.4), seed_delta=1e-2,
                       flow_tol=3e-4, flow_dt=2.0, dt_max=2.0, budget=30000,
                       bin_tol=1e-4, stabilizer=stab, min_drop=5e-4,
                       accept_increase=np.inf)
    ok = ok and cx.verified and check_d_squared(cx)
    ranks = {d: r for d, r in homology_ranks(cx).items() if r > 0}
    # a broken circle family carries the circle's homology: one class in
    # each adjacent degree
    ok = ok and ranks == {2: 1, 3: 1}
    _report(6, ok, "d^2 = 0 over Q on all complexes incl. the perturbed "
                   "family; ranks match the oracle")


def test_criterion_07_filtration_axioms(tau_complex):
    dom, ctx, cx = tau_complex
    acts = sorted(g.actionValue for g in cx.generators)
    ok = True
    rng = np.random.default_rng(5)
    # windows inside an action gap: the inclusion has full rank
    for a, b in zip(acts, acts[1:]):
        lo, hi = a + 0.25 * (b - a), a + 0.75 * (b - a)
        sm = sublevel_map(cx, lo, hi)
        total_rank = sum(sm.rank(d) for d in cx.degrees())
        dim_hi = sum(1 for g in cx.generators if g.actionValue <= hi)
        ok = ok and total_rank == dim_hi
    # wider windows: corank counts crossed actions
    for _ in range(5):
        lo, hi = sorted(rng.uniform(acts[0] + 1e-3, acts[-1] + 0.2, size=2))
        if any(abs(lo - a) < 1e-3 or abs(hi - a) < 1e-3 for a in acts):
            continue
        sm = sublevel_map(cx, lo, hi)
        crossed = sum(1 for g in cx.generators if lo < g.actionValue <= hi)
        total_rank = sum(sm.rank(d) for d in cx.degrees())
        dim_hi = sum(1 for g in cx.generators if g.actionValue <= hi)
        ok = ok and dim_hi - total_rank == crossed
    _report(7, ok, "sublevel maps: iso on action-free windows, corank = "
                   "crossed actions")


def test_criterion_08_surrogate_coherence(corpus):
    ok = True
    checked = 0
    for dom, ctx, orbits in corpus:
        top = max(o.actionValue for o in orbits)
        cx = build_complex(ctx, orbits, (2 * ctx.H.epsilon, top + 0.1))
        L = ctx.H.slope
        ctx_q = ActionContext(quadratic_model(dom, L, eps=1e-4 * dom.a[0]),
                              ctx.K)
        spec_vals = [v for v, _, _ in reeb_spectrum(dom, L).entries]
        rng = np.random.default_rng(31)
        done = 0
        while done < 50:
            c = float(rng.uniform(0.05, top))
            if min(abs(c - v) for v in spec_vals) < 1e-3:
                continue
            ok = ok and kappa_c(cx, c) == ind_eh_count(ctx_q, c)
            done += 1
            checked += 1
    _report(8, ok, f"kappa_c = ind_eh_count at {checked} random regular "
                   f"levels across 2 domains")


def test_criterion_09_capacity_axioms():
    ok = True
    # conformality, both pipelines, exercised through axiom_checks
    A = EllipsoidSpec((1.0, 1.3))
    rows = axiom_checks(A, A.scaled(1.2), 2, K=12, scalings=(0.5, 2.0, 3.0))
    ok = ok and all(r.passed for r in rows)
    # monotonicity on 20 random nested pairs
    rng = np.random.default_rng(12)
    pairs = 0
    while pairs < 20:
        a1 = 1.0 + 0.002 * rng.integers(0, 200)
        a2 = a1 * (1.05 + 0.4 * rng.random())
        grow = 1.01 + 0.3 * rng.random()
        inner = EllipsoidSpec((round(a1, 4), round(a2, 4)))
        outer = inner.scaled(grow)
        if spectral_gap(inner, 4 * inner.a[1]) < 1e-4:
            continue
        kmax, K = 2, 12
        Li, Lo = choose_slope(inner, kmax), choose_slope(outer, kmax)
        ehi = capacity_eh(ActionContext(
            quadratic_model(inner, Li, 1e-4 * inner.a[0]), K), kmax)
        eho = capacity_eh(ActionContext(
            quadratic_model(outer, Lo, 1e-4 * outer.a[0]), K), kmax)
        ghi = capacity_gh(gh_context(inner, Li, K), kmax)
        gho = capacity_gh(gh_context(outer, Lo, K), kmax)
        for k in range(1, kmax + 1):
            ok = ok and ehi.values[k] <= eho.values[k] * (1 + 1e-10)
            ok = ok and ghi.values[k] <= gho.values[k] * (1 + 1e-8)
        pairs += 1
    _report(9, ok, "conformality r in {0.5, 2, 3} and monotonicity on 20 "
                   "nested pairs, both pipelines")


def test_criterion_10_determinism(tmp_path):
    outs = []
    for name in ("a", "b"):
        path = tmp_path / f"{name}.csv"
        code = cli_main(["verify", "--domain", "1.0,1.61803398875",
                         "--kmax", "3", "--K", "16", "--seed", "42",
                         "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    _report(10, ok, "fixed seed reports are byte-identical")
