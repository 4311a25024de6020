import numpy as np
import pytest

from capax.action import ActionContext
from capax.complexes import (build_complex, check_d_squared,
                             ekappa_plus_modes, homology_ranks, ind_eh_count,
                             kappa_c, sublevel_map)
from capax.domains import (EllipsoidSpec, ProfileParams, admissible_profile,
                           quadratic_model, reeb_spectrum)
from capax.errors import InputError, NumericalDegeneracyError
from capax.orbits import solve_quadratic_orbits
from oracles import homology_rank_oracle

TAU = 1.61803398875


@pytest.fixture(scope="module")
def n2_complex():
    dom = EllipsoidSpec((1.0, TAU))
    H = admissible_profile(dom, 3.3, ProfileParams(delta=1e-9))
    ctx = ActionContext(H, 16)
    orbits = solve_quadratic_orbits(ctx)
    cx = build_complex(ctx, orbits, (2 * H.epsilon, 3.3))
    return dom, ctx, cx


def test_boundary_squares_to_zero(n2_complex):
    _, _, cx = n2_complex
    assert cx.verified
    assert check_d_squared(cx)


def test_homology_matches_oracle(n2_complex):
    dom, _, cx = n2_complex
    ranks = homology_ranks(cx)
    oracle = homology_rank_oracle(dom.a, dom.n, cx.window)
    assert {d: r for d, r in ranks.items() if r > 0} == oracle


def test_generator_ordering_and_json(n2_complex):
    _, _, cx = n2_complex
    degs = [g.relIndex for g in cx.generators]
    assert degs == sorted(degs)
    obj = cx.to_json_obj()
    assert len(obj["generators"]) == len(cx.generators)
    assert obj["verified"] is True


def test_window_floor_guard(n2_complex):
    _, ctx, _ = n2_complex
    orbits = solve_quadratic_orbits(ctx)
    with pytest.raises(InputError):
        build_complex(ctx, orbits, (-1.0, 3.3))


def test_sublevel_map_full_rank_on_action_free_window(n2_complex):
    dom, _, cx = n2_complex
    # no generator action inside (1.1, 1.5): the inclusion is an iso
    sm = sublevel_map(cx, 1.1, 1.5)
    for d in cx.degrees():
        n_below = sum(1 for g in cx.generators
                      if g.relIndex == d and g.actionValue <= 1.1)
        assert sm.rank(d) == n_below


def test_sublevel_map_corank_counts_crossed_actions(n2_complex):
    dom, _, cx = n2_complex
    lo, hi = 1.1, 2.5
    sm = sublevel_map(cx, lo, hi)
    crossed = sum(1 for g in cx.generators if lo < g.actionValue <= hi)
    rank_total = sum(sm.rank(d) for d in cx.degrees())
    dim_hi = sum(1 for g in cx.generators if g.actionValue <= hi)
    assert dim_hi - rank_total == crossed


def test_sublevel_map_composes(n2_complex):
    _, _, cx = n2_complex
    a = sublevel_map(cx, 1.1, 1.7)
    b = sublevel_map(cx, 1.7, 2.5)
    ab = b.compose(a)
    direct = sublevel_map(cx, 1.1, 2.5)
    for d in set(ab.matrices) | set(direct.matrices):
        assert ab.rank(d) == direct.rank(d)


def test_sublevel_map_rejects_level_on_generator(n2_complex):
    _, _, cx = n2_complex
    act = cx.generators[1].actionValue
    with pytest.raises(InputError):
        sublevel_map(cx, act, 2.5)


def test_kappa_matches_eigencount(n2_complex):
    dom, _, cx = n2_complex
    L = 3.3
    ctx_q = ActionContext(quadratic_model(dom, L, eps=1e-4), 24)
    rng = np.random.default_rng(17)
    spec_vals = [v for v, _, _ in reeb_spectrum(dom, L).entries]
    count = 0
    while count < 25:
        c = float(rng.uniform(0.05, L - 1e-3))
        if min(abs(c - v) for v in spec_vals) < 1e-3:
            continue
        assert kappa_c(cx, c) == ind_eh_count(ctx_q, c)
        count += 1


def test_ind_eh_boundary_case_raises(n2_complex):
    dom, _, _ = n2_complex
    ctx_q = ActionContext(quadratic_model(dom, 3.3, eps=1e-4), 24)
    with pytest.raises(NumericalDegeneracyError):
        ind_eh_count(ctx_q, 1.0)
    with pytest.raises(InputError):
        ind_eh_count(ctx_q, -1.0)


def test_ekappa_mode_dimensions():
    for n in (1, 2, 3):
        for kappa in range(1, 10):
            pairs = ekappa_plus_modes(n, kappa)
            assert len(pairs) == kappa
            l = (kappa - 1) // n + 1
            assert max(k for k, _ in pairs) == l
