import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from noma_limfb.channel import describe
from noma_limfb.noma_core import (
    Candidate,
    EffectiveGains,
    LinkParams,
    beta_bounds,
    feasibility_geometric,
    feasibility_limited_feedback,
    quadratic_coefficients,
    rates,
    reconstruct_gains,
    sinr_all,
    solve_beta,
    solve_beta_array,
    stationary_beta,
    strong_user_order,
    sum_rate,
    sum_rate_derivative,
    tdma_rate,
)

LP = LinkParams(p=10.0, sigma2=1.0, r_th=1.0)


def gains_from_G(G11, G22, G21, G12, lp=LP):
    return EffectiveGains(g11=G11 / lp.p, g22=G22 / lp.p, g12=G12 / lp.p, g21=G21 / lp.p)


def test_link_params_validation():
    assert LP.epsilon == 1.0
    assert LinkParams.from_snr_db(10.0).p == pytest.approx(10.0)
    for bad in (dict(p=0.0), dict(p=1.0, sigma2=0.0), dict(p=1.0, r_th=-1.0)):
        with pytest.raises(ValueError):
            LinkParams(**bad)


def test_sinr_examples():
    g = EffectiveGains(g11=1.0, g22=1.0, g12=0.0, g21=0.0)
    assert sinr_all(g, LP, 0.1)[0] == pytest.approx(1.0)
    assert sinr_all(g, LP, 0.5)[1] == pytest.approx(5.0)
    s1, s2, _ = sinr_all(g, LP, 0.0)
    assert s1 == 0.0 and s2 == pytest.approx(10.0)


def test_rates_invariants():
    g = EffectiveGains(g11=2.0, g22=1.0, g12=0.3, g21=0.4)
    r = rates(g, LP, 0.3)
    assert r.r1 == pytest.approx(math.log2(1 + r.sinr1))
    assert r.r2 == pytest.approx(math.log2(1 + r.sinr2))
    assert r.r_sum == pytest.approx(r.r1 + r.r2)
    assert min(r.r1, r.r2) >= 0
    # beta with sinr1 = 1 gives one bit
    assert rates(g, LP, 1 / (LP.p * g.g11)).r1 == pytest.approx(1.0)


def test_beta_bounds_examples():
    b1, b2, _ = beta_bounds(EffectiveGains(g11=1.0, g22=1.0, g12=0.0, g21=0.0), LP)
    assert b1 == pytest.approx(0.1) and b2 == pytest.approx(0.9)
    _, _, bs = beta_bounds(EffectiveGains(g11=2.0, g22=1.0, g12=0.5, g21=0.0), LP)
    assert bs == pytest.approx(0.16)
    g = EffectiveGains(g11=2.0, g22=1.0, g12=0.5, g21=0.0)
    assert sinr_all(g, LP, 0.16)[2] == pytest.approx(LP.epsilon)


def test_beta_bounds_zero_strong_gain():
    b1, _, _ = beta_bounds(EffectiveGains(g11=0.0, g22=1.0, g12=0.0, g21=0.0), LP)
    assert b1 == math.inf
    assert not solve_beta(EffectiveGains(g11=0.0, g22=1.0, g12=0.0, g21=0.0), LP).feasible


def test_weak_rate_at_upper_bound_equals_threshold():
    g = EffectiveGains(g11=3.0, g22=1.2, g12=0.4, g21=0.5)
    _, b2, _ = beta_bounds(g, LP)
    assert rates(g, LP, b2).r2 == pytest.approx(LP.r_th, abs=1e-12)


def test_stationary_reference_example():
    g = gains_from_G(20.0, 10.0, 2.0, 5.0)
    a, b, c = quadratic_coefficients(g, LP)
    # proportional to 32 b^2 + 32 b - 19
    assert (b / a, c / a) == (pytest.approx(1.0), pytest.approx(-19 / 32))
    beta0 = stationary_beta(g, LP)
    assert beta0 == pytest.approx((-32 + math.sqrt(3456)) / 64, abs=1e-12)
    assert beta0 == pytest.approx(0.41856, abs=1e-5)


def test_stationary_symmetric_interference_free():
    g = EffectiveGains(g11=1.5, g22=1.5, g12=0.2, g21=0.0)
    assert stationary_beta(g, LP) == pytest.approx(0.5)


def test_stationary_degenerate_returns_none():
    # a = b = 0 and c != 0
    g = EffectiveGains(g11=1.0, g22=2.0, g12=0.0, g21=2.0)
    assert stationary_beta(g, LP) is None


def test_solve_reference_example():
    sol = solve_beta(gains_from_G(20.0, 10.0, 2.0, 5.0), LP)
    assert sol.feasible
    assert sol.interval == (pytest.approx(0.05), pytest.approx(0.16))
    assert sol.beta0 == pytest.approx(0.41856, abs=1e-5)
    assert sol.beta_star == pytest.approx(0.16)
    assert sol.active_candidate is Candidate.MAX
    grid = np.arange(0.05, 0.16 + 1e-12, 1e-4)
    g = gains_from_G(20.0, 10.0, 2.0, 5.0)
    assert grid[np.argmax(sum_rate(g, LP, grid))] == pytest.approx(0.16, abs=1e-4)


def test_solve_empty_interval():
    g = EffectiveGains(g11=0.2, g22=0.11, g12=0.01, g21=0.1)
    sol = solve_beta(g, LP)
    assert not sol.feasible and sol.beta_star is None and sol.active_candidate is None


def test_solve_symmetric_clamps_half():
    g = EffectiveGains(g11=2.0, g22=2.0, g12=2.0, g21=0.0)
    sol = solve_beta(g, LP)
    lo, hi = sol.interval
    assert sol.beta_star == pytest.approx(min(max(0.5, lo), hi))


def random_gains(seed, n):
    rng = np.random.default_rng(seed)
    g11 = rng.exponential(2.0, n) + 0.05
    g22 = g11 * rng.uniform(0.05, 1.0, n)
    c2 = rng.uniform(0, 1, n)
    return EffectiveGains(g11=g11, g22=g22, g12=g11 * c2, g21=g22 * c2)


def test_solve_matches_grid_search():
    g = random_gains(1, 2000)
    beta, feas, _ = solve_beta_array(g, LP)
    grid = np.arange(0.0, 1.0 + 1e-12, 1e-4)
    checked = 0
    for i in np.flatnonzero(feas)[:400]:
        gi = EffectiveGains(g.g11[i], g.g22[i], g.g12[i], g.g21[i])
        lo, hi = solve_beta(gi, LP).interval
        pts = grid[(grid >= lo) & (grid <= hi)]
        pts = np.concatenate([pts, [lo, hi]])
        best = sum_rate(gi, LP, pts).max()
        slope = np.abs(sum_rate_derivative(gi, LP, pts)).max()
        assert sum_rate(gi, LP, beta[i]) >= best - slope * 1e-4 - 1e-12
        checked += 1
    assert checked > 100


def test_derivative_matches_finite_difference():
    g = random_gains(2, 200)
    for beta in (0.1, 0.4, 0.8):
        fd = (sum_rate(g, LP, beta + 1e-6) - sum_rate(g, LP, beta - 1e-6)) / 2e-6
        assert np.allclose(sum_rate_derivative(g, LP, beta), fd, rtol=1e-5, atol=1e-7)


@given(st.integers(0, 2**32))
def test_stationary_point_zeroes_slope(seed):
    g = random_gains(seed, 1)
    gi = EffectiveGains(*(float(getattr(g, k)[0]) for k in ("g11", "g22", "g12", "g21")))
    b0 = stationary_beta(gi, LP)
    assume(b0 is not None and 1e-5 < b0 < 1 - 1e-5)
    fd = (sum_rate(gi, LP, b0 + 1e-6) - sum_rate(gi, LP, b0 - 1e-6)) / 2e-6
    assert abs(fd) < 1e-6


@given(st.integers(0, 2**32))
def test_interval_equals_sinr_constraint_set(seed):
    g = random_gains(seed, 1)
    gi = EffectiveGains(*(float(getattr(g, k)[0]) for k in ("g11", "g22", "g12", "g21")))
    grid = np.arange(0.0, 1.0 + 1e-12, 1e-3)
    s1, s2, s12 = sinr_all(gi, LP, grid)
    ok = (s1 >= LP.epsilon) & (s2 >= LP.epsilon) & (s12 >= LP.epsilon)
    sol = solve_beta(gi, LP)
    if sol.feasible:
        lo, hi = sol.interval
        inside = (grid >= lo - 1e-3) & (grid <= hi + 1e-3)
        assert np.all(inside[ok])
        strictly = (grid >= lo + 1e-3) & (grid <= hi - 1e-3)
        assert np.all(ok[strictly])
    else:
        assert not ok.any() or ok.sum() <= 1


def test_array_and_scalar_solvers_agree():
    g = random_gains(3, 500)
    beta, feas, choice = solve_beta_array(g, LP)
    for i in range(0, 500, 17):
        gi = EffectiveGains(g.g11[i], g.g22[i], g.g12[i], g.g21[i])
        sol = solve_beta(gi, LP)
        assert sol.feasible == bool(feas[i])
        if sol.feasible:
            assert sol.beta_star == beta[i]
            assert sol.active_candidate is list(Candidate)[choice[i]]


def test_tie_breaks_toward_smaller_beta():
    # with g21 = g11 = g22 the sum rate is flat in beta, so every candidate ties
    g = EffectiveGains(g11=1.0, g22=1.0, g12=1.0, g21=1.0)
    sol = solve_beta(g, LP)
    lo, hi = sol.interval
    assert lo < hi
    assert sum_rate(g, LP, lo) == pytest.approx(sum_rate(g, LP, hi), abs=1e-12)
    assert sol.beta_star == pytest.approx(lo)
    assert sol.active_candidate is Candidate.MIN


def test_reconstruct_gains_examples():
    w = np.array([1, 0], dtype=complex)
    g = reconstruct_gains(2.0, 1.0, w, np.array([0, 1], dtype=complex))
    assert g.g12 == 0.0 and g.g21 == 0.0
    g = reconstruct_gains(2.0, 1.0, w, w)
    assert g.g12 == 2.0 and g.g21 == 1.0
    w2 = np.array([0.5, np.sqrt(0.75)], dtype=complex)
    g = reconstruct_gains(2.0, 1.0, w, w2)
    assert g.g12 == pytest.approx(0.5) and g.g21 == pytest.approx(0.25)


def channel_with(H1, cos_theta, rho):
    h1 = np.array([math.sqrt(H1), 0.0], dtype=complex)
    s = math.sqrt(max(1 - cos_theta**2, 0.0))
    h2 = rho * math.sqrt(H1) * np.array([cos_theta, s], dtype=complex)
    return describe(h1, h2)


def test_geometric_small_angle_infeasible():
    ch = channel_with(2.0, 0.2, 0.5)
    assert math.sqrt(2 / 19) > 0.2
    assert feasibility_geometric(ch, LP) is False
    from noma_limfb.noma_core import full_csi_gains

    assert solve_beta(full_csi_gains(ch), LP).feasible is False


def test_geometric_collinear_feasible():
    assert feasibility_geometric(channel_with(50.0, 1.0, 0.9), LP) is True


def test_geometric_weak_link_infeasible():
    assert feasibility_geometric(channel_with(0.05, 1.0, 0.9), LP) is False


@given(st.floats(0.05, 20), st.floats(0, 1), st.floats(0.05, 1))
def test_geometric_test_equals_interval_test(H1, cos_theta, rho):
    from noma_limfb.noma_core import full_csi_gains

    ch = channel_with(H1, cos_theta, rho)
    sol = solve_beta(full_csi_gains(ch), LP)
    lo, hi = sol.interval
    # skip razor-thin boundary cases where the two tests differ only by rounding
    assume(abs(hi - lo) > 1e-9 or not sol.feasible)
    assert feasibility_geometric(ch, LP) == sol.feasible


def test_lf_zero_gains_infeasible():
    w = np.array([1, 0], dtype=complex)
    for h11, h22 in ((0.0, 1.0), (1.0, 0.0)):
        g = reconstruct_gains(h11, h22, w, w)
        for mode in ("operational", "conservative"):
            assert feasibility_limited_feedback(g, LP, mode, 0.1) is False


def test_lf_high_snr_collinear_feasible_both_modes():
    w1 = np.array([1, 0], dtype=complex)
    w2 = np.array([0.99, math.sqrt(1 - 0.99**2)], dtype=complex)
    g = reconstruct_gains(8.0, 5.0, w1, w2)
    lp = LinkParams(p=100.0)
    assert feasibility_limited_feedback(g, lp, "operational") is True
    assert feasibility_limited_feedback(g, lp, "conservative", 0.1) is True
    assert solve_beta(g, lp).feasible


@given(st.integers(0, 2**32), st.floats(0.0, 1.0))
def test_conservative_implies_operational(seed, delta):
    g = random_gains(seed, 50)
    cons = feasibility_limited_feedback(g, LP, "conservative", delta)
    oper = feasibility_limited_feedback(g, LP, "operational", delta)
    assert np.all(oper[cons])


def test_unknown_mode_rejected():
    g = EffectiveGains(1.0, 1.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        feasibility_limited_feedback(g, LP, "bogus")


def test_strong_user_order():
    assert strong_user_order(2.0, 1.0) == (1, 2)
    assert strong_user_order(0.6, 0.6) == (1, 2)
    # quantized order disagrees with the true order
    assert strong_user_order(1.2, 1.8) == (2, 1)
    assert strong_user_order(1.9, 1.85) == (1, 2)


def test_tdma_examples():
    assert tdma_rate(0.3, 0.3, LP) == pytest.approx(2.0)
    assert tdma_rate(0.3, 0.0, LP) == pytest.approx(1.0)
    g11, g22 = 1.7, 0.4
    assert tdma_rate(g11, g22, LP) == pytest.approx(
        0.5 * math.log2(1 + 10 * g11) + 0.5 * math.log2(1 + 10 * g22)
    )
