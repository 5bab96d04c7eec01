import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import zeta

from ruellekit.core import PointSeq, birkhoff_sum, d_n, d_omega, make_alphabet, make_potential
from ruellekit.errors import InequalityViolationError, InvalidArgumentError
from ruellekit.regularity import (
    CONSISTENT,
    VIOLATED,
    PairSampler,
    algebra_pointwise_check,
    birkhoff_profile,
    bowen_profile,
    constant_pair,
    distortion_audit,
    growth_ratios,
    holder_estimate,
    ising_variation,
    ising_variation_sup,
    reevaluate,
    strong_walters_audit,
    variation_fit,
    walters_norm_estimate,
    weak_walters_audit,
)
from ruellekit.transfer import normalize_g0, rpf_solve

SPINS = make_alphabet("finite-atomic")
GRID = make_alphabet("interval-uniform", m=8)
SMALL = PairSampler(count=40, seed=3, length=16)


def test_holder_examples():
    assert holder_estimate(make_potential("constant", GRID, c=1.0), 1.0, SMALL) == 0.0
    fc = make_potential("first_coordinate", GRID)
    x, y = constant_pair(GRID, 0, 1)
    assert abs(fc.at(x) - fc.at(y)) / d_omega(x, y) == pytest.approx(1.0, abs=1e-15)
    # a lone first-coordinate flip halves the distance, so the supremum is 2
    assert holder_estimate(fc, 1.0, SMALL) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(InvalidArgumentError):
        holder_estimate(fc, 1.5)


def test_holder_grows_with_truncation_depth():
    est = [
        holder_estimate(make_potential("long_range_ising", SPINS, alpha=3.0, d=d), 1.0, SMALL)
        for d in (8, 12, 16, 20)
    ]
    assert all(b > a for a, b in zip(est, est[1:]))


def test_strong_audit_first_coordinate_grows_linearly():
    fc = make_potential("first_coordinate", GRID)
    eta = GRID.nodes[1] - GRID.nodes[0]
    rep = strong_walters_audit(fc, 16, [eta], SMALL)
    assert rep.verdict == VIOLATED
    curve = {r.n: r.observed for r in rep.rows}
    for n in (1, 4, 16):
        assert curve[n] == pytest.approx(n * eta, rel=1e-12)
    # the exact majorant caps every observation
    assert all(r.observed <= r.bound + 1e-12 for r in rep.rows)


def test_strong_audit_constant_and_separated_spins():
    rep = strong_walters_audit(make_potential("constant", GRID, c=0.3), 8, [0.1, 0.5], SMALL)
    assert rep.max_observed() == 0.0 and rep.verdict == CONSISTENT
    n_max = 6
    nn = make_potential("nn_ising", SPINS, beta=1.0)
    rep = strong_walters_audit(nn, n_max, [2.0 * 2.0 ** -(n_max + 2)], SMALL)
    assert rep.max_observed() == 0.0


def test_bowen_profile_matches_metric():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = PointSeq(GRID, tuple(rng.integers(8, size=10)), int(rng.integers(8)))
        y = PointSeq(GRID, tuple(rng.integers(8, size=10)), int(rng.integers(8)))
        prof = bowen_profile(x, y, 12)
        for k in (0, 3, 9):
            assert prof[k] == pytest.approx(d_omega(x.shift(k), y.shift(k)), abs=1e-15)
        assert np.max(prof[:5]) == pytest.approx(d_n(x, y, 5), abs=1e-15)


def test_birkhoff_profile_matches_sums():
    f = make_potential("long_range_ising", SPINS, alpha=3.0, d=6)
    x = PointSeq(SPINS, (1, 0, 0, 1, 1, 0, 1), 1)
    prof = birkhoff_profile(f, x, 9)
    for n in (1, 5, 9):
        assert prof[n - 1] == pytest.approx(birkhoff_sum(f, x, n), abs=1e-14)


@pytest.mark.parametrize("family", ["nn_ising", "long_range_ising", "first_coordinate"])
def test_witness_rows_reevaluate(family):
    kw = {"alpha": 3.0, "d": 8} if family == "long_range_ising" else {}
    f = make_potential(family, SPINS, **kw)
    reports = [
        strong_walters_audit(f, 12, [0.05, 0.5], SMALL),
        weak_walters_audit(f, 12, SMALL, prefix_count=4),
    ]
    for rep in reports:
        for row in rep.rows:
            assert abs(reevaluate(f, row) - row.observed) <= 1e-13


def test_distortion_rows_reevaluate():
    nn = make_potential("nn_ising", SPINS, beta=1.0)
    g = normalize_g0(nn, rpf_solve(nn))
    rep = distortion_audit(g, 10, SMALL, prefix_count=4)
    logg = g.potential()
    for row in rep.rows:
        assert abs(reevaluate(logg, row) - row.observed) <= 1e-13


def test_weak_audit_examples():
    fc = make_potential("first_coordinate", GRID)
    rep = weak_walters_audit(fc, 12, SMALL)
    assert rep.summary["max_C"] == 0.0 and rep.verdict == CONSISTENT
    c = make_potential("constant", GRID, c=2.0)
    assert weak_walters_audit(c, 6, SMALL).summary["max_C"] == 0.0


def test_weak_audit_long_range_under_majorant():
    f = make_potential("long_range_ising", SPINS, alpha=3.0, d=10)
    rep = weak_walters_audit(f, 16, SMALL, prefix_count=8)
    assert all(r.observed <= r.bound + 1e-12 for r in rep.rows)
    assert rep.summary["max_C"] > 0


@pytest.mark.parametrize("family", ["nn_ising", "long_range_ising"])
def test_strong_estimates_dominate_weak(family):
    kw = {"alpha": 3.0, "d": 8} if family == "long_range_ising" else {}
    f = make_potential(family, SPINS, **kw)
    weak = weak_walters_audit(f, 10, PairSampler(count=15, seed=7, length=12), prefix_count=4)
    for row in weak.rows[:: max(1, len(weak.rows) // 10)]:
        if row.d_xy == 0:
            continue
        strong = strong_walters_audit(f, 10, [row.d_xy], PairSampler(count=0), extra_pairs=[(row.x, row.y)])
        assert row.observed <= strong.summary[row.d_xy] + 1e-12


def test_distortion_examples():
    zero = make_potential("constant", SPINS, c=0.0)
    g = normalize_g0(zero, rpf_solve(zero))
    assert distortion_audit(g, 8, SMALL).summary["max_D"] == 0.0
    nn = make_potential("nn_ising", SPINS, beta=1.0)
    g = normalize_g0(nn, rpf_solve(nn))
    x = PointSeq.constant(SPINS, 1)
    same = distortion_audit(g, 8, SMALL, pairs=[(x, x)])
    assert same.summary["max_D"] == 0.0
    # log g only reads (x1, x2), so prefixed products telescope to the x1 boundary term
    pairs = [(x, x.with_symbol(k, 0)) for k in (1, 2, 3, 4)]
    vals = [r.observed for r in distortion_audit(g, 8, SMALL, pairs=pairs).rows]
    assert vals[0] == pytest.approx(math.expm1(2.0), rel=1e-12)
    assert vals[1:] == [0.0, 0.0, 0.0]


def test_walters_norm_estimate():
    c = make_potential("constant", SPINS, c=-0.5)
    assert walters_norm_estimate(c, 8, sampler=SMALL) == pytest.approx(1.0)
    nn = make_potential("nn_ising", SPINS, beta=1.0)
    assert walters_norm_estimate(nn, 8, sampler=SMALL) >= 2.0


def test_algebra_examples():
    c = make_potential("constant", SPINS, c=0.7)
    assert algebra_pointwise_check(c, c, samples=50).min_slack == 0.0
    nn = make_potential("nn_ising", SPINS, beta=1.0)
    spin = make_potential("first_coordinate", SPINS)
    rep = algebra_pointwise_check(nn, spin, samples=500, n_max=30)
    assert rep.checked == 500 and rep.min_slack >= -1e-12
    zero = make_potential("constant", SPINS, c=0.0)
    assert algebra_pointwise_check(zero, nn, samples=50).min_slack >= 0


def test_algebra_long_range_witness():
    f = make_potential("long_range_ising", SPINS, alpha=3.0, d=8)
    spin = make_potential("first_coordinate", SPINS)
    with pytest.raises(InequalityViolationError) as exc:
        algebra_pointwise_check(f, spin, samples=500, n_max=30, seed=0)
    n, x, y, lhs, rhs = exc.value.witness
    assert n == 24
    assert lhs == pytest.approx(0.3392, abs=5e-5) and rhs == pytest.approx(0.2679, abs=5e-5)
    assert d_n(x, y, n) <= 0.5 * SPINS.min_gap()
    fg = f.core * spin.core
    assert abs(birkhoff_sum(fg, x, n) - birkhoff_sum(fg, y, n)) == pytest.approx(lhs, abs=1e-13)


def test_algebra_rejects_mixed_alphabets():
    with pytest.raises(InvalidArgumentError):
        algebra_pointwise_check(make_potential("constant", SPINS), make_potential("constant", GRID))


def test_ising_variation_value():
    oracle = 2.0 * (zeta(3.0) - 1.0 - 1.0 / 8.0)
    assert ising_variation(3.0, 1, 1) == pytest.approx(oracle, abs=1e-14)
    assert ising_variation(3.0, 1, 1) == pytest.approx(0.1541138, abs=5e-8)


def test_ising_variation_matches_direct_sum():
    alpha, n, p = 3.5, 5, 4
    direct = 2.0 * sum(zeta(alpha, n + p - k + 1) for k in range(n))
    assert ising_variation(alpha, n, p) == pytest.approx(direct, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(2.2, 5.0), st.integers(1, 40), st.integers(1, 60))
def test_ising_variation_monotone(alpha, n, p):
    v = ising_variation(alpha, n, p)
    assert ising_variation(alpha, n, p + 1) < v
    assert ising_variation(alpha, n + 1, p) > v
    assert ising_variation_sup(alpha, p) >= v


@pytest.mark.parametrize("alpha", [2.0, 1.5])
def test_ising_variation_rejects_small_alpha(alpha):
    with pytest.raises(InvalidArgumentError):
        ising_variation(alpha, 1, 1)
    with pytest.raises(InvalidArgumentError):
        variation_fit(alpha, 64, [8, 16])


def test_variation_fit_regimes():
    # p much smaller than n: slope near -(alpha - 2); p much larger: near -(alpha - 1)
    small = variation_fit(3.0, 2**14, [32, 64, 128, 256])
    assert abs(small.slope + 1.0) <= 0.1
    large = variation_fit(3.0, 4, [1000, 2000, 4000])
    assert abs(large.slope + 2.0) <= 0.05
    assert small.expected_slope == -1.0


def test_counterexample_ratio():
    fc = make_potential("first_coordinate", GRID)
    x, y = constant_pair(GRID, 0, 3)
    assert np.max(np.abs(growth_ratios(fc, x, y, 64) - 1.0)) <= 1e-12
    with pytest.raises(InvalidArgumentError):
        growth_ratios(fc, x, x, 4)


def test_variation_sup_limit():
    sup = ising_variation_sup(3.0, 10)
    assert ising_variation(3.0, 20000, 10) == pytest.approx(sup, rel=1e-3)
    assert math.isfinite(sup)
