import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruellekit.core import (
    DepthFunction,
    PointSeq,
    birkhoff_sum,
    d_n,
    d_omega,
    default_truncation_depth,
    integral_tail_bound,
    make_alphabet,
    make_potential,
    power_tail,
    tabulated,
)
from ruellekit.errors import InvalidArgumentError, ResourceLimitError

SPINS = make_alphabet("finite-atomic")
GRID = make_alphabet("interval-uniform", m=8)


def points(alphabet, max_len=12):
    m = alphabet.m
    return st.builds(
        lambda prefix, tail: PointSeq(alphabet, tuple(prefix), tail),
        st.lists(st.integers(0, m - 1), max_size=max_len),
        st.integers(0, m - 1),
    )


def test_spin_alphabet_defaults():
    assert np.array_equal(SPINS.nodes, [-1.0, 1.0])
    assert np.array_equal(SPINS.weights, [0.5, 0.5])


def test_interval_midpoints():
    one = make_alphabet("interval-uniform", m=1)
    assert one.nodes.tolist() == [0.5] and one.weights.tolist() == [1.0]
    four = make_alphabet("interval-uniform", m=4)
    assert four.nodes.tolist() == [0.125, 0.375, 0.625, 0.875]
    assert four.weights.tolist() == [0.25] * 4


def test_circle_uses_arc_metric():
    c = make_alphabet("circle-uniform", m=4)
    assert c.dist(0, 3) == pytest.approx(math.pi / 2)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "interval-uniform", "m": 0},
        {"kind": "finite-atomic", "nodes": [0.0, 0.0]},
        {"kind": "finite-atomic", "nodes": [0.0, 1.0], "weights": [0.5, 0.6]},
        {"kind": "finite-atomic", "nodes": [0.0, 1.0], "weights": [0.0, 1.0]},
        {"kind": "sphere"},
    ],
)
def test_bad_alphabets(kwargs):
    with pytest.raises(InvalidArgumentError):
        make_alphabet(**kwargs)


def test_d_omega_examples():
    plus, minus = PointSeq.constant(SPINS, 1), PointSeq.constant(SPINS, 0)
    assert d_omega(plus, plus) == 0.0
    assert d_omega(plus, minus) == 2.0
    x, y = PointSeq.constant(GRID, 0), PointSeq.constant(GRID, 1)
    eta = GRID.nodes[1] - GRID.nodes[0]
    assert d_omega(x, y) == eta
    for n in (1, 5, 40):
        assert d_n(x, y, n) == eta


def test_d_omega_mismatched_alphabets():
    with pytest.raises(InvalidArgumentError):
        d_omega(PointSeq.constant(SPINS, 0), PointSeq.constant(GRID, 0))


def test_d_n_rejects_zero():
    with pytest.raises(InvalidArgumentError):
        d_n(PointSeq.constant(SPINS, 0), PointSeq.constant(SPINS, 0), 0)


@settings(max_examples=60, deadline=None)
@given(points(GRID), points(GRID), points(GRID))
def test_metric_axioms(x, y, z):
    assert d_omega(x, y) == pytest.approx(d_omega(y, x), abs=1e-15)
    assert d_omega(x, z) <= d_omega(x, y) + d_omega(y, z) + 1e-12


@settings(max_examples=60, deadline=None)
@given(points(GRID), points(GRID), st.integers(1, 10))
def test_bowen_metric_monotone(x, y, n):
    assert d_n(x, y, 1) == d_omega(x, y)
    assert d_n(x, y, n + 1) >= d_n(x, y, n)
    assert d_n(x, y, n) >= d_omega(x, y)


def test_birkhoff_examples():
    fc = make_potential("first_coordinate", GRID)
    y = PointSeq.constant(GRID, 3)
    assert birkhoff_sum(fc, y, 7) == pytest.approx(7 * GRID.nodes[3], abs=1e-15)
    c = make_potential("constant", SPINS, c=0.3)
    assert birkhoff_sum(c, PointSeq(SPINS, (0, 1, 1)), 5) == pytest.approx(1.5)


@settings(max_examples=40, deadline=None)
@given(points(SPINS), st.integers(0, 12), st.integers(0, 12), st.sampled_from(["nn_ising", "long_range_ising", "first_coordinate", "constant"]))
def test_birkhoff_cocycle(x, n, m, family):
    kw = {"alpha": 3.0, "d": 6} if family == "long_range_ising" else {}
    f = make_potential(family, SPINS, **kw)
    lhs = birkhoff_sum(f, x, n + m)
    rhs = birkhoff_sum(f, x, n) + birkhoff_sum(f, x.shift(n), m)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_potential_tables():
    c = make_potential("constant", SPINS, c=0.3)
    assert c.depth == 0 and c.core.table.tolist() == [0.3]
    nn = make_potential("nn_ising", SPINS, beta=1.0)
    # words (-,-), (-,+), (+,-), (+,+)
    assert nn.core.table.tolist() == [1.0, -1.0, -1.0, 1.0]
    beta = 0.7
    nn = make_potential("nn_ising", GRID, beta=beta)
    a, b = np.meshgrid(GRID.nodes, GRID.nodes, indexing="ij")
    assert np.array_equal(nn.core.grid, beta * a * b)
    assert make_potential("first_coordinate", SPINS).depth == 1


def test_long_range_truncation():
    f = make_potential("long_range_ising", SPINS, alpha=3.0, d=10)
    assert f.depth == 10
    assert f.tail_bound <= 0.005
    true_tail = power_tail(3.0, 11)[0]
    assert f.tail_bound >= true_tail
    d = default_truncation_depth(3.0)
    assert integral_tail_bound(3.0, d) <= 1e-6 < integral_tail_bound(3.0, d - 1)


def test_long_range_sign_and_values():
    f = make_potential("long_range_ising", SPINS, alpha=2.5, d=4, no_decay_claims=True)
    x = PointSeq(SPINS, (1, 0, 1, 1))  # +1, -1, +1, +1
    expected = -(1 * -1 * 2**-2.5 + 1 * 1 * 3**-2.5 + 1 * 1 * 4**-2.5)
    assert f.at(x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("alpha", [1.0, 0.5])
def test_long_range_needs_summable_alpha(alpha):
    with pytest.raises(InvalidArgumentError):
        make_potential("long_range_ising", SPINS, alpha=alpha)


def test_borderline_alpha_needs_flag():
    with pytest.raises(InvalidArgumentError):
        make_potential("long_range_ising", SPINS, alpha=1.5)
    assert make_potential("long_range_ising", SPINS, alpha=1.5, d=5, no_decay_claims=True).depth == 5


def test_power_tail_against_zeta():
    from scipy.special import zeta

    for alpha in (1.5, 2.0, 3.0, 4.5):
        for start in (1, 2, 7, 100, 1000):
            value, err = power_tail(alpha, start)
            assert abs(value - zeta(alpha, start)) <= max(err, 4e-16 * value)
            assert err <= 1e-12


def test_depth_function_algebra():
    f = DepthFunction(2, 1, [1.0, 2.0])
    g = DepthFunction(2, 2, [1.0, 2.0, 3.0, 4.0])
    s = f + g
    assert s.depth == 2 and s.table.tolist() == [2.0, 3.0, 5.0, 6.0]
    assert f.shifted(1).table.tolist() == [1.0, 2.0, 1.0, 2.0]
    assert f.lift(2).table.tolist() == [1.0, 1.0, 2.0, 2.0]
    with pytest.raises(InvalidArgumentError):
        DepthFunction(2, 2, [1.0])


def test_budget_cap():
    with pytest.raises(ResourceLimitError):
        make_alphabet("interval-uniform", m=64).words(5)


def test_tabulated_roundtrip():
    t = DepthFunction(3, 2, np.arange(9.0))
    f = tabulated(make_alphabet("interval-uniform", m=3), t)
    assert f(np.array([[2, 1]]))[0] == 7.0
