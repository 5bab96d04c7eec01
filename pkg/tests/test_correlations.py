import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruellekit.core import DepthFunction, make_alphabet, make_potential, tabulated
from ruellekit.correlations import (
    GAP_CONSISTENT,
    INCONCLUSIVE,
    NO_EXP_EVIDENCE,
    CorrelationSeries,
    correlation,
    correlation_series,
    decay_fit,
    enumeration_correlation,
    gap_decay_consistency,
    pullout_check,
    residual_columns,
)
from ruellekit.errors import DegenerateSeriesError, InvalidArgumentError
from ruellekit.spectral import spectrum
from ruellekit.transfer import rpf_solve

SPINS = make_alphabet("finite-atomic")
SPIN = DepthFunction.spin(SPINS)
ZERO = make_potential("constant", SPINS, c=0.0)
NN = make_potential("nn_ising", SPINS, beta=1.0)
TANH1 = 0.7615941559557649


def random_setup(seed, m=3, depth=2):
    rng = np.random.default_rng(seed)
    alphabet = make_alphabet("finite-atomic", nodes=np.arange(m) - 1.0)
    f = tabulated(alphabet, DepthFunction(m, depth, 0.6 * rng.standard_normal(m**depth)))
    phi1 = DepthFunction(m, 1, rng.standard_normal(m))
    phi2 = DepthFunction(m, depth, rng.standard_normal(m**depth))
    return f, phi1, phi2


def test_product_measure_is_uncorrelated():
    r = rpf_solve(ZERO)
    s = correlation_series(r, SPIN, SPIN, 10)
    assert s[0] == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.abs(s.values[1:]) <= 1e-15)
    rng = np.random.default_rng(0)
    grid = make_alphabet("interval-uniform", m=4)
    f = make_potential("constant", grid, c=0.0)
    r = rpf_solve(f)
    for _ in range(5):
        a, b = DepthFunction(4, 1, rng.standard_normal(4)), DepthFunction(4, 1, rng.standard_normal(4))
        assert np.all(np.abs(correlation_series(r, a, b, 6).values[1:]) <= 1e-14)


def test_nn_ising_two_point_function():
    r = rpf_solve(NN, 1)
    s = correlation_series(r, SPIN, SPIN, 30)
    assert np.max(np.abs(s.values - TANH1 ** s.n)) <= 1e-10
    assert correlation(r, NN, SPIN, SPIN, 5) == pytest.approx(TANH1**5, abs=1e-12)


@pytest.mark.parametrize("n", [0, 1, 4, 10])
def test_nn_ising_matches_enumeration(n):
    r = rpf_solve(NN, 1)
    assert abs(correlation(r, NN, SPIN, SPIN, n) - enumeration_correlation(NN, SPIN, SPIN, n)) <= 1e-11


@pytest.mark.parametrize("seed", range(3))
def test_operator_matches_enumeration(seed):
    f, phi1, phi2 = random_setup(seed)
    r = rpf_solve(f, 2)
    s = correlation_series(r, phi1, phi2, 8)
    for n in (0, 1, 3, 8):
        assert abs(s[n] - enumeration_correlation(f, phi1, phi2, n, k=2)) <= 1e-11


def test_variance_is_nonnegative():
    f, phi, _ = random_setup(4)
    assert correlation(rpf_solve(f, 2), f, phi, phi, 0) >= 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(-2, 2), st.floats(-2, 2))
def test_bilinearity(seed, a, b):
    f, phi1, phi2 = random_setup(seed % 5)
    rng = np.random.default_rng(seed)
    psi = DepthFunction(3, 1, rng.standard_normal(3))
    r = rpf_solve(f, 2)
    n = 3
    lhs = correlation(r, f, phi1 * a + psi * b, phi2, n)
    rhs = a * correlation(r, f, phi1, phi2, n) + b * correlation(r, f, psi, phi2, n)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(a) + abs(b))


def test_correlation_depth_check():
    f, _, _ = random_setup(0)
    r = rpf_solve(f, 2)
    with pytest.raises(InvalidArgumentError):
        correlation_series(r, DepthFunction(3, 3, np.zeros(27)), DepthFunction.constant(3), 2)


def test_pullout_examples():
    rng = np.random.default_rng(0)
    h = DepthFunction(2, 1, rng.uniform(0.5, 1.5, 2))
    phi1, phi2 = DepthFunction(2, 1, rng.standard_normal(2)), DepthFunction(2, 1, rng.standard_normal(2))
    assert pullout_check(NN, phi1, phi2, h, 0) == 0.0
    assert pullout_check(NN, phi1, phi2, h, 3) <= 1e-13
    assert pullout_check(NN, DepthFunction.constant(2), phi2, h, 3) == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_pullout_random(seed):
    f, phi1, phi2 = random_setup(seed)
    r = rpf_solve(f, 2)
    assert pullout_check(f, phi1, phi2, r.h, 3) <= 1e-13


def test_decay_fit_geometric():
    n = np.arange(0, 21)
    fit = decay_fit(CorrelationSeries(n, 0.5**n))
    assert fit.model == "exponential" and fit.verdict == GAP_CONSISTENT
    assert abs(fit.rate - 0.5) <= 1e-6


def test_decay_fit_power_law():
    n = np.arange(1, 41)
    fit = decay_fit(CorrelationSeries(n, n**-3.0))
    assert fit.model == "polynomial" and fit.verdict == NO_EXP_EVIDENCE
    assert abs(fit.exponent - 3.0) <= 0.05


def test_decay_fit_nn_series():
    r = rpf_solve(NN, 1)
    fit = decay_fit(correlation_series(r, SPIN, SPIN, 30))
    assert fit.verdict == GAP_CONSISTENT
    assert abs(fit.rate - TANH1) <= 1e-4


def test_decay_fit_inconclusive_with_tight_margin():
    # both models fit a short, gently curved series about equally well
    n = np.arange(1, 8)
    fit = decay_fit(CorrelationSeries(n, np.exp(-0.3 * n) * n**-1.0), margin=1e6)
    assert fit.verdict == INCONCLUSIVE


def test_decay_fit_degenerate():
    with pytest.raises(DegenerateSeriesError):
        decay_fit(CorrelationSeries(np.arange(10), np.zeros(10)))
    with pytest.raises(DegenerateSeriesError):
        decay_fit(CorrelationSeries(np.arange(5), np.ones(5)))


def test_residual_columns_cover_series():
    n = np.arange(0, 12)
    s = CorrelationSeries(n, 0.5**n)
    fit = decay_fit(s, (2, 11))
    rows = residual_columns(s, fit)
    assert [r[0] for r in rows] == list(range(12))
    assert math.isnan(rows[0][3]) and abs(rows[5][3]) <= 1e-12


def test_gap_consistency_examples():
    r = rpf_solve(ZERO)
    rep = gap_decay_consistency(r, spectrum(r.matrix), correlation_series(r, SPIN, SPIN, 10))
    assert rep.passed and rep.C1 == pytest.approx(1.0)
    r = rpf_solve(NN, 1)
    sp = spectrum(r.matrix)
    rep = gap_decay_consistency(r, sp, correlation_series(r, SPIN, SPIN, 30))
    assert rep.passed and abs(rep.fit_rate - TANH1) <= 1e-8 and rep.fit_rate <= sp.tau + 0.02


def test_gap_consistency_rejects_power_law():
    r = rpf_solve(NN, 1)
    n = np.arange(1, 31)
    rep = gap_decay_consistency(r, spectrum(r.matrix), CorrelationSeries(n, n**-3.0))
    assert not rep.passed and rep.fit_rate > rep.ttilde


def test_gap_consistency_checks_matrix():
    r = rpf_solve(NN, 1)
    other = rpf_solve(ZERO)
    with pytest.raises(InvalidArgumentError):
        gap_decay_consistency(r, spectrum(other.matrix), correlation_series(r, SPIN, SPIN, 5))
