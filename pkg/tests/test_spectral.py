import math

import numpy as np
import pytest

from ruellekit.core import DepthFunction, make_alphabet, make_potential, tabulated
from ruellekit.errors import ContourCollisionError, DegeneratePairingError, InvalidArgumentError, ResourceLimitError
from ruellekit.spectral import (
    dominant_contour,
    eigenvalue_quotient,
    opnorm,
    projector_contour,
    rank_stability_probe,
    spectral_radius_seq,
    spectrum,
    subdominant_modulus,
)
from ruellekit.transfer import assemble, rpf_solve

SPINS = make_alphabet("finite-atomic")
# 2x2 closed form for the nearest-neighbour Ising matrix at beta = 1
COSH1 = 1.5430806348152437
SINH1 = 1.1752011936438014
TANH1 = 0.7615941559557649


def nn(beta=1.0):
    return assemble(make_potential("nn_ising", SPINS, beta=beta), 1)


def random_matrix(seed, m=3, depth=2):
    rng = np.random.default_rng(seed)
    alphabet = make_alphabet("finite-atomic", nodes=np.arange(m) - 1.0)
    f = tabulated(alphabet, DepthFunction(m, depth, 0.6 * rng.standard_normal(m**depth)))
    return f, rpf_solve(f, depth)


def test_spectrum_examples():
    zero = spectrum(assemble(make_potential("constant", SPINS, c=0.0), 1))
    assert np.allclose(np.sort(zero.eigenvalues.real), [0.0, 1.0], atol=1e-15)
    assert zero.tau <= 1e-15
    rep = spectrum(nn())
    assert abs(rep.lambda1 - COSH1) <= 1e-12 and abs(rep.mod_lambda2 - SINH1) <= 1e-12
    assert abs(rep.tau - TANH1) <= 1e-10
    c = spectrum(assemble(make_potential("constant", SPINS, c=0.7), 1))
    assert abs(c.lambda1 - math.exp(0.7)) <= 1e-12


def test_spectrum_dense_cap():
    with pytest.raises(ResourceLimitError):
        spectrum(nn(), dense_cap=1)


@pytest.mark.parametrize("seed", range(4))
def test_spectrum_matches_power_iteration(seed):
    f, r = random_matrix(seed)
    rep = spectrum(r.matrix, rpf=r)
    assert abs(rep.lambda1 - r.lam) <= 1e-9
    assert abs(subdominant_modulus(r.matrix, r) - rep.mod_lambda2) <= 1e-3 * rep.lambda1


def test_projector_examples():
    A = assemble(make_potential("constant", SPINS, c=0.0), 1)
    p = projector_contour(A, 1.0, 0.5, 64)
    assert np.allclose(p.pi, np.tile(SPINS.weights, (2, 1)), atol=1e-10)
    assert abs(p.trace - 1) <= 1e-10
    p = projector_contour(nn(), COSH1, (COSH1 - SINH1) / 2, 64)
    assert p.diag["idempotency"] <= 1e-8 and abs(p.trace - 1) <= 1e-8
    assert p.diag["commutation"] <= 1e-8


def test_projector_enclosing_everything_is_identity():
    f, r = random_matrix(2)
    rep = spectrum(r.matrix)
    p = projector_contour(r.matrix, 0.0, 1.5 * rep.lambda1, 128)
    assert np.max(np.abs(p.pi - np.eye(r.matrix.order))) <= 1e-8


def test_projector_rejects_collision_and_bad_arguments():
    with pytest.raises(ContourCollisionError):
        projector_contour(nn(), 0.0, COSH1)
    with pytest.raises(InvalidArgumentError):
        projector_contour(nn(), COSH1, 0.1, 8)


@pytest.mark.parametrize("seed", range(4))
def test_dominant_projector_is_rank_one_onto_h(seed):
    f, r = random_matrix(seed)
    p = dominant_contour(r.matrix)
    assert p.diag["idempotency"] <= 1e-8 and abs(p.trace - 1) <= 1e-8
    phi = np.random.default_rng(seed).standard_normal(r.matrix.order)
    expected = (r.nu @ phi) * r.h.table
    assert np.max(np.abs(p.pi @ phi - expected)) <= 1e-8 * np.max(np.abs(phi))


def test_eigenvalue_quotient_examples():
    p = projector_contour(nn(), COSH1, (COSH1 - SINH1) / 2, 64)
    assert abs(eigenvalue_quotient(nn(), p) - COSH1) <= 1e-8
    zero = assemble(make_potential("constant", SPINS, c=0.0), 1)
    assert abs(eigenvalue_quotient(zero, projector_contour(zero, 1.0, 0.5)) - 1) <= 1e-10


def test_second_eigenvalue_quotient():
    p = projector_contour(nn(), SINH1, (COSH1 - SINH1) / 2, 64)
    with pytest.raises(DegeneratePairingError):
        eigenvalue_quotient(nn(), p)
    assert abs(eigenvalue_quotient(nn(), p, retries=3) - SINH1) <= 1e-8
    assert abs(eigenvalue_quotient(nn(), p, v=[1.0, -1.0], w=[1.0, -1.0]) - SINH1) <= 1e-8


def test_spectral_radius_seq_examples():
    zero = assemble(make_potential("constant", SPINS, c=0.0), 1)
    assert spectral_radius_seq(zero, 10) == [1.0] * 10
    c = assemble(make_potential("constant", SPINS, c=0.4), 1)
    assert np.allclose(spectral_radius_seq(c, 20), math.exp(0.4), rtol=1e-14, atol=0)
    seq = spectral_radius_seq(nn(), 256)
    assert abs(seq[-1] - COSH1) <= 1e-2
    big = spectral_radius_seq(nn(5.0), 2000)
    assert all(math.isfinite(v) for v in big)
    with pytest.raises(InvalidArgumentError):
        spectral_radius_seq(nn(), 0)


def test_rank_probe():
    A = nn()
    rep = spectrum(A)
    p = dominant_contour(A, rep)
    assert rank_stability_probe(A, p, 0.0, trials=3).traces == [p.trace] * 4
    probe = rank_stability_probe(A, p, rep.gap / 8, trials=20)
    assert probe.stable and probe.collisions == 0
    assert all(round(t) == 1 for t in probe.traces)
    with pytest.raises(InvalidArgumentError):
        rank_stability_probe(A, p, 2 * rep.gap)


def test_opnorm_is_max_row_sum():
    assert opnorm(np.array([[1.0, -2.0], [0.5, 0.5]])) == 3.0
