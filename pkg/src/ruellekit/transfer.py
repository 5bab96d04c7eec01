"""Ruelle operator: application to cylinder functions, finite matrix assembly,
the Perron-Frobenius eigentriple, pressure and normalisation into G0."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from .core import AprioriAlphabet, DepthFunction, Potential, check_budget, tabulated
from .errors import (
    InvalidArgumentError,
    IterationLimitError,
    NormalizationError,
    NumericalFailureError,
)


def _as_table(f) -> DepthFunction:
    return f.core if isinstance(f, Potential) else f


def apply(f, phi: DepthFunction, weights=None, cap: int | None = None) -> DepthFunction:
    """``(L_f phi)(w) = sum_a mu(a) exp(f(a w)) phi(a w)``.

    ``f`` may be a :class:`Potential` or a raw :class:`DepthFunction` (e.g. ``log g``).
    """
    ftab = _as_table(f)
    if weights is None:
        if not isinstance(f, Potential):
            raise InvalidArgumentError("weights are required when f is a bare table")
        weights = f.alphabet.weights
    m = ftab.m
    depth = max(ftab.depth - 1, phi.depth - 1, 0)
    check_budget(m, depth + 1, cap)
    kernel = np.exp(ftab.lift(depth + 1).grid) * phi.lift(depth + 1).grid
    out = np.tensordot(np.asarray(weights, dtype=float), kernel, axes=(0, 0))
    return DepthFunction(m, depth, np.asarray(out).ravel())


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Action of ``L_f`` on depth-``k`` tables; row ``w``, column ``(a, w_1..w_{k-1})``."""

    alphabet: AprioriAlphabet
    depth: int
    matrix: sparse.csr_matrix

    @property
    def order(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, v):
        return self.matrix @ v

    def rmatvec(self, v):
        return self.matrix.T @ v


def assemble(f, k: int | None = None, alphabet: AprioriAlphabet | None = None, cap: int | None = None) -> TransferMatrix:
    """Assemble the ``m**k`` square transfer matrix of ``f``."""
    alphabet = f.alphabet if isinstance(f, Potential) else alphabet
    if alphabet is None:
        raise InvalidArgumentError("alphabet is required when f is a bare table")
    ftab = _as_table(f)
    kmin = max(ftab.depth - 1, 1)
    k = kmin if k is None else k
    if k < kmin:
        raise InvalidArgumentError(f"depth k={k} too small for a potential of depth {ftab.depth}")
    m = alphabet.m
    size = check_budget(m, k + 1, cap)
    n = size // m
    fgrid = ftab.lift(k + 1).table.reshape(m, n)
    rows = np.tile(np.arange(n), m)
    cols = (np.arange(m)[:, None] * (n // m) + (np.arange(n) // m)[None, :]).ravel()
    vals = (alphabet.weights[:, None] * np.exp(fgrid)).ravel()
    mat = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    mat.sum_duplicates()
    return TransferMatrix(alphabet, k, mat)


@dataclass(frozen=True, eq=False)
class RpfData:
    """Eigentriple ``(lambda, h, nu)`` normalised so ``nu(1) = 1`` and ``nu(h) = 1``."""

    lam: float
    h: DepthFunction
    nu: np.ndarray
    residual_h: float
    residual_nu: float
    iterations: int
    matrix: TransferMatrix

    @property
    def depth(self) -> int:
        return self.h.depth

    @property
    def pressure(self) -> float:
        return math.log(self.lam)

    def integrate(self, phi: DepthFunction) -> float:
        """``nu(phi)`` for ``phi`` of depth at most ``k``."""
        return float(self.nu @ phi.lift(self.depth).table)

    def gibbs_weights(self) -> np.ndarray:
        """Cylinder weights of ``mu_f = h dnu`` on depth-``k`` words."""
        return self.nu * self.h.table


def _power(matvec, start, norm, tol, itmax, change_norm=None):
    change_norm = change_norm or (lambda d: np.max(np.abs(d)))
    v = start
    lam_prev = math.nan
    for it in range(1, itmax + 1):
        u = matvec(v)
        lam = norm(u)
        if not lam > 0:
            raise NumericalFailureError("power iterate lost positivity")
        v_new = u / lam
        change = change_norm(v_new - v)
        v = v_new
        if abs(lam - lam_prev) <= tol * lam and change <= tol:
            return lam, v, it
        lam_prev = lam
    return None, v, itmax


def rpf_solve(f: Potential, k: int | None = None, tol: float = 1e-13, itmax: int = 100_000) -> RpfData:
    """Perron-Frobenius data of ``L_f`` on depth-``k`` tables by power iteration."""
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    mat = f if isinstance(f, TransferMatrix) else assemble(f, k)
    n = mat.order
    lam, v, it_r = _power(lambda x: mat @ x, np.ones(n), np.max, tol, itmax)
    lam_l, ell, it_l = _power(
        mat.rmatvec, np.full(n, 1.0 / n), np.sum, tol, itmax, lambda d: np.sum(np.abs(d))
    )
    nu = ell / math.fsum(ell)
    if lam is None or lam_l is None:
        lam_est = float(np.max(mat @ v))
        h = v / float(nu @ v)
        raise IterationLimitError(
            f"power iteration did not converge in {itmax} steps",
            residual_h=float(np.max(np.abs(mat @ h - lam_est * h))),
            residual_nu=float(np.sum(np.abs(mat.rmatvec(nu) - lam_est * nu))),
        )
    if np.any(v <= 0) or np.any(nu < 0):
        raise NumericalFailureError("non-positive Perron vector")
    h = v / float(nu @ v)
    res_h = float(np.max(np.abs(mat @ h - lam * h)))
    res_nu = float(np.sum(np.abs(mat.rmatvec(nu) - lam * nu)))
    hfun = DepthFunction(mat.alphabet.m, mat.depth, h)
    return RpfData(float(lam), hfun, nu, res_h, res_nu, max(it_r, it_l), mat)


@dataclass(frozen=True)
class PressureReport:
    pressure: float
    lam: float
    n_check: int
    points: list  # (word index, (1/n) log L^n 1 (x), deviation)

    @property
    def max_deviation(self) -> float:
        return max(abs(dev) for _, _, dev in self.points)


def log_iterates(mat: TransferMatrix, phi: np.ndarray, n: int) -> np.ndarray:
    """``log (L^n phi)`` for positive ``phi``, renormalising each step."""
    v = np.asarray(phi, dtype=float)
    log_scale = 0.0
    for _ in range(n):
        v = mat @ v
        s = float(np.max(v))
        v = v / s
        log_scale += math.log(s)
    return log_scale + np.log(v)


def pressure(f: Potential, k: int | None = None, n_check: int = 200, tol: float = 1e-13) -> PressureReport:
    """``P(f) = log lambda_f`` plus the limit ``(1/n) log L^n 1 (x)`` at several points."""
    kmin = max(f.depth - 1, 1)
    k = kmin if k is None else k
    m = f.alphabet.m
    while m > 1 and m**k < 3:
        k += 1
    rpf = rpf_solve(f, k, tol=tol)
    logp = rpf.pressure
    logs = log_iterates(rpf.matrix, np.ones(rpf.matrix.order), n_check) / n_check
    order = rpf.matrix.order
    picks = sorted({0, order // 2, order - 1})
    points = [(i, float(logs[i]), float(logs[i] - logp)) for i in picks]
    return PressureReport(logp, rpf.lam, n_check, points)


@dataclass(frozen=True, eq=False)
class NormalizedPotential:
    """``g = e^f h / (lambda h o sigma)`` on depth ``k + 1`` words, with audit certificate."""

    alphabet: AprioriAlphabet
    g: DepthFunction
    certificate: float

    @cached_property
    def log_g(self) -> DepthFunction:
        return self.g.map(np.log)

    def potential(self) -> Potential:
        return tabulated(self.alphabet, self.log_g, family="normalized")

    def at(self, point) -> float:
        return self.g.at(point)


def normalize_g0(f: Potential, rpf: RpfData, tol: float = 1e-10) -> NormalizedPotential:
    k = rpf.depth
    if f.depth > k + 1:
        raise InvalidArgumentError("rpf depth too small for this potential")
    lift = k + 1
    num = np.exp(f.core.lift(lift).table) * rpf.h.lift(lift).table
    den = rpf.lam * rpf.h.shifted(1).table
    g = DepthFunction(f.alphabet.m, lift, num / den)
    sums = np.tensordot(f.alphabet.weights, g.grid, axes=(0, 0))
    certificate = float(np.max(np.abs(sums - 1.0)))
    if certificate > tol:
        raise NormalizationError(f"G0 certificate {certificate:.3e} exceeds {tol:.0e}")
    return NormalizedPotential(f.alphabet, g, certificate)


def pre_walters_iterate(g: NormalizedPotential, phi: DepthFunction, n: int):
    """``L_{log g}^n phi`` and its flatness (max - min of the table)."""
    out = phi
    for _ in range(n):
        out = apply(g.log_g, out, g.alphabet.weights)
    return out, out.flatness()


def flatness_history(g: NormalizedPotential, phi: DepthFunction, n: int) -> list[float]:
    """Flatness after 0, 1, ..., n applications."""
    out = phi
    hist = [out.flatness()]
    for _ in range(n):
        out = apply(g.log_g, out, g.alphabet.weights)
        hist.append(out.flatness())
    return hist
