"""Spectra, spectral gaps and Riesz projectors of transfer matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContourCollisionError,
    DegeneratePairingError,
    InvalidArgumentError,
    NumericalFailureError,
    ResourceLimitError,
)
from .transfer import RpfData, TransferMatrix

DENSE_CAP = 4096


def _dense(A) -> np.ndarray:
    return A.dense if isinstance(A, TransferMatrix) else np.asarray(A, dtype=float)


def opnorm(M) -> float:
    """Operator norm induced by the sup norm (max absolute row sum)."""
    return float(np.max(np.sum(np.abs(M), axis=1)))


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    lambda1: float
    mod_lambda2: float

    @property
    def tau(self) -> float:
        return self.mod_lambda2 / self.lambda1

    @property
    def gap(self) -> float:
        return self.lambda1 - self.mod_lambda2


def spectrum(A, rpf: RpfData | None = None, dense_cap: int = DENSE_CAP, xcheck: float = 1e-9) -> SpectrumReport:
    """Full spectrum, sorted by decreasing modulus, cross-checked against ``rpf``."""
    order = A.order if isinstance(A, TransferMatrix) else np.shape(A)[0]
    if order > dense_cap:
        raise ResourceLimitError(f"order exceeds dense cap {dense_cap}; use subdominant_modulus")
    eig = np.linalg.eigvals(_dense(A))
    # ties in modulus broken by real part so the Perron root comes first
    eig = eig[np.lexsort((-eig.real, -np.abs(eig)))]
    lam1 = eig[0]
    if abs(lam1.imag) > 1e-12 * max(1.0, abs(lam1)) or lam1.real <= 0:
        raise NumericalFailureError(f"leading eigenvalue {lam1} is not real positive")
    mod2 = float(abs(eig[1])) if eig.size > 1 else 0.0
    if mod2 >= lam1.real * (1 - 1e-12):
        raise NumericalFailureError("leading eigenvalue is not simple")
    if rpf is not None and abs(lam1.real - rpf.lam) > xcheck * max(1.0, rpf.lam):
        raise NumericalFailureError(
            f"dense lambda1 {lam1.real!r} disagrees with power iteration {rpf.lam!r}"
        )
    return SpectrumReport(eig, float(lam1.real), mod2)


def subdominant_modulus(A: TransferMatrix, rpf: RpfData, n: int = 400) -> float:
    """Estimate ``|lambda_2|`` by power growth on the deflated operator ``A - lambda h nu^T``.

    Fallback for matrices above the dense cap.
    """
    h, nu = rpf.h.table, rpf.nu
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.order)
    v -= h * (nu @ v)
    logs = []
    for _ in range(n):
        v = A @ v
        v -= h * (nu @ v)
        s = float(np.max(np.abs(v)))
        if s == 0.0:
            return 0.0
        logs.append(math.log(s))
        v /= s
    tail = logs[n // 2 :]
    return math.exp(sum(tail) / len(tail))


@dataclass(frozen=True)
class ProjectorData:
    pi: np.ndarray
    center: complex
    radius: float
    nodes: int
    diag: dict = field(default_factory=dict)

    @property
    def trace(self) -> float:
        return self.diag["trace"]


def projector_contour(A, center, radius: float, N: int = 64, collision_tol: float = 1e-8) -> ProjectorData:
    """Riesz projector ``(1/2 pi i) oint (zI - A)^{-1} dz`` by the trapezoid rule on a circle."""
    if N < 16:
        raise InvalidArgumentError("contour needs at least 16 nodes")
    if not radius > 0:
        raise InvalidArgumentError("radius must be positive")
    M = _dense(A)
    eig = np.linalg.eigvals(M)
    clearance = float(np.min(np.abs(np.abs(eig - center) - radius)))
    if clearance <= collision_tol:
        raise ContourCollisionError(f"eigenvalue within {clearance:.2e} of the contour")
    n = M.shape[0]
    eye = np.eye(n)
    theta = 2.0 * math.pi * np.arange(N) / N
    acc = np.zeros((n, n), dtype=complex)
    for t in theta:
        arc = radius * complex(math.cos(t), math.sin(t))
        acc += arc * np.linalg.solve((center + arc) * eye - M, eye)
    pi = acc / N
    if np.isrealobj(M) and np.imag(center) == 0:
        pi = pi.real
    diag = {
        "idempotency": opnorm(pi @ pi - pi),
        "commutation": opnorm(M @ pi - pi @ M),
        "trace": float(np.real(np.trace(pi))),
        "clearance": clearance,
    }
    return ProjectorData(pi, center, float(radius), N, diag)


def dominant_contour(A, report: SpectrumReport | None = None, N: int = 64) -> ProjectorData:
    """Projector on the circle centred at lambda1 with radius half the gap."""
    report = report or spectrum(A)
    return projector_contour(A, report.lambda1, report.gap / 2.0, N)


def eigenvalue_quotient(A, proj: ProjectorData, v=None, w=None, retries: int = 0, seed: int = 0) -> complex:
    """``<w, pi(A v)> / <w, pi v>``; retries with seeded random ``v, w`` on a vanishing pairing."""
    M = _dense(A)
    n = M.shape[0]
    v = np.ones(n) if v is None else np.asarray(v)
    w = np.ones(n) if w is None else np.asarray(w)
    rng = np.random.default_rng(seed)
    for attempt in range(retries + 1):
        den = w @ (proj.pi @ v)
        scale = np.linalg.norm(w) * np.linalg.norm(v) * max(1.0, opnorm(proj.pi))
        if abs(den) > 1e-10 * scale:
            value = complex(w @ (proj.pi @ (M @ v)) / den)
            return value.real if value.imag == 0 else value
        if attempt < retries:
            v = rng.standard_normal(n)
            w = rng.standard_normal(n)
    raise DegeneratePairingError("<w, pi v> vanishes; retry with a randomised pairing")


def spectral_radius_seq(A, n_max: int) -> list[float]:
    """``||A^n||^{1/n}`` for ``n = 1..n_max``, carried in log space."""
    if n_max < 1:
        raise InvalidArgumentError("n_max must be >= 1")
    M = _dense(A)
    out = []
    P = np.eye(M.shape[0])
    log_scale = 0.0
    for n in range(1, n_max + 1):
        P = P @ M
        s = opnorm(P)
        if s == 0.0:
            out.extend([0.0] * (n_max - n + 1))
            break
        P /= s
        log_scale += math.log(s)
        out.append(math.exp(log_scale / n))
    return out


@dataclass(frozen=True)
class RankProbeReport:
    eps: float
    traces: list
    collisions: int

    @property
    def stable(self) -> bool:
        return self.collisions == 0 and all(round(t) == round(self.traces[0]) for t in self.traces)


def rank_stability_probe(A, proj: ProjectorData, eps: float, trials: int = 20, seed: int = 0, report=None) -> RankProbeReport:
    """Perturb ``A`` by random matrices of sup-norm ``eps`` and recompute the trace on the same circle."""
    M = _dense(A)
    report = report or spectrum(M)
    if not 0 <= eps < report.gap / 4:
        raise InvalidArgumentError("eps must satisfy 0 <= eps < gap/4")
    rng = np.random.default_rng(seed)
    traces = [proj.trace]
    collisions = 0
    for _ in range(trials):
        E = rng.uniform(-1.0, 1.0, M.shape)
        if eps > 0:
            E *= eps / opnorm(E)
        else:
            E[:] = 0.0
        try:
            p = projector_contour(M + E, proj.center, proj.radius, proj.nodes)
            traces.append(p.trace)
        except ContourCollisionError:
            collisions += 1
    return RankProbeReport(eps, traces, collisions)
