"""Correlation functions of Gibbs states, decay fits and gap consistency."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DepthFunction, Potential, check_budget
from .errors import DegenerateSeriesError, InvalidArgumentError, NumericalFailureError
from .spectral import SpectrumReport
from .transfer import RpfData, apply, assemble

GAP_CONSISTENT = "gap-consistent"
NO_EXP_EVIDENCE = "no-exponential-decay-evidence"
INCONCLUSIVE = "inconclusive"

# entries below this fraction of the largest |C(n)| are treated as exact zeros
ZERO_FLOOR = 1e-13


@dataclass(frozen=True)
class CorrelationSeries:
    n: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "n", np.asarray(self.n, dtype=int))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.n.shape != self.values.shape:
            raise InvalidArgumentError("n and values differ in length")

    def __getitem__(self, n: int) -> float:
        idx = np.nonzero(self.n == n)[0]
        if idx.size == 0:
            raise KeyError(n)
        return float(self.values[idx[0]])


def _lifted(phi: DepthFunction, depth: int) -> np.ndarray:
    if phi.depth > depth:
        raise InvalidArgumentError(f"observable depth {phi.depth} exceeds matrix depth {depth}")
    return phi.lift(depth).table


def correlation_series(rpf: RpfData, phi1: DepthFunction, phi2: DepthFunction, n_max: int, meta=None) -> CorrelationSeries:
    """``C(n) = lambda^-n nu(phi1 L^n(phi2 h)) - nu(phi1 h) nu(phi2 h)`` for ``n = 0..n_max``."""
    if n_max < 0:
        raise InvalidArgumentError("n_max must be >= 0")
    k = rpf.depth
    p1, p2, h = _lifted(phi1, k), _lifted(phi2, k), rpf.h.table
    mean = float(rpf.nu @ (p1 * h)) * float(rpf.nu @ (p2 * h))
    v = p2 * h
    out = []
    for _ in range(n_max + 1):
        out.append(float(rpf.nu @ (p1 * v)) - mean)
        v = (rpf.matrix @ v) / rpf.lam
    w = rpf.gibbs_weights()
    direct = float(w @ (p1 * p2)) - float(w @ p1) * float(w @ p2)
    if abs(direct - out[0]) > 1e-12 * max(1.0, abs(direct)):
        raise NumericalFailureError("C(0) disagrees with the direct covariance")
    info = {"source": "operator"}
    info.update(meta or {})
    return CorrelationSeries(np.arange(n_max + 1), np.array(out), info)


def correlation(rpf: RpfData, f: Potential, phi1: DepthFunction, phi2: DepthFunction, n: int) -> float:
    """Single entry ``C(n)``; ``f`` must be the potential behind ``rpf``."""
    if f.depth > rpf.depth + 1:
        raise InvalidArgumentError("rpf depth too small for this potential")
    return float(correlation_series(rpf, phi1, phi2, n).values[-1])


def enumeration_correlation(f: Potential, phi1: DepthFunction, phi2: DepthFunction, n: int, k: int | None = None) -> float:
    """``C(n)`` by summing over all cylinders of length ``n + k``.

    Eigen-data come from a dense eigensolve, independent of power iteration.
    Cylinder weights are ``lambda^-(L-k) nu(tail) h(head) prod w(a_i) e^{f(a_i ...)}``.
    """
    alphabet = f.alphabet
    m = alphabet.m
    k = max(f.depth - 1, 1, phi1.depth, phi2.depth) if k is None else k
    length = n + k
    check_budget(m, length)
    A = assemble(f, k).dense
    vals, right = np.linalg.eig(A)
    i = int(np.argmax(vals.real))
    lam = float(vals[i].real)
    h = np.abs(right[:, i].real)
    lvals, left = np.linalg.eig(A.T)
    nu = np.abs(left[:, int(np.argmax(lvals.real))].real)
    nu /= nu.sum()
    h /= nu @ h

    words = alphabet.words(length)
    powers = m ** np.arange(k - 1, -1, -1)
    head = words[:, :k] @ powers
    tail = words[:, length - k :] @ powers
    weight = nu[tail] * h[head] * lam ** -(length - k)
    ftab = f.core.lift(k + 1)
    for i in range(length - k):
        weight = weight * alphabet.weights[words[:, i]] * np.exp(ftab(words[:, i : i + k + 1]))
    a = phi1(words[:, n : n + phi1.depth])
    b = phi2(words[:, : phi2.depth])
    return float(np.sum(weight * a * b) - np.sum(weight * a) * np.sum(weight * b))


def pullout_check(f: Potential, phi1: DepthFunction, phi2: DepthFunction, h: DepthFunction, n: int, cap: int | None = None) -> float:
    """``|| L^n((phi1 o sigma^n) phi2 h) - phi1 L^n(phi2 h) ||_inf``."""
    if n < 0:
        raise InvalidArgumentError("n must be >= 0")
    left = phi1.shifted(n) * phi2 * h
    right = phi2 * h
    for _ in range(n):
        left = apply(f, left, cap=cap)
        right = apply(f, right, cap=cap)
    return (left - phi1 * right).sup()


@dataclass(frozen=True)
class DecayFit:
    model: str
    rate: float
    exponent: float
    residual_exp: float
    residual_poly: float
    verdict: str
    window: tuple

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "rate": self.rate,
            "exponent": self.exponent,
            "residual_exp": self.residual_exp,
            "residual_poly": self.residual_poly,
            "verdict": self.verdict,
            "window": list(self.window),
        }


def _nonzero(series: CorrelationSeries, lo: int, hi: int):
    absval = np.abs(series.values)
    floor = ZERO_FLOOR * float(absval.max()) if absval.size else 0.0
    mask = (series.n >= lo) & (series.n <= hi) & (absval > floor)
    return series.n[mask].astype(float), absval[mask]


def _lsq(x, y):
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    return coef, float(np.sqrt(np.mean(resid**2)))


def decay_fit(series: CorrelationSeries, n_window=None, margin: float = 2.0) -> DecayFit:
    """Compete ``log|C| ~ n`` against ``log|C| ~ log n`` on ``n_window = (lo, hi)``.

    The winning model needs a residual ``margin`` times smaller than the other.
    """
    lo, hi = (1, int(series.n.max())) if n_window is None else (max(1, n_window[0]), n_window[1])
    n, c = _nonzero(series, lo, hi)
    if n.size < 6:
        raise DegenerateSeriesError(f"need >= 6 nonzero entries in [{lo}, {hi}], got {n.size}")
    y = np.log(c)
    (e_slope, _), res_e = _lsq(n, y)
    (p_slope, _), res_p = _lsq(np.log(n), y)
    if res_e * margin <= res_p:
        model, verdict = "exponential", GAP_CONSISTENT
    elif res_p * margin <= res_e:
        model, verdict = "polynomial", NO_EXP_EVIDENCE
    else:
        model = "exponential" if res_e <= res_p else "polynomial"
        verdict = INCONCLUSIVE
    return DecayFit(model, math.exp(e_slope), float(-p_slope), res_e, res_p, verdict, (lo, hi))


def residual_columns(series: CorrelationSeries, fit: DecayFit) -> list[tuple]:
    """CSV rows ``(n, C, abs_C, resid_exp, resid_poly)``; residuals blank outside the window."""
    lo, hi = fit.window
    n, c = _nonzero(series, lo, hi)
    y = np.log(c)
    ce = np.polyfit(n, y, 1)
    cp = np.polyfit(np.log(n), y, 1)
    resid = {int(a): (float(b - np.polyval(ce, a)), float(b - np.polyval(cp, math.log(a)))) for a, b in zip(n, y)}
    rows = []
    for a, v in zip(series.n, series.values):
        re, rp = resid.get(int(a), (math.nan, math.nan))
        rows.append((int(a), float(v), abs(float(v)), re, rp))
    return rows


@dataclass(frozen=True)
class ConsistencyReport:
    tau: float
    ttilde: float
    C1: float
    fit_rate: float
    passed: bool


def gap_decay_consistency(rpf: RpfData, spectrum: SpectrumReport, series: CorrelationSeries, ttilde_margin: float = 0.02) -> ConsistencyReport:
    """Smallest ``C1`` with ``|C(n)| <= C1 ttilde^n`` and an exponential rate fitted on the tail half.

    Passes when the fitted rate does not exceed ``ttilde = tau + margin``.
    """
    if abs(spectrum.lambda1 - rpf.lam) > 1e-9 * max(1.0, rpf.lam):
        raise InvalidArgumentError("spectrum and rpf come from different matrices")
    ttilde = spectrum.tau + ttilde_margin
    absval = np.abs(series.values)
    C1 = float(np.max(absval / ttilde ** series.n.astype(float)))
    n_top = int(series.n.max())
    n, c = _nonzero(series, max(1, n_top // 2), n_top)
    if n.size >= 2:
        rate = math.exp(np.polyfit(n, np.log(c), 1)[0])
    elif n.size == 0:
        rate = 0.0
    else:
        rate = math.nan
    passed = math.isfinite(C1) and math.isfinite(rate) and rate <= ttilde
    return ConsistencyReport(spectrum.tau, ttilde, C1, rate, passed)
