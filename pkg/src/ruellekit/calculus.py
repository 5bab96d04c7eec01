"""Finite-order numerical certificates for the analytic map ``f -> L_f`` and
for smoothness of the pressure."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DepthFunction, Potential, tabulated
from .errors import InvalidArgumentError
from .transfer import apply, rpf_solve

DEFAULT_T_GRID = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
MIN_STEP = 1e-4


def _table(h) -> DepthFunction:
    return h.core if isinstance(h, Potential) else h


def derivative(f: Potential, directions, phi: DepthFunction) -> DepthFunction:
    """``D^k L(f)(h_1, ..., h_k) phi = L_f(phi * h_1 * ... * h_k)``."""
    prod = phi
    for h in directions:
        prod = prod * _table(h)
    return apply(f, prod)


def directional_derivative(f: Potential, h, phi: DepthFunction) -> DepthFunction:
    return derivative(f, [h], phi)


def operator_norm(f: Potential) -> float:
    """Sup-norm operator norm of the positive operator ``L_f``, i.e. ``sup L_f 1``."""
    return apply(f, DepthFunction.constant(f.alphabet.m)).sup()


def _exp_tail(x: float, p: int) -> float:
    """``e^x - sum_{j<=p} x^j/j!`` evaluated without cancellation for small x."""
    term = x ** (p + 1) / math.factorial(p + 1)
    total, j = 0.0, p + 1
    while term > 1e-300 and term > 1e-17 * total:
        total += term
        j += 1
        term *= x / j
    return total


@dataclass(frozen=True)
class RemainderTable:
    order: int
    steps: np.ndarray
    remainders: np.ndarray
    ratios: np.ndarray
    majorants: np.ndarray

    @property
    def majorant_ok(self) -> bool:
        return bool(np.all(self.remainders <= self.majorants + 1e-12))

    def spread(self) -> float:
        """Relative spread ``(max - min) / max`` of the normalised ratios."""
        r = self.ratios
        return float((r.max() - r.min()) / r.max()) if r.max() > 0 else 0.0


def taylor_terms(f: Potential, h, phi: DepthFunction, p: int) -> list[DepthFunction]:
    """``[L_f(phi h^j) / j!  for j = 0..p]``."""
    htab = _table(h)
    terms = []
    prod = phi
    for j in range(p + 1):
        terms.append(apply(f, prod) * (1.0 / math.factorial(j)))
        prod = prod * htab
    return terms


def _exp_tail_array(x: np.ndarray, p: int) -> np.ndarray:
    """Elementwise ``e^x - sum_{j<=p} x^j/j!`` by the series from order ``p + 1``."""
    term = x ** (p + 1) / math.factorial(p + 1)
    total = term.copy()
    j = p + 1
    while np.any(np.abs(term) > 1e-18 * np.abs(total)) and j < p + 60:
        j += 1
        term = term * x / j
        total += term
    return total


def taylor_remainder(f: Potential, h, phi: DepthFunction, p: int = 1, t_grid=DEFAULT_T_GRID, method: str = "direct") -> RemainderTable:
    """Sup-norm Taylor remainder of ``t -> L_{f+th} phi`` at order ``p``, with majorant.

    ``method="direct"`` subtracts the Taylor terms from ``L_{f+th} phi`` built
    from the perturbed potential; ``"series"`` evaluates the same remainder as
    ``L_f(phi (e^{th} - sum_{j<=p} (th)^j/j!))`` without cancellation, for
    orders whose remainder falls below double-precision resolution.
    """
    if p < 1:
        raise InvalidArgumentError("order p must be >= 1")
    if method not in ("direct", "series"):
        raise InvalidArgumentError(f"unknown method {method!r}")
    steps = np.asarray(t_grid, dtype=float)
    if np.any(steps <= 0) or np.any(np.diff(steps) >= 0):
        raise InvalidArgumentError("t_grid must be positive and decreasing")
    htab = _table(h)
    terms = taylor_terms(f, htab, phi, p) if method == "direct" else None
    lnorm, pnorm, hnorm = operator_norm(f), phi.sup(), htab.sup()
    rem, maj = [], []
    for t in steps:
        if method == "direct":
            diff = apply(f.combine(_wrap(f, htab), t), phi)
            for j in range(p + 1):
                diff = diff - terms[j] * t**j
        else:
            diff = apply(f, phi * htab.map(lambda v: _exp_tail_array(t * v, p)))
        rem.append(diff.sup())
        maj.append(lnorm * pnorm * _exp_tail(t * hnorm, p))
    rem = np.array(rem)
    return RemainderTable(p, steps, rem, rem / steps ** (p + 1), np.array(maj))


def exact_expansion_check(f: Potential, h, phi: DepthFunction, J: int) -> tuple[float, float]:
    """``(||L_{f+h} phi - sum_{j<=J} L_f(phi h^j)/j!||, majorant)`` at ``t = 1``."""
    htab = _table(h)
    lhs = apply(f.combine(_wrap(f, htab)), phi)
    for term in taylor_terms(f, htab, phi, J):
        lhs = lhs - term
    return lhs.sup(), operator_norm(f) * phi.sup() * _exp_tail(htab.sup(), J)


def _wrap(f: Potential, table: DepthFunction) -> Potential:
    return tabulated(f.alphabet, table)


def dual_pairing(ell: np.ndarray, psi: DepthFunction) -> float:
    """``<l, psi>`` for a weight vector ``l`` over words of some depth >= depth(psi)."""
    ell = np.asarray(ell, dtype=float)
    depth = psi.depth
    while psi.m ** depth < ell.size:
        depth += 1
    if psi.m ** depth != ell.size:
        raise InvalidArgumentError("functional length is not a power of the alphabet size")
    return float(ell @ psi.lift(depth).table)


def dual_derivative_check(f: Potential, h, ell, g: DepthFunction, t: float) -> float:
    """``|<l, L_{f+th} g> - <l, L_f g> - t <l, L_f(g h)>| / t^2``."""
    htab = _table(h)
    shifted = f.combine(_wrap(f, htab), t)
    first = dual_pairing(ell, apply(f, g * htab))
    diff = dual_pairing(ell, apply(shifted, g)) - dual_pairing(ell, apply(f, g)) - t * first
    return abs(diff) / t**2


@dataclass(frozen=True)
class SmoothnessReport:
    steps: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    p0: float
    first: np.ndarray
    second: np.ndarray
    first_limit: float
    second_limit: float
    smooth: bool


def _richardson(steps, values):
    """Eliminate the ``t^2`` error term between consecutive steps; return the most stable value."""
    ext = []
    for i in range(len(steps) - 1):
        r2 = (steps[i] / steps[i + 1]) ** 2
        ext.append((r2 * values[i + 1] - values[i]) / (r2 - 1.0))
    if len(ext) == 1:
        return ext[0], True
    changes = np.abs(np.diff(ext))
    best = int(np.argmin(changes))
    limit = ext[best + 1]
    converged = changes[best] <= 1e-3 * max(1.0, abs(limit))
    return float(limit), bool(converged)


def pressure_smoothness(f: Potential, h, t_grid=DEFAULT_T_GRID, k: int | None = None, tol: float = 1e-14) -> SmoothnessReport:
    """Central divided differences of ``t -> P(f + t h)`` at ``t = 0`` with Richardson limits."""
    steps = np.asarray(t_grid, dtype=float)
    if np.any(steps < MIN_STEP):
        raise InvalidArgumentError(f"steps below {MIN_STEP} are dominated by cancellation")
    if len(steps) < 2:
        raise InvalidArgumentError("need at least two steps")
    hpot = h if isinstance(h, Potential) else _wrap(f, h)
    depth = max(f.depth, hpot.depth)
    k = max(depth - 1, 1) if k is None else k

    def P(t):
        return rpf_solve(f.combine(hpot, t), k, tol=tol).pressure

    p0 = P(0.0)
    plus = np.array([P(t) for t in steps])
    minus = np.array([P(-t) for t in steps])
    first = (plus - minus) / (2.0 * steps)
    second = (plus - 2.0 * p0 + minus) / steps**2
    d1, ok1 = _richardson(steps, first)
    d2, ok2 = _richardson(steps, second)
    return SmoothnessReport(steps, plus, minus, p0, first, second, d1, d2, ok1 and ok2)
