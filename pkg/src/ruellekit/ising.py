"""Exact finite-volume Gibbs measures of the long-range Ising model.

Spins ``z_i = +-1`` on a window ``W`` of the lattice Z or N = {1, 2, ...},
weight ``exp(sum_{i<j in W} J_ij z_i z_j + sum_{i in W} h_i z_i)`` where the
boundary spins outside ``W`` are frozen to +1 and folded into the fields
``h_i = sum_{j not in W} J_ij``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .core import power_tail
from .errors import InvalidArgumentError, PrecisionError, ResourceLimitError

ENUM_CAP = 24
COUPLING_KINDS = ("full", "restricted_T", "single_bond", "zero")


@dataclass(frozen=True)
class CouplingField:
    """Nonnegative pair couplings around a finite window.

    ``overrides`` replaces in-window couplings ``{(i, j): J}`` with ``i < j``.
    """

    lattice: str
    window: tuple  # (lo, hi), inclusive
    kind: str
    alpha: float = math.nan
    bond: tuple = ()
    K: float = 0.0
    overrides: dict = field(default_factory=dict)

    @property
    def sites(self) -> list[int]:
        return list(range(self.window[0], self.window[1] + 1))

    def _in_lattice(self, i: int) -> bool:
        return self.lattice == "Z" or i >= 1

    def J(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        key = (min(i, j), max(i, j))
        if key in self.overrides:
            return self.overrides[key]
        if self.kind == "zero":
            return 0.0
        if self.kind == "single_bond":
            return self.K if key == self.bond else 0.0
        if self.kind == "restricted_T" and (i < 1 or j < 1):
            return 0.0
        return abs(i - j) ** -self.alpha

    def with_bond(self, i: int, j: int, value: float) -> "CouplingField":
        key = (min(i, j), max(i, j))
        lo, hi = self.window
        if not (lo <= key[0] and key[1] <= hi) or key[0] == key[1]:
            raise InvalidArgumentError("bond must join two distinct window sites")
        if value < 0:
            raise InvalidArgumentError("couplings must be nonnegative")
        return replace(self, overrides={**self.overrides, key: float(value)})

    def matrix(self) -> np.ndarray:
        sites = self.sites
        n = len(sites)
        out = np.zeros((n, n))
        for a in range(n):
            for b in range(a + 1, n):
                out[a, b] = out[b, a] = self.J(sites[a], sites[b])
        return out

    def boundary_fields(self, tail_eps: float = 1e-10) -> tuple[np.ndarray, float]:
        """``h_i = sum_{j outside W} J_ij`` with the worst certified tail error."""
        lo, hi = self.window
        fields, worst = [], 0.0
        for i in self.sites:
            if self.kind in ("zero", "single_bond"):
                h = math.fsum(self.J(i, j) for j in self.bond if not lo <= j <= hi)
                err = 0.0
            elif self.kind == "restricted_T" and i < 1:
                h, err = 0.0, 0.0
            else:
                right, err = power_tail(self.alpha, hi - i + 1)
                if self.lattice == "Z" and self.kind == "full":
                    left, err_l = power_tail(self.alpha, i - lo + 1)
                else:
                    # finitely many lattice sites below the window
                    left = math.fsum(float(i - j) ** -self.alpha for j in range(1, lo))
                    err_l = 0.0
                h, err = right + left, err + err_l
            fields.append(h)
            worst = max(worst, err)
        if worst > tail_eps:
            raise PrecisionError(f"boundary tail error {worst:.1e} exceeds {tail_eps:.0e}")
        return np.array(fields), worst


def make_couplings(kind: str, window, lattice: str = "N", alpha: float | None = None, bond=None, K: float | None = None) -> CouplingField:
    if kind not in COUPLING_KINDS:
        raise InvalidArgumentError(f"unknown coupling kind {kind!r}")
    if lattice not in ("Z", "N"):
        raise InvalidArgumentError("lattice must be 'Z' or 'N'")
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise InvalidArgumentError("window is empty")
    if lattice == "N" and lo < 1:
        raise InvalidArgumentError("N-lattice windows start at 1")
    if kind == "restricted_T" and lattice != "Z":
        raise InvalidArgumentError("restricted_T couplings live on the Z lattice")
    if kind in ("full", "restricted_T"):
        if alpha is None or alpha <= 1:
            raise InvalidArgumentError("alpha > 1 required")
        return CouplingField(lattice, (lo, hi), kind, float(alpha))
    if kind == "single_bond":
        i, j = sorted(int(s) for s in bond)
        if i == j:
            raise InvalidArgumentError("single bond needs two distinct sites")
        if K is None or K < 0:
            raise InvalidArgumentError("single-bond coupling K must be >= 0")
        return CouplingField(lattice, (lo, hi), kind, bond=(i, j), K=float(K))
    return CouplingField(lattice, (lo, hi), kind)


def _fwht(x: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform: ``out[A] = sum_c x[c] (-1)^{popcount(c & A)}``."""
    x = np.array(x, dtype=float)
    h = 1
    while h < x.size:
        y = x.reshape(-1, 2, h)
        a = y[:, 0, :].copy()
        y[:, 0, :] += y[:, 1, :]
        y[:, 1, :] = a - y[:, 1, :]
        h *= 2
    return x


def _energies(Jm: np.ndarray, fields: np.ndarray) -> np.ndarray:
    """Energy of every configuration; bit ``p`` of the index set means ``z_p = -1``."""
    E = np.zeros(1)
    for p in range(len(fields)):
        local = np.full(1, fields[p])
        for q in range(p):
            local = np.concatenate((local + Jm[p, q], local - Jm[p, q]))
        E = np.concatenate((E + local, E - local))
    return E


@dataclass(frozen=True, eq=False)
class FiniteVolumeGibbs:
    couplings: CouplingField
    fields: np.ndarray
    tail_error: float
    tail_eps: float
    logZ: float
    probs: np.ndarray = field(repr=False)

    @property
    def sites(self) -> list[int]:
        return self.couplings.sites

    @cached_property
    def moments(self) -> np.ndarray:
        """``<prod_{i in A} z_i>`` indexed by the bit mask of ``A``."""
        return _fwht(self.probs)

    def mask(self, A) -> int:
        lo, hi = self.couplings.window
        out = 0
        for s in A:
            if not lo <= s <= hi:
                raise InvalidArgumentError(f"site {s} outside window [{lo}, {hi}]")
            out ^= 1 << (s - lo)
        return out

    def subset(self, mask: int) -> tuple:
        lo = self.couplings.window[0]
        return tuple(lo + p for p in range(len(self.sites)) if mask >> p & 1)

    def metadata(self) -> dict:
        c = self.couplings
        return {
            "lattice": c.lattice,
            "window": list(c.window),
            "kind": c.kind,
            "alpha": None if math.isnan(c.alpha) else c.alpha,
            "tail_eps": self.tail_eps,
            "tail_error": self.tail_error,
            "logZ": self.logZ,
        }


def gibbs_exact(couplings: CouplingField, boundary: int = 1, tail_eps: float = 1e-10) -> FiniteVolumeGibbs:
    """Exact measure on the window by enumerating all ``2^|W|`` configurations.

    ``boundary = 1`` freezes outside spins to +1; ``boundary = 0`` drops them.
    """
    if boundary not in (0, 1):
        raise InvalidArgumentError("boundary must be +1 or 0 (free)")
    if not tail_eps <= 1e-10:
        raise InvalidArgumentError("tail_eps must be <= 1e-10")
    n = len(couplings.sites)
    if n > ENUM_CAP:
        raise ResourceLimitError(f"window of {n} sites exceeds enumeration cap {ENUM_CAP}")
    if boundary:
        fields, err = couplings.boundary_fields(tail_eps)
    else:
        fields, err = np.zeros(n), 0.0
    E = _energies(couplings.matrix(), fields)
    logZ = float(logsumexp(E))
    probs = np.exp(E - logZ)
    total = math.fsum(probs.tolist()) if n <= 16 else float(np.sum(probs))
    if abs(total - 1.0) > 1e-12:
        raise PrecisionError(f"probabilities sum to {total!r}")
    return FiniteVolumeGibbs(couplings, fields, err, tail_eps, logZ, probs)


def expectation(G: FiniteVolumeGibbs, A) -> float:
    return float(G.moments[G.mask(A)])


def covariance(G: FiniteVolumeGibbs, A, B) -> float:
    a, b = G.mask(A), G.mask(B)
    return float(G.moments[a ^ b] - G.moments[a] * G.moments[b])


@dataclass(frozen=True)
class GksAuditReport:
    checked: int
    min_value: float
    violations: list
    tolerance: float

    @property
    def passed(self) -> bool:
        return not self.violations

    def csv_rows(self) -> list[tuple]:
        return [(" ".join(map(str, s)), v) for s, v in self.violations]


def _random_masks(n: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(count, n))
    masks = bits @ (1 << np.arange(n))
    return masks[masks != 0]


def _small_masks(n: int, max_size: int) -> list[int]:
    out = []
    for size in range(1, max_size + 1):
        for combo in itertools.combinations(range(n), size):
            out.append(sum(1 << p for p in combo))
    return out


def gks1_audit(G: FiniteVolumeGibbs, max_size: int = 3, random_count: int = 500, seed: int = 0, tol: float = 1e-12) -> GksAuditReport:
    """``<z_A> >= -tol`` for all ``|A| <= max_size`` and seeded random ``A``."""
    n = len(G.sites)
    masks = np.unique(np.concatenate((_small_masks(n, max_size), _random_masks(n, random_count, seed)))).astype(np.int64)
    vals = G.moments[masks]
    bad = np.nonzero(vals < -tol)[0]
    violations = [(G.subset(int(masks[i])), float(vals[i])) for i in bad]
    return GksAuditReport(int(masks.size), float(vals.min()), violations, tol)


def gks2_audit(G: FiniteVolumeGibbs, random_count: int = 500, seed: int = 0, tol: float = 1e-12) -> GksAuditReport:
    """``cov(z_A, z_i z_j) >= -tol`` for seeded random ``A`` against every window pair."""
    n = len(G.sites)
    A = _random_masks(n, random_count, seed).astype(np.int64)
    P = np.array(_small_masks(n, 2)[n:], dtype=np.int64)
    M = G.moments
    cov = M[A[:, None] ^ P[None, :]] - M[A][:, None] * M[P][None, :]
    bad = np.argwhere(cov < -tol)
    violations = [((G.subset(int(A[a])), G.subset(int(P[p]))), float(cov[a, p])) for a, p in bad]
    return GksAuditReport(int(cov.size), float(cov.min()), violations, tol)


@dataclass(frozen=True)
class DerivativeCheck:
    delta: float
    finite_difference: float
    covariance: float
    residual: float

    @property
    def constant(self) -> float:
        return self.residual / self.delta**2


def coupling_derivative_check(couplings: CouplingField, bond, A, delta: float, boundary: int = 1) -> DerivativeCheck:
    """Central difference of ``<z_A>`` in ``J_ij`` against ``cov(z_A, z_i z_j)``."""
    if not 0 < delta <= 1e-3:
        raise InvalidArgumentError("delta must lie in (0, 1e-3]")
    i, j = bond
    base = couplings.J(i, j)
    if base < delta:
        raise InvalidArgumentError("bond coupling must be >= delta to stay nonnegative")
    up = gibbs_exact(couplings.with_bond(i, j, base + delta), boundary)
    down = gibbs_exact(couplings.with_bond(i, j, base - delta), boundary)
    fd = (expectation(up, A) - expectation(down, A)) / (2.0 * delta)
    cov = covariance(gibbs_exact(couplings, boundary), A, (i, j))
    return DerivativeCheck(delta, fd, cov, abs(fd - cov))


def richardson_ratio(couplings: CouplingField, bond, A, delta: float, boundary: int = 1) -> float:
    """``residual(delta) / residual(delta / 2)``; close to 4 for a clean O(delta^2) error."""
    r1 = coupling_derivative_check(couplings, bond, A, delta, boundary).residual
    r2 = coupling_derivative_check(couplings, bond, A, delta / 2, boundary).residual
    return r1 / r2 if r2 > 0 else math.inf


@dataclass(frozen=True)
class MonotonicityReport:
    base: float
    bumped: float

    @property
    def passed(self) -> bool:
        return self.bumped >= self.base - 1e-12


def monotonicity_probe(couplings: CouplingField, bond, A, delta: float, boundary: int = 1) -> MonotonicityReport:
    """``<z_A>`` before and after raising ``J_ij`` by ``delta >= 0``."""
    if delta < 0:
        raise InvalidArgumentError("delta must be >= 0")
    i, j = bond
    base = expectation(gibbs_exact(couplings, boundary), A)
    bumped = expectation(gibbs_exact(couplings.with_bond(i, j, couplings.J(i, j) + delta), boundary), A)
    return MonotonicityReport(base, bumped)


def compare_couplings(smaller: CouplingField, larger: CouplingField, A, boundary: int = 1) -> MonotonicityReport:
    """``<z_A>`` under two coupling fields on the same window with ``smaller <= larger`` pointwise."""
    if smaller.window != larger.window or smaller.lattice != larger.lattice:
        raise InvalidArgumentError("coupling fields live on different windows")
    return MonotonicityReport(
        expectation(gibbs_exact(smaller, boundary), A), expectation(gibbs_exact(larger, boundary), A)
    )


@dataclass(frozen=True)
class TwoPointSeries:
    alpha: float
    rows: list  # (n, value, tanh_bound, margin, taylor)
    control: list  # (n, single-bond value, tanh(n^-alpha))
    meta: dict

    @property
    def min_margin(self) -> float:
        return min(r[3] for r in self.rows)

    @property
    def control_error(self) -> float:
        return max(abs(v - t) for _, v, t in self.control)


def two_point_series(alpha: float, n_list, window=(1, 16)) -> TwoPointSeries:
    """``<z_1 z_{1+n}>`` under full couplings with +1 boundary, against ``tanh(n^-alpha)``."""
    n_list = [int(n) for n in n_list]
    lo, hi = window
    if not lo <= 1 <= hi or 1 + max(n_list) > hi:
        raise InvalidArgumentError("window must contain 1 and 1 + max(n)")
    G = gibbs_exact(make_couplings("full", window, "N", alpha))
    rows, control = [], []
    for n in n_list:
        value = expectation(G, (1, 1 + n))
        x = n**-alpha
        bound = math.tanh(x)
        rows.append((n, value, bound, value - bound, x * (1.0 - x * x / 3.0)))
        single = gibbs_exact(make_couplings("single_bond", window, "N", bond=(1, 1 + n), K=x))
        control.append((n, expectation(single, (1, 1 + n)), bound))
    return TwoPointSeries(alpha, rows, control, G.metadata())


def _direct_n_moments(n: int, alpha: float) -> dict:
    """Moments of the N-window {1..n} measure by brute-force enumeration.

    Boundary fields use the Hurwitz zeta function and energies are summed
    configuration by configuration, independent of the main engine.
    """
    from scipy.special import zeta

    sites = range(1, n + 1)
    fields = {i: float(zeta(alpha, n - i + 1)) for i in sites}
    configs = list(itertools.product((1, -1), repeat=n))
    energies = []
    for z in configs:
        e = sum(fields[i] * z[i - 1] for i in sites)
        e += sum(abs(i - j) ** -alpha * z[i - 1] * z[j - 1] for i in sites for j in sites if i < j)
        energies.append(e)
    energies = np.array(energies)
    logZ = float(logsumexp(energies))
    probs = np.exp(energies - logZ)
    spins = np.array(configs, dtype=float)
    moments = {}
    for size in range(1, n + 1):
        for A in itertools.combinations(sites, size):
            moments[A] = float(probs @ np.prod(spins[:, [a - 1 for a in A]], axis=1))
    return {"logZ": logZ, "moments": moments}


@dataclass(frozen=True)
class MarginalReport:
    n: int
    alpha: float
    discrepancy: float
    logZ_gap: float  # |logZ_Z - logZ_N - (n + 1) log 2|
    compared: int


def marginal_equivalence(n: int, alpha: float, random_count: int = 50, seed: int = 0) -> MarginalReport:
    """Z-window {-n..n} with restricted couplings against the N-window {1..n}."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if 2 * n + 1 > ENUM_CAP:
        raise ResourceLimitError(f"Z-window of {2 * n + 1} sites exceeds cap {ENUM_CAP}")
    G = gibbs_exact(make_couplings("restricted_T", (-n, n), "Z", alpha))
    ref = _direct_n_moments(n, alpha)
    subsets = [A for A in ref["moments"] if max(A) <= min(n, 6)]
    rng = np.random.default_rng(seed)
    for _ in range(random_count if n > 6 else 0):
        A = tuple(int(s) for s in np.nonzero(rng.integers(0, 2, n))[0] + 1)
        if A:
            subsets.append(A)
    disc = max(abs(expectation(G, A) - ref["moments"][A]) for A in subsets)
    gap = abs(G.logZ - ref["logZ"] - (n + 1) * math.log(2.0))
    return MarginalReport(n, alpha, disc, gap, len(subsets))
