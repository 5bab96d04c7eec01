"""Estimators for Holder and Walters-type moduli of potentials.

Every supremum here is estimated from a finite witness set, so reported
values are certified lower bounds. Where a closed form exists the rows also
carry an exact upper majorant in the ``bound`` column. Witness sets always
contain the deterministic adversarial family (constant sequences and
one-coordinate perturbations) next to the seeded random pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import PointSeq, Potential, birkhoff_sum, d_n, d_omega, power_tail
from .errors import InequalityViolationError, InvalidArgumentError
from .transfer import NormalizedPotential

CONSISTENT = "consistent-with-Walters"
VIOLATED = "strong-Walters-violated-witness"
INCONCLUSIVE = "inconclusive"

CSV_COLUMNS = ("eta", "n", "d_xy", "observed", "bound", "witness_id")


@dataclass(frozen=True)
class PairSampler:
    """Seeded random pairs ``(x, y)``; ``y`` copies ``x`` up to a random coordinate."""

    count: int = 200
    seed: int = 0
    length: int = 24


@dataclass(frozen=True)
class WitnessRow:
    eta: float
    n: int
    d_xy: float
    observed: float
    bound: float
    witness_id: int
    x: PointSeq = field(repr=False)
    y: PointSeq = field(repr=False)
    kind: str = "strong"

    def csv(self) -> tuple:
        return (self.eta, self.n, self.d_xy, self.observed, self.bound, self.witness_id)


@dataclass(frozen=True)
class ModulusReport:
    rows: list
    summary: dict
    verdict: str

    def csv_rows(self) -> list[tuple]:
        return [r.csv() for r in self.rows]

    def max_observed(self) -> float:
        return max((r.observed for r in self.rows), default=0.0)


def reevaluate(f, row: WitnessRow) -> float:
    """Recompute a witness row's observed value from its stored points."""
    diff = birkhoff_sum(f, row.x, row.n) - birkhoff_sum(f, row.y, row.n)
    if row.kind == "weak":
        return diff
    if row.kind == "distortion":
        return abs(math.expm1(diff))
    return abs(diff)


# -- sampling ---------------------------------------------------------------


def _random_point(alphabet, rng, length: int) -> PointSeq:
    return PointSeq(alphabet, tuple(rng.integers(alphabet.m, size=length)), int(rng.integers(alphabet.m)))


def _perturb(x: PointSeq, rng, first: int, length: int) -> PointSeq:
    """Copy of ``x`` with coordinates ``>= first`` (1-based) randomly moved."""
    m = x.alphabet.m
    coords = x.coords(length).copy()
    for pos in range(first - 1, length):
        if rng.random() < 0.5:
            if m > 2 and rng.random() < 0.5:
                coords[pos] = min(m - 1, max(0, coords[pos] + rng.choice((-1, 1))))
            else:
                coords[pos] = rng.integers(m)
    tail = x.tail if rng.random() < 0.5 else int(rng.integers(m))
    return PointSeq(x.alphabet, tuple(coords), tail)


def _node_pairs(alphabet, limit: int = 16):
    m = alphabet.m
    idx = range(m) if m <= limit else np.unique(np.linspace(0, m - 1, limit).astype(int))
    idx = [int(i) for i in idx]
    return [(i, j) for i in idx for j in idx if i != j]


def adversarial_pairs(alphabet, positions: int) -> list[tuple[PointSeq, PointSeq]]:
    """Constant sequences on node pairs, and one-coordinate perturbations of them."""
    pairs = []
    nodes = _node_pairs(alphabet)
    for i, j in nodes:
        pairs.append((PointSeq.constant(alphabet, i), PointSeq.constant(alphabet, j)))
    m = alphabet.m
    bases = sorted({0, m // 2, m - 1})
    for c in bases:
        x = PointSeq.constant(alphabet, c)
        targets = sorted({t for t in (c - 1, c + 1, 0, m - 1) if 0 <= t < m and t != c})
        for pos in range(1, positions + 1):
            for t in targets:
                pairs.append((x, x.with_symbol(pos, t)))
    return pairs


def random_pairs(alphabet, sampler: PairSampler) -> list[tuple[PointSeq, PointSeq]]:
    rng = np.random.default_rng(sampler.seed)
    out = []
    for _ in range(sampler.count):
        x = _random_point(alphabet, rng, sampler.length)
        first = int(rng.integers(1, sampler.length + 1))
        out.append((x, _perturb(x, rng, first, sampler.length)))
    return out


# -- vectorised profiles ------------------------------------------------------


def bowen_profile(x: PointSeq, y: PointSeq, length: int) -> np.ndarray:
    """``D_k = d_omega(sigma^k x, sigma^k y)`` for ``k = 0..length``.

    Uses ``D_k = (d(x_{k+1}, y_{k+1}) + D_{k+1}) / 2`` from the tail inward;
    ``length`` must cover both prefixes.
    """
    length = max(length, len(x.prefix), len(y.prefix))
    delta = x.alphabet.dist(x.coords(length), y.coords(length))
    out = np.empty(length + 1)
    out[length] = float(x.alphabet.dist(x.tail, y.tail))
    for k in range(length - 1, -1, -1):
        out[k] = 0.5 * (delta[k] + out[k + 1])
    return out


def birkhoff_profile(f, x: PointSeq, n_max: int) -> np.ndarray:
    """``[S_1 f(x), ..., S_{n_max} f(x)]``."""
    depth = f.depth
    if depth == 0:
        return np.arange(1, n_max + 1) * float(f(np.zeros((1, 0), dtype=np.intp))[0])
    coords = x.coords(n_max + depth - 1)
    windows = np.lib.stride_tricks.sliding_window_view(coords, depth)[:n_max]
    return np.cumsum(f(windows))


# -- exact majorants ------------------------------------------------------------


def _abs_metric(alphabet) -> bool:
    return alphabet.metric_id == "abs"


def _coordinate_caps(alphabet, n: int, eta: float, length: int) -> np.ndarray:
    """Largest ``|x_j - y_j|`` (j = 1..length) compatible with ``d_n(x, y) <= eta``."""
    j = np.arange(1, length + 1)
    caps = np.where(j <= n, 2.0 * eta, 2.0 ** np.minimum(j - n + 1, 1000) * eta)
    diam = float(np.ptp(alphabet.nodes))
    return np.minimum(caps, diam)


def strong_majorant(f: Potential, n: int, eta: float) -> float:
    """Upper bound of ``|S_n f(x) - S_n f(y)|`` over all pairs with ``d_n(x, y) <= eta``."""
    if not isinstance(f, Potential):
        return math.nan
    alphabet = f.alphabet
    if f.family == "constant":
        return 0.0
    if not _abs_metric(alphabet):
        return math.nan
    radius = float(np.max(np.abs(alphabet.nodes)))
    if f.family == "first_coordinate":
        return float(np.sum(_coordinate_caps(alphabet, n, eta, n)))
    if f.family == "nn_ising":
        caps = _coordinate_caps(alphabet, n, eta, n + 1)
        return abs(f.params["beta"]) * radius * float(np.sum(caps[:n] + caps[1 : n + 1]))
    if f.family == "long_range_ising":
        alpha, d = f.params["alpha"], f.params["d"]
        caps = _coordinate_caps(alphabet, n, eta, n + d)
        coeff = np.arange(2, d + 1, dtype=float) ** -alpha
        total = 0.0
        for k in range(n):
            total += float(coeff.sum() * caps[k] + coeff @ caps[k + 1 : k + d])
        return radius * total
    return math.nan


def weak_majorant(f: Potential, x: PointSeq, y: PointSeq) -> float:
    """Exact bound of ``sup_n sup_a |S_n f(ax) - S_n f(ay)|`` for the closed-form families."""
    if not isinstance(f, Potential):
        return math.nan
    alphabet = f.alphabet
    if f.family in ("constant", "first_coordinate"):
        return 0.0
    if not _abs_metric(alphabet):
        return math.nan
    radius = float(np.max(np.abs(alphabet.nodes)))
    if f.family == "nn_ising":
        return abs(f.params["beta"]) * radius * float(alphabet.dist(x.coords(1), y.coords(1))[0])
    if f.family == "long_range_ising":
        alpha, d = f.params["alpha"], f.params["d"]
        delta = alphabet.dist(x.coords(d - 1), y.coords(d - 1))
        powers = np.arange(2, d + 1, dtype=float) ** -alpha
        # coordinate j of x meets the prefix at distances m = j+1 .. d
        tails = np.cumsum(powers[::-1])[::-1]
        return radius * float(delta @ tails)
    return math.nan


# -- audits ----------------------------------------------------------------------


def holder_estimate(f: Potential, gamma: float, sampler: PairSampler = PairSampler()) -> float:
    """Lower bound for ``Hol_gamma(f)`` from adversarial and random pairs."""
    if not 0 < gamma <= 1:
        raise InvalidArgumentError("gamma must lie in (0, 1]")
    pairs = adversarial_pairs(f.alphabet, f.depth + 2) + random_pairs(f.alphabet, sampler)
    best = 0.0
    for x, y in pairs:
        dist = d_omega(x, y)
        if dist > 0:
            best = max(best, abs(f.at(x) - f.at(y)) / dist**gamma)
    return best


def _n_grid(n_max: int) -> list[int]:
    return list(range(1, n_max + 1))


def strong_walters_audit(
    f,
    n_max: int,
    eta_list,
    sampler: PairSampler = PairSampler(),
    extra_pairs=(),
) -> ModulusReport:
    """Search for large ``|S_n f(x) - S_n f(y)|`` among pairs with ``d_n(x, y) <= eta``."""
    if n_max < 1:
        raise InvalidArgumentError("n_max must be >= 1")
    alphabet = f.alphabet
    pairs = adversarial_pairs(alphabet, n_max + f.depth + 2) + random_pairs(alphabet, sampler) + list(extra_pairs)
    etas = sorted(float(e) for e in eta_list)
    best = {(eta, n): (0.0, -1) for eta in etas for n in _n_grid(n_max)}
    for wid, (x, y) in enumerate(pairs):
        length = max(n_max + f.depth, len(x.prefix), len(y.prefix))
        dprof = np.maximum.accumulate(bowen_profile(x, y, length)[:n_max])
        diff = np.abs(birkhoff_profile(f, x, n_max) - birkhoff_profile(f, y, n_max))
        for eta in etas:
            ok = np.nonzero(dprof <= eta)[0]
            for i in ok:
                key = (eta, int(i) + 1)
                if best[key][1] < 0 or diff[i] > best[key][0]:
                    best[key] = (float(diff[i]), wid)
    rows = []
    for (eta, n), (obs, wid) in sorted(best.items()):
        if wid < 0:
            continue
        x, y = pairs[wid]
        rows.append(WitnessRow(eta, n, d_omega(x, y), obs, strong_majorant(f, n, eta), wid, x, y, "strong"))
    summary = {}
    growth = False
    for eta in etas:
        curve = {r.n: r.observed for r in rows if r.eta == eta}
        top = max(curve.values(), default=0.0)
        summary[eta] = top
        last, mid = curve.get(n_max, 0.0), curve.get(max(1, n_max // 2), 0.0)
        if n_max >= 4 and last > 1e-12 and last >= 1.5 * mid:
            growth = True
    if growth:
        verdict = VIOLATED
    elif not etas or summary[etas[0]] <= summary[etas[-1]] + 1e-12:
        verdict = CONSISTENT
    else:
        verdict = INCONCLUSIVE
    return ModulusReport(rows, summary, verdict)


def _prefix_words(alphabet, count: int, n_max: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    words = [np.full(n_max, c, dtype=np.intp) for c in sorted({0, alphabet.m // 2, alphabet.m - 1})]
    words += [rng.integers(alphabet.m, size=n_max) for _ in range(count)]
    return words


def _prefixed_differences(f, x: PointSeq, y: PointSeq, word: np.ndarray) -> np.ndarray:
    """``S_n f(a x) - S_n f(a y)`` for ``a = word[-n:]``, n = 1..len(word)."""
    n_max = len(word)
    ax, ay = x.prepend(word.tolist()), y.prepend(word.tolist())
    fx = np.diff(np.concatenate(([0.0], birkhoff_profile(f, ax, n_max))))
    fy = np.diff(np.concatenate(([0.0], birkhoff_profile(f, ay, n_max))))
    return np.cumsum((fx - fy)[::-1])


def _prefix_scan(f, pairs, n_max, prefix_count, seed, kind):
    words = _prefix_words(pairs[0][0].alphabet, prefix_count, n_max, seed) if pairs else []
    rows = []
    for wid, (x, y) in enumerate(pairs):
        best_val, best_n, best_word = -math.inf, 1, words[0]
        for word in words:
            diffs = _prefixed_differences(f, x, y, word)
            vals = diffs if kind == "weak" else np.abs(np.expm1(diffs))
            i = int(np.argmax(vals))
            if vals[i] > best_val:
                best_val, best_n, best_word = float(vals[i]), i + 1, word
        a = best_word[n_max - best_n :].tolist()
        dist = d_omega(x, y)
        bound = weak_majorant(f, x, y) if kind == "weak" else math.nan
        rows.append(WitnessRow(dist, best_n, dist, best_val, bound, wid, x.prepend(a), y.prepend(a), kind))
    return rows


def _shrinks(rows) -> bool:
    """Bin maxima are non-decreasing in ``d(x, y)`` (quartile bins)."""
    if not rows:
        return True
    vals = np.array([r.observed for r in rows])
    if np.all(np.abs(vals) <= 1e-12):
        return True
    dists = np.array([r.d_xy for r in rows])
    order = np.argsort(dists, kind="stable")
    bins = [b for b in np.array_split(order, 4) if b.size]
    maxima = [float(np.max(vals[b])) for b in bins]
    return all(a <= b + 1e-12 for a, b in zip(maxima, maxima[1:]))


def weak_walters_audit(
    f,
    n_max: int,
    sampler: PairSampler = PairSampler(),
    prefix_count: int = 16,
    prefix_seed: int = 1,
    pairs=None,
) -> ModulusReport:
    """Estimate ``C_f(x, y) = sup_n sup_a [S_n f(ax) - S_n f(ay)]`` per pair."""
    if n_max < 1:
        raise InvalidArgumentError("n_max must be >= 1")
    if pairs is None:
        pairs = adversarial_pairs(f.alphabet, f.depth + 2) + random_pairs(f.alphabet, sampler)
    rows = _prefix_scan(f, list(pairs), n_max, prefix_count, prefix_seed, "weak")
    summary = {"max_C": max((r.observed for r in rows), default=0.0)}
    return ModulusReport(rows, summary, CONSISTENT if _shrinks(rows) else INCONCLUSIVE)


def distortion_audit(
    g: NormalizedPotential,
    n_max: int,
    sampler: PairSampler = PairSampler(),
    prefix_count: int = 16,
    prefix_seed: int = 1,
    pairs=None,
) -> ModulusReport:
    """Estimate ``D*_g(x, y) = sup_n sup_a |prod g(sigma^i a x) / prod g(sigma^i a y) - 1|``."""
    logg = g.potential()
    if pairs is None:
        pairs = adversarial_pairs(g.alphabet, logg.depth + 2) + random_pairs(g.alphabet, sampler)
    rows = _prefix_scan(logg, list(pairs), n_max, prefix_count, prefix_seed, "distortion")
    summary = {"max_D": max((r.observed for r in rows), default=0.0)}
    return ModulusReport(rows, summary, CONSISTENT if _shrinks(rows) else INCONCLUSIVE)


def default_norm_parameter(alphabet) -> float:
    """Half of the smallest distance between two constant sequences on distinct nodes."""
    return 0.5 * alphabet.min_gap()


def walters_norm_estimate(f: Potential, n_max: int, s: float | None = None, sampler: PairSampler = PairSampler()) -> float:
    """Lower bound for ``2 ||f||_0 + sup_n max_{d_n <= s} |S_n f(x) - S_n f(y)|``."""
    s = default_norm_parameter(f.alphabet) if s is None else s
    report = strong_walters_audit(f, n_max, [s], sampler)
    return 2.0 * f.sup() + report.summary[s]


@dataclass(frozen=True)
class AlgebraReport:
    checked: int
    min_slack: float
    s: float


def _close_pair(alphabet, rng, n: int, s: float, length: int, tries: int = 200):
    """Random pair with ``d_n(x, y) <= s``: ``y`` agrees with ``x`` before a random coordinate."""
    for _ in range(tries):
        x = _random_point(alphabet, rng, length)
        first = int(rng.integers(1, length + 1))
        y = _perturb(x, rng, first, length)
        if d_n(x, y, n) <= s:
            return x, y
    return x, x


def algebra_pointwise_check(f: Potential, g: Potential, s: float | None = None, samples: int = 500, n_max: int = 30, seed: int = 0) -> AlgebraReport:
    """Check ``|S_n(fg)(x) - S_n(fg)(y)| <= |f|_0 |S_n g(x) - S_n g(y)| + |g|_0 |S_n f(x) - S_n f(y)|``
    on sampled pairs with ``d_n(x, y) <= s``."""
    if not f.alphabet.same_as(g.alphabet):
        raise InvalidArgumentError("potentials live on different alphabets")
    s = default_norm_parameter(f.alphabet) if s is None else s
    fg = f.core * g.core
    fnorm, gnorm = f.sup(), g.sup()
    rng = np.random.default_rng(seed)
    length = n_max + max(f.depth, g.depth) + 4
    min_slack = math.inf
    for _ in range(samples):
        n = int(rng.integers(1, n_max + 1))
        x, y = _close_pair(f.alphabet, rng, n, s, length)
        lhs = abs(birkhoff_sum(fg, x, n) - birkhoff_sum(fg, y, n))
        rhs = fnorm * abs(birkhoff_sum(g, x, n) - birkhoff_sum(g, y, n)) + gnorm * abs(
            birkhoff_sum(f, x, n) - birkhoff_sum(f, y, n)
        )
        slack = rhs - lhs
        if slack < -1e-12:
            raise InequalityViolationError("pointwise algebra inequality violated", witness=(n, x, y, lhs, rhs))
        min_slack = min(min_slack, slack)
    return AlgebraReport(samples, min_slack, s)


# -- long-range variation -----------------------------------------------------------


def ising_variation(alpha: float, n: int, p: int) -> float:
    """``var_{n+p}(S_n f) = 2 sum_{k<n} sum_{m > n+p-k} m**-alpha`` for the long-range potential."""
    if alpha <= 2.0:
        raise InvalidArgumentError("variation bound needs alpha > 2")
    if n < 1 or p < 1:
        raise InvalidArgumentError("n and p must be >= 1")
    return 2.0 * math.fsum(power_tail(alpha, n + p - k + 1)[0] for k in range(n))


@dataclass(frozen=True)
class VariationFit:
    alpha: float
    n: int
    p: np.ndarray
    values: np.ndarray
    slope: float

    @property
    def expected_slope(self) -> float:
        return -(self.alpha - 2.0)


def variation_fit(alpha: float, n: int, p_grid) -> VariationFit:
    """Least-squares slope of ``log var_{n+p}(S_n f)`` against ``log p``."""
    if alpha <= 2.0:
        raise InvalidArgumentError("variation fit needs alpha > 2")
    p = np.asarray(sorted(p_grid), dtype=int)
    vals = np.array([ising_variation(alpha, n, int(q)) for q in p])
    slope = float(np.polyfit(np.log(p), np.log(vals), 1)[0])
    return VariationFit(alpha, n, p, vals, slope)


def constant_pair(alphabet, i: int, j: int) -> tuple[PointSeq, PointSeq]:
    """The constant sequences on nodes ``i`` and ``j``."""
    return PointSeq.constant(alphabet, i), PointSeq.constant(alphabet, j)


def growth_ratios(f, x: PointSeq, y: PointSeq, n_max: int) -> np.ndarray:
    """``|S_n f(x) - S_n f(y)| / (n d_omega(x, y))`` for ``n = 1..n_max``."""
    dist = d_omega(x, y)
    if dist == 0:
        raise InvalidArgumentError("pair must be distinct")
    n = np.arange(1, n_max + 1)
    return np.abs(birkhoff_profile(f, x, n_max) - birkhoff_profile(f, y, n_max)) / (n * dist)


def ising_variation_sup(alpha: float, p: int) -> float:
    """``sup_n var_{n+p}(S_n f) = 2 sum_{m >= p+2} (m - p - 1) m**-alpha`` (the n -> infinity limit)."""
    if alpha <= 2.0:
        raise InvalidArgumentError("variation bound needs alpha > 2")
    q = p + 2
    return 2.0 * (power_tail(alpha - 1.0, q)[0] - (p + 1) * power_tail(alpha, q)[0])
