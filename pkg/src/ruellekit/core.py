"""Symbolic-space substrate: alphabets, points of the shift space, cylinder
functions, Birkhoff sums and potential families.

Words of length ``k`` over an ``m``-letter alphabet are indexed in row-major
order with the first coordinate most significant, so a depth-``k`` table
reshapes to ``(m,) * k`` with axis ``i`` holding coordinate ``i + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgumentError, ResourceLimitError

ALPHABET_KINDS = ("finite-atomic", "interval-uniform", "circle-uniform")
POTENTIAL_FAMILIES = (
    "constant",
    "nn_ising",
    "long_range_ising",
    "first_coordinate",
    "tabulated",
)

# Largest number of entries a tabulated cylinder function may have.
TABLE_CAP = 1 << 24


@dataclass(frozen=True, eq=False)
class AprioriAlphabet:
    """Discretised compact alphabet ``(M, d, mu)``."""

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    metric_id: str

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.size == 0 or nodes.shape != weights.shape:
            raise InvalidArgumentError("nodes and weights must be equal-length 1-d arrays")
        if np.any(weights <= 0):
            raise InvalidArgumentError("a-priori weights must be strictly positive")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise InvalidArgumentError("a-priori weights must sum to 1")
        if np.unique(nodes).size != nodes.size:
            raise InvalidArgumentError("alphabet nodes must be pairwise distinct")
        if self.metric_id not in ("abs", "arc"):
            raise InvalidArgumentError(f"unknown metric {self.metric_id!r}")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def m(self) -> int:
        return self.nodes.size

    def dist(self, i, j):
        """Point metric between node indices (vectorised)."""
        diff = np.abs(self.nodes[np.asarray(i)] - self.nodes[np.asarray(j)])
        if self.metric_id == "arc":
            diff = np.minimum(diff, 2.0 * math.pi - diff)
        return diff

    def min_gap(self) -> float:
        if self.m == 1:
            return 0.0
        i, j = np.triu_indices(self.m, k=1)
        return float(np.min(self.dist(i, j)))

    def same_as(self, other: "AprioriAlphabet") -> bool:
        return self is other or (
            self.kind == other.kind
            and self.metric_id == other.metric_id
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )

    def words(self, length: int) -> np.ndarray:
        """All words of the given length as an ``(m**length, length)`` index array."""
        check_budget(self.m, length)
        if length == 0:
            return np.zeros((1, 0), dtype=np.intp)
        grids = np.indices((self.m,) * length).reshape(length, -1).T
        return np.ascontiguousarray(grids, dtype=np.intp)


def make_alphabet(kind: str, m: int = 2, nodes=None, weights=None) -> AprioriAlphabet:
    """Build a discretised alphabet.

    ``finite-atomic`` defaults to the spins ``(-1, +1)``; pass ``nodes`` (and
    optionally ``weights``) to override the atoms.
    """
    if kind not in ALPHABET_KINDS:
        raise InvalidArgumentError(f"unknown alphabet kind {kind!r}")
    if kind == "finite-atomic":
        if nodes is None:
            nodes = (-1.0, 1.0)
        nodes = np.asarray(nodes, dtype=float)
        if nodes.size == 0:
            raise InvalidArgumentError("alphabet needs at least one node")
        if weights is None:
            weights = np.full(nodes.size, 1.0 / nodes.size)
        return AprioriAlphabet(kind, nodes, weights, "abs")
    if m < 1:
        raise InvalidArgumentError("alphabet size m must be >= 1")
    if kind == "interval-uniform":
        grid = (2.0 * np.arange(1, m + 1) - 1.0) / (2.0 * m)
        return AprioriAlphabet(kind, grid, np.full(m, 1.0 / m), "abs")
    grid = 2.0 * math.pi * np.arange(m) / m
    return AprioriAlphabet(kind, grid, np.full(m, 1.0 / m), "arc")


def check_budget(m: int, depth: int, cap: int | None = None) -> int:
    cap = TABLE_CAP if cap is None else cap
    size = m**depth
    if size > cap:
        raise ResourceLimitError(f"{m}**{depth} = {size} entries exceeds cap {cap}")
    return size


@dataclass(frozen=True, eq=False)
class PointSeq:
    """Eventually constant point of the shift space: ``prefix`` then ``tail`` forever."""

    alphabet: AprioriAlphabet
    prefix: tuple = ()
    tail: int = 0

    def __post_init__(self):
        prefix = tuple(int(a) for a in self.prefix)
        m = self.alphabet.m
        if not 0 <= self.tail < m or any(not 0 <= a < m for a in prefix):
            raise InvalidArgumentError("point symbols must index alphabet nodes")
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "tail", int(self.tail))

    @classmethod
    def constant(cls, alphabet, symbol: int) -> "PointSeq":
        return cls(alphabet, (), symbol)

    def coords(self, length: int) -> np.ndarray:
        """First ``length`` node indices."""
        out = np.full(length, self.tail, dtype=np.intp)
        k = min(length, len(self.prefix))
        out[:k] = self.prefix[:k]
        return out

    def shift(self, k: int = 1) -> "PointSeq":
        return PointSeq(self.alphabet, self.prefix[k:], self.tail)

    def prepend(self, word: Sequence[int]) -> "PointSeq":
        return PointSeq(self.alphabet, tuple(word) + self.prefix, self.tail)

    def with_symbol(self, position: int, symbol: int) -> "PointSeq":
        """Copy with coordinate ``position`` (1-based) replaced."""
        length = max(len(self.prefix), position)
        coords = list(self.coords(length))
        coords[position - 1] = symbol
        return PointSeq(self.alphabet, tuple(coords), self.tail)

    def values(self, length: int) -> np.ndarray:
        return self.alphabet.nodes[self.coords(length)]


def d_omega(x: PointSeq, y: PointSeq) -> float:
    """Product metric ``sum_n 2**-n d(x_n, y_n)``, summed exactly."""
    if not x.alphabet.same_as(y.alphabet):
        raise InvalidArgumentError("points live on different alphabets")
    length = max(len(x.prefix), len(y.prefix))
    terms = x.alphabet.dist(x.coords(length), y.coords(length)) * 0.5 ** np.arange(1, length + 1)
    tail = float(x.alphabet.dist(x.tail, y.tail)) * 0.5**length
    return math.fsum(terms.tolist() + [tail])


def d_n(x: PointSeq, y: PointSeq, n: int) -> float:
    """Bowen metric ``max_{0 <= k < n} d_omega(sigma^k x, sigma^k y)``."""
    if n < 1:
        raise InvalidArgumentError("d_n needs n >= 1")
    return max(d_omega(x.shift(k), y.shift(k)) for k in range(n))


@dataclass(frozen=True, eq=False)
class DepthFunction:
    """Real function of the first ``depth`` coordinates, tabulated on ``M**depth``."""

    m: int
    depth: int
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float).ravel()
        if self.depth < 0 or table.size != self.m**self.depth:
            raise InvalidArgumentError(
                f"table of length {table.size} does not match m**depth = {self.m}**{self.depth}"
            )
        if not np.all(np.isfinite(table)):
            raise InvalidArgumentError("table entries must be finite")
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @classmethod
    def constant(cls, m: int, value: float = 1.0) -> "DepthFunction":
        return cls(m, 0, np.array([value]))

    @classmethod
    def from_values(cls, alphabet: AprioriAlphabet, depth: int, fn: Callable) -> "DepthFunction":
        """Tabulate ``fn(values)`` where ``values`` has shape ``(..., depth)`` of node values."""
        words = alphabet.words(depth)
        return cls(alphabet.m, depth, np.asarray(fn(alphabet.nodes[words]), dtype=float))

    @classmethod
    def spin(cls, alphabet: AprioriAlphabet) -> "DepthFunction":
        """The first-coordinate observable ``x -> x_1``."""
        return cls(alphabet.m, 1, alphabet.nodes.copy())

    @property
    def grid(self) -> np.ndarray:
        return self.table.reshape((self.m,) * self.depth)

    def lift(self, depth: int) -> "DepthFunction":
        """Same function viewed as reading ``depth`` coordinates."""
        if depth < self.depth:
            raise InvalidArgumentError("cannot lift to a smaller depth")
        if depth == self.depth:
            return self
        check_budget(self.m, depth)
        shape = (self.m,) * self.depth + (1,) * (depth - self.depth)
        full = np.broadcast_to(self.table.reshape(shape), (self.m,) * depth)
        return DepthFunction(self.m, depth, full.ravel())

    def shifted(self, n: int) -> "DepthFunction":
        """The composition ``phi o sigma**n``."""
        if n == 0:
            return self
        check_budget(self.m, self.depth + n)
        shape = (1,) * n + (self.m,) * self.depth
        full = np.broadcast_to(self.table.reshape(shape), (self.m,) * (self.depth + n))
        return DepthFunction(self.m, self.depth + n, full.ravel())

    def __call__(self, words) -> np.ndarray:
        words = np.asarray(words, dtype=np.intp)
        if self.depth == 0:
            return np.full(words.shape[:-1], self.table[0])
        idx = np.ravel_multi_index(tuple(np.moveaxis(words[..., : self.depth], -1, 0)), (self.m,) * self.depth)
        return self.table[idx]

    def at(self, point: PointSeq) -> float:
        return float(self(point.coords(self.depth)))

    def sup(self) -> float:
        return float(np.max(np.abs(self.table)))

    def flatness(self) -> float:
        return float(np.max(self.table) - np.min(self.table))

    def _combine(self, other, op) -> "DepthFunction":
        if isinstance(other, DepthFunction):
            if other.m != self.m:
                raise InvalidArgumentError("functions over different alphabets")
            depth = max(self.depth, other.depth)
            return DepthFunction(self.m, depth, op(self.lift(depth).table, other.lift(depth).table))
        return DepthFunction(self.m, self.depth, op(self.table, float(other)))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, np.divide)

    def __neg__(self):
        return DepthFunction(self.m, self.depth, -self.table)

    def __pow__(self, p: int):
        return DepthFunction(self.m, self.depth, self.table**p)

    def map(self, fn) -> "DepthFunction":
        return DepthFunction(self.m, self.depth, fn(self.table))


def birkhoff_sum(f, x: PointSeq, n: int) -> float:
    """``S_n f(x) = sum_{k<n} f(sigma^k x)``; ``f`` is a Potential or DepthFunction."""
    if n < 0:
        raise InvalidArgumentError("n must be >= 0")
    if n == 0:
        return 0.0
    depth = f.depth
    coords = x.coords(n + max(depth, 1) - 1)
    if depth == 0:
        return float(n * f(np.zeros((1, 0), dtype=np.intp))[0])
    windows = np.lib.stride_tricks.sliding_window_view(coords, depth)[:n]
    return math.fsum(np.asarray(f(windows), dtype=float).tolist())


def integral_tail_bound(alpha: float, d: int) -> float:
    """Upper bound ``d**(1-alpha)/(alpha-1)`` for ``sum_{m>d} m**-alpha``."""
    return d ** (1.0 - alpha) / (alpha - 1.0)


def default_truncation_depth(alpha: float, eps: float = 1e-6) -> int:
    """Smallest ``d >= 2`` whose integral tail bound is at most ``eps``."""
    d = max(2, math.ceil(((alpha - 1.0) * eps) ** (-1.0 / (alpha - 1.0))) - 2)
    while integral_tail_bound(alpha, d) > eps:
        d += 1
    while d > 2 and integral_tail_bound(alpha, d - 1) <= eps:
        d -= 1
    return d


@dataclass(frozen=True, eq=False)
class Potential:
    """A potential of finite depth, evaluated lazily and tabulated on demand.

    ``tail_bound`` bounds the sup-distance to the untruncated potential (zero
    for exactly finite-range families).
    """

    alphabet: AprioriAlphabet
    family: str
    depth: int
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    params: dict = field(default_factory=dict)
    tail_bound: float = 0.0

    def __call__(self, words) -> np.ndarray:
        words = np.asarray(words, dtype=np.intp)
        return np.asarray(self.evaluator(words[..., : self.depth]), dtype=float)

    def at(self, point: PointSeq) -> float:
        return float(self(point.coords(self.depth)))

    @cached_property
    def core(self) -> DepthFunction:
        words = self.alphabet.words(self.depth)
        return DepthFunction(self.alphabet.m, self.depth, self(words).reshape(-1))

    def sup(self) -> float:
        return self.core.sup()

    def combine(self, other: "Potential", t: float = 1.0) -> "Potential":
        """Tabulated potential ``self + t * other``."""
        return tabulated(self.alphabet, self.core + t * other.core)

    def __add__(self, other: "Potential") -> "Potential":
        return self.combine(other, 1.0)

    def scaled(self, t: float) -> "Potential":
        return tabulated(self.alphabet, t * self.core)


def tabulated(alphabet: AprioriAlphabet, table: DepthFunction, family: str = "tabulated") -> Potential:
    if table.m != alphabet.m:
        raise InvalidArgumentError("table and alphabet sizes differ")
    return Potential(alphabet, family, table.depth, table, {})


def make_potential(family: str, alphabet: AprioriAlphabet, **params) -> Potential:
    """Construct a potential from one of the supported families.

    constant(c), nn_ising(beta), long_range_ising(alpha, d, no_decay_claims),
    first_coordinate, tabulated(table).
    """
    nodes = alphabet.nodes
    if family == "constant":
        c = float(params.get("c", 0.0))
        return Potential(alphabet, family, 0, lambda w: np.full(w.shape[:-1], c), {"c": c})
    if family == "nn_ising":
        beta = float(params.get("beta", 1.0))
        return Potential(
            alphabet, family, 2, lambda w: beta * nodes[w[..., 0]] * nodes[w[..., 1]], {"beta": beta}
        )
    if family == "first_coordinate":
        return Potential(alphabet, family, 1, lambda w: nodes[w[..., 0]], {})
    if family == "tabulated":
        table = params["table"]
        return tabulated(alphabet, table)
    if family == "long_range_ising":
        alpha = float(params["alpha"])
        if alpha <= 1.0:
            raise InvalidArgumentError("long-range potential needs alpha > 1 (summability)")
        if alpha <= 2.0 and not params.get("no_decay_claims", False):
            raise InvalidArgumentError("alpha in (1, 2] requires no_decay_claims=True")
        d = params.get("d")
        d = default_truncation_depth(alpha) if d is None else int(d)
        if d < 2:
            raise InvalidArgumentError("truncation depth d must be >= 2")
        coeff = -(np.arange(2, d + 1, dtype=float) ** -alpha)

        def evaluate(w):
            vals = nodes[w]
            return vals[..., 0] * (vals[..., 1:] @ coeff)

        return Potential(
            alphabet,
            family,
            d,
            evaluate,
            {"alpha": alpha, "d": d},
            integral_tail_bound(alpha, d),
        )
    raise InvalidArgumentError(f"unknown potential family {family!r}")


# Bernoulli numbers B_2, B_4, B_6, B_8 for the Euler-Maclaurin tail.
_BERNOULLI = (1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0)


def power_tail(alpha: float, start: int, cutoff: int = 64) -> tuple[float, float]:
    """``sum_{m >= start} m**-alpha`` and a certified bound on its absolute error.

    Partial sum up to ``max(start, cutoff) - 1`` plus an Euler-Maclaurin
    remainder; the error bound is twice the first omitted correction term.
    """
    if alpha <= 1.0:
        raise InvalidArgumentError("power tail diverges for alpha <= 1")
    if start < 1:
        raise InvalidArgumentError("start must be >= 1")
    K = max(start, cutoff)
    head = math.fsum((np.arange(start, K, dtype=float) ** -alpha).tolist())
    terms = [K ** (1.0 - alpha) / (alpha - 1.0), 0.5 * K**-alpha]
    rising = alpha  # alpha (alpha+1) ... (alpha+2j-2)
    for j, b in enumerate(_BERNOULLI, start=1):
        term = b / math.factorial(2 * j) * rising * K ** (-alpha - 2 * j + 1)
        if j == len(_BERNOULLI):
            return head + math.fsum(terms), 2.0 * abs(term)
        terms.append(term)
        rising *= (alpha + 2 * j - 1) * (alpha + 2 * j)
    raise AssertionError("unreachable")
