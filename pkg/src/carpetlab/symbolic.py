"""Symbol words, rotation orbits, and approximate-square cell addressing.

Points of the unit square are addressed by base-m and base-n digit words.
The rotation by ``theta = log n / log m`` decides, step by step, whether the
horizontal digit word advances together with the vertical one; the running
count of those advances is what keeps the addressed cells roughly square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .carpet import Carpet
from .errors import EmptyWord, SymbolOutOfRange, UnoccupiedRowSymbol, WordTooShort

MAX_WORD_LEN = 10**6


@dataclass(frozen=True)
class SymbolWord:
    """Finite word over the alphabet {0, ..., alphabet_size - 1}."""

    alphabet_size: int
    symbols: tuple[int, ...]

    def __post_init__(self):
        if len(self.symbols) > MAX_WORD_LEN:
            raise SymbolOutOfRange(f"word longer than {MAX_WORD_LEN}")
        for s in self.symbols:
            if not (0 <= s < self.alphabet_size):
                raise SymbolOutOfRange(f"symbol {s} outside alphabet of size {self.alphabet_size}")

    def __len__(self) -> int:
        return len(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def prefix(self, k: int) -> "SymbolWord":
        if k > len(self.symbols):
            raise WordTooShort(f"need {k} symbols, have {len(self.symbols)}")
        return SymbolWord(self.alphabet_size, self.symbols[:k])

    def serialize(self) -> str:
        return ",".join(str(s) for s in self.symbols)

    @classmethod
    def parse(cls, text: str, alphabet_size: int) -> "SymbolWord":
        items = tuple(int(t) for t in text.split(",") if t.strip() != "")
        return cls(alphabet_size, items)


def shift(w: SymbolWord) -> SymbolWord:
    """Drop the first symbol."""
    if len(w) == 0:
        raise EmptyWord("cannot shift the empty word")
    return SymbolWord(w.alphabet_size, w.symbols[1:])


def carry_shift(w: SymbolWord, phase: float, theta: float) -> SymbolWord:
    """Shift exactly when the rotation phase is about to wrap.

    The word advances iff ``phase`` lies in [1 - theta, 1); otherwise it is
    returned unchanged.
    """
    if len(w) == 0:
        raise EmptyWord("cannot shift the empty word")
    if phase >= 1.0 - theta:
        return shift(w)
    return w


def coding_interval(w: SymbolWord, base: int | None = None) -> tuple[Fraction, Fraction]:
    """Exact half-open interval of all points whose expansion extends ``w``.

    Returns (lo, hi) with hi - lo = base**(-len(w)).
    """
    if base is None:
        base = w.alphabet_size
    value = Fraction(0)
    scale = Fraction(1)
    for s in w.symbols:
        if s >= base:
            raise SymbolOutOfRange(f"symbol {s} not a base-{base} digit")
        scale /= base
        value += s * scale
    return value, value + scale


def format_interval(iv: tuple[Fraction, Fraction]) -> str:
    lo, hi = iv
    return f"[{lo.numerator}/{lo.denominator}, {hi.numerator}/{hi.denominator})"


class RotationOrbit:
    """Orbit of ``u0`` under repeated addition of ``theta`` mod 1.

    Fractional parts are accumulated in extended precision (the products
    ``i * theta`` are exactly rounded) and cached; the cache is replaced,
    never mutated, so instances are safe to share across threads.
    """

    def __init__(self, theta: float, u0: float = 0.0):
        if not (0.0 < theta < 1.0):
            raise ValueError(f"theta must be in (0, 1), got {theta}")
        if not (0.0 <= u0 < 1.0):
            raise ValueError(f"u0 must be in [0, 1), got {u0}")
        self.theta = float(theta)
        self.u0 = float(u0)
        self._phases = self._compute(0)

    def _compute(self, k: int) -> np.ndarray:
        i = np.arange(k + 1, dtype=np.longdouble)
        ph = np.mod(np.longdouble(self.u0) + i * np.longdouble(self.theta), np.longdouble(1.0))
        return ph

    def phases(self, k: int) -> np.ndarray:
        """Fractional parts of u0 + i*theta for i = 0..k (float64 copy)."""
        if len(self._phases) <= k:
            self._phases = self._compute(k)
        return self._phases[: k + 1].astype(np.float64)

    def phase(self, i: int) -> float:
        return float(self.phases(i)[i])

    def _members(self, k: int) -> np.ndarray:
        if len(self._phases) <= k:
            self._phases = self._compute(k)
        lo = np.longdouble(1.0) - np.longdouble(self.theta)
        return self._phases[: k + 1] >= lo

    def return_count(self, k: int) -> int:
        """Number of i in 0..k with frac(u0 + i*theta) in [1 - theta, 1)."""
        if k < 0:
            raise ValueError("k must be >= 0")
        return int(np.count_nonzero(self._members(k)))

    def return_counts(self, k: int) -> np.ndarray:
        """Cumulative return counts: entry i equals return_count(i)."""
        return np.cumsum(self._members(k).astype(np.int64))

    def near_boundary(self, k: int, tol: float = 1e-15) -> bool:
        """True if any phase up to index k sits within tol of a test endpoint."""
        ph = self.phases(k)
        lo = 1.0 - self.theta
        return bool(np.any(np.abs(ph - lo) < tol) or np.any(ph > 1.0 - tol))


@lru_cache(maxsize=32)
def scanned_return_constant(theta: float, k_max: int = 10_000, grid: int = 128) -> int:
    """Empirical uniform bound on |return_count(k) - floor(theta*k)|.

    Scans a grid of starting phases up to k_max.  The window [1 - theta, 1)
    has length theta, so the deviation stays bounded; the scan reports the
    observed supremum (an integer ceiling).
    """
    worst = 0.0
    ks = np.arange(k_max + 1, dtype=np.float64)
    floor_tk = np.floor(theta * ks)
    for i in range(grid):
        orbit = RotationOrbit(theta, i / grid)
        dev = np.abs(orbit.return_counts(k_max) - floor_tk)
        worst = max(worst, float(dev.max()))
    return int(math.ceil(worst))


@dataclass(frozen=True)
class ApproxSquare:
    """Grid cell D_{m^p} x D_{n^k} addressed by digit words.

    ``x_word`` has base m and length p, ``y_word`` base n and length k; the
    cell is the half-open rectangle of points whose expansions extend both
    words.  When p is a return count for k the two side lengths are
    comparable, which is the whole point of the construction.
    """

    x_word: SymbolWord
    y_word: SymbolWord

    @property
    def x_base(self) -> int:
        return self.x_word.alphabet_size

    @property
    def y_base(self) -> int:
        return self.y_word.alphabet_size

    @property
    def x_depth(self) -> int:
        return len(self.x_word)

    @property
    def depth(self) -> int:
        return len(self.y_word)

    @property
    def x_index(self) -> int:
        idx = 0
        for s in self.x_word.symbols:
            idx = idx * self.x_base + s
        return idx

    @property
    def y_index(self) -> int:
        idx = 0
        for s in self.y_word.symbols:
            idx = idx * self.y_base + s
        return idx

    @property
    def x_scale(self) -> int:
        return self.x_base ** self.x_depth

    @property
    def y_scale(self) -> int:
        return self.y_base ** self.depth

    def rect(self) -> tuple[float, float, float, float]:
        """(x0, x1, y0, y1) in double precision."""
        xs, ys = self.x_scale, self.y_scale
        xi, yi = self.x_index, self.y_index
        return (xi / xs, (xi + 1) / xs, yi / ys, (yi + 1) / ys)

    def intervals(self) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
        return coding_interval(self.x_word), coding_interval(self.y_word)

    def center(self) -> tuple[float, float]:
        return ((self.x_index + 0.5) / self.x_scale, (self.y_index + 0.5) / self.y_scale)

    def diameter(self) -> float:
        return math.hypot(1.0 / self.x_scale, 1.0 / self.y_scale)


def approx_square_at(
    x_word: SymbolWord, y_word: SymbolWord, k: int, orbit: RotationOrbit
) -> ApproxSquare:
    """Approximate square of depth k around the point addressed by the words.

    Truncates the horizontal word to the orbit's return count at k and the
    vertical word to length k.
    """
    p = orbit.return_count(k)
    if len(x_word) < p or len(y_word) < k:
        raise WordTooShort(
            f"need x length >= {p} and y length >= {k}, have ({len(x_word)}, {len(y_word)})"
        )
    return ApproxSquare(x_word.prefix(p), y_word.prefix(k))


def cylinder_cover_count(c: Carpet, omega_prefix: SymbolWord, q: int) -> tuple[int, int]:
    """Bracket for the number of m^-q cells meeting a row-cylinder set.

    The set of x whose digit at position i lies in the row digit set of
    ``omega_prefix[i]`` meets between prod a(omega_i) and 5 * prod a(omega_i)
    grid cells at scale m^-q.  Exact integer arithmetic.
    """
    if len(omega_prefix) < q:
        raise WordTooShort(f"prefix of length {len(omega_prefix)} shorter than q={q}")
    lower = 1
    for i in range(q):
        j = omega_prefix[i]
        a = c.row_count.get(j)
        if a is None:
            raise UnoccupiedRowSymbol(f"row {j} has no digits in this carpet")
        lower *= a
    return lower, 5 * lower


def fiber_constraints(
    c: Carpet,
    y_word: SymbolWord,
    k: int,
    orbit: RotationOrbit,
    trim: int | None = None,
) -> list[frozenset[int]]:
    """Digit constraints on the rescaled horizontal fiber of a depth-k cell.

    After magnifying the depth-k approximate square of a carpet point, the
    horizontal digit at position i is restricted to the digit set of row
    ``y[i + p]`` where p is the return count, for i up to about
    (1 - theta) * k / theta.  The tail of that range is only valid up to a
    bounded correction, so the last ``trim`` constraints are dropped
    (default: ceil(C / theta) with C the scanned return-count constant).
    """
    theta = orbit.theta
    p = orbit.return_count(k)
    full = math.floor((1.0 - theta) * k / theta)
    needed = p + math.ceil((1.0 - theta) * k / theta)
    if len(y_word) < needed:
        raise WordTooShort(f"need y length >= {needed}, have {len(y_word)}")
    if trim is None:
        trim = math.ceil(scanned_return_constant(theta) / theta)
    count = max(0, full - trim)
    return [c.row_digits(y_word[p + i]) for i in range(count)]
