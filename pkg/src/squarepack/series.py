"""Run parameters and the power series behind the area and perimeter budgets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

_EPS = 2.0**-53

# Direct summation runs up to this index before the Euler-Maclaurin tail takes over.
_EM_START = 64
_EM_TERMS = 8

# Bernoulli numbers B_2, B_4, ..., B_16.
_BERNOULLI = [
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
    Fraction(-3617, 510),
]
_CHUNK = 1 << 20
# Shorter ranges go term by term through side_length, so a single term is bit-identical.
_SCALAR_RANGE = 4096


def side_length(n: int, t: float) -> float:
    """Sidelength ``n**-t`` of square number ``n``.

    Every module goes through this routine so that equal indices give
    bit-identical sides.
    """
    return float(n) ** -t


class CompensatedSum:
    """Running sum with Neumaier compensation; supports removals."""

    __slots__ = ("_s", "_c")

    def __init__(self, value: float = 0.0) -> None:
        self._s = float(value)
        self._c = 0.0

    def add(self, x: float) -> None:
        s = self._s
        total = s + x
        if abs(s) >= abs(x):
            self._c += (s - total) + x
        else:
            self._c += (x - total) + s
        self._s = total

    def __iadd__(self, x: float) -> CompensatedSum:
        self.add(x)
        return self

    def __isub__(self, x: float) -> CompensatedSum:
        self.add(-x)
        return self

    @property
    def value(self) -> float:
        return self._s + self._c

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"CompensatedSum({self.value!r})"


@dataclass(frozen=True)
class Params:
    """Global configuration of a packing run.

    ``delta`` is derived from ``t`` on every access and never stored.
    """

    t: float
    M: int
    n0: int
    n_max: int | None = None

    def __post_init__(self) -> None:
        if not (isinstance(self.t, float) or isinstance(self.t, int)) or not math.isfinite(self.t):
            raise ValueError(f"t must be a finite real, got {self.t!r}")
        if not 0.5 < self.t < 1.0:
            raise ValueError(f"exponent t must satisfy 1/2 < t < 1, got {self.t}")
        if self.t + self.delta * self.t >= 1.0:
            raise ValueError(f"t + delta*t must be < 1 (t={self.t})")
        if int(self.M) != self.M or self.M < 2:
            raise ValueError(f"block scale M must be an integer >= 2, got {self.M}")
        if int(self.n0) != self.n0 or self.n0 < 2:
            raise ValueError(f"starting index n0 must be an integer >= 2, got {self.n0}")
        if self.n_max is not None and (int(self.n_max) != self.n_max or self.n_max < self.n0):
            raise ValueError(f"n_max must be an integer >= n0, got {self.n_max}")
        object.__setattr__(self, "t", float(self.t))

    @property
    def delta(self) -> float:
        return 1.0 - self.t

    @property
    def perimeter_exponent(self) -> float:
        """Exponent ``t + delta*t`` of the perimeter budget series."""
        return self.t + self.delta * self.t


@dataclass(frozen=True)
class SeriesValue:
    value: float
    error_bound: float

    def __post_init__(self) -> None:
        if not self.error_bound >= 0.0:
            raise ValueError("error_bound must be non-negative")

    @property
    def lower(self) -> float:
        return self.value - self.error_bound

    @property
    def upper(self) -> float:
        return self.value + self.error_bound

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def _rising(s: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= s + i
    return out


def tail_sum(s: float, n0: int) -> SeriesValue:
    """Certified value of ``sum(n**-s for n >= n0)``.

    Terms below ``max(n0, 64)`` are summed directly; the rest is the
    Euler-Maclaurin expansion with eight Bernoulli corrections.  The
    returned bound covers both the truncated expansion and floating-point
    rounding.
    """
    if not s > 1.0:
        raise ValueError(f"tail_sum diverges for s <= 1 (s={s})")
    if n0 < 1:
        raise ValueError(f"n0 must be >= 1, got {n0}")
    s = float(s)
    start = max(int(n0), _EM_START)
    direct = [side_length(n, s) for n in range(int(n0), start)]

    N = float(start)
    parts = list(direct)
    parts.append(N ** (1.0 - s) / (s - 1.0))
    parts.append(0.5 * N**-s)
    for k, b in enumerate(_BERNOULLI, start=1):
        # -B_2k/(2k)! * f^(2k-1)(N) with f^(2k-1)(x) = -(s)_{2k-1} x^(-s-2k+1)
        coeff = float(b / math.factorial(2 * k))
        parts.append(coeff * _rising(s, 2 * k - 1) * N ** (-s - 2 * k + 1))
    value = math.fsum(parts)

    # after q Bernoulli terms: |R| <= 2 ζ(2q) / (2π)^(2q) * |f^(2q-1)(N)|
    q = _EM_TERMS
    zeta_2q = 1.0 + 2.0 ** (1 - 2 * q)  # ζ(2q) ≤ 1 + 2^(1-2q) for q ≥ 2
    remainder = 2.0 * zeta_2q / (2.0 * math.pi) ** (2 * q) * _rising(s, 2 * q - 1) * N ** (-s - 2 * q + 1)
    rounding = 16.0 * _EPS * math.fsum(abs(p) for p in parts)
    return SeriesValue(value, remainder * (1.0 + 1e-6) + rounding)


def partial_sum(s: float, a: int, b: int) -> float:
    """``sum(n**-s for n in range(a, b + 1))``; an empty range gives 0.

    Short ranges are summed exactly with ``math.fsum``.  Long ones are
    evaluated in chunks; each chunk is reduced by pairwise summation and
    chunk totals are combined exactly.
    """
    if a < 1:
        raise ValueError(f"a must be >= 1, got {a}")
    if a > b:
        return 0.0
    s = float(s)
    if b - a < _SCALAR_RANGE:
        return math.fsum(side_length(n, s) for n in range(int(a), int(b) + 1))
    totals = []
    lo = int(a)
    while lo <= b:
        hi = min(int(b), lo + _CHUNK - 1)
        terms = np.arange(lo, hi + 1, dtype=np.float64) ** -s
        totals.append(float(np.sum(terms)))
        lo = hi + 1
    return math.fsum(totals)


def budget_prefactor(params: Params) -> float:
    return float(params.M) ** (-1.0 + params.delta / 2.0)


def perimeter_budget(params: Params, n0: int) -> float:
    """Allowed weighted perimeter of the residual family once ``n0`` is next."""
    if n0 < 2:
        raise ValueError(f"n0 must be >= 2, got {n0}")
    return budget_prefactor(params) * partial_sum(params.perimeter_exponent, 1, n0 - 1)
