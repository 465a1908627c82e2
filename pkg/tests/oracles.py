"""Independent brute-force oracles shared by the test modules.

Nothing here imports ksphere; every value is computed by the most literal
enumeration available.
"""

from __future__ import annotations

import cmath
import itertools
import math
from collections import Counter
from fractions import Fraction


def e(x) -> complex:
    if isinstance(x, (int, Fraction)):
        x = x % 1  # exact reduction keeps large rational phases accurate
    return cmath.exp(2j * math.pi * float(x))


def cube_count(k: int, d: int, lam: int) -> int:
    """Walk the full cube [-R, R]^d."""
    R = 0
    while (R + 1) ** k <= lam:
        R += 1
    return sum(1 for n in itertools.product(range(-R, R + 1), repeat=d) if sum(abs(c) ** k for c in n) == lam)


def cube_points(k: int, d: int, lam: int) -> list[tuple[int, ...]]:
    R = 0
    while (R + 1) ** k <= lam:
        R += 1
    return sorted(n for n in itertools.product(range(-R, R + 1), repeat=d) if sum(abs(c) ** k for c in n) == lam)


def mean_value_tuples(k: int, r: int, s: int, lo: int | None = None) -> int:
    """#{(n, m) in [lo, r]^{2s} : sum |n|^k = sum |m|^k}; lo defaults to -r."""
    lo = -r if lo is None else lo
    tally = Counter(sum(abs(c) ** k for c in t) for t in itertools.product(range(lo, r + 1), repeat=s))
    return sum(v * v for v in tally.values())


def vinogradov_tuples(s: int, k: int, N: int) -> int:
    tally = Counter(
        tuple(sum(c**j for c in t) for j in range(1, k + 1)) for t in itertools.product(range(1, N + 1), repeat=s)
    )
    return sum(v * v for v in tally.values())


def weyl_direct(N: int, t, xi, k: int, symmetric: bool = False) -> complex:
    """The two-sided sum uses |n|^k, matching the sphere equation."""
    rng = range(-N, N + 1) if symmetric else range(1, N + 1)
    return sum(e(Fraction(t) * abs(n) ** k + Fraction(xi) * n) for n in rng)


def gauss_direct(a: int, q: int, k: int, m: int = 0) -> complex:
    return sum(e(Fraction(a * b**k + m * b, q)) for b in range(q)) / q


def sphere_sum_direct(k: int, d: int, lam: int, theta) -> complex:
    return sum(e(sum(n_i * t_i for n_i, t_i in zip(n, theta))) for n in cube_points(k, d, lam))
