"""Normalized complete Gauss sums ``G(a, q; m)`` and singular-series truncations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._limits import PYTHON_STEP, check_work
from .exp_sums import _powmod, units

TWO_PI = 2.0 * math.pi


def _require_unit(a: int, q: int) -> None:
    if q < 1:
        raise ValueError(f"modulus must be positive, got {q}")
    if math.gcd(a, q) != 1:
        raise ValueError(f"gcd({a}, {q}) != 1")


def _residue_phases(a: int, q: int, k: int) -> np.ndarray:
    b = np.arange(q, dtype=np.int64)
    if q < 2**31:
        return ((_powmod(b, k, q) * (a % q)) % q) / q
    return np.array([(a * pow(int(x), k, q)) % q / q for x in b])


def gauss_sum_1d(a: int, q: int, k: int, m: int = 0) -> complex:
    """``q^{-1} sum_{b mod q} e((a b^k + b m) / q)``."""
    _require_unit(a, q)
    if q == 1:
        return 1.0 + 0j
    b = np.arange(q, dtype=np.int64)
    ph = (_residue_phases(a, q, k) + ((b * (m % q)) % q) / q) % 1.0
    ang = TWO_PI * ph
    return complex(math.fsum(np.cos(ang)) / q, math.fsum(np.sin(ang)) / q)


def gauss_sums_all_m(a: int, q: int, k: int) -> np.ndarray:
    """``G(a, q; m)`` for ``m = 0..q-1`` from one inverse FFT."""
    _require_unit(a, q)
    x = np.exp(2j * math.pi * _residue_phases(a, q, k))
    # ifft carries exactly the 1/q normalization
    return np.fft.ifft(x)


@dataclass(frozen=True)
class GaussSumKey:
    a: int
    q: int
    degree: int
    m: tuple[int, ...]

    def __post_init__(self):
        _require_unit(self.a, self.q)
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))

    def reduced(self) -> "GaussSumKey":
        return GaussSumKey(self.a % self.q if self.q > 1 else self.a, self.q, self.degree,
                           tuple(x % self.q for x in self.m))


def gauss_sum_dd(key: GaussSumKey, d: int | None = None) -> complex:
    """Product of the one-dimensional factors over the components of ``m``."""
    if d is not None and len(key.m) != d:
        raise ValueError(f"frequency has {len(key.m)} components, expected {d}")
    out = 1.0 + 0j
    for mi in key.m:
        out *= gauss_sum_1d(key.a, key.q, key.degree, mi)
    return out


@dataclass(frozen=True)
class SteckinFit:
    degree: int
    dimension: int
    q_max: int
    slope: float
    constant: float
    qs: tuple[int, ...]
    max_abs: tuple[float, ...]

    @property
    def target(self) -> float:
        return -self.dimension / self.degree

    def rows(self) -> list[dict]:
        return [
            {
                "q": q,
                "k": self.degree,
                "d": self.dimension,
                "max_abs_G": g,
                "q_pow_dk_times_G": g * q ** (self.dimension / self.degree),
            }
            for q, g in zip(self.qs, self.max_abs)
        ]


def max_abs_gauss(q: int, k: int, d: int = 1) -> float:
    """``max_{a in U(q), m in Z^d} |G(a, q; m)|``.

    The d-dimensional sum is a product of one-dimensional factors sharing ``a``,
    so its maximum over ``m`` is the d-th power of the one-dimensional maximum.
    """
    return _max_abs_1d(q, k) ** d


@lru_cache(maxsize=None)
def _max_abs_1d(q: int, k: int) -> float:
    return max(float(np.abs(gauss_sums_all_m(a, q, k)).max()) for a in units(q))


def steckin_fit(k: int, d: int, q_max: int, q_min: int = 2) -> SteckinFit:
    """Least-squares slope of ``log max|G|`` against ``log q`` for ``q_min <= q <= q_max``.

    Also reports the empirical constant ``max_q q^{d/k} max|G|`` over all
    ``q <= q_max``.
    """
    if q_max < 16:
        raise ValueError(f"insufficient range for a fit: q_max={q_max} < 16")
    check_work(float(q_max) ** 2 * math.log2(q_max) * 0.5, "Gauss-sum scan")
    qs = tuple(range(1, q_max + 1))
    g = tuple(max_abs_gauss(q, k, d) for q in qs)
    sel = [i for i, q in enumerate(qs) if q >= q_min and g[i] > 0]
    if len(sel) < 2:
        raise ValueError("insufficient range for a fit")
    x = np.log([qs[i] for i in sel])
    y = np.log([g[i] for i in sel])
    slope = float(np.polyfit(x, y, 1)[0])
    const = max(gi * q ** (d / k) for q, gi in zip(qs, g))
    return SteckinFit(k, d, q_max, slope, const, qs, g)


def crt_factor_units(a: int, q1: int, q2: int, k: int) -> tuple[int, int]:
    """Units ``(a q2^{k-1} mod q1, a q1^{k-1} mod q2)`` of the CRT factorization."""
    return (a * pow(q2, k - 1, q1)) % q1 if q1 > 1 else 0, (a * pow(q1, k - 1, q2)) % q2 if q2 > 1 else 0


def multiplicativity_check(
    q1: int, q2: int, k: int, m: Sequence[int] | None = None, d: int = 1, trials: int = 20, seed: int = 0
) -> float:
    """Max ``|G(a, q1 q2; m) - G(a', q1; m) G(a'', q2; m)|`` over random units ``a``.

    With ``b = b1 q2 + b2 q1`` the phase ``a b^k / (q1 q2)`` splits as
    ``a q2^{k-1} b1^k / q1 + a q1^{k-1} b2^k / q2`` and ``b m / (q1 q2)`` as
    ``b1 m / q1 + b2 m / q2``.  Random ``m`` is drawn when none is given.
    """
    if math.gcd(q1, q2) != 1:
        raise ValueError(f"moduli {q1}, {q2} are not coprime")
    q = q1 * q2
    rng = np.random.default_rng(seed)
    us = units(q)
    worst = 0.0
    for _ in range(trials):
        a = int(us[rng.integers(len(us))])
        mm = tuple(int(x) for x in (m if m is not None else rng.integers(0, q, size=d)))
        if len(mm) != d:
            raise ValueError(f"frequency must have {d} components")
        a1, a2 = crt_factor_units(a, q1, q2, k)
        lhs = gauss_sum_dd(GaussSumKey(a, q, k, mm))
        rhs = gauss_sum_dd(GaussSumKey(a1 if q1 > 1 else 0, q1, k, mm)) * gauss_sum_dd(
            GaussSumKey(a2 if q2 > 1 else 0, q2, k, mm)
        )
        worst = max(worst, abs(lhs - rhs))
    return worst


@dataclass(frozen=True)
class SingularSeriesReport:
    value: complex
    Q: int
    tail_bound: float
    steckin_constant: float
    partials: tuple[complex, ...]


def singular_series_terms(k: int, d: int, lam: int, Q: int) -> list[complex]:
    """``A(q) = sum_{a in U(q)} e(-a lam / q) G(a, q; 0)^d`` for ``q = 1..Q``."""
    check_work(float(Q) ** 2 * PYTHON_STEP, "singular-series terms")
    out = []
    for q in range(1, Q + 1):
        tot_re, tot_im = [], []
        for a in units(q):
            g = gauss_sum_1d(a, q, k, 0) ** d
            ph = np.exp(-2j * math.pi * ((a * lam) % q) / q) * g
            tot_re.append(ph.real)
            tot_im.append(ph.imag)
        out.append(complex(math.fsum(tot_re), math.fsum(tot_im)))
    return out


def singular_series_partial(
    k: int, d: int, lam: int, Q: int, steckin_constant: float | None = None
) -> SingularSeriesReport:
    """Truncation ``sum_{q <= Q} A(q)`` of the singular series.

    For real ``lam`` the sum over units is closed under ``a -> q - a``, so the
    sign convention inside the exponential does not change the value.  The
    tail bound is ``C sum_{q > Q} q^{1-d/k} <= C Q^{2-d/k} / (d/k - 2)``,
    infinite when ``d/k <= 2``.  ``C`` defaults to the empirical Stečkin
    constant over ``q <= max(Q, 16)``.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    terms = singular_series_terms(k, d, lam, Q)
    partials = tuple(np.cumsum(terms))
    if steckin_constant is None:
        steckin_constant = steckin_fit(k, d, max(Q, 16)).constant
    rho = d / k
    tail = steckin_constant * Q ** (2 - rho) / (rho - 2) if rho > 2 else math.inf
    return SingularSeriesReport(complex(partials[-1]), Q, tail, steckin_constant, partials)
