"""Weyl sums, sphere exponential sums, mean values and Vinogradov counts."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from ._limits import PYTHON_STEP, check_work
from .lattice_sphere import (
    CoefficientSeries,
    SphereSpec,
    _frozen_object_array,
    integer_root,
    points_array,
    series_power,
)

TWO_PI = 2.0 * math.pi
INT64_MODULUS_LIMIT = 2**31


def _as_fraction(x) -> Fraction:
    """Exact rational value of a float, int or Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


def _frac_times(coef: Fraction, vals: np.ndarray) -> np.ndarray:
    """``coef * vals mod 1`` as floats, reduced exactly in integer arithmetic."""
    p, q = coef.numerator % coef.denominator, coef.denominator
    if p == 0:
        return np.zeros(len(vals))
    if q < INT64_MODULUS_LIMIT and np.abs(vals).max(initial=0) < 2**62:
        v = np.asarray(vals, dtype=np.int64) % q
        return ((v * p) % q) / q
    obj = np.asarray(vals, dtype=object)
    return np.array([(int(x) * p % q) / q for x in obj], dtype=float)


def _powmod(n: np.ndarray, k: int, q: int) -> np.ndarray:
    """``n^k mod q`` elementwise for int64 ``n`` and ``q < 2^31``."""
    base = np.asarray(n, dtype=np.int64) % q
    out = np.ones_like(base) % q
    for _ in range(k):
        out = (out * base) % q
    return out


def _phase_sum(phases: np.ndarray) -> complex:
    """``sum e(phase)`` with compensated accumulation of both parts."""
    ang = TWO_PI * phases
    return complex(math.fsum(np.cos(ang)), math.fsum(np.sin(ang)))


def _check_unit_interval(name, x):
    if not 0 <= x < 1:
        raise ValueError(f"{name} must lie in [0, 1), got {x}")


@dataclass(frozen=True)
class WeylSumParams:
    """``N`` is the length (one-sided sum) or the radius ``r`` (symmetric sum)."""

    N: int
    t: float | Fraction
    xi: float | Fraction
    degree: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        _check_unit_interval("t", self.t)
        _check_unit_interval("xi", self.xi)


def weyl_sum(params: WeylSumParams, symmetric: bool = False) -> complex:
    """``sum_{n=1}^N e(t n^k + xi n)`` or, if symmetric, ``sum_{|n|<=N} e(|n|^k t + n xi)``."""
    N, k = params.N, params.degree
    n = np.arange(-N, N + 1, dtype=np.int64) if symmetric else np.arange(1, N + 1, dtype=np.int64)
    t, xi = _as_fraction(params.t), _as_fraction(params.xi)
    an = np.abs(n)
    if k * math.log2(N + 1) < 62:
        powers = an**k
    else:
        powers = np.array([int(x) ** k for x in an], dtype=object)
    phases = (_frac_times(t, powers) + _frac_times(xi, n)) % 1.0
    return _phase_sum(phases)


@dataclass(frozen=True)
class RationalPoint:
    a: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be positive")
        if (self.a, self.q) != (0, 1) and not (1 <= self.a < self.q and math.gcd(self.a, self.q) == 1):
            raise ValueError(f"{self.a}/{self.q} is not a reduced fraction in (0, 1)")

    @property
    def value(self) -> Fraction:
        return Fraction(self.a, self.q)


def units(q: int) -> list[int]:
    """Reduced residues ``a`` mod ``q`` (``[0]`` for ``q = 1``)."""
    if q == 1:
        return [0]
    return [a for a in range(1, q) if math.gcd(a, q) == 1]


def rational_points(q_max: int) -> list[RationalPoint]:
    return [RationalPoint(a, q) for q in range(1, q_max + 1) for a in units(q)]


def wooley_gamma(k: int) -> float:
    """Admissible sup exponent ``1 / (2(k-1)(k-2))``; only meaningful for ``k >= 3``."""
    if k < 3:
        raise ValueError("the exponent 1/(2(k-1)(k-2)) needs k >= 3")
    return 1.0 / (2 * (k - 1) * (k - 2))


def sup_bound(N: int, k: int, q: int, gamma: float) -> float:
    return N * (1.0 / q + 1.0 / N + q / float(N) ** k) ** gamma


@dataclass
class ProbeTable:
    N: int
    degree: int
    gammas: tuple[float, ...]
    rows: list[dict] = field(default_factory=list)

    def worst(self, gamma_index: int = 0, log_corrected: bool = False) -> dict:
        key = "log_ratio" if log_corrected else "ratio"
        return max(self.rows, key=lambda row: row[key][gamma_index])

    def max_ratio(self, gamma_index: int = 0, log_corrected: bool = False) -> float:
        key = "log_ratio" if log_corrected else "ratio"
        return self.worst(gamma_index, log_corrected)[key][gamma_index]


def _probe_one_q(args):
    N, k, q, grid_xi, gammas = args
    n = np.arange(1, N + 1, dtype=np.int64)
    pw = _powmod(n, k, q)
    xi_phases = [(_frac_times(_as_fraction(xi), n)) for xi in grid_xi]
    log_factor = math.log(2 + N)
    rows = []
    for a in units(q):
        t_ph = ((pw * a) % q) / q
        bounds = [sup_bound(N, k, q, g) for g in gammas]
        for xi, xph in zip(grid_xi, xi_phases):
            val = abs(_phase_sum((t_ph + xph) % 1.0))
            ratios = tuple(val / b for b in bounds)
            rows.append(
                {
                    "N": N,
                    "q": q,
                    "a": a,
                    "xi": float(xi),
                    "abs_S": val,
                    "ratio": ratios,
                    "log_ratio": tuple(r / log_factor for r in ratios),
                }
            )
    return rows


def sup_hypothesis_probe(
    N: int,
    k: int,
    q_max: int,
    grid_xi: Sequence[float] = (0.0,),
    gammas: Sequence[float] | None = None,
    jobs: int = 1,
) -> ProbeTable:
    """Scan ``|S(a/q, xi)|`` against ``N (1/q + 1/N + q/N^k)^gamma``.

    Every reduced ``a/q`` with ``q <= q_max`` is visited, including ``0/1``.
    ``log_ratio`` divides the ratio by ``log(2 + N)`` for the log-loss variant.
    """
    if q_max < 1 or q_max > N:
        raise ValueError(f"need 1 <= q_max <= N, got q_max={q_max}, N={N}")
    if gammas is None:
        gammas = (wooley_gamma(k),) if k >= 3 else (0.5,)
    gammas = tuple(float(g) for g in gammas)
    grid_xi = tuple(grid_xi)
    for xi in grid_xi:
        _check_unit_interval("xi", xi)
    n_pairs = sum(len(units(q)) for q in range(1, q_max + 1))
    check_work(float(n_pairs) * len(grid_xi) * N, "sup-hypothesis probe")
    tasks = [(N, k, q, grid_xi, gammas) for q in range(1, q_max + 1)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_probe_one_q, tasks))
    else:
        chunks = [_probe_one_q(t) for t in tasks]
    table = ProbeTable(N, k, gammas)
    for chunk in chunks:
        table.rows.extend(chunk)
    return table


# ---------------------------------------------------------------------------
# sphere exponential sums


def alpha_coefficients(k: int, radius: int, xi: float) -> np.ndarray:
    """Coefficients ``c[m] = sum_{|n|<=radius, |n|^k=m} e(n xi)``, ``m = 0..radius^k``."""
    c = np.zeros(radius**k + 1, dtype=complex)
    c[0] = 1.0
    n = np.arange(1, radius + 1)
    c[n**k] = 2.0 * np.cos(TWO_PI * n * xi)
    return c


def alpha_on_grid(k: int, radius: int, xi: float, M: int) -> np.ndarray:
    """``alpha_r(j/M, xi) = sum_{|n|<=r} e(|n|^k j/M + n xi)`` for ``j = 0..M-1``."""
    c = alpha_coefficients(k, radius, xi)
    folded = np.zeros(M, dtype=complex)
    np.add.at(folded, np.arange(len(c)) % M, c)
    return np.fft.ifft(folded) * M


def exact_node_count(spec: SphereSpec) -> int:
    """Smallest node count making the t-quadrature of ``a_r`` exact."""
    R = spec.cube_radius
    lam = spec.power_value
    return max(lam, spec.dimension * R**spec.degree - lam) + 1


def default_node_count(spec: SphereSpec) -> int:
    R = spec.cube_radius
    return 2 * spec.dimension * (2 * R + 1) ** spec.degree + 1


def sphere_exponential_sum(
    spec: SphereSpec, theta: Sequence[float], method: str = "direct", M: int | None = None
) -> complex:
    """``a_r(theta) = sum_{n on the sphere} e(n . theta)``.

    ``dft_integral`` evaluates ``int_0^1 e(-lam t) prod_i alpha_r(t, theta_i) dt``
    with ``M`` equispaced nodes, exact once ``M`` exceeds the trigonometric
    degree of the integrand.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.dimension,):
        raise ValueError(f"theta must have length {spec.dimension}")
    if method == "direct":
        pts = points_array(spec)
        if len(pts) == 0:
            return 0j
        return _phase_sum((pts @ theta) % 1.0)
    if method != "dft_integral":
        raise ValueError(f"unknown method {method!r}")
    M = default_node_count(spec) if M is None else int(M)
    need = exact_node_count(spec)
    if M < need:
        raise ValueError(f"{M} nodes cannot integrate exactly; need at least {need}")
    check_work(float(M) * spec.dimension * math.log2(M + 1), "t-quadrature")
    R = spec.cube_radius
    integrand = np.exp(-2j * math.pi * ((spec.power_value * np.arange(M)) % M) / M)
    for th in theta:
        integrand = integrand * alpha_on_grid(spec.degree, R, float(th), M)
    return complex(math.fsum(integrand.real) / M, math.fsum(integrand.imag) / M)


# ---------------------------------------------------------------------------
# mean values


SUPPORTS = ("symmetric", "positive")


def support_series(k: int, r: int, cutoff: int, support: str = "symmetric") -> CoefficientSeries:
    """One-variable series over ``|n| <= r`` (symmetric) or ``1 <= n <= r`` (positive)."""
    if support not in SUPPORTS:
        raise ValueError(f"support must be one of {SUPPORTS}")
    coeffs = [0] * (cutoff + 1)
    if support == "symmetric":
        coeffs[0] = 1
    for n in range(1, r + 1):
        if n**k <= cutoff:
            coeffs[n**k] += 2 if support == "symmetric" else 1
    return CoefficientSeries(cutoff, _frozen_object_array(coeffs))


@dataclass(frozen=True)
class MeanValueReport:
    s: int
    degree: int
    r: int
    exact_count: int
    bound_ratio: float
    support: str = "symmetric"

    def row(self) -> dict:
        return {"k": self.degree, "s": self.s, "r": self.r, "count": self.exact_count, "ratio": self.bound_ratio}


def mean_value_exact(k: int, r: int, s: int, support: str = "symmetric") -> MeanValueReport:
    """``int_0^1 |alpha_r(t, 0)|^{2s} dt`` as an exact solution count.

    Equals ``sum_m c_s[m]^2`` with ``c_s`` the s-fold power of the
    one-variable series; ``bound_ratio`` is the count over ``r^{2s-k}``.
    """
    if s < 1 or r < 1:
        raise ValueError("need s >= 1 and r >= 1")
    cutoff = s * r**k
    check_work(float(s) * (r + 1) * (cutoff + 1), "mean-value convolution")
    c = series_power(support_series(k, r, cutoff, support), s).to_list()
    exact = sum(x * x for x in c)
    return MeanValueReport(s, k, r, exact, exact / float(r) ** (2 * s - k), support)


def mean_value_brute(k: int, r: int, s: int, support: str = "symmetric") -> int:
    """Count ``(n, m)`` in the box with ``sum |n_i|^k == sum |m_i|^k`` by pairing tuples."""
    rng = range(-r, r + 1) if support == "symmetric" else range(1, r + 1)
    check_work(float(len(rng)) ** s * PYTHON_STEP, "mean-value tuple enumeration")
    tally = Counter(sum(abs(x) ** k for x in tup) for tup in product(rng, repeat=s))
    return sum(v * v for v in tally.values())


def mean_value_quadrature(k: int, r: int, s: int, M: int = 10**5) -> float:
    """Rectangle-rule estimate of ``int_0^1 |alpha_r(t, 0)|^{2s} dt`` on ``M`` nodes."""
    if M < 1:
        raise ValueError("M must be >= 1")
    check_work(float(M) * (2 * s + math.log2(M + 1)), "mean-value quadrature")
    vals = np.abs(alpha_on_grid(k, r, 0.0, M)) ** (2 * s)
    return math.fsum(vals) / M


@dataclass(frozen=True)
class LinearPhaseReport:
    worst_ratio: float
    error_estimate: float
    ratios: tuple[float, ...]
    exact: int
    nodes: int


def remove_linear_phases_check(
    k: int, r: int, s: int, trials: int = 50, seed: int = 0, M: int | None = None, xis=None
) -> LinearPhaseReport:
    """Compare ``int prod_{i<=2s} |alpha_r(t, xi_i)| dt`` with ``int |alpha_r(t, 0)|^{2s} dt``.

    The left side is integrated by the periodic rectangle rule at ``M`` and
    ``2M`` nodes; the finer value is used and their gap is the error estimate.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    exact = mean_value_exact(k, r, s).exact_count
    if M is None:
        M = max(4096, 32 * s * r**k + 1)
    check_work(float(trials) * 2 * s * 3 * M, "linear-phase quadrature")
    rng = np.random.default_rng(seed)
    if xis is None:
        xis = rng.random((trials, 2 * s))
    else:
        xis = np.atleast_2d(np.asarray(xis, dtype=float))
        if xis.shape[1] != 2 * s:
            raise ValueError(f"each trial needs {2 * s} frequencies")
    ratios = []
    err = 0.0
    for row in xis:
        vals = []
        for nodes in (M, 2 * M):
            prod = np.ones(nodes)
            for xi in row:
                prod *= np.abs(alpha_on_grid(k, r, float(xi), nodes))
            vals.append(math.fsum(prod) / nodes)
        err = max(err, abs(vals[1] - vals[0]) / exact)
        ratios.append(vals[1] / exact)
    return LinearPhaseReport(max(ratios), err, tuple(ratios), exact, 2 * M)


# ---------------------------------------------------------------------------
# Vinogradov systems


def _vinogradov_counts(s: int, k: int, N: int) -> list[int]:
    """Multiplicities of the power-sum vectors ``(sum n_i, ..., sum n_i^k)`` over ``[1..N]^s``."""
    radices = [s * N**l + 1 for l in range(1, k + 1)]
    span = math.prod(radices)
    n = np.arange(1, N + 1, dtype=np.int64)
    if span < 2**62:
        weights = np.cumprod([1] + radices[:-1]).astype(np.int64)
        step = sum(weights[l] * n ** (l + 1) for l in range(k))
        keys = np.zeros(1, dtype=np.int64)
        counts = np.ones(1, dtype=np.int64)
        for _ in range(s):
            keys = np.add.outer(keys, step).ravel()
            counts = np.repeat(counts, N)
            keys, inv = np.unique(keys, return_inverse=True)
            counts = np.bincount(inv.ravel(), weights=counts).astype(np.int64)
        return [int(c) for c in counts]
    tally = Counter({(0,) * k: 1})
    for _ in range(s):
        nxt: Counter = Counter()
        for key, c in tally.items():
            for x in range(1, N + 1):
                nxt[tuple(key[l] + x ** (l + 1) for l in range(k))] += c
        tally = nxt
    return list(tally.values())


def vinogradov_J(s: int, k: int, N: int, method: str = "series") -> int:
    """``J_{s,k}(N)``: pairs ``n, m in [1..N]^s`` with equal power sums of every order ``1..k``."""
    if s < 1 or k < 1 or N < 1:
        raise ValueError("need s, k, N >= 1")
    if s == 1:
        return N
    if method == "brute":
        check_work(float(N) ** (2 * s) * PYTHON_STEP, "Vinogradov brute force")
        tuples = list(product(range(1, N + 1), repeat=s))
        sig = [tuple(sum(x**l for x in t) for l in range(1, k + 1)) for t in tuples]
        return sum(1 for a in sig for b in sig if a == b)
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    # the number of distinct keys is at most N^s, and each step is a sort of that size
    check_work(float(N) ** s * s * max(1.0, math.log2(N**s)), "Vinogradov tuple tally")
    return sum(c * c for c in _vinogradov_counts(s, k, N))


def vmc_bound(s: int, k: int, N: int) -> float:
    return float(N) ** s + float(N) ** (2 * s - k * (k + 1) / 2)


@dataclass(frozen=True)
class BridgeReport:
    degree: int
    s: int
    r: int
    lhs: int
    J: int
    ratio: float
    symmetric_lhs: int
    symmetric_ratio: float
    threshold: float

    @property
    def passes(self) -> bool:
        return self.ratio <= self.threshold


def vaughan_bridge_check(k: int, r: int, s: int, threshold: float = 4.0) -> BridgeReport:
    """Ratio of ``int_0^1 |sum_{n<=r} e(n^k t)|^{2s} dt`` to ``r^{k(k-1)/2} J_{s,k}(r)``.

    Both sides range over ``1 <= n <= r``.  The ratio for the two-sided sum
    over ``|n| <= r`` is reported alongside.
    """
    lhs = mean_value_exact(k, r, s, "positive").exact_count
    sym = mean_value_exact(k, r, s, "symmetric").exact_count
    J = vinogradov_J(s, k, r)
    rhs = float(r) ** (k * (k - 1) / 2) * J
    return BridgeReport(k, s, r, lhs, J, lhs / rhs, sym, sym / rhs, threshold)
