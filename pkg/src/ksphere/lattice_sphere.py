"""Integer points on arithmetic k-spheres.

A k-sphere of power value ``lam`` in ``d`` dimensions is the finite set
``{n in Z^d : sum |n_i|^k == lam}``; the radius is ``lam ** (1/k)``.  Radii are
always keyed by the integer ``lam`` so no floating point ever decides
membership.

Three independent counting routes are provided:

* ``brute``  exhaustive walk over sorted representatives
  ``a_1 >= a_2 >= ... >= a_d >= 0``, each weighted by the size of its
  sign/permutation orbit;
* ``series`` the d-th power of the one-dimensional generating series;
* ``mitm``   meet in the middle over sorted partial power sums of the two
  coordinate halves.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Iterable, Sequence

import numpy as np

from ._limits import POINT_LIMIT, PYTHON_STEP, WorkBoundExceeded, check_work, work_bound

METHODS = ("brute", "series", "mitm")
INT64_SAFE = 2**62


def integer_root(n: int, k: int) -> int:
    """Largest integer ``x >= 0`` with ``x**k <= n``."""
    if n < 0:
        raise ValueError("integer_root needs n >= 0")
    if n < 2:
        return n
    x = int(round(n ** (1.0 / k)))
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def _check_degree_dimension(k: int, d: int) -> None:
    if int(k) != k or k < 2:
        raise ValueError(f"degree k must be an integer >= 2, got {k}")
    if int(d) != d or d < 1:
        raise ValueError(f"dimension d must be a positive integer, got {d}")


@dataclass(frozen=True)
class SphereSpec:
    degree: int
    dimension: int
    power_value: int

    def __post_init__(self):
        _check_degree_dimension(self.degree, self.dimension)
        if int(self.power_value) != self.power_value or self.power_value < 0:
            raise ValueError(f"power value must be a nonnegative integer, got {self.power_value}")

    @property
    def radius(self) -> float:
        return self.power_value ** (1.0 / self.degree)

    @property
    def cube_radius(self) -> int:
        """Largest coordinate magnitude a point of the sphere can have."""
        return integer_root(self.power_value, self.degree)


# ---------------------------------------------------------------------------
# generating series


def _frozen_object_array(values) -> np.ndarray:
    arr = np.empty(len(values), dtype=object)
    arr[:] = [int(v) for v in values]
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class CoefficientSeries:
    """Exact nonnegative integer coefficients ``coeffs[0..cutoff]``."""

    cutoff: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")
        if len(self.coeffs) != self.cutoff + 1:
            raise ValueError(
                f"expected {self.cutoff + 1} coefficients, got {len(self.coeffs)}"
            )
        if not isinstance(self.coeffs, np.ndarray) or self.coeffs.dtype != object or self.coeffs.flags.writeable:
            object.__setattr__(self, "coeffs", _frozen_object_array(self.coeffs))
        if any(c < 0 for c in self.coeffs):
            raise ValueError("coefficients must be nonnegative")

    def __getitem__(self, m: int) -> int:
        return self.coeffs[m]

    def __len__(self) -> int:
        return self.cutoff + 1

    def to_list(self) -> list[int]:
        return [int(c) for c in self.coeffs]

    def total(self) -> int:
        return sum(self.to_list())

    def nonzero(self) -> list[int]:
        return [m for m, c in enumerate(self.coeffs) if c]


def one_dim_series(k: int, cutoff: int, radius: int | None = None) -> CoefficientSeries:
    """Coefficients of ``sum_n x^{|n|^k}``, truncated at ``cutoff``.

    ``coeffs[m]`` is the number of integers ``n`` with ``|n|^k == m`` (and
    ``|n| <= radius`` when a radius is given).
    """
    if k < 2:
        raise ValueError("degree must be >= 2")
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    top = integer_root(cutoff, k)
    if radius is not None:
        top = min(top, radius)
    coeffs = [0] * (cutoff + 1)
    coeffs[0] = 1
    for n in range(1, top + 1):
        coeffs[n**k] += 2
    return CoefficientSeries(cutoff, _frozen_object_array(coeffs))


def _convolve_arrays(a: np.ndarray, b: np.ndarray, cutoff: int) -> np.ndarray:
    # loop over the sparser operand; int64 only when the total mass bound rules out overflow
    nz_a = np.flatnonzero(a != 0)
    nz_b = np.flatnonzero(b != 0)
    if len(nz_a) < len(nz_b):
        a, b, nz_b = b, a, nz_a
    fast = int(sum(int(x) for x in a)) * int(sum(int(x) for x in b)) < INT64_SAFE
    dtype = np.int64 if fast else object
    src = np.asarray(a, dtype=dtype)
    out = np.zeros(cutoff + 1, dtype=dtype)
    if not fast:
        out[:] = 0
    for j in nz_b:
        j = int(j)
        if j > cutoff:
            continue
        coef = int(b[j])
        out[j:] += coef * src[: cutoff + 1 - j]
    return out


def convolve_series(a: CoefficientSeries, b: CoefficientSeries) -> CoefficientSeries:
    """Cauchy product truncated at the common cutoff."""
    if a.cutoff != b.cutoff:
        raise ValueError(f"cutoff mismatch: {a.cutoff} != {b.cutoff}")
    out = _convolve_arrays(a.coeffs, b.coeffs, a.cutoff)
    return CoefficientSeries(a.cutoff, _frozen_object_array(out))


def series_power(base: CoefficientSeries, exponent: int) -> CoefficientSeries:
    """``exponent``-fold Cauchy product of ``base`` with itself."""
    if exponent < 0:
        raise ValueError("exponent must be >= 0")
    delta = [0] * (base.cutoff + 1)
    delta[0] = 1
    result = np.array(delta, dtype=object)
    for _ in range(exponent):
        result = _convolve_arrays(result, base.coeffs, base.cutoff)
    return CoefficientSeries(base.cutoff, _frozen_object_array(result))


# ---------------------------------------------------------------------------
# counting


def _orbit_brute(k: int, d: int, lam_max: int, target: int | None, bound: int) -> list[int]:
    """Tally orbit weights of sorted nonnegative representatives.

    With ``target`` set only representatives summing exactly to it are
    counted (the last coordinate is solved for); otherwise every power value
    up to ``lam_max`` is tallied.
    """
    top = integer_root(lam_max, k)
    powers = [i**k for i in range(top + 1)]
    root_of = {p: i for i, p in enumerate(powers)}
    hist = [0] * (lam_max + 1)
    fact_d = math.factorial(d)
    visited = 0

    def leaf(total, signs, denom):
        hist[total] += fact_d * signs // denom

    def rec(pos, cap, prev, run, total, signs, denom):
        nonlocal visited
        visited += 1
        if visited * PYTHON_STEP > bound:
            raise WorkBoundExceeded(
                f"brute enumeration for k={k}, d={d}, lambda<={lam_max} exceeds work bound {bound}"
            )
        if pos == d - 1:
            if target is not None:
                rest = target - total
                a = root_of.get(rest)
                if a is None or a > cap:
                    return
                new_run = run + 1 if a == prev else 1
                leaf(rest + total, signs * (2 if a else 1), denom * new_run)
                return
            room = lam_max - total
            for a in range(min(cap, integer_root(room, k)), -1, -1):
                new_run = run + 1 if a == prev else 1
                leaf(total + powers[a], signs * (2 if a else 1), denom * new_run)
            return
        room = (target if target is not None else lam_max) - total
        hi = min(cap, integer_root(room, k))
        for a in range(hi, -1, -1):
            p = powers[a]
            if target is not None and total + p + (d - pos - 1) * p < target:
                # remaining coordinates are at most a, so the sum can no longer reach the target
                break
            new_run = run + 1 if a == prev else 1
            rec(pos + 1, a, a, new_run, total + p, signs * (2 if a else 1), denom * new_run)

    rec(0, top, -1, 0, 0, 1, 1)
    return hist


def _half_sums(k: int, h: int, top: int, lam_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Sorted distinct partial sums ``sum_{i<h} |n_i|^k <= lam_max`` with multiplicities."""
    if h == 0:
        return np.array([0], dtype=np.int64), np.array([1], dtype=np.int64)
    vals = np.abs(np.arange(-top, top + 1, dtype=np.int64)) ** k
    vals = vals[vals <= lam_max]
    sums = np.zeros(1, dtype=np.int64)
    for _ in range(h):
        sums = np.add.outer(sums, vals).ravel()
        sums = sums[sums <= lam_max]
    keys, counts = np.unique(sums, return_counts=True)
    return keys, counts.astype(np.int64)


def _merge_count(lk, lc, rk, rc, lam: int) -> int:
    need = lam - lk
    idx = np.searchsorted(rk, need)
    idx_c = np.minimum(idx, len(rk) - 1)
    hit = (idx < len(rk)) & (rk[idx_c] == need)
    return sum(int(a) * int(b) for a, b in zip(lc[hit], rc[idx_c[hit]]))


def _mitm_tables(k: int, d: int, lam_max: int, bound: int):
    top = integer_root(lam_max, k)
    h1 = (d + 1) // 2
    check_work(float(2 * top + 1) ** h1, f"mitm tables for k={k}, d={d}, lambda<={lam_max}", bound)
    left = _half_sums(k, h1, top, lam_max)
    right = left if d - h1 == h1 else _half_sums(k, d - h1, top, lam_max)
    return left, right


def count_points_range(k: int, d: int, lam_max: int, method: str = "series") -> list[int]:
    """``N(lam)`` for every ``lam = 0..lam_max`` (a single shared sweep)."""
    _check_degree_dimension(k, d)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    bound = work_bound()
    if method == "series":
        top = integer_root(lam_max, k)
        check_work(float(d) * (top + 1) * (lam_max + 1), "series sweep", bound)
        return series_power(one_dim_series(k, lam_max), d).to_list()
    if method == "brute":
        return _orbit_brute(k, d, lam_max, None, bound)
    (lk, lc), (rk, rc) = _mitm_tables(k, d, lam_max, bound)
    return [_merge_count(lk, lc, rk, rc, lam) for lam in range(lam_max + 1)]


def count_points(spec: SphereSpec, method: str = "series") -> int:
    """Number of lattice points ``N`` on the sphere (an exact Python int)."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    k, d, lam = spec.degree, spec.dimension, spec.power_value
    bound = work_bound()
    if method == "brute":
        return _orbit_brute(k, d, lam, lam, bound)[lam]
    if method == "series":
        top = integer_root(lam, k)
        check_work(float(d) * (top + 1) * (lam + 1), "series count", bound)
        return int(series_power(one_dim_series(k, lam), d)[lam])
    (lk, lc), (rk, rc) = _mitm_tables(k, d, lam, bound)
    return _merge_count(lk, lc, rk, rc, lam)


def _representatives(k: int, d: int, lam: int) -> Iterable[tuple[int, ...]]:
    """Sorted nonnegative tuples ``a_1 >= ... >= a_d >= 0`` with power sum ``lam``."""
    top = integer_root(lam, k)

    def rec(prefix, cap, total):
        pos = len(prefix)
        if pos == d - 1:
            rest = lam - total
            a = integer_root(rest, k)
            if a**k == rest and a <= cap:
                yield prefix + (a,)
            return
        for a in range(min(cap, integer_root(lam - total, k)), -1, -1):
            p = a**k
            if total + (d - pos) * p < lam:
                break
            yield from rec(prefix + (a,), a, total + p)

    yield from rec((), top, 0)


def orbit(rep: Sequence[int]) -> set[tuple[int, ...]]:
    """All sign flips and coordinate permutations of ``rep``."""
    out = set()
    for perm in set(permutations(rep)):
        choices = [(x, -x) if x else (0,) for x in perm]
        out.update(product(*choices))
    return out


def enumerate_points(spec: SphereSpec, limit: int | None = None) -> list[tuple[int, ...]]:
    """Every lattice point on the sphere, in lexicographic order."""
    cap = POINT_LIMIT if limit is None else limit
    expected = count_points(spec, "series")
    if expected > cap:
        raise WorkBoundExceeded(
            f"sphere k={spec.degree}, d={spec.dimension}, lambda={spec.power_value} "
            f"has {expected} points, above the memory bound {cap}"
        )
    pts: set[tuple[int, ...]] = set()
    for rep in _representatives(spec.degree, spec.dimension, spec.power_value):
        pts |= orbit(rep)
    return sorted(pts)


def points_array(spec: SphereSpec, limit: int | None = None) -> np.ndarray:
    """The enumerated points as an ``(N, d)`` int64 array."""
    pts = enumerate_points(spec, limit)
    if not pts:
        return np.zeros((0, spec.dimension), dtype=np.int64)
    return np.array(pts, dtype=np.int64)


def is_acceptable(k: int, d: int, lam: int) -> bool:
    """Whether ``lam`` is a sum of ``d`` k-th powers (i.e. the sphere is nonempty)."""
    if lam < 0:
        return False
    if lam == 0:
        return True
    bound = work_bound()
    steps = 0

    def rec(left, parts, cap):
        nonlocal steps
        steps += 1
        if steps * PYTHON_STEP > bound:
            raise WorkBoundExceeded(f"representability search for lambda={lam} exceeds work bound")
        if left == 0:
            return True
        if parts == 0:
            return False
        a = min(cap, integer_root(left, k))
        while a > 0:
            p = a**k
            if parts * p < left:
                return False
            if rec(left - p, parts - 1, a):
                return True
            a -= 1
        return False

    return rec(lam, d, integer_root(lam, k))


# ---------------------------------------------------------------------------
# radius sequences


@dataclass(frozen=True)
class RadiusSequence:
    """Strictly increasing acceptable power values ``lam_1 < lam_2 < ...``."""

    degree: int
    dimension: int
    members: tuple[int, ...]
    label: str = "custom"
    lam_max: int | None = None

    def __post_init__(self):
        _check_degree_dimension(self.degree, self.dimension)
        members = tuple(int(m) for m in self.members)
        if any(b <= a for a, b in zip(members, members[1:])):
            raise ValueError("members must be strictly increasing")
        if members and members[0] < 1:
            raise ValueError("members must be positive power values")
        object.__setattr__(self, "members", members)
        if self.lam_max is not None and members and members[-1] > self.lam_max:
            raise ValueError("members exceed the declared bound")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def radii(self) -> list[float]:
        return [m ** (1.0 / self.degree) for m in self.members]

    def count_up_to_radius(self, radius: float) -> int:
        """``#{r in seq : r <= radius}`` compared exactly through ``r^k <= radius^k``."""
        if radius < 0:
            return 0
        lam_cap = int(math.floor(radius**self.degree * (1 + 1e-12)))
        return sum(1 for m in self.members if m <= lam_cap)

    def up_to(self, lam_max: int) -> "RadiusSequence":
        return RadiusSequence(
            self.degree, self.dimension, tuple(m for m in self.members if m <= lam_max), self.label, lam_max
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "degree": self.degree,
                "dimension": self.dimension,
                "label": self.label,
                "members": list(self.members),
                "lam_max": self.lam_max,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "RadiusSequence":
        obj = json.loads(text)
        return cls(obj["degree"], obj["dimension"], tuple(obj["members"]), obj.get("label", "custom"), obj.get("lam_max"))


def acceptable_radii(k: int, d: int, lam_max: int) -> RadiusSequence:
    """All power values ``1 <= lam <= lam_max`` whose sphere is nonempty."""
    if lam_max < 1:
        raise ValueError("lam_max must be >= 1")
    counts = count_points_range(k, d, lam_max, "series")
    return RadiusSequence(
        k, d, tuple(lam for lam in range(1, lam_max + 1) if counts[lam] > 0), "full", lam_max
    )


def first_primes(n: int) -> list[int]:
    primes: list[int] = []
    cand = 2
    while len(primes) < n:
        if all(cand % p for p in primes if p * p <= cand):
            primes.append(cand)
        cand += 1
    return primes


def superlacunary_values(v: float, lam_max: int) -> list[int]:
    """``1 + p_1 p_2 ... p_h(j)`` with ``h(j) = floor(2 ** (j ** v))`` for ``j = 1, 2, ...``."""
    out = []
    j = 1
    while True:
        h = int(math.floor(2.0 ** (j**v)))
        # the product of the first h primes exceeds 2^h, so stop once that alone is too large
        if h > lam_max.bit_length() + 1:
            break
        val = 1 + math.prod(first_primes(h))
        if val > lam_max:
            break
        out.append(val)
        j += 1
    return out


def build_sequence(
    kind: str,
    k: int,
    d: int,
    lam_max: int,
    *,
    base: float = 2.0,
    v: float = 1.5,
    members: Iterable[int] | None = None,
) -> RadiusSequence:
    """Construct a lacunary, super-lacunary or custom radius sequence.

    ``lacunary`` takes, for each ``j >= 0``, the smallest acceptable power
    value ``>= base**j``.  ``superlacunary`` uses ``1 + (product of the first
    h(j) primes)`` with ``h(j) = floor(2 ** (j ** v))``.  Members above
    ``lam_max`` or with empty spheres are dropped.
    """
    _check_degree_dimension(k, d)
    if kind == "lacunary":
        if base <= 1:
            raise ValueError("lacunary base must exceed 1")
        chosen: list[int] = []
        j = 0
        while True:
            start = math.ceil(base**j - 1e-9)
            if start > lam_max:
                break
            lam = max(start, 1)
            while lam <= lam_max and not is_acceptable(k, d, lam):
                lam += 1
            if lam <= lam_max and (not chosen or lam > chosen[-1]):
                chosen.append(lam)
            j += 1
        vals = chosen
    elif kind == "superlacunary":
        if v <= 1:
            raise ValueError("super-lacunary exponent v must exceed 1")
        vals = [lam for lam in superlacunary_values(v, lam_max) if is_acceptable(k, d, lam)]
    elif kind == "custom":
        if members is None:
            raise ValueError("custom sequences need explicit members")
        vals = sorted({int(m) for m in members if 1 <= int(m) <= lam_max})
        bad = [m for m in vals if not is_acceptable(k, d, m)]
        if bad:
            raise ValueError(f"power values with empty spheres: {bad}")
    else:
        raise ValueError(f"unknown sequence kind {kind!r}")
    if not vals:
        raise ValueError(f"{kind} sequence is empty for k={k}, d={d}, lambda<={lam_max}")
    return RadiusSequence(k, d, tuple(vals), kind, lam_max)


def counts_csv(counts: Sequence[int], start: int = 0) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lambda", "count"])
    for i, c in enumerate(counts):
        writer.writerow([start + i, int(c)])
    return buf.getvalue()
