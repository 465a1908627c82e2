"""Discrete k-spherical averages and maximal functions, density parameters and endpoint tests."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._limits import check_work
from .lattice_sphere import (
    RadiusSequence,
    SphereSpec,
    count_points,
    count_points_range,
    points_array,
)


class AliasingError(ValueError):
    """The torus is too small to emulate the integer lattice for this input."""


@dataclass
class GridFunction:
    """Real values on the torus ``(Z/M)^d``, stored as a ``(M,)*d`` array."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        shape = self.values.shape
        if len(shape) == 0 or len(set(shape)) != 1:
            raise ValueError("values must be a cube array (M, ..., M)")

    @property
    def dimension(self) -> int:
        return self.values.ndim

    @property
    def side(self) -> int:
        return self.values.shape[0]

    def norm(self, p: float) -> float:
        a = np.abs(self.values)
        if math.isinf(p):
            return float(a.max())
        return float(math.fsum((a**p).ravel()) ** (1.0 / p))

    def norm_pp(self, p: float) -> float:
        return float(math.fsum((np.abs(self.values) ** p).ravel()))

    @property
    def is_indicator(self) -> bool:
        return bool(np.all((self.values == 0) | (self.values == 1)))

    def support_radius(self) -> int:
        """Largest centered coordinate magnitude of the support (``-1`` if empty)."""
        idx = np.argwhere(self.values != 0)
        if len(idx) == 0:
            return -1
        M = self.side
        centered = np.where(idx > M // 2, idx - M, idx)
        return int(np.abs(centered).max())

    @classmethod
    def delta(cls, d: int, M: int) -> "GridFunction":
        v = np.zeros((M,) * d)
        v[(0,) * d] = 1.0
        return cls(v)

    @classmethod
    def constant(cls, d: int, M: int, c: float = 1.0) -> "GridFunction":
        return cls(np.full((M,) * d, float(c)))

    @classmethod
    def random_indicator(cls, d: int, M: int, size: int, rng: np.random.Generator) -> "GridFunction":
        if not 0 <= size <= M**d:
            raise ValueError("set size out of range")
        v = np.zeros(M**d)
        v[rng.choice(M**d, size=size, replace=False)] = 1.0
        return cls(v.reshape((M,) * d))

    def header(self) -> dict:
        return {"dims": self.dimension, "side": self.side, "dtype": "float64", "order": "row-major"}

    def to_bytes(self) -> bytes:
        return np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, header: Mapping, payload: bytes) -> "GridFunction":
        if header.get("dtype", "float64") != "float64":
            raise ValueError("only float64 payloads are supported")
        d, M = int(header["dims"]), int(header["side"])
        arr = np.frombuffer(payload, dtype="<f8")
        if arr.size != M**d:
            raise ValueError(f"payload has {arr.size} values, expected {M**d}")
        return cls(arr.reshape((M,) * d).copy())


def _sphere_kernel(spec: SphereSpec, M: int) -> np.ndarray:
    pts = points_array(spec)
    K = np.zeros((M,) * spec.dimension)
    np.add.at(K, tuple((pts % M).T), 1.0)
    return K / len(pts)


def _check_aliasing(f: GridFunction, spec: SphereSpec) -> None:
    need = 2 * (max(f.support_radius(), 0) + spec.cube_radius)
    if f.side <= need:
        raise AliasingError(
            f"side {f.side} must exceed 2 (support radius + r) = {need} to emulate Z^{f.dimension}; "
            "pass torus=True for periodic semantics"
        )


def spherical_average(
    f: GridFunction, spec: SphereSpec, method: str = "dft", torus: bool = False
) -> GridFunction:
    """``A_r f(x) = N(r)^{-1} sum_{y on the sphere} f(x - y)``.

    With ``torus=False`` the grid stands in for ``Z^d`` and wraparound is
    refused; ``torus=True`` gives the periodic average.
    """
    if spec.dimension != f.dimension:
        raise ValueError("dimension mismatch")
    if spec.power_value == 0:
        return GridFunction(f.values.copy())
    if not torus:
        _check_aliasing(f, spec)
    pts = points_array(spec)
    if len(pts) == 0:
        raise ValueError(f"the sphere lambda={spec.power_value} is empty")
    M, d = f.side, f.dimension
    if method == "direct":
        check_work(float(len(pts)) * M**d, "direct spherical average")
        out = np.zeros_like(f.values)
        for y in pts:
            out += np.roll(f.values, tuple(int(c) for c in y), axis=tuple(range(d)))
        return GridFunction(out / len(pts))
    if method != "dft":
        raise ValueError(f"unknown method {method!r}")
    check_work(float(M**d) * max(1.0, math.log2(M**d)) * 3, "FFT spherical average")
    K = _sphere_kernel(spec, M)
    out = np.fft.irfftn(np.fft.rfftn(f.values) * np.fft.rfftn(K), s=f.values.shape, axes=tuple(range(d)))
    return GridFunction(out)


def spherical_average_sparse(f: Mapping[tuple, float], spec: SphereSpec) -> dict[tuple, float]:
    """The same average for a finitely supported function on ``Z^d`` (a dict)."""
    pts = [tuple(int(c) for c in p) for p in points_array(spec)]
    if not pts:
        raise ValueError(f"the sphere lambda={spec.power_value} is empty")
    out: dict[tuple, float] = {}
    w = 1.0 / len(pts)
    for x, v in f.items():
        for y in pts:
            key = tuple(a + b for a, b in zip(x, y))
            out[key] = out.get(key, 0.0) + v * w
    return out


def maximal_function(
    f: GridFunction, seq: RadiusSequence, method: str = "dft", torus: bool = False
) -> GridFunction:
    """Pointwise ``sup_r |A_r f|`` over the sequence."""
    if not isinstance(seq, RadiusSequence):
        raise TypeError("seq must be a RadiusSequence")
    k, members = seq.degree, seq.members
    if not members:
        raise ValueError("empty radius sequence")
    out = np.zeros_like(f.values)
    for lam in members:
        avg = spherical_average(f, SphereSpec(k, f.dimension, lam), method, torus)
        np.maximum(out, np.abs(avg.values), out=out)
    return GridFunction(out)


# ---------------------------------------------------------------------------
# endpoint test


@dataclass
class DeltaTable:
    degree: int
    dimension: int
    rows: list[dict]
    slopes: dict[float, float]
    cauchy: dict[float, float]
    sup_value: float

    @property
    def critical_p(self) -> float:
        return self.dimension / (self.dimension - self.degree)


def delta_endpoint_test(
    k: int, d: int, p_list: Sequence[float], lam_list: Sequence[int]
) -> DeltaTable:
    """``||sup_{lam <= L} A_r delta||_p^p`` for each ``L`` in ``lam_list``.

    Each ``x != 0`` lies on exactly one sphere (``lam = sum |x_i|^k``), so
    ``M delta(x) = 1/N(lam)`` and the p-th power sum is
    ``sum_{1 <= lam <= L} N(lam)^{1-p}``.  ``slope`` fits ``log`` of that sum
    against ``log L``; ``cauchy`` is the relative change over the last step.
    """
    lam_list = sorted(int(x) for x in lam_list)
    if not lam_list or lam_list[0] < 1:
        raise ValueError("lambda values must be positive")
    counts = count_points_range(k, d, lam_list[-1], "series")
    nz = [(lam, c) for lam, c in enumerate(counts) if lam >= 1 and c > 0]
    rows, slopes, cauchy = [], {}, {}
    for p in p_list:
        p = float(p)
        terms = np.array([float(c) ** (1.0 - p) for _, c in nz])
        lams = np.array([lam for lam, _ in nz])
        sums = []
        for L in lam_list:
            i = np.searchsorted(lams, L, side="right")
            val = math.fsum(terms[:i]) if i else 0.0
            sums.append(val)
            rows.append({"p": p, "lambda_max": L, "norm_pp": val})
        pos = [(L, s) for L, s in zip(lam_list, sums) if s > 0]
        if len(pos) >= 2:
            slopes[p] = float(np.polyfit(np.log([a for a, _ in pos]), np.log([b for _, b in pos]), 1)[0])
        if len(sums) >= 2 and sums[-2] > 0:
            cauchy[p] = (sums[-1] - sums[-2]) / sums[-2]
    for row in rows:
        row["slope"] = slopes.get(row["p"])
    sup_value = 1.0 / min(c for _, c in nz) if nz else 0.0
    return DeltaTable(k, d, rows, slopes, cauchy, sup_value)


def delta_maximal_sparse(k: int, d: int, lam_max: int) -> dict[tuple, float]:
    """``sup_{1 <= lam <= lam_max} A_r delta`` on ``Z^d`` by sparse averaging (no counting shortcut)."""
    out: dict[tuple, float] = {}
    delta = {(0,) * d: 1.0}
    for lam in range(1, lam_max + 1):
        spec = SphereSpec(k, d, lam)
        if count_points(spec) == 0:
            continue
        for x, v in spherical_average_sparse(delta, spec).items():
            out[x] = max(out.get(x, 0.0), abs(v))
    return out


# ---------------------------------------------------------------------------
# density parameter


@dataclass(frozen=True)
class DensityFit:
    slope: float
    label: str
    grid: tuple[float, ...]
    counts: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"label": self.label, "slope": self.slope, "grid": list(self.grid), "counts": list(self.counts)}


def count_up_to(seq: RadiusSequence, radius: float) -> int:
    """``#{r in seq : r <= radius}`` via ``lam <= floor(radius^k)``."""
    lam_cap = math.floor(radius**seq.degree * (1 + 1e-12))
    return bisect_right(seq.members, lam_cap)


def density_parameter_fit(
    seq: RadiusSequence, grid: Sequence[float] | None = None, n_grid: int = 16
) -> DensityFit:
    """Least-squares slope of ``log #{r <= L}`` against ``log L`` (``L`` a radius).

    The default grid is geometric over the top octave ``[R/2, R]`` where ``R``
    is the radius bound of the sequence (its last member if none is recorded).
    """
    if not seq.members:
        raise ValueError("empty sequence")
    if grid is None:
        top = (seq.lam_max if seq.lam_max is not None else seq.members[-1]) ** (1.0 / seq.degree)
        grid = np.geomspace(top / 2, top, n_grid)
    grid = tuple(float(x) for x in grid)
    counts = tuple(count_up_to(seq, L) for L in grid)
    pairs = [(L, c) for L, c in zip(grid, counts) if c > 0 and L > 0]
    if len(pairs) < 4:
        raise ValueError("degenerate fit: need at least 4 grid points with nonzero counts")
    slope = float(np.polyfit(np.log([a for a, _ in pairs]), np.log([b for _, b in pairs]), 1)[0])
    return DensityFit(slope, seq.label, grid, counts)


# ---------------------------------------------------------------------------
# union bound and restricted weak type


@dataclass(frozen=True)
class UnionBound:
    ratio: float
    sup_l1: float
    bound: float
    members: int
    indicator: bool


def narrow_union_bound_check(f: GridFunction, seq: RadiusSequence, radius0: float) -> UnionBound:
    """``||sup_{r <= radius0} A_r f||_1`` against ``#{r <= radius0} ||f||_1`` on the torus."""
    sub = seq.up_to(math.floor(radius0**seq.degree * (1 + 1e-12)))
    if not sub.members:
        raise ValueError("no members below the radius cutoff")
    Mf = maximal_function(f, sub, torus=True)
    l1 = Mf.norm(1)
    bound = len(sub.members) * f.norm(1)
    return UnionBound(l1 / bound if bound else 0.0, l1, bound, len(sub.members), f.is_indicator)


@dataclass
class WeakTypeReport:
    p: float
    seed: int
    rows: list[dict] = field(default_factory=list)
    worst: float = 0.0
    per_side: dict[int, float] = field(default_factory=dict)

    @property
    def blow_up(self) -> bool:
        vals = [v for v in self.per_side.values() if v > 0]
        return len(vals) >= 2 and max(vals) / min(vals) > 4.0


def restricted_weak_type_probe(
    k: int,
    d: int,
    seq: RadiusSequence,
    p: float,
    set_sizes: Sequence[int],
    altitudes: Sequence[float] | None = None,
    sides: Sequence[int] = (16,),
    seed: int = 0,
    trials: int = 1,
) -> WeakTypeReport:
    """``sup alpha^p |{M 1_F > alpha}| / |F|`` over random sets ``F`` on tori.

    Altitudes default to the distinct values taken by ``M 1_F`` just below
    each level, which is where the supremum over ``alpha in (0, 1]`` is approached.
    """
    rng = np.random.default_rng(seed)
    rep = WeakTypeReport(float(p), seed)
    for M in sides:
        side_worst = 0.0
        for size in set_sizes:
            for trial in range(trials):
                F = GridFunction.random_indicator(d, M, int(size), rng)
                Mf = maximal_function(F, seq, torus=True).values.ravel()
                if altitudes is None:
                    levels = np.unique(Mf[Mf > 0])
                    # just below each attained level the count includes that level
                    alphas = levels * (1 - 1e-12)
                else:
                    alphas = np.asarray(altitudes, dtype=float)
                srt = np.sort(Mf)
                above = len(srt) - np.searchsorted(srt, alphas, side="right")
                consts = alphas**p * above / size
                best = float(consts.max()) if len(consts) else 0.0
                side_worst = max(side_worst, best)
                rep.rows.append({"side": M, "size": int(size), "trial": trial, "constant": best})
        rep.per_side[M] = side_worst
        rep.worst = max(rep.worst, side_worst)
    return rep
