"""Exact sphere multipliers, the circle-method main term, error terms and arc splits.

Multipliers are normalized by ``2^d c_{d,k} r^{d-k}``, the Gelfand–Leray
volume of the radius-r sphere, so that the main term at the origin is the
singular series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._limits import check_work
from .exp_sums import alpha_on_grid, mean_value_exact, units
from .gauss_sums import gauss_sums_all_m
from .lattice_sphere import SphereSpec, points_array
from .surface_measure import SurfaceSpec, bump, sigma_fourier, surface_mass

TWO_PI = 2.0 * math.pi
DEFAULT_RESOLUTION = 512


def normalization(spec: SphereSpec) -> float:
    """``2^d c_{d,k} r^{d-k}``."""
    r = spec.radius
    return surface_mass(spec.degree, spec.dimension) * r ** (spec.dimension - spec.degree)


def centered(theta: np.ndarray) -> np.ndarray:
    """Representative of ``theta`` mod 1 in ``[-1/2, 1/2)``."""
    return theta - np.floor(theta + 0.5)


def frequency_sample(d: int, M: int, n_random: int = 256, seed: int = 0, full_limit: int = 4096) -> tuple[np.ndarray, str]:
    """Frequency indices in ``(Z/M)^d`` closed under negation.

    The whole grid is used when it has at most ``full_limit`` points;
    otherwise axis lines, the main diagonals and seeded random points.
    """
    if M < 1:
        raise ValueError("grid modulus must be positive")
    if M**d <= full_limit:
        idx = np.array(np.meshgrid(*[np.arange(M)] * d, indexing="ij")).reshape(d, -1).T
        return idx.astype(np.int64), "full"
    rows = []
    line = np.arange(M)
    for i in range(d):
        pts = np.zeros((M, d), dtype=np.int64)
        pts[:, i] = line
        rows.append(pts)
    for signs in ([1] * d, [1, -1] * (d // 2) + [1] * (d % 2)):
        rows.append(np.outer(line, signs) % M)
    rng = np.random.default_rng(seed)
    rows.append(rng.integers(0, M, size=(n_random, d)))
    idx = np.concatenate(rows) % M
    idx = np.unique(np.concatenate([idx, (-idx) % M]), axis=0)
    return idx.astype(np.int64), f"axes+diagonals+random({n_random},seed={seed})"


@dataclass
class MultiplierGrid:
    degree: int
    dimension: int
    M: int
    indices: np.ndarray
    values: np.ndarray
    scheme: str = "full"

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64) % self.M
        self.values = np.asarray(self.values, dtype=complex)
        if self.indices.shape != (len(self.values), self.dimension):
            raise ValueError("indices and values disagree in shape")

    @property
    def thetas(self) -> np.ndarray:
        return centered(self.indices / self.M)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0

    def value_at(self, m: Sequence[int]) -> complex:
        key = tuple(int(x) % self.M for x in m)
        hit = np.flatnonzero((self.indices == np.array(key)).all(axis=1))
        if len(hit) == 0:
            raise KeyError(f"frequency {key} not in the sample")
        return complex(self.values[hit[0]])

    def conjugate_symmetry_defect(self) -> float:
        lookup = {tuple(row): j for j, row in enumerate(self.indices)}
        worst = 0.0
        for j, row in enumerate(self.indices):
            partner = lookup.get(tuple((-row) % self.M))
            if partner is not None:
                worst = max(worst, abs(self.values[partner] - np.conj(self.values[j])))
        return worst

    def __sub__(self, other: "MultiplierGrid") -> "MultiplierGrid":
        if self.M != other.M or not np.array_equal(self.indices, other.indices):
            raise ValueError("grids differ")
        return MultiplierGrid(self.degree, self.dimension, self.M, self.indices, self.values - other.values, self.scheme)


def _grid_for(spec: SphereSpec, M: int, indices) -> tuple[np.ndarray, str]:
    if indices is None:
        return frequency_sample(spec.dimension, M)
    return np.asarray(indices, dtype=np.int64) % M, "custom"


def exact_multiplier(spec: SphereSpec, M: int, indices=None, normalize: bool = True) -> MultiplierGrid:
    """``a_r(m/M)`` (optionally normalized) at the sampled frequencies.

    Phases ``n . m mod M`` are reduced exactly in integers.
    """
    idx, scheme = _grid_for(spec, M, indices)
    pts = points_array(spec)
    check_work(float(len(pts)) * len(idx) * spec.dimension, "exact multiplier")
    vals = np.zeros(len(idx), dtype=complex)
    chunk = max(1, 2_000_000 // max(1, len(pts)))
    for s in range(0, len(idx), chunk):
        ph = (pts @ idx[s : s + chunk].T) % M
        vals[s : s + chunk] = np.exp(2j * math.pi * ph / M).sum(axis=0)
    if normalize:
        vals = vals / normalization(spec)
    return MultiplierGrid(spec.degree, spec.dimension, M, idx, vals, scheme)


def default_Q(spec: SphereSpec) -> int:
    return max(1, math.isqrt(max(1, int(math.floor(spec.radius)))))


def main_term_values(spec: SphereSpec, thetas: np.ndarray, Q: int, resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """``sum_{q<=Q} sum_{a in U(q)} e(-a lam/q) G(a,q;m) Psi(q theta - m) sigma_r(theta - m/q)``.

    For each ``q`` only ``m = round(q theta)`` can meet the support of ``Psi``.
    """
    k, d, lam = spec.degree, spec.dimension, spec.power_value
    if k % 2:
        raise ValueError("the Gauss-sum main term needs an even degree (|n|^k = n^k)")
    if Q < 1:
        raise ValueError("Q must be >= 1")
    thetas = centered(np.atleast_2d(np.asarray(thetas, dtype=float)))
    surf = SurfaceSpec(k, d, spec.radius if spec.radius > 0 else 1.0, resolution)
    check_work(float(Q) ** 2 * len(thetas) * d, "main-term assembly")
    total = np.zeros(len(thetas), dtype=complex)
    for q in range(1, Q + 1):
        m = np.rint(q * thetas).astype(np.int64)
        psi = bump(q * thetas - m)
        live = np.flatnonzero(psi != 0)
        if len(live) == 0:
            continue
        xi = thetas[live] - m[live] / q
        worst = float(np.max(np.linalg.norm(xi, axis=1)))
        if spec.radius > 0 and not surf.is_trusted(np.array([worst])):
            raise ValueError(
                f"surface transform requested at |xi| r = {worst * spec.radius:.3g}, "
                f"beyond the trusted range {surf.trusted_frequency * spec.radius:.3g}; raise the resolution"
            )
        sig = sigma_fourier(surf, xi) if spec.radius > 0 else np.ones(len(live), dtype=complex)
        arith = np.zeros(len(live), dtype=complex)
        mm = m[live] % q
        for a in units(q):
            g = gauss_sums_all_m(a, q, k)
            arith += np.exp(-2j * math.pi * ((a * lam) % q) / q) * np.prod(g[mm], axis=1)
        total[live] += arith * psi[live] * sig
    return total


def main_term_multiplier(
    spec: SphereSpec, M: int, Q: int | None = None, indices=None, resolution: int = DEFAULT_RESOLUTION
) -> MultiplierGrid:
    idx, scheme = _grid_for(spec, M, indices)
    Q = default_Q(spec) if Q is None else Q
    vals = main_term_values(spec, idx / M, Q, resolution)
    return MultiplierGrid(spec.degree, spec.dimension, M, idx, vals, scheme)


@dataclass
class ErrorReport:
    grid: MultiplierGrid
    sup_norm: float
    Q: int
    exact: MultiplierGrid
    main: MultiplierGrid


def error_multiplier(
    spec: SphereSpec, M: int, Q: int | None = None, indices=None, resolution: int = DEFAULT_RESOLUTION
) -> ErrorReport:
    """Normalized ``a_r`` minus the main term, with its sampled sup norm."""
    Q = default_Q(spec) if Q is None else Q
    exact = exact_multiplier(spec, M, indices)
    main = main_term_multiplier(spec, M, Q, exact.indices, resolution)
    err = exact - main
    return ErrorReport(err, err.sup_norm(), Q, exact, main)


@dataclass
class KappaFit:
    kappa_emp: float
    slope: float
    radii: tuple[float, ...]
    sup_errors: tuple[float, ...]
    kappa_dyadic: float | None = None
    kappa_single: float | None = None
    rows: list[dict] = field(default_factory=list)

    @property
    def positive(self) -> bool:
        return self.kappa_emp > 0


def kappa_dyadic(k: int, d: int, gamma: float) -> float:
    return min(d * gamma - k, d / k - (k + 2))


def kappa_single(k: int, d: int, gamma: float, s: int) -> float:
    return min((d - 2 * s) * gamma, k + 2 - d / k)


def fit_kappa(radii: Sequence[float], sups: Sequence[float]) -> float:
    """``-slope`` of ``log sup`` against ``log r``."""
    if len(radii) < 4:
        raise ValueError("need at least 4 radii for a decay fit")
    if min(sups) <= 0:
        raise ValueError("degenerate fit: a sup norm vanished")
    return -float(np.polyfit(np.log(radii), np.log(sups), 1)[0])


def decay_fit(
    specs: Sequence[SphereSpec],
    M: int = 64,
    Q: int | None = None,
    indices=None,
    gamma: float = 0.5,
    s: int | None = None,
    resolution: int = DEFAULT_RESOLUTION,
) -> KappaFit:
    """Empirical ``kappa`` from the sampled error sup norms along a radius sequence.

    ``Q=None`` uses ``floor(r^{1/2})`` for each radius.
    """
    rows, radii, sups = [], [], []
    for spec in specs:
        rep = error_multiplier(spec, M, Q, indices, resolution)
        radii.append(spec.radius)
        sups.append(rep.sup_norm)
        rows.append({"lambda": spec.power_value, "r": spec.radius, "sup_error": rep.sup_norm, "Q": rep.Q})
    kappa = fit_kappa(radii, sups)
    k, d = specs[0].degree, specs[0].dimension
    fit = KappaFit(kappa, -kappa, tuple(radii), tuple(sups), kappa_dyadic(k, d, gamma),
                   kappa_single(k, d, gamma, s) if s is not None else None, rows)
    for row in fit.rows:
        row["kappa_theory_gamma"] = fit.kappa_dyadic
    return fit


# ---------------------------------------------------------------------------
# arcs


@dataclass(frozen=True)
class ArcDissection:
    """Major arcs ``|t - a/q| <= q^{-1} r^{nu - k}`` for ``q <= Q_major``."""

    Q_major: int
    nu: float = 1.0

    def __post_init__(self):
        if self.Q_major < 1:
            raise ValueError("Q_major must be >= 1 (empty major arcs are not allowed)")

    def half_width(self, q: int, r: float, k: int) -> float:
        return r ** (self.nu - k) / q

    def centers(self) -> list[Fraction]:
        return sorted({Fraction(a, q) for q in range(1, self.Q_major + 1) for a in units(q)})

    def check_disjoint(self, r: float, k: int) -> None:
        cs = self.centers()
        if len(cs) == 1:
            return
        ring = cs + [cs[0] + 1]
        for x, y in zip(ring, ring[1:]):
            gap = float(y - x)
            reach = self.half_width(x.denominator, r, k) + self.half_width(y.denominator, r, k)
            if reach >= gap:
                raise ValueError(f"major arcs around {x} and {y % 1} overlap for r={r:.6g}")

    def major_mask(self, t: np.ndarray, r: float, k: int) -> np.ndarray:
        mask = np.zeros(len(t), dtype=bool)
        for c in self.centers():
            dist = np.abs(centered(t - float(c)))
            mask |= dist <= self.half_width(c.denominator, r, k)
        return mask

    def describe(self) -> dict:
        return {"Q_major": self.Q_major, "nu": self.nu}


def default_dissection(spec: SphereSpec) -> ArcDissection:
    return ArcDissection(default_Q(spec), 1.0)


def arc_nodes(spec: SphereSpec) -> int:
    return 2 * (spec.dimension + 1) * spec.power_value + 1


def _integrand(spec: SphereSpec, theta, M: int) -> tuple[np.ndarray, list[np.ndarray]]:
    R = spec.cube_radius
    j = np.arange(M)
    factors = [alpha_on_grid(spec.degree, R, float(th), M) for th in theta]
    vals = np.exp(-2j * math.pi * ((spec.power_value * j) % M) / M)
    for f in factors:
        vals = vals * f
    return vals, factors


@dataclass(frozen=True)
class ArcSplit:
    major: complex
    minor: complex
    nodes: int
    major_nodes: int


def arc_split(spec: SphereSpec, dissection: ArcDissection, theta, M: int | None = None) -> ArcSplit:
    """``a_r(theta)`` split by whether each quadrature node lies on a major arc."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.dimension,):
        raise ValueError(f"theta must have {spec.dimension} components")
    dissection.check_disjoint(spec.radius, spec.degree)
    M = arc_nodes(spec) if M is None else M
    if M < arc_nodes(spec):
        raise ValueError(f"need at least {arc_nodes(spec)} nodes")
    check_work(float(M) * spec.dimension * 20, "arc quadrature")
    vals, _ = _integrand(spec, theta, M)
    mask = dissection.major_mask(np.arange(M) / M, spec.radius, spec.degree)
    major = complex(math.fsum(vals.real[mask]) / M, math.fsum(vals.imag[mask]) / M)
    minor = complex(math.fsum(vals.real[~mask]) / M, math.fsum(vals.imag[~mask]) / M)
    return ArcSplit(major, minor, M, int(mask.sum()))


@dataclass
class MinorTrace:
    rows: list[dict]
    slope: float | None
    target: float | None
    holder_ok: bool


def minor_arc_l2_trace(
    specs: Sequence[SphereSpec],
    s: int,
    thetas: np.ndarray,
    dissection: ArcDissection | None = None,
    gamma: float | None = None,
) -> MinorTrace:
    """Sampled ``sup |a_r^minor| / (2^d c r^{d-k})`` along a radius sequence.

    Each row also checks the Hölder bound
    ``|a^minor(theta)| <= sup_minor prod_{i > 2s'} |alpha| * int |alpha(t, 0)|^{2s'}``
    with ``s' = min(s, d // 2)``, which is exact at the quadrature level.
    """
    rows = []
    holder_ok = True
    for spec in specs:
        diss = dissection or default_dissection(spec)
        diss.check_disjoint(spec.radius, spec.degree)
        M = arc_nodes(spec)
        mask = diss.major_mask(np.arange(M) / M, spec.radius, spec.degree)
        sh = min(s, spec.dimension // 2)
        mv = mean_value_exact(spec.degree, spec.cube_radius, sh).exact_count if sh >= 1 else 1
        sup_minor, worst_slack = 0.0, math.inf
        for th in np.atleast_2d(thetas):
            vals, factors = _integrand(spec, th, M)
            minor = abs(vals[~mask].sum()) / M
            rest = np.ones(M)
            for f in factors[2 * sh :]:
                rest = rest * np.abs(f)
            bound = (rest[~mask].max() if (~mask).any() else 0.0) * mv
            worst_slack = min(worst_slack, bound - minor)
            sup_minor = max(sup_minor, minor)
        ok = worst_slack >= -1e-9 * max(1.0, mv)
        holder_ok &= ok
        rows.append({
            "lambda": spec.power_value,
            "r": spec.radius,
            "sup_minor": float(sup_minor / normalization(spec)),
            "holder_ok": bool(ok),
        })
    slope = None
    pos = [(r["r"], r["sup_minor"]) for r in rows if r["sup_minor"] > 0]
    if len(pos) >= 2:
        slope = float(np.polyfit(np.log([p[0] for p in pos]), np.log([p[1] for p in pos]), 1)[0])
    d = specs[0].dimension
    target = -(d - 2 * s) * gamma if gamma is not None else None
    return MinorTrace(rows, slope, target, holder_ok)
