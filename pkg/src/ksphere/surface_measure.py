"""The normalized surface measure on ``{x in R^d : sum |x_i|^k = r^k}``.

The Gelfand–Leray measure of the unit k-sphere, normalized to mass one, is the
law of ``x_i = s_i u_i^{1/k}`` where ``u ~ Dirichlet(1/k, ..., 1/k)`` and the
signs ``s_i`` are independent and uniform.  Its unnormalized total mass is
``2^d Gamma(1 + 1/k)^d / Gamma(d/k)``.

Quadrature breaks the Dirichlet vector into ``d - 1`` Beta sticks,
``v_i ~ Beta(1/k, (d - i)/k)``, and substitutes
``v = s^k / (s^k + (1 - s)^k)`` in each.  After the substitution the stick
density is ``k (1 - s)^{d-i-1} D(s)^{-(d-i+1)/k} / B(1/k, (d-i)/k)`` with
``D = s^k + (1 - s)^k > 0``, and both ``v^{1/k}`` and ``(1 - v)^{1/k}`` are
analytic in ``s``, so Gauss–Legendre converges spectrally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np
from scipy.special import betaln, gammaln

from ._limits import POINT_LIMIT, WorkBoundExceeded, check_work

TWO_PI = 2.0 * math.pi
WEIGHT_TOL = 1e-6


def gelfand_leray_constant(k: int, d: int) -> float:
    """``c_{d,k} = Gamma(1 + 1/k)^d / Gamma(d/k)``."""
    if k < 2 or int(k) != k:
        raise ValueError(f"degree must be an integer >= 2, got {k}")
    if d < 1 or int(d) != d:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    return math.exp(d * gammaln(1.0 + 1.0 / k) - gammaln(d / k))


def surface_mass(k: int, d: int) -> float:
    """Unnormalized Gelfand–Leray mass of the unit k-sphere, ``2^d c_{d,k}``."""
    return 2.0**d * gelfand_leray_constant(k, d)


@dataclass(frozen=True)
class SurfaceSpec:
    degree: int
    dimension: int
    radius: float = 1.0
    resolution: int = 64

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 2:
            raise ValueError("degree must be an integer >= 2")
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ValueError("dimension must be an integer >= 2")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.resolution < 8:
            raise ValueError(f"resolution must be >= 8, got {self.resolution}")

    @property
    def trusted_frequency(self) -> float:
        """Largest ``|xi|`` for which transforms are trusted at this resolution."""
        return self.resolution / (8.0 * self.radius)

    def is_trusted(self, xi) -> bool:
        return float(np.linalg.norm(np.atleast_1d(xi))) <= self.trusted_frequency * (1 + 1e-12)

    def with_resolution(self, n: int) -> "SurfaceSpec":
        return SurfaceSpec(self.degree, self.dimension, self.radius, n)


@lru_cache(maxsize=256)
def stick_rule(k: int, tail: int, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes for one Beta(1/k, tail/k) stick.

    Returns ``(a, b, w)`` with ``a = v^{1/k}``, ``b = (1 - v)^{1/k}`` and
    probability weights ``w``.
    """
    x, wx = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (x + 1.0)
    ws = 0.5 * wx
    D = s**k + (1.0 - s) ** k
    logdens = (
        math.log(k)
        + (tail - 1) * np.log1p(-s)
        - ((tail + 1) / k) * np.log(D)
        - betaln(1.0 / k, tail / k)
    )
    w = ws * np.exp(logdens)
    root = D ** (1.0 / k)
    a = s / root
    b = (1.0 - s) / root
    for arr in (a, b, w):
        arr.flags.writeable = False
    return a, b, w


def _abs_coordinates(k: int, d: int, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor nodes for ``(|x_1|, ..., |x_m|)`` and their weights (``m <= d``)."""
    sticks = min(m, d - 1)
    coords = []
    rho = np.ones(1)
    weight = np.ones(1)
    for i in range(1, sticks + 1):
        a, b, w = stick_rule(k, d - i, n)
        coords = [np.repeat(c, n) for c in coords]
        coords.append(np.outer(rho, a).ravel())
        weight = np.outer(weight, w).ravel()
        rho = np.outer(rho, b).ravel()
    if m == d:
        coords.append(rho)
    return np.array(coords), weight


def surface_quadrature(spec: SurfaceSpec) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``(P, d)`` on the radius-r sphere and probability weights ``(P,)``.

    All ``2^d`` sign patterns are expanded, so the rule is exactly symmetric.
    """
    k, d, n = spec.degree, spec.dimension, spec.resolution
    check_work(float(n) ** (d - 1) * 2**d * d, "surface quadrature")
    if float(n) ** (d - 1) * 2**d > POINT_LIMIT:
        raise WorkBoundExceeded(f"surface quadrature would hold more than {POINT_LIMIT} nodes; lower the resolution")
    absx, w = _abs_coordinates(k, d, d, n)
    total = math.fsum(w)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ValueError(
            f"resolution {n} too low: quadrature weights sum to {total:.9f}"
        )
    signs = np.array(list(product((1.0, -1.0), repeat=d)))
    pts = (absx.T[None, :, :] * signs[:, None, :]).reshape(-1, d) * spec.radius
    weights = np.tile(w, len(signs)) / len(signs)
    return pts, weights


def _fourier_batch(spec: SurfaceSpec, xis: np.ndarray) -> np.ndarray:
    k, d, n, r = spec.degree, spec.dimension, spec.resolution, spec.radius
    out = np.empty(len(xis))
    if k == 2:
        # rotation invariance reduces every frequency to |xi| e_1
        absx, w = _abs_coordinates(2, d, 1, n)
        R = np.linalg.norm(xis, axis=1) * r
        return np.cos(TWO_PI * np.outer(R, absx[0])) @ w
    for j, xi in enumerate(xis):
        # the measure is exchangeable, so nonzero components go first
        nz = np.sort(np.abs(xi[xi != 0]))[::-1]
        m = len(nz)
        if m == 0:
            out[j] = 1.0
            continue
        check_work(float(n) ** min(m, d - 1) * m, "surface transform")
        absx, w = _abs_coordinates(k, d, m, n)
        vals = np.ones(len(w))
        for i in range(m):
            vals *= np.cos(TWO_PI * r * nz[i] * absx[i])
        out[j] = math.fsum(vals * w)
    return out


def sigma_fourier(spec: SurfaceSpec, xi: Sequence[float] | np.ndarray) -> complex | np.ndarray:
    """``int e(x . xi) dsigma_r(x)`` for one frequency or an ``(S, d)`` batch.

    The sign-symmetric measure has a real transform, returned as complex.
    """
    arr = np.asarray(xi, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != spec.dimension:
        raise ValueError(f"frequency must have {spec.dimension} components")
    vals = _fourier_batch(spec, arr).astype(complex)
    return complex(vals[0]) if single else vals


def resolution_defect(spec: SurfaceSpec, xi) -> float:
    """``|sigma_n(xi) - sigma_{2n}(xi)|`` for the spec's resolution ``n``."""
    fine = spec.with_resolution(2 * spec.resolution)
    return float(np.max(np.abs(sigma_fourier(spec, np.atleast_2d(xi)) - sigma_fourier(fine, np.atleast_2d(xi)))))


def decay_trace(spec: SurfaceSpec, direction, R_values) -> list[dict]:
    """Rows ``(R, re, im, abs, trusted)`` of ``sigma(R * direction)``."""
    direction = np.asarray(direction, dtype=float)
    R_values = np.asarray(R_values, dtype=float)
    vals = sigma_fourier(spec, np.outer(R_values, direction))
    norm = float(np.linalg.norm(direction))
    return [
        {"R": float(R), "re": float(v.real), "im": float(v.imag), "abs": float(abs(v)),
         "trusted": bool(R * norm <= spec.trusted_frequency * (1 + 1e-12))}
        for R, v in zip(R_values, vals)
    ]


@dataclass(frozen=True)
class DecayFit:
    slope: float
    target: float
    n_peaks: int
    peaks_R: tuple[float, ...]
    peaks_abs: tuple[float, ...]
    trusted: bool


def envelope_peaks(R: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interior strict local maxima of ``vals``."""
    i = np.flatnonzero((vals[1:-1] > vals[:-2]) & (vals[1:-1] >= vals[2:])) + 1
    return R[i], vals[i]


def bnw_decay_fit(
    spec: SurfaceSpec, direction, R_range: tuple[float, float] = (4.0, 64.0), step: float = 1.0 / 64
) -> DecayFit:
    """Log-log slope of the local maxima of ``|sigma(R direction)|`` over ``R``.

    The reference exponent is ``(1 - d)/k``.
    """
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (spec.dimension,):
        raise ValueError(f"direction must have {spec.dimension} components")
    if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    lo, hi = R_range
    if not 0 < lo < hi:
        raise ValueError("need 0 < R_min < R_max")
    R = np.arange(lo, hi + step / 2, step)
    vals = np.abs(sigma_fourier(spec, np.outer(R, direction)))
    pR, pv = envelope_peaks(R, vals)
    keep = pv > 0
    pR, pv = pR[keep], pv[keep]
    if len(pR) < 2:
        raise ValueError("no usable envelope: the samples are degenerate for this direction and resolution")
    slope = float(np.polyfit(np.log(pR), np.log(pv), 1)[0])
    return DecayFit(
        slope,
        (1.0 - spec.dimension) / spec.degree,
        len(pR),
        tuple(pR.tolist()),
        tuple(pv.tolist()),
        hi * spec.radius <= spec.trusted_frequency,
    )


# ---------------------------------------------------------------------------
# bump function and blurred sphere


def _smooth_step(s: np.ndarray) -> np.ndarray:
    """``C^infinity`` step: 0 for ``s <= 0``, 1 for ``s >= 1``."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        h0 = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        h1 = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return h0 / (h0 + h1)


def bump_1d(u) -> np.ndarray:
    """Even bump equal to 1 on ``[-1/8, 1/8]`` and vanishing off ``(-1/4, 1/4)``."""
    return _smooth_step((0.25 - np.abs(np.asarray(u, dtype=float))) * 8.0)


def bump(theta) -> np.ndarray:
    """Product bump ``Psi(theta) = prod_i bump_1d(theta_i)`` over the last axis."""
    return np.prod(bump_1d(theta), axis=-1)


@lru_cache(maxsize=8)
def _bump_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    # the plateau [0, 1/8] and the ramp [1/8, 1/4] are integrated separately
    u = np.concatenate([(x + 1) / 16, 0.125 + (x + 1) / 16])
    wu = np.concatenate([w / 16, w / 16]) * bump_1d(u)
    return u, wu


def bump_hat_1d(eta, n: int = 64) -> np.ndarray:
    """``int bump_1d(u) e(-u eta) du``, real and even."""
    u, wu = _bump_rule(n)
    eta = np.asarray(eta, dtype=float)
    return 2.0 * np.cos(TWO_PI * np.multiply.outer(eta, u)) @ wu


def blurred_sphere_kernel(spec: SurfaceSpec, t: float, x) -> np.ndarray | float:
    """``(t^{-d} Psi^(./t) * dsigma_r)(x)``: the sphere measure mollified at scale ``t``.

    ``Psi^`` is the Fourier transform of the product bump; ``x`` may be one
    point or an ``(S, d)`` batch.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    pts, w = surface_quadrature(spec)
    arr = np.atleast_2d(np.asarray(x, dtype=float))
    if arr.shape[1] != spec.dimension:
        raise ValueError(f"points must have {spec.dimension} components")
    check_work(float(len(arr)) * len(pts) * spec.dimension, "blurred-sphere kernel")
    out = np.empty(len(arr))
    for j, p in enumerate(arr):
        kern = np.prod(bump_hat_1d((p - pts) / t), axis=1) / t**spec.dimension
        out[j] = math.fsum(kern * w)
    return float(out[0]) if np.asarray(x).ndim == 1 else out


def blurred_sphere_constant(spec: SurfaceSpec, t: float, xs) -> float:
    """``max value * t * (1 + |x|)^{d+1}`` over the sample points."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    vals = np.atleast_1d(blurred_sphere_kernel(spec, t, xs))
    return float(np.max(np.abs(vals) * t * (1 + np.linalg.norm(xs, axis=1)) ** (spec.dimension + 1)))
