"""Command-line front end: ``ksphere <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 work bound exceeded, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import difflib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import __version__
from ._io import dumps, fmt_complex, rows_to_csv
from ._limits import WorkBoundExceeded

EXIT_OK, EXIT_INVALID, EXIT_WORK, EXIT_IO = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


@dataclass
class Result:
    """A command's payload: an optional scalar line, a summary and table rows."""

    summary: dict = field(default_factory=dict)
    rows: list[dict] | None = None
    scalar: str | None = None


# ---------------------------------------------------------------------------
# argument helpers


def _number(text: str) -> float:
    """Float or exact fraction such as ``1/7``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _int(text: str) -> int:
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if value.denominator != 1:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def _list(conv: Callable[[str], Any]) -> Callable[[str], list]:
    def parse(text: str) -> list:
        parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
        return [conv(p) for p in parts]

    parse.__name__ = f"list_of_{conv.__name__}"
    return parse


def _kd(p: argparse.ArgumentParser, need_d: bool = True) -> None:
    p.add_argument("--k", type=_int, required=True, help="degree k >= 2")
    if need_d:
        p.add_argument("--d", type=_int, required=True, help="dimension d")


def _seq_args(p: argparse.ArgumentParser, default_kind: str = "lacunary") -> None:
    p.add_argument("--kind", choices=["full", "lacunary", "superlacunary", "custom"], default=default_kind)
    p.add_argument("--base", type=_number, default=2.0, help="lacunary ratio")
    p.add_argument("--v", type=_number, default=1.5, help="super-lacunary exponent")
    p.add_argument("--members", type=_list(_int), default=None, help="custom power values, comma separated")
    p.add_argument("--Lmax", type=_number, default=None, help="radius bound of the sequence")


def _build_seq(args, lam_max: int | None = None):
    from .lattice_sphere import acceptable_radii, build_sequence

    if lam_max is None:
        if args.Lmax is None:
            raise CliError("--Lmax (radius bound) is required")
        lam_max = math.floor(args.Lmax**args.k * (1 + 1e-12))
    if args.kind == "full":
        return acceptable_radii(args.k, args.d, lam_max)
    return build_sequence(args.kind, args.k, args.d, lam_max, base=args.base, v=args.v, members=args.members)


def _theta(args, d: int) -> np.ndarray:
    th = np.array(args.theta if args.theta is not None else [0.0] * d, dtype=float)
    if th.shape != (d,):
        raise CliError(f"--theta needs {d} components")
    return th


# ---------------------------------------------------------------------------
# command handlers (each delegates all mathematics to a module operation)


def cmd_count(args) -> Result:
    from .lattice_sphere import SphereSpec, count_points

    n = count_points(SphereSpec(args.k, args.d, args.lam), args.method)
    return Result({"k": args.k, "d": args.d, "lambda": args.lam, "method": args.method, "count": n}, scalar=str(n))


def cmd_enumerate(args) -> Result:
    from .lattice_sphere import SphereSpec, enumerate_points

    pts = enumerate_points(SphereSpec(args.k, args.d, args.lam), args.limit)
    rows = [{f"x{i + 1}": c for i, c in enumerate(p)} for p in pts]
    return Result({"k": args.k, "d": args.d, "lambda": args.lam, "count": len(pts)}, rows)


def cmd_series(args) -> Result:
    from .lattice_sphere import count_points_range

    counts = count_points_range(args.k, args.d, args.Lmax, args.method)
    rows = [{"lambda": lam, "count": c} for lam, c in enumerate(counts)]
    return Result({"k": args.k, "d": args.d, "lambda_max": args.Lmax}, rows)


def cmd_weyl(args) -> Result:
    from .exp_sums import WeylSumParams, weyl_sum

    t, xi = args.t % 1, args.xi % 1
    z = weyl_sum(WeylSumParams(args.N, t, xi, args.k), symmetric=args.symmetric)
    return Result({"N": args.N, "t": float(t), "xi": float(xi), "k": args.k, "value": z, "abs": abs(z)}, scalar=fmt_complex(z))


def cmd_sup_probe(args) -> Result:
    from .exp_sums import sup_hypothesis_probe

    table = sup_hypothesis_probe(args.N, args.k, args.qmax, args.xi, args.gamma, jobs=args.jobs)
    rows = []
    for row in table.rows:
        out = {k: row[k] for k in ("N", "q", "a", "xi", "abs_S")}
        for g, r, lr in zip(table.gammas, row["ratio"], row["log_ratio"]):
            out[f"ratio_gamma_{g:.6g}"] = r
            out[f"logratio_gamma_{g:.6g}"] = lr
        rows.append(out)
    summary = {"N": args.N, "k": args.k, "q_max": args.qmax, "gammas": list(table.gammas),
               "max_ratio": [table.max_ratio(i) for i in range(len(table.gammas))],
               "max_log_ratio": [table.max_ratio(i, True) for i in range(len(table.gammas))]}
    return Result(summary, rows)


def cmd_sphere_sum(args) -> Result:
    from .exp_sums import sphere_exponential_sum
    from .lattice_sphere import SphereSpec

    spec = SphereSpec(args.k, args.d, args.lam)
    z = sphere_exponential_sum(spec, _theta(args, args.d), args.method)
    return Result({"k": args.k, "d": args.d, "lambda": args.lam, "method": args.method, "value": z}, scalar=fmt_complex(z))


def cmd_meanvalue(args) -> Result:
    from .exp_sums import mean_value_exact

    rows = [mean_value_exact(args.k, r, args.s, args.support).row() for r in args.r]
    return Result({"k": args.k, "s": args.s, "support": args.support}, rows)


def cmd_vinogradov(args) -> Result:
    from .exp_sums import vinogradov_J, vmc_bound

    rows = []
    for N in args.N:
        J = vinogradov_J(args.s, args.k, N, args.method)
        rows.append({"s": args.s, "k": args.k, "N": N, "J": J, "vmc_bound": vmc_bound(args.s, args.k, N),
                     "ratio": J / vmc_bound(args.s, args.k, N)})
    scalar = str(rows[0]["J"]) if len(rows) == 1 else None
    return Result({"s": args.s, "k": args.k}, rows, scalar)


def cmd_bridge(args) -> Result:
    from .exp_sums import vaughan_bridge_check

    rows = []
    for r in args.r:
        rep = vaughan_bridge_check(args.k, r, args.s, args.threshold)
        rows.append({"k": args.k, "s": args.s, "r": r, "lhs": rep.lhs, "J": rep.J, "ratio": rep.ratio,
                     "symmetric_lhs": rep.symmetric_lhs, "symmetric_ratio": rep.symmetric_ratio, "passes": rep.passes})
    return Result({"k": args.k, "s": args.s, "threshold": args.threshold,
                   "max_ratio": max(r["ratio"] for r in rows)}, rows)


def cmd_gauss(args) -> Result:
    from .gauss_sums import GaussSumKey, gauss_sum_dd

    m = args.m if args.m is not None else [0]
    z = gauss_sum_dd(GaussSumKey(args.a, args.q, args.k, tuple(m)))
    return Result({"a": args.a, "q": args.q, "k": args.k, "m": m, "value": z, "abs": abs(z)}, scalar=fmt_complex(z))


def cmd_steckin_fit(args) -> Result:
    from .gauss_sums import steckin_fit

    fit = steckin_fit(args.k, args.d, args.qmax)
    return Result({"k": args.k, "d": args.d, "q_max": args.qmax, "slope": fit.slope, "target": fit.target,
                   "constant": fit.constant}, fit.rows())


def cmd_singular_series(args) -> Result:
    from .gauss_sums import singular_series_partial

    rep = singular_series_partial(args.k, args.d, args.lam, args.Q)
    rows = [{"Q": q + 1, "re": z.real, "im": z.imag} for q, z in enumerate(rep.partials)]
    return Result({"k": args.k, "d": args.d, "lambda": args.lam, "Q": args.Q, "value": rep.value,
                   "tail_bound": rep.tail_bound, "steckin_constant": rep.steckin_constant}, rows)


def cmd_sigma_ft(args) -> Result:
    from .surface_measure import SurfaceSpec, resolution_defect, sigma_fourier

    spec = SurfaceSpec(args.k, args.d, args.r, args.resolution)
    xi = np.array(args.xi if args.xi is not None else [0.0] * args.d, dtype=float)
    if xi.shape != (args.d,):
        raise CliError(f"--xi needs {args.d} components")
    z = sigma_fourier(spec, xi)
    summary = {"k": args.k, "d": args.d, "r": args.r, "resolution": args.resolution, "xi": xi.tolist(),
               "value": z, "trusted": spec.is_trusted(xi)}
    if args.check:
        summary["resolution_defect"] = resolution_defect(spec, xi)
    return Result(summary, scalar=fmt_complex(z) if not args.check else None)


def cmd_bnw_fit(args) -> Result:
    from .surface_measure import SurfaceSpec, bnw_decay_fit

    direction = np.array(args.direction if args.direction is not None else [1.0] + [0.0] * (args.d - 1))
    direction = direction / np.linalg.norm(direction)
    fit = bnw_decay_fit(SurfaceSpec(args.k, args.d, 1.0, args.resolution), direction, (args.Rmin, args.Rmax), args.step)
    rows = [{"R": R, "abs": v} for R, v in zip(fit.peaks_R, fit.peaks_abs)]
    return Result({"k": args.k, "d": args.d, "direction": direction.tolist(), "slope": fit.slope,
                   "target": fit.target, "peaks": fit.n_peaks, "trusted": fit.trusted}, rows)


def _grid_rows(grid) -> list[dict]:
    return [dict({f"m{i + 1}": int(c) for i, c in enumerate(idx)}, re=v.real, im=v.imag)
            for idx, v in zip(grid.indices, grid.values)]


def cmd_exact_mult(args) -> Result:
    from .approximation import exact_multiplier
    from .lattice_sphere import SphereSpec

    g = exact_multiplier(SphereSpec(args.k, args.d, args.lam), args.M)
    return Result({"k": args.k, "d": args.d, "lambda": args.lam, "M": args.M, "scheme": g.scheme,
                   "sup_norm": g.sup_norm()}, _grid_rows(g))


def cmd_main_term(args) -> Result:
    from .approximation import default_Q, main_term_multiplier
    from .lattice_sphere import SphereSpec

    spec = SphereSpec(args.k, args.d, args.lam)
    Q = args.Q or default_Q(spec)
    g = main_term_multiplier(spec, args.M, Q, resolution=args.resolution)
    return Result({"k": args.k, "d": args.d, "lambda": args.lam, "M": args.M, "Q": Q, "scheme": g.scheme,
                   "sup_norm": g.sup_norm()}, _grid_rows(g))


def _lams(args) -> list[int]:
    if args.lambdas is not None:
        return args.lambdas
    return list(range(args.lmin, args.lmax + 1))


def cmd_error_decay(args) -> Result:
    from .approximation import decay_fit
    from .lattice_sphere import SphereSpec

    specs = [SphereSpec(args.k, args.d, lam) for lam in _lams(args)]
    fit = decay_fit(specs, args.M, args.Q, gamma=args.gamma, s=args.s, resolution=args.resolution)
    return Result({"k": args.k, "d": args.d, "M": args.M, "kappa_emp": fit.kappa_emp,
                   "kappa_dyadic": fit.kappa_dyadic, "kappa_single": fit.kappa_single,
                   "positive": fit.positive}, fit.rows)


def cmd_arc_split(args) -> Result:
    from .approximation import ArcDissection, arc_split, default_Q
    from .lattice_sphere import SphereSpec

    spec = SphereSpec(args.k, args.d, args.lam)
    diss = ArcDissection(args.Qmajor if args.Qmajor is not None else default_Q(spec), args.nu)
    sp = arc_split(spec, diss, _theta(args, args.d))
    return Result({"k": args.k, "d": args.d, "lambda": args.lam, "dissection": diss.describe(),
                   "major": sp.major, "minor": sp.minor, "total": sp.major + sp.minor,
                   "nodes": sp.nodes, "major_nodes": sp.major_nodes})


def cmd_minor_trace(args) -> Result:
    from .approximation import ArcDissection, minor_arc_l2_trace
    from .lattice_sphere import SphereSpec

    specs = [SphereSpec(args.k, args.d, lam) for lam in _lams(args)]
    thetas = np.random.default_rng(args.seed).random((args.samples, args.d))
    diss = ArcDissection(args.Qmajor, args.nu) if args.Qmajor is not None else None
    tr = minor_arc_l2_trace(specs, args.s, thetas, diss, args.gamma)
    return Result({"k": args.k, "d": args.d, "s": args.s, "seed": args.seed, "slope": tr.slope,
                   "target": tr.target, "holder_ok": tr.holder_ok}, tr.rows)


def _input_function(args):
    from .maximal import GridFunction

    if args.input:
        try:
            with open(args.input + ".json") as fh:
                header = json.load(fh)
            with open(args.input, "rb") as fh:
                payload = fh.read()
        except OSError as exc:
            raise CliError(f"cannot read input grid: {exc}", EXIT_IO) from exc
        f = GridFunction.from_bytes(header, payload)
        if f.dimension != args.d:
            raise CliError("input grid dimension does not match --d")
        return f
    if args.init == "delta":
        return GridFunction.delta(args.d, args.M)
    if args.init == "constant":
        return GridFunction.constant(args.d, args.M)
    rng = np.random.default_rng(args.seed)
    if args.init == "random":
        return GridFunction(rng.random((args.M,) * args.d))
    return GridFunction.random_indicator(args.d, args.M, args.size, rng)


def _grid_stats(f) -> dict:
    return {"l1": f.norm(1), "l2": f.norm(2), "max": f.norm(math.inf)}


def _dump_grid(f, path: str | None) -> None:
    if not path:
        return
    try:
        with open(path, "wb") as fh:
            fh.write(f.to_bytes())
        with open(path + ".json", "w") as fh:
            fh.write(dumps(f.header()) + "\n")
    except OSError as exc:
        raise CliError(f"cannot write grid: {exc}", EXIT_IO) from exc


def cmd_average(args) -> Result:
    from .lattice_sphere import SphereSpec
    from .maximal import spherical_average

    f = _input_function(args)
    out = spherical_average(f, SphereSpec(args.k, args.d, args.lam), args.method, args.torus)
    _dump_grid(out, args.grid_out)
    return Result({"k": args.k, "d": args.d, "lambda": args.lam, "M": f.side, "seed": args.seed,
                   "input": _grid_stats(f), "output": _grid_stats(out)})


def cmd_maximal(args) -> Result:
    from .maximal import maximal_function

    f = _input_function(args)
    seq = _build_seq(args)
    out = maximal_function(f, seq, args.method, args.torus)
    _dump_grid(out, args.grid_out)
    return Result({"k": args.k, "d": args.d, "M": f.side, "seed": args.seed, "sequence": seq.label,
                   "members": list(seq.members), "input": _grid_stats(f), "output": _grid_stats(out)})


def cmd_delta_test(args) -> Result:
    from .maximal import delta_endpoint_test

    tab = delta_endpoint_test(args.k, args.d, args.p, args.Lmax)
    return Result({"k": args.k, "d": args.d, "critical_p": tab.critical_p,
                   "slopes": {str(p): s for p, s in tab.slopes.items()},
                   "cauchy": {str(p): c for p, c in tab.cauchy.items()}, "sup_value": tab.sup_value}, tab.rows)


def cmd_density_fit(args) -> Result:
    from .maximal import density_parameter_fit

    seq = _build_seq(args)
    fit = density_parameter_fit(seq)
    rows = [{"Lambda": L, "count": c} for L, c in zip(fit.grid, fit.counts)]
    return Result({"kind": seq.label, "k": args.k, "d": args.d, "Lmax": args.Lmax, "members": len(seq),
                   "slope": fit.slope}, rows)


def cmd_union_check(args) -> Result:
    from .maximal import GridFunction, narrow_union_bound_check

    seq = _build_seq(args)
    rng = np.random.default_rng(args.seed)
    rows = []
    for trial in range(args.trials):
        size = int(rng.integers(1, args.M**args.d + 1)) if args.size is None else args.size
        f = GridFunction.random_indicator(args.d, args.M, size, rng)
        ub = narrow_union_bound_check(f, seq, args.radius0)
        rows.append({"trial": trial, "size": size, "ratio": ub.ratio, "members": ub.members})
    return Result({"k": args.k, "d": args.d, "M": args.M, "seed": args.seed,
                   "max_ratio": max(r["ratio"] for r in rows)}, rows)


def cmd_rwt_probe(args) -> Result:
    from .maximal import restricted_weak_type_probe

    seq = _build_seq(args)
    rep = restricted_weak_type_probe(args.k, args.d, seq, args.p, args.sizes, args.alpha, args.sides,
                                     args.seed, args.trials)
    return Result({"k": args.k, "d": args.d, "p": args.p, "seed": args.seed, "worst": rep.worst,
                   "per_side": {str(k): v for k, v in rep.per_side.items()}, "blow_up": rep.blow_up}, rep.rows)


# ---------------------------------------------------------------------------
# parser


COMMANDS: dict[str, tuple[str, Callable]] = {}


def build_parser() -> argparse.ArgumentParser:
    COMMANDS.clear()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["text", "csv", "json", "both"], default=None,
                        help="output format (default: text for scalars, json otherwise)")
    common.add_argument("--output", default=None, help="write the payload here (.csv/.json added for both)")
    common.add_argument("--manifest", default=None, help="manifest path (default: OUTPUT.manifest.json)")
    common.add_argument("--config", default=None, help="key=value file; command-line flags override it")
    common.add_argument("--seed", type=_int, default=0, help="RNG seed for random inputs")
    common.add_argument("--jobs", type=_int, default=1, help="worker processes where supported")

    parser = argparse.ArgumentParser(
        prog="ksphere",
        description="Lattice points, exponential sums and discrete maximal functions on arithmetic k-spheres.",
    )
    parser.add_argument("--version", action="version", version=f"ksphere {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="<command>")

    def cmd(name, summary, handler):
        p = sub.add_parser(name, help=summary, description=summary, parents=[common])
        COMMANDS[name] = (summary, handler)
        p.set_defaults(handler=handler, command=name)
        return p

    p = cmd("count", "N(r): number of integer points n in Z^d with sum |n_i|^k = lambda", cmd_count)
    _kd(p)
    p.add_argument("--lambda", dest="lam", type=_int, required=True, help="power value lambda = r^k")
    p.add_argument("--method", choices=["series", "brute", "mitm"], default="series")

    p = cmd("enumerate", "list the points of the sphere in lexicographic order", cmd_enumerate)
    _kd(p)
    p.add_argument("--lambda", dest="lam", type=_int, required=True)
    p.add_argument("--limit", type=_int, default=None, help="refuse spheres with more points")

    p = cmd("series", "N(lambda) for every lambda <= Lmax from the generating series", cmd_series)
    _kd(p)
    p.add_argument("--Lmax", type=_int, required=True, help="largest power value")
    p.add_argument("--method", choices=["series", "brute", "mitm"], default="series")

    p = cmd("weyl", "Weyl sum sum_{n<=N} e(t n^k + xi n), or the two-sided sum with --symmetric", cmd_weyl)
    p.add_argument("--N", type=_int, required=True, help="length (or radius with --symmetric)")
    p.add_argument("--t", type=_fraction, required=True, help="t in [0,1); fractions like 1/7 are exact")
    p.add_argument("--xi", type=_fraction, default=Fraction(0))
    p.add_argument("--k", type=_int, required=True)
    p.add_argument("--symmetric", action="store_true")

    p = cmd("sup-probe", "scan |S(a/q, xi)| against N (1/q + 1/N + q/N^k)^gamma over reduced a/q", cmd_sup_probe)
    p.add_argument("--N", type=_int, required=True)
    p.add_argument("--k", type=_int, required=True)
    p.add_argument("--qmax", type=_int, required=True)
    p.add_argument("--xi", type=_list(_number), default=[0.0])
    p.add_argument("--gamma", type=_list(_number), default=None, help="exponents (default 1/(2(k-1)(k-2)), or 1/2 for k=2)")

    p = cmd("sphere-sum", "a_r(theta) = sum over the sphere of e(n . theta)", cmd_sphere_sum)
    _kd(p)
    p.add_argument("--lambda", dest="lam", type=_int, required=True)
    p.add_argument("--theta", type=_list(_number), default=None)
    p.add_argument("--method", choices=["direct", "dft_integral"], default="direct")

    p = cmd("meanvalue", "exact int_0^1 |alpha_r(t,0)|^{2s} dt as a solution count", cmd_meanvalue)
    p.add_argument("--k", type=_int, required=True)
    p.add_argument("--r", type=_list(_int), required=True, help="radii, comma separated")
    p.add_argument("--s", type=_int, required=True)
    p.add_argument("--support", choices=["symmetric", "positive"], default="symmetric")

    p = cmd("vinogradov", "J_{s,k}(N): solutions of the Vinogradov system in [1, N]", cmd_vinogradov)
    p.add_argument("--s", type=_int, required=True)
    p.add_argument("--k", type=_int, required=True)
    p.add_argument("--N", type=_list(_int), required=True)
    p.add_argument("--method", choices=["series", "brute"], default="series")

    p = cmd("bridge", "mean value over [1, r] divided by r^{k(k-1)/2} J_{s,k}(r)", cmd_bridge)
    p.add_argument("--k", type=_int, required=True)
    p.add_argument("--r", type=_list(_int), required=True)
    p.add_argument("--s", type=_int, required=True)
    p.add_argument("--threshold", type=_number, default=4.0)

    p = cmd("gauss", "normalized Gauss sum G(a, q; m), a product over the components of m", cmd_gauss)
    p.add_argument("--a", type=_int, required=True)
    p.add_argument("--q", type=_int, required=True)
    p.add_argument("--k", type=_int, required=True)
    p.add_argument("--m", type=_list(_int), default=None)

    p = cmd("steckin-fit", "slope of log max|G(a,q;m)| against log q, and the constant max q^{d/k}|G|", cmd_steckin_fit)
    _kd(p)
    p.add_argument("--qmax", type=_int, required=True)

    p = cmd("singular-series", "partial singular series sum_{q<=Q} sum_a e(-a lambda/q) G(a,q;0)^d", cmd_singular_series)
    _kd(p)
    p.add_argument("--lambda", dest="lam", type=_int, required=True)
    p.add_argument("--Q", type=_int, required=True)

    p = cmd("sigma-ft", "Fourier transform of the normalized surface measure of the k-sphere", cmd_sigma_ft)
    _kd(p)
    p.add_argument("--r", type=_number, default=1.0)
    p.add_argument("--xi", type=_list(_number), default=None)
    p.add_argument("--resolution", type=_int, default=64)
    p.add_argument("--check", action="store_true", help="also report the change at doubled resolution")

    p = cmd("bnw-fit", "decay slope of the surface-measure transform along a direction", cmd_bnw_fit)
    _kd(p)
    p.add_argument("--direction", type=_list(_number), default=None)
    p.add_argument("--Rmin", type=_number, default=4.0)
    p.add_argument("--Rmax", type=_number, default=64.0)
    p.add_argument("--step", type=_number, default=1.0 / 64)
    p.add_argument("--resolution", type=_int, default=512)

    p = cmd("exact-mult", "normalized a_r(m/M) on the sampled frequency grid", cmd_exact_mult)
    _kd(p)
    p.add_argument("--lambda", dest="lam", type=_int, required=True)
    p.add_argument("--M", type=_int, default=16)

    p = cmd("main-term", "Gauss-sum main term of the normalized multiplier on the sampled grid", cmd_main_term)
    _kd(p)
    p.add_argument("--lambda", dest="lam", type=_int, required=True)
    p.add_argument("--M", type=_int, default=16)
    p.add_argument("--Q", type=_int, default=None, help="default floor(r^{1/2})")
    p.add_argument("--resolution", type=_int, default=512)

    for name, summary, handler in (
        ("error-decay", "sampled sup of (exact - main term) along radii and the fitted decay exponent", cmd_error_decay),
        ("minor-trace", "sampled sup of the minor-arc part along radii, with the Holder check", cmd_minor_trace),
    ):
        p = cmd(name, summary, handler)
        _kd(p)
        p.add_argument("--lambdas", type=_list(_int), default=None)
        p.add_argument("--lmin", type=_int, default=16)
        p.add_argument("--lmax", type=_int, default=100)
        p.add_argument("--gamma", type=_number, default=0.5)
        if name == "error-decay":
            p.add_argument("--M", type=_int, default=64)
            p.add_argument("--Q", type=_int, default=None, help="default floor(r^{1/2}) per radius")
            p.add_argument("--s", type=_int, default=None)
            p.add_argument("--resolution", type=_int, default=512)
        else:
            p.add_argument("--s", type=_int, required=True)
            p.add_argument("--samples", type=_int, default=20)
            p.add_argument("--Qmajor", type=_int, default=None)
            p.add_argument("--nu", type=_number, default=1.0)

    p = cmd("arc-split", "major and minor arc parts of a_r(theta)", cmd_arc_split)
    _kd(p)
    p.add_argument("--lambda", dest="lam", type=_int, required=True)
    p.add_argument("--theta", type=_list(_number), default=None)
    p.add_argument("--Qmajor", type=_int, default=None, help="default floor(r^{1/2})")
    p.add_argument("--nu", type=_number, default=1.0)

    for name, summary, handler in (
        ("average", "spherical average A_r f on a torus", cmd_average),
        ("maximal", "maximal function sup_r |A_r f| over a radius sequence", cmd_maximal),
    ):
        p = cmd(name, summary, handler)
        _kd(p)
        if name == "average":
            p.add_argument("--lambda", dest="lam", type=_int, required=True)
        else:
            _seq_args(p)
        p.add_argument("--M", type=_int, default=16, help="torus side")
        p.add_argument("--init", choices=["delta", "constant", "random", "indicator"], default="delta")
        p.add_argument("--size", type=_int, default=1, help="set size for --init indicator")
        p.add_argument("--input", default=None, help="float64 grid file with a PATH.json header")
        p.add_argument("--grid-out", dest="grid_out", default=None)
        p.add_argument("--method", choices=["dft", "direct"], default="dft")
        p.add_argument("--torus", action="store_true", help="periodic semantics instead of the Z^d padding check")

    p = cmd("delta-test", "||sup_{lambda<=L} A_r delta||_p^p for each L, with growth slopes", cmd_delta_test)
    _kd(p)
    p.add_argument("--p", type=_list(_number), required=True)
    p.add_argument("--Lmax", type=_list(_int), required=True, help="power-value cutoffs")

    p = cmd("density-fit", "density parameter: slope of log #{r <= L} against log L", cmd_density_fit)
    _kd(p)
    _seq_args(p)

    p = cmd("union-check", "||sup_{r<=L0} A_r f||_1 against #{r<=L0} ||f||_1 for random indicators", cmd_union_check)
    _kd(p)
    _seq_args(p)
    p.add_argument("--M", type=_int, default=16)
    p.add_argument("--radius0", type=_number, required=True)
    p.add_argument("--trials", type=_int, default=10)
    p.add_argument("--size", type=_int, default=None)

    p = cmd("rwt-probe", "restricted weak-type constants alpha^p |{M 1_F > alpha}| / |F|", cmd_rwt_probe)
    _kd(p)
    _seq_args(p)
    p.add_argument("--p", type=_number, required=True)
    p.add_argument("--sizes", type=_list(_int), required=True)
    p.add_argument("--alpha", type=_list(_number), default=None)
    p.add_argument("--sides", type=_list(_int), default=[16])
    p.add_argument("--trials", type=_int, default=1)

    return parser


def list_commands() -> str:
    build_parser()
    width = max(len(n) for n in COMMANDS)
    return "\n".join(f"  {name:<{width}}  {summary}" for name, (summary, _) in COMMANDS.items())


# ---------------------------------------------------------------------------
# config files and output


def read_config(path: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_IO) from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.lstrip("-")] = value
    return cfg


def _apply_config(argv: list[str], cfg: dict[str, str]) -> list[str]:
    """Config entries become flags placed before the command-line flags, which win."""
    given = {a.split("=", 1)[0].lstrip("-") for a in argv[1:] if a.startswith("--")}
    extra: list[str] = []
    for key, value in cfg.items():
        if key in ("command", "config") or key in given:
            continue
        if value.lower() in ("true", "yes", "on"):
            extra.append(f"--{key}")
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            extra.extend([f"--{key}", value])
    return argv[:1] + extra + argv[1:]


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in d.items():
        if isinstance(value, dict):
            out.update(_flatten(value, f"{prefix}{key}."))
        else:
            out[f"{prefix}{key}"] = value
    return out


def render(result: Result, fmt: str) -> dict[str, str]:
    summary = {k: v for k, v in result.summary.items() if k != "command"}
    payload_json = dumps({"command": result.summary.get("command"), "result": summary,
                          "rows": result.rows}) + "\n"
    rows = result.rows if result.rows else [_flatten(summary)]
    payload_csv = rows_to_csv(rows)
    if fmt == "text":
        return {"text": (result.scalar + "\n") if result.scalar is not None else payload_json}
    if fmt == "csv":
        return {"csv": payload_csv}
    if fmt == "json":
        return {"json": payload_json}
    return {"csv": payload_csv, "json": payload_json}


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def emit(result: Result, args, config: dict, wall: float) -> None:
    fmt = args.format or ("text" if result.scalar is not None else "json")
    outputs = render(result, fmt)
    written = []
    if args.output:
        if fmt == "both":
            stem = os.path.splitext(args.output)[0]
            for ext, text in outputs.items():
                _write(f"{stem}.{ext}", text)
                written.append(f"{stem}.{ext}")
        else:
            _write(args.output, next(iter(outputs.values())))
            written.append(args.output)
    else:
        for ext in ("text", "csv", "json"):
            if ext in outputs:
                sys.stdout.write(outputs[ext])
    manifest_path = args.manifest or (args.output + ".manifest.json" if args.output else None)
    if manifest_path:
        manifest = {"command": args.command, "config": config, "version": __version__,
                    "wall_time_seconds": wall, "outputs": written}
        _write(manifest_path, dumps(manifest) + "\n")


def _suggest(name: str) -> str:
    close = difflib.get_close_matches(name, list(COMMANDS), n=1)
    return f"; did you mean '{close[0]}'?" if close else ""


def _effective_config(args) -> dict:
    skip = {"handler", "config", "manifest", "output", "format"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, Fraction):
            value = str(value)
        elif isinstance(value, list):
            value = [str(v) if isinstance(v, Fraction) else v for v in value]
        out[key] = value
    return out


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_help()
        print("\ncommands:\n" + list_commands())
        return EXIT_OK
    if argv[0] in ("-h", "--help", "help") and len(argv) > 1:
        if argv[1] in COMMANDS:
            try:
                parser.parse_args([argv[1], "--help"])
            except SystemExit as exc:
                return int(exc.code or 0)
        print(f"ksphere: unknown command '{argv[1]}'{_suggest(argv[1])}", file=sys.stderr)
        return EXIT_INVALID
    if not argv[0].startswith("-") and argv[0] not in COMMANDS:
        print(f"ksphere: unknown command '{argv[0]}'{_suggest(argv[0])}", file=sys.stderr)
        return EXIT_INVALID
    try:
        if "--config" in argv or any(a.startswith("--config=") for a in argv):
            pre = argparse.ArgumentParser(add_help=False)
            pre.add_argument("--config")
            known, _ = pre.parse_known_args(argv[1:])
            argv = _apply_config(argv, read_config(known.config))
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        if args.command is None:
            parser.print_help()
            return EXIT_OK
        if args.jobs < 1:
            raise CliError("--jobs must be >= 1")
        config = _effective_config(args)
        start = time.perf_counter()
        result = args.handler(args)
        result.summary = {"command": args.command, **result.summary}
        emit(result, args, config, time.perf_counter() - start)
        return EXIT_OK
    except CliError as exc:
        print(f"ksphere: {exc}", file=sys.stderr)
        return exc.code
    except WorkBoundExceeded as exc:
        print(f"ksphere: work bound exceeded: {exc}", file=sys.stderr)
        return EXIT_WORK
    except (ValueError, TypeError, KeyError) as exc:
        print(f"ksphere: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"ksphere: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
