import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from ksphere.approximation import (
    ArcDissection,
    MultiplierGrid,
    arc_split,
    decay_fit,
    default_Q,
    error_multiplier,
    exact_multiplier,
    fit_kappa,
    frequency_sample,
    kappa_dyadic,
    main_term_multiplier,
    main_term_values,
    minor_arc_l2_trace,
    normalization,
)
from ksphere.exp_sums import sphere_exponential_sum
from ksphere.gauss_sums import singular_series_partial
from ksphere.lattice_sphere import SphereSpec, count_points
from ksphere.surface_measure import SurfaceSpec, bump, gelfand_leray_constant, sigma_fourier
from oracles import sphere_sum_direct


def test_normalization_value():
    spec = SphereSpec(2, 5, 16)
    assert normalization(spec) == pytest.approx(2**5 * gelfand_leray_constant(2, 5) * 4**3)


def test_exact_multiplier_at_zero():
    spec = SphereSpec(2, 4, 25)
    g = exact_multiplier(spec, 8)
    assert g.value_at((0, 0, 0, 0)) == pytest.approx(count_points(spec) / normalization(spec), rel=1e-14)


def test_exact_multiplier_matches_direct():
    spec = SphereSpec(3, 3, 9)
    g = exact_multiplier(spec, 6, normalize=False)
    for idx, val in zip(g.indices, g.values):
        assert abs(val - sphere_exponential_sum(spec, idx / 6)) < 1e-12


def test_exact_multiplier_ten_point_sphere():
    spec = SphereSpec(2, 5, 1)
    g = exact_multiplier(spec, 4, normalize=False)
    assert len(g.values) == 4**5
    for idx in ((0, 1, 2, 3, 0), (1, 1, 1, 1, 1), (2, 0, 0, 3, 1)):
        assert abs(g.value_at(idx) - sphere_sum_direct(2, 5, 1, np.array(idx) / 4)) < 1e-12


def test_frequency_sample():
    idx, scheme = frequency_sample(2, 8)
    assert scheme == "full" and len(idx) == 64
    idx, scheme = frequency_sample(5, 64, n_random=32, seed=1)
    assert scheme.startswith("axes")
    keys = {tuple(r) for r in idx}
    assert all(tuple((-np.array(r)) % 64) in keys for r in keys)
    again, _ = frequency_sample(5, 64, n_random=32, seed=1)
    assert np.array_equal(idx, again)


def test_main_term_q1_is_bump_times_transform():
    spec = SphereSpec(2, 3, 16)
    thetas = np.array([[0.01, -0.02, 0.005], [0.1, 0.0, 0.05], [0.3, 0.2, 0.0]])
    vals = main_term_values(spec, thetas, 1)
    sig = sigma_fourier(SurfaceSpec(2, 3, 4.0, 512), thetas)
    assert np.allclose(vals, bump(thetas) * sig, atol=1e-14)


def test_main_term_at_zero_is_singular_series():
    spec = SphereSpec(2, 5, 36)
    for Q in (1, 2, 3, 5):
        g = main_term_multiplier(spec, 4, Q)
        assert abs(g.value_at((0,) * 5) - singular_series_partial(2, 5, 36, Q).value) < 1e-10


def test_main_term_conjugate_symmetric():
    g = main_term_multiplier(SphereSpec(2, 5, 25), 16)
    assert g.conjugate_symmetry_defect() < 1e-10


def test_main_term_guards():
    with pytest.raises(ValueError):
        main_term_values(SphereSpec(3, 4, 8), np.zeros((1, 4)), 2)
    with pytest.raises(ValueError):
        main_term_values(SphereSpec(2, 3, 10**6), np.array([[0.01, 0, 0]]), 1, resolution=16)


def test_exact_equals_main_plus_error():
    for lam in (9, 25, 49):
        rep = error_multiplier(SphereSpec(2, 5, lam), 16)
        assert np.max(np.abs(rep.exact.values - (rep.main.values + rep.grid.values))) < 1e-12


def test_error_sup_trace_decreasing():
    # Q = floor(r); at Q = floor(r^{1/2}) the step 16 -> 25 rises by 26% (truncated 2-adic factor)
    specs = [SphereSpec(2, 5, lam) for lam in (4, 9, 16, 25, 36)]
    sups = [error_multiplier(spec, 16, Q=int(spec.radius)).sup_norm for spec in specs]
    for a, b in zip(sups, sups[1:]):
        assert b <= a * 1.2


def test_waring_cross_check_at_zero():
    spec = SphereSpec(2, 5, 100)
    g = exact_multiplier(spec, 2)
    assert abs(g.value_at((0,) * 5) - singular_series_partial(2, 5, 100, 64).value.real) < 0.1


def test_doubling_q_within_tail():
    spec = SphereSpec(2, 6, 64)
    a = main_term_multiplier(spec, 8, 4).value_at((0,) * 6)
    b = main_term_multiplier(spec, 8, 8).value_at((0,) * 6)
    assert abs(a - b) <= singular_series_partial(2, 6, 64, 4).tail_bound


def test_kappa_helpers():
    assert kappa_dyadic(2, 5, 0.5) == pytest.approx(-1.5)
    with pytest.raises(ValueError):
        fit_kappa([1, 2, 3], [1, 1, 1])
    with pytest.raises(ValueError):
        fit_kappa([1, 2, 3, 4], [1, 0, 1, 1])
    # a constant error gives a zero exponent, which the positivity contract rejects
    assert fit_kappa([2, 3, 4, 5], [0.3] * 4) == pytest.approx(0, abs=1e-12)


def test_decay_fit_reports():
    fit = decay_fit([SphereSpec(2, 5, lam) for lam in (16, 25, 36, 49)], M=8, s=2)
    assert len(fit.rows) == 4 and fit.kappa_dyadic == pytest.approx(-1.5)
    assert fit.kappa_single is not None


def test_multiplier_subtraction_checks_grid():
    a = exact_multiplier(SphereSpec(2, 2, 5), 4)
    b = exact_multiplier(SphereSpec(2, 2, 5), 8)
    with pytest.raises(ValueError):
        _ = a - b
    assert isinstance(a - a, MultiplierGrid)


# -- arcs ---------------------------------------------------------------------


def test_dissection_guards():
    with pytest.raises(ValueError):
        ArcDissection(0)
    ArcDissection(2).check_disjoint(10.0, 2)
    with pytest.raises(ValueError):
        ArcDissection(5, nu=2.0).check_disjoint(3.0, 2)


def test_arc_split_identity():
    rng = np.random.default_rng(11)
    for lam in range(1, 26):
        spec = SphereSpec(2, 3, lam)
        diss = ArcDissection(default_Q(spec))
        for theta in rng.random((20, 3)):
            sp = arc_split(spec, diss, theta)
            assert abs(sp.major + sp.minor - sphere_exponential_sum(spec, theta)) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 25), st.integers(1, 4), st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_arc_split_property(lam, Qm, theta):
    spec = SphereSpec(2, 3, lam)
    diss = ArcDissection(Qm)
    try:
        diss.check_disjoint(spec.radius, 2)
    except ValueError:
        assume(False)
    sp = arc_split(spec, diss, np.array(theta))
    assert abs(sp.major + sp.minor - sphere_sum_direct(2, 3, lam, theta)) < 1e-8


def test_covering_arcs_leave_no_minor_part():
    spec = SphereSpec(2, 3, 9)
    sp = arc_split(spec, ArcDissection(1, nu=2.0), np.array([0.1, 0.2, 0.3]))
    assert abs(sp.minor) < 1e-12


def test_minor_trace():
    thetas = np.random.default_rng(0).random((8, 5))
    tr = minor_arc_l2_trace([SphereSpec(2, 5, lam) for lam in (16, 25, 36, 49, 64)], 3, thetas)
    assert tr.slope < 0
    assert tr.holder_ok
    covered = minor_arc_l2_trace([SphereSpec(2, 5, 16)], 2, thetas[:2], ArcDissection(1, nu=2.0))
    assert covered.rows[0]["sup_minor"] < 1e-12
