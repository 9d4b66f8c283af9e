import numpy as np
import pytest

from ppw.kernels import (harmonic_sphere, harmonic_torus, iid, jittered,
                         sphere_harmonic_columns, sphere_harmonics)
from ppw.manifold import sphere2, torus
from ppw.samplers import PointSet, sample_ensemble
from ppw.statistics import (EigenStatTable, RateFit, SmoothingBoundConfig,
                            eigenspace_statistic, fit_rate,
                            gaf_variance_bound, optimize_smoothing_time,
                            smoothing_bound, variance_exact, variance_mc)

rng = np.random.default_rng(23)


# ------------------------------------------------------- eigenspace sums

def test_s0_is_n_squared():
    ps = sample_ensemble(harmonic_sphere(2), np.random.default_rng(0))
    assert eigenspace_statistic(ps, 0) == pytest.approx(ps.N ** 2)


def test_sphere_table_matches_explicit_basis():
    # pair-recurrence evaluation vs direct sums over the explicit basis
    ps = sample_ensemble(harmonic_sphere(3), np.random.default_rng(1))
    B = sphere_harmonics(6, ps.points)
    cols = sphere_harmonic_columns(6)
    for ell in (1, 2, 5, 6):
        idx = [c for (l, m, kind), c in cols.items() if l == ell]
        direct = float((B[:, idx].sum(axis=0) ** 2).sum())
        assert eigenspace_statistic(ps, ell) == pytest.approx(direct, rel=1e-9)


def test_torus_table_matches_exponential_sums():
    from ppw.spectral import torus_shell_vectors
    m = torus(2)
    ps = sample_ensemble(harmonic_torus(2, p=2, m=m), np.random.default_rng(2))
    for idx in (1, 2, 3):
        V = torus_shell_vectors(m, idx)
        direct = float(
            (np.abs(np.exp(2j * np.pi * (ps.points @ V.T)).sum(axis=0)) ** 2).sum())
        assert eigenspace_statistic(ps, idx) == pytest.approx(direct, rel=1e-9)


def test_statistic_clipped_to_range():
    ps = sample_ensemble(iid(sphere2(), 6), np.random.default_rng(3))
    tab = EigenStatTable(ps)
    for ell in range(8):
        lam, mult, s = tab.get(ell)
        assert 0.0 <= s <= ps.N ** 2 * mult + 1e-9


# ------------------------------------------------------- smoothing bound

def test_smoothing_bound_input_validation():
    ps = sample_ensemble(harmonic_sphere(1), np.random.default_rng(0))
    with pytest.raises(ValueError):
        smoothing_bound(ps, SmoothingBoundConfig(t=0.0))
    with pytest.raises(ValueError):
        smoothing_bound(ps, SmoothingBoundConfig(t=-1.0))
    with pytest.raises(ValueError):
        smoothing_bound(ps, SmoothingBoundConfig(t=0.1, l_max=0))
    with pytest.raises(ValueError):
        smoothing_bound(ps, SmoothingBoundConfig(t=0.1, tail_mode="drop"))


@pytest.mark.parametrize("spec", [harmonic_sphere(3),
                                  harmonic_torus(2, p=2),
                                  jittered(torus(3), 27)])
def test_doubling_cutoff_never_increases_bound(spec):
    ps = sample_ensemble(spec, np.random.default_rng(4))
    tab = EigenStatTable(ps)
    for t in (0.02, 0.1, 0.5):
        prev = None
        for lmax in (4, 8, 16, 32):
            val = smoothing_bound(ps, SmoothingBoundConfig(t=t, l_max=lmax),
                                  table=tab)
            if prev is not None:
                assert val <= prev + 1e-12
            prev = val


def test_curvature_term_increases_bound():
    ps = sample_ensemble(harmonic_sphere(2), np.random.default_rng(5))
    base = smoothing_bound(ps, SmoothingBoundConfig(t=0.05, K_M=0.0))
    bumped = smoothing_bound(ps, SmoothingBoundConfig(t=0.05, K_M=2.0))
    assert bumped > base


def test_optimizer_beats_coarse_grid():
    ps = sample_ensemble(harmonic_torus(2, p=2), np.random.default_rng(6))
    opt = optimize_smoothing_time(ps)
    ts = np.geomspace(ps.N ** -2.0, 1.0, 20)
    tab = EigenStatTable(ps)
    grid = min(smoothing_bound(ps, SmoothingBoundConfig(t=float(t)), table=tab)
               for t in ts)
    assert opt.bound_star <= grid * (1 + 5e-3)
    assert ps.N ** -2.0 <= opt.t_star <= 1.0


def test_single_point_optimum_hits_range_end():
    m = torus(2)
    ps = PointSet(np.array([[0.5, 0.5]]), jittered(m, 1))
    opt = optimize_smoothing_time(ps)
    assert opt.t_star == pytest.approx(1.0)


# ------------------------------------------------------------- variances

def test_projection_variance_closed_form_degree_one():
    # Var(sum sqrt(3) z) = L + 1 for the degree-L sphere projection; the
    # L = 0 case is the one-point uniform sample, variance 3 E z^2 = 1
    f = lambda X: np.sqrt(3.0) * X[:, 2]
    for L in (1, 2, 4):
        v = variance_exact(harmonic_sphere(L), f)
        assert v.value == pytest.approx(L + 1, rel=2e-3)
        assert abs(v.refinement_delta) < 5e-3 * (L + 1)
        assert float(v) == v.value


def test_jittered_variance_matches_cell_integrals():
    # 2 x 2 torus grid, f = first coordinate: per-cell variance of a
    # uniform variable on an interval of length 1/2 is 1/48
    spec = jittered(torus(2), 4)
    v = variance_exact(spec, lambda X: X[:, 0])
    assert v.value == pytest.approx(4 / 48, abs=2e-4)


def test_variance_exact_rejects_non_projection():
    with pytest.raises(ValueError):
        variance_exact(iid(sphere2(), 8), lambda X: X[:, 2])


def test_variance_mc_iid_oracle():
    # iid: Var(sum f) = N Var(f); f = sqrt(3) z has variance 1 on the sphere
    spec = iid(sphere2(), 10)
    mc = variance_mc(spec, lambda X: np.sqrt(3.0) * X[:, 2], 600,
                     np.random.default_rng(7))
    assert abs(mc.variance - 10.0) <= 5 * mc.stderr
    assert abs(mc.mean) <= 5 * mc.stderr_mean
    assert mc.replicas == 600
    with pytest.raises(ValueError):
        variance_mc(spec, lambda X: X[:, 2], 99, np.random.default_rng(0))


def test_gaf_variance_bound_values():
    assert gaf_variance_bound(1, 4) == pytest.approx(np.pi ** 2 / 2)
    assert gaf_variance_bound(2, 10) == pytest.approx(
        5 * 36 * np.pi ** 2 / 60)
    with pytest.raises(ValueError):
        gaf_variance_bound(0, 4)


# -------------------------------------------------------------- rate fits

def test_fit_recovers_pure_power():
    ns = np.array([16, 32, 64, 128, 256])
    w = 3.0 * ns ** -0.5
    ft = fit_rate(list(zip(ns, w)), "pure_power")
    assert ft.slope == pytest.approx(-0.5, abs=1e-12)
    assert ft.intercept == pytest.approx(np.log(3.0), abs=1e-12)
    assert ft.residual_sse < 1e-24
    assert ft.n_points == 5


def test_fit_recovers_sqrt_log_model():
    ns = np.array([16, 64, 256, 1024, 4096])
    w = 2.0 * np.sqrt(np.log(ns)) * ns ** -0.5
    ft = fit_rate(list(zip(ns, w)), "power_with_sqrt_log")
    assert ft.slope == pytest.approx(-0.5, abs=1e-12)
    assert ft.residual_sse < 1e-24
    # the uncorrected model absorbs part of the slowly-varying factor:
    # the fitted pure slope lands above -1/2 and keeps curvature residue
    pure = fit_rate(list(zip(ns, w)), "pure_power")
    assert pure.slope > -0.5
    assert pure.residual_sse > ft.residual_sse


def test_fit_input_validation():
    with pytest.raises(ValueError):
        fit_rate([(16, 1.0), (32, 0.5), (64, 0.25)])       # < 4 sizes
    with pytest.raises(ValueError):
        fit_rate([(16, 1.0), (16, 0.9), (32, 0.5), (32, 0.4)])
    with pytest.raises(ValueError):
        fit_rate([(16, 1.0), (32, 0.0), (64, 0.25), (128, 0.1)])


def test_fit_with_stderr_column():
    ns = [16, 32, 64, 128]
    recs = [(n, 2.0 * n ** -0.4, 0.01) for n in ns]
    ft = fit_rate(recs, "pure_power")
    assert isinstance(ft, RateFit)
    assert ft.slope == pytest.approx(-0.4, abs=1e-9)
    assert ft.se_slope >= 0
