import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from ppw.kernels import harmonic_sphere, iid, jittered
from ppw.manifold import sphere2, torus
from ppw.samplers import PointSet, sample_ensemble
from ppw.transport import (OTResult, W2Estimate, solve_discrete_ot,
                           w1_packing_lower_bound, w2_to_volume)

rng = np.random.default_rng(17)


def lp_oracle(cost, a, b) -> float:
    N, M = cost.shape
    A_eq = []
    for i in range(N):
        row = np.zeros((N, M))
        row[i, :] = 1
        A_eq.append(row.ravel())
    for j in range(M):
        col = np.zeros((N, M))
        col[:, j] = 1
        A_eq.append(col.ravel())
    res = linprog(cost.ravel(), A_eq=np.array(A_eq),
                  b_eq=np.concatenate([a, b]), bounds=(0, None),
                  method="highs")
    assert res.status == 0
    return float(res.fun)


def test_known_three_by_three():
    cost = 1.0 - np.eye(3)
    a = np.array([0.5, 0.25, 0.25])
    b = np.array([0.25, 0.5, 0.25])
    res = solve_discrete_ot(cost, a, b, solver="exact")
    assert res.value == pytest.approx(0.25, abs=1e-12)
    assert res.duality_gap == 0.0


@pytest.mark.parametrize("shape", [(1, 1), (2, 5), (4, 4), (3, 12), (7, 5)])
def test_exact_matches_lp_oracle(shape):
    N, M = shape
    cost = rng.random(shape)
    a = rng.random(N) + 0.1
    b = rng.random(M) + 0.1
    a, b = a / a.sum(), b / b.sum()
    res = solve_discrete_ot(cost, a, b, solver="exact")
    assert res.value == pytest.approx(lp_oracle(cost, a, b), abs=1e-9)


@pytest.mark.parametrize("N,mult", [(3, 2), (5, 7), (16, 16), (1, 9)])
def test_assignment_route_matches_lp(N, mult):
    M = N * mult
    cost = rng.random((N, M))
    a = np.full(N, 1 / N)
    b = np.full(M, 1 / M)
    res = solve_discrete_ot(cost, a, b, solver="exact")
    assert res.value == pytest.approx(lp_oracle(cost, a, b), abs=1e-9)


def test_entropic_sandwich():
    cost = rng.random((6, 9))
    a = np.full(6, 1 / 6)
    b = rng.random(9) + 0.2
    b /= b.sum()
    exact = lp_oracle(cost, a, b)
    res = solve_discrete_ot(cost, a, b, solver="entropic")
    assert res.solver == "entropic"
    assert res.duality_gap >= 0
    assert res.value >= exact - 1e-12          # rounded primal is feasible
    assert res.value - res.duality_gap <= exact + 1e-12
    assert res.row_marginal_err < 1e-12 and res.col_marginal_err < 1e-12


def test_input_validation():
    cost = rng.random((3, 4))
    u3, u4 = np.full(3, 1 / 3), np.full(4, 1 / 4)
    with pytest.raises(ValueError):
        solve_discrete_ot(cost, np.array([0.5, 0.5, 0.5]), u4)   # sum != 1
    with pytest.raises(ValueError):
        solve_discrete_ot(cost, np.array([1.5, -0.25, -0.25]), u4)
    with pytest.raises(ValueError):
        solve_discrete_ot(cost, u4, u4)                          # shape
    with pytest.raises(ValueError):
        solve_discrete_ot(cost, u3, u4, solver="simplex")
    with pytest.raises(ValueError):
        solve_discrete_ot(-cost, u3, u4)                         # negative


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 6), st.integers(0, 10 ** 6))
def test_value_between_trivial_bounds(n, m, seed):
    r = np.random.default_rng(seed)
    cost = r.random((n, m))
    a = r.random(n) + 0.05
    b = r.random(m) + 0.05
    a, b = a / a.sum(), b / b.sum()
    res = solve_discrete_ot(cost, a, b, solver="exact")
    independent = float(a @ cost @ b)
    assert res.value <= independent + 1e-12
    assert res.value >= cost.min() - 1e-12
    # relabeling rows permutes nothing of the value
    perm = r.permutation(n)
    res2 = solve_discrete_ot(cost[perm], a[perm], b, solver="exact")
    assert res2.value == pytest.approx(res.value, abs=1e-9)


def test_w2_bracket_and_determinism():
    spec = harmonic_sphere(3)
    ps = sample_ensemble(spec, np.random.default_rng(5))
    est = w2_to_volume(ps, M=spec.N * 16, solver="exact")
    assert isinstance(est, W2Estimate)
    assert 0 <= est.bracket_low <= est.value <= est.bracket_high
    est2 = w2_to_volume(ps, M=spec.N * 16, solver="exact")
    assert est2.value == est.value
    assert est.M == spec.N * 16


def test_w2_default_target_size():
    ps = sample_ensemble(iid(torus(2), 4), np.random.default_rng(0))
    est = w2_to_volume(ps)
    assert est.M == 64 * 4


def test_w2_small_target_warns():
    ps = sample_ensemble(iid(torus(2), 32), np.random.default_rng(0))
    with pytest.warns(UserWarning):
        w2_to_volume(ps, M=16)


def test_w2_entropic_bracket_contains_exact():
    ps = sample_ensemble(iid(sphere2(), 24), np.random.default_rng(8))
    ex = w2_to_volume(ps, M=24 * 8, solver="exact")
    en = w2_to_volume(ps, M=24 * 8, solver="entropic")
    assert en.bracket_low <= ex.value <= en.bracket_high
    assert en.duality_gap > 0


def test_single_atom_matches_closed_form():
    ps = PointSet(np.array([[0.0, 0.0, 1.0]]), iid(sphere2(), 1))
    est = w2_to_volume(ps, M=1024, solver="exact")
    target = np.sqrt((np.pi ** 2 - 4) / 2)   # sqrt of the mean squared
    assert est.bracket_low <= target <= est.bracket_high
    assert est.value == pytest.approx(target, rel=0.05)


def test_relabeled_points_same_value():
    ps = sample_ensemble(iid(torus(2), 12), np.random.default_rng(4))
    perm = np.random.default_rng(0).permutation(12)
    ps2 = PointSet(ps.points[perm], ps.spec)
    a = w2_to_volume(ps, M=96, solver="exact")
    b = w2_to_volume(ps2, M=96, solver="exact")
    assert a.value == pytest.approx(b.value, abs=1e-12)


def test_packing_bound_homogeneity():
    s, t2, t3 = sphere2(), torus(2), torus(3)
    for m, factor, ratio in ((s, 4, 2.0), (t2, 4, 2.0), (t3, 8, 2.0)):
        big_n = 4096
        lo = w1_packing_lower_bound(big_n * factor, m)
        hi = w1_packing_lower_bound(big_n, m)
        assert hi / lo == pytest.approx(ratio, rel=1e-9)
    assert w1_packing_lower_bound(1, t2) > 0


def test_packing_bound_is_w2_lower_bound_in_practice():
    # brackets from real samples must sit above the packing bound
    for spec in (harmonic_sphere(4), jittered(torus(3), 64)):
        ps = sample_ensemble(spec, np.random.default_rng(2))
        est = w2_to_volume(ps, M=32 * spec.N, solver="exact")
        assert est.bracket_high >= w1_packing_lower_bound(spec.N,
                                                          spec.manifold)
