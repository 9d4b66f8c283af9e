import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppw.lattice import (annulus_difference_count, ball_points, count_ball,
                         dual_basis_norm, gauss_circle_check, p_norm)

HEX_DUAL = dual_basis_norm((1.0, 0.0), (0.5, np.sqrt(3) / 2))


def test_count_examples():
    assert count_ball(p_norm(np.inf), 1) == 9
    assert count_ball(p_norm(2), 2) == 13
    assert count_ball(p_norm(1), 2) == 13
    assert count_ball(p_norm(2), 0) == 1
    assert count_ball(p_norm(2), -1) == 0


def test_count_matches_brute_force():
    g = np.arange(-9, 10)
    J = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    for p in (1, 1.5, 2, 3, np.inf):
        norm = p_norm(p)
        for L in (1, 2.5, 4, 7):
            assert count_ball(norm, L) == int((norm.evaluate(J) <= L * (1 + 1e-9)).sum())


def test_count_3d():
    assert count_ball(p_norm(np.inf), 1, d=3) == 27
    # r^2 = 1: origin + 6 unit vectors
    assert count_ball(p_norm(2), 1, d=3) == 7


def test_ball_points_contains_origin_and_symmetric():
    for norm in (p_norm(2), HEX_DUAL):
        P = ball_points(norm, 3.0)
        s = {tuple(r) for r in P.tolist()}
        assert (0, 0) in s
        assert all((-a, -b) in s for a, b in s)


def test_annulus_examples():
    norm = p_norm(2)
    assert annulus_difference_count(norm, (1, 0), 2) == 5
    # disjoint balls: difference is the whole ball
    assert annulus_difference_count(norm, (9, 0), 2) == count_ball(norm, 2)
    with pytest.raises(ValueError):
        annulus_difference_count(norm, (0, 0), 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(-4, 4), st.integers(-4, 4),
       st.sampled_from([1.0, 2.0, np.inf]),
       st.sampled_from([2.0, 3.5, 5.0]))
def test_annulus_symmetry_and_bounds(k1, k2, p, L):
    if k1 == 0 and k2 == 0:
        return
    norm = p_norm(p)
    a = annulus_difference_count(norm, (k1, k2), L)
    assert a == annulus_difference_count(norm, (-k1, -k2), L)
    assert 0 <= a <= count_ball(norm, L)


@settings(max_examples=60, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6),
       st.integers(-6, 6), st.integers(-6, 6))
def test_norm_axioms(a1, a2, b1, b2):
    for norm in (p_norm(1), p_norm(2), p_norm(np.inf), HEX_DUAL):
        u = np.array([a1, a2], dtype=float)
        v = np.array([b1, b2], dtype=float)
        nu, nv, nuv = (norm.evaluate(u), norm.evaluate(v),
                       norm.evaluate(u + v))
        assert nuv <= nu + nv + 1e-9
        assert norm.evaluate(2 * u) == pytest.approx(2 * nu, abs=1e-9)
        if (a1, a2) != (0, 0):
            assert nu > 0


def test_dual_basis_requires_independence():
    with pytest.raises(ValueError):
        dual_basis_norm((1.0, 0.0), (2.0, 0.0))
    with pytest.raises(ValueError):
        p_norm(0.5)


def test_hex_dual_counts():
    # shell structure of the triangular dual lattice: 1, +6, +6, +6, ...
    assert count_ball(HEX_DUAL, 0) == 1
    assert count_ball(HEX_DUAL, 1) == 7
    assert count_ball(HEX_DUAL, 2) == 19


def test_gauss_circle_values():
    r1 = gauss_circle_check(1)
    assert r1.count == 5
    assert r1.error == pytest.approx(5 - np.pi)
    assert r1.bound == pytest.approx(2 * np.sqrt(2) * np.pi)
    r0 = gauss_circle_check(0)
    assert r0.count == 1 and r0.bound == 0.0
    for r in (7, 50, 100):
        res = gauss_circle_check(r)
        assert abs(res.error) <= res.bound
