import numpy as np
import pytest

from ppw.kernels import (gaf_zeros, harmonic_sphere, harmonic_torus, iid,
                         jittered, kernel_gram, spherical_ensemble)
from ppw.manifold import equal_area_partition, sphere2, torus
from ppw.samplers import PointSet, sample_ensemble

HEX = torus(2, ((1.0, 0.0), (-1 / np.sqrt(3), 2 / np.sqrt(3))))

ALL_SPECS = [harmonic_sphere(3), harmonic_torus(2, p=2),
             harmonic_torus(1, p=np.inf), harmonic_torus(1, m=HEX),
             spherical_ensemble(24), gaf_zeros(18), gaf_zeros(18, n0=1),
             jittered(torus(3), 27), jittered(sphere2(), 12),
             iid(torus(2), 9)]


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.label + str(s.N))
def test_counts_and_support(spec):
    ps = sample_ensemble(spec, np.random.default_rng(0))
    assert isinstance(ps, PointSet)
    assert ps.N == spec.N
    assert ps.points.shape == (spec.N, spec.manifold.ambient_dim)
    if spec.manifold.kind == "sphere2":
        np.testing.assert_allclose(np.linalg.norm(ps.points, axis=1), 1.0,
                                   atol=1e-9)
    else:
        # inside the fundamental domain: coefficients in [0, 1)
        G = spec.manifold.generator_matrix
        U = ps.points @ np.linalg.inv(G).T
        assert U.min() >= -1e-9 and U.max() < 1 + 1e-9


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.label + str(s.N))
def test_deterministic_replay(spec):
    a = sample_ensemble(spec, np.random.default_rng(123))
    b = sample_ensemble(spec, np.random.default_rng(123))
    np.testing.assert_array_equal(a.points, b.points)
    c = sample_ensemble(spec, np.random.default_rng(124))
    assert not np.array_equal(a.points, c.points)


def test_jittered_one_point_per_cell():
    m = torus(2)
    spec = jittered(m, 25)
    part = equal_area_partition(m, 25)
    ps = sample_ensemble(spec, np.random.default_rng(3))
    np.testing.assert_array_equal(np.sort(part.locate(ps.points)),
                                  np.arange(25))


def test_harmonic_sphere_first_point_uniform():
    # the first conditional density is K(x,x)/N = 1: marginal is uniform
    spec = harmonic_sphere(2)
    zs = np.array([sample_ensemble(spec, np.random.default_rng(s)).points[0, 2]
                   for s in range(400)])
    # z of a uniform sphere point is uniform on [-1, 1]
    assert abs(zs.mean()) < 0.15
    np.testing.assert_allclose(zs.var(), 1 / 3, atol=0.06)


def test_harmonic_repulsion_vs_iid():
    # nearest-neighbour distances stochastically larger under the projection
    # process than under iid at the same N
    from ppw.manifold import pairwise_distance
    spec = harmonic_sphere(4)
    ref = iid(sphere2(), spec.N)
    def mean_nn(sp, seeds):
        vals = []
        for s in seeds:
            P = sample_ensemble(sp, np.random.default_rng(s)).points
            D = pairwise_distance(sphere2(), P, P)
            np.fill_diagonal(D, np.inf)
            vals.append(D.min(axis=1).mean())
        return np.mean(vals)
    assert mean_nn(spec, range(25)) > 1.15 * mean_nn(ref, range(25))


def test_gaf_zero_count_and_residual():
    spec = gaf_zeros(40)
    ps = sample_ensemble(spec, np.random.default_rng(7))
    assert ps.N == 40
    assert ps.metadata["max_residual"] < 1e-8


def test_gaf_n0_one_places_zero_at_south_pole():
    spec = gaf_zeros(12, n0=1)
    ps = sample_ensemble(spec, np.random.default_rng(2))
    south = np.array([0.0, 0.0, -1.0])
    d = np.linalg.norm(ps.points - south, axis=1).min()
    assert d < 1e-7


def test_spherical_ensemble_not_clustered_at_poles():
    spec = spherical_ensemble(200)
    ps = sample_ensemble(spec, np.random.default_rng(1))
    z = ps.points[:, 2]
    assert abs(z.mean()) < 0.2
    np.testing.assert_allclose(z.var(), 1 / 3, atol=0.1)


def test_metadata_and_seed_label():
    spec = harmonic_sphere(1)
    ps = sample_ensemble(spec, np.random.default_rng(0), seed=99)
    assert ps.seed == 99
    assert ps.spec is spec
