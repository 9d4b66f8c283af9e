import numpy as np
import pytest

from ppw.kernels import (basis_eval_many, gaf_zeros, harmonic_sphere,
                         harmonic_torus, iid, jittered, kernel_diag_check,
                         kernel_eval, kernel_gram, spherical_ensemble)
from ppw.lattice import ball_points, p_norm
from ppw.manifold import (equal_area_partition, sphere2, torus,
                          uniform_sample_many)
from ppw.spectral import legendre_P

rng = np.random.default_rng(11)
HEX = torus(2, ((1.0, 0.0), (-1 / np.sqrt(3), 2 / np.sqrt(3))))


def test_point_counts():
    assert harmonic_sphere(3).N == 16
    assert harmonic_torus(2, p=2).N == 13
    assert harmonic_torus(1, p=np.inf).N == 9
    assert harmonic_torus(1, m=HEX).N == 7
    assert spherical_ensemble(37).N == 37
    assert gaf_zeros(12).N == 12
    assert jittered(torus(3), 64).N == 64
    assert iid(sphere2(), 5).N == 5
    with pytest.raises(ValueError):
        harmonic_sphere(-1)
    with pytest.raises(ValueError):
        gaf_zeros(0)
    with pytest.raises(ValueError):
        gaf_zeros(10, n0=2)


def test_sphere_basis_orthonormal_exact_quadrature():
    # Gauss-Legendre x uniform azimuth integrates degree <= 2L products
    # exactly, so the Gram of the basis must be the identity
    L = 4
    spec = harmonic_sphere(L)
    z, wz = np.polynomial.legendre.leggauss(L + 1)
    phi = 2 * np.pi * np.arange(2 * L + 1) / (2 * L + 1)
    Z, PH = np.meshgrid(z, phi, indexing="ij")
    S = np.sqrt(1 - Z ** 2)
    X = np.stack([S * np.cos(PH), S * np.sin(PH), Z], axis=-1).reshape(-1, 3)
    W = np.repeat(wz / 2, len(phi)) / len(phi)
    B = basis_eval_many(spec, X)
    G = (B * W[:, None]).T @ B
    np.testing.assert_allclose(G, np.eye(spec.N), atol=1e-12)


def test_sphere_kernel_addition_theorem():
    L = 6
    spec = harmonic_sphere(L)
    X = uniform_sample_many(sphere2(), 20, rng)
    K = np.asarray(kernel_gram(spec, X, X))
    U = X @ X.T
    ref = sum((2 * ell + 1) * legendre_P(ell, np.clip(U, -1, 1))
              for ell in range(L + 1))
    np.testing.assert_allclose(K, ref, atol=1e-9)


def test_torus_basis_orthonormal_on_grid():
    # integer dual frequencies: a uniform grid beats the Nyquist limit,
    # the discrete Gram is exactly the identity
    spec = harmonic_torus(2, p=2)
    n = 9
    u = np.arange(n) / n
    U = np.stack(np.meshgrid(u, u, indexing="ij"), axis=-1).reshape(-1, 2)
    B = basis_eval_many(spec, U)
    G = B.conj().T @ B / len(U)
    np.testing.assert_allclose(G, np.eye(spec.N), atol=1e-12)


def test_hex_torus_basis_orthonormal_on_grid():
    spec = harmonic_torus(2, m=HEX)
    n = 16
    u = np.arange(n) / n
    U = np.stack(np.meshgrid(u, u, indexing="ij"), axis=-1).reshape(-1, 2)
    X = U @ HEX.generator_matrix.T   # grid in lattice coordinates
    B = basis_eval_many(spec, X)
    G = B.conj().T @ B / len(X)
    np.testing.assert_allclose(G, np.eye(spec.N), atol=1e-12)


def test_torus_kernel_is_exponential_sum():
    spec = harmonic_torus(2, p=np.inf)
    J = ball_points(p_norm(np.inf), 2, d=2)
    x = np.array([0.21, 0.73])
    y = np.array([0.55, 0.11])
    ref = np.exp(2j * np.pi * (J @ (x - y))).sum()
    val = kernel_eval(spec, x, y)
    np.testing.assert_allclose(val, ref, atol=1e-12)


def test_jittered_kernel_indicator():
    m = torus(2)
    spec = jittered(m, 16)
    part = equal_area_partition(m, 16)
    X = uniform_sample_many(m, 40, rng)
    K = np.asarray(kernel_gram(spec, X, X))
    same = part.locate(X)[:, None] == part.locate(X)[None, :]
    np.testing.assert_allclose(K, np.where(same, 16.0, 0.0))


@pytest.mark.parametrize("spec", [
    harmonic_sphere(5), harmonic_torus(2, p=2), harmonic_torus(1, p=np.inf),
    harmonic_torus(2, m=HEX), jittered(torus(3), 27), jittered(sphere2(), 10)])
def test_projection_diagonal_is_N(spec):
    assert kernel_diag_check(spec, 20, np.random.default_rng(5)) < 1e-9
    X = uniform_sample_many(spec.manifold, 25, rng)
    B = basis_eval_many(spec, X)
    diag = (np.abs(B) ** 2).sum(axis=1)
    np.testing.assert_allclose(diag, spec.N, atol=1e-9)


def test_no_basis_for_non_projection():
    X = uniform_sample_many(sphere2(), 3, rng)
    for spec in (spherical_ensemble(8), gaf_zeros(8), iid(sphere2(), 8)):
        with pytest.raises(ValueError):
            basis_eval_many(spec, X)


def test_labels():
    assert harmonic_sphere(3).label == "harmonic(L=3)"
    assert harmonic_torus(2, p=np.inf).label == "harmonic(L=2,p=inf)"
    assert harmonic_torus(1, m=HEX).label == "harmonic(L=1,lattice)"
    assert gaf_zeros(8).label == "gaf"
