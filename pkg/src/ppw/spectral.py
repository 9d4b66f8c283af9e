"""Laplacian spectra, orthogonal polynomials, and Szego-type quantities.

Everything uses the normalized-volume convention Vol(M) = 1, so the
reproducing kernel of an eigenspace has diagonal equal to its dimension.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import lattice
from .manifold import ManifoldDesc

__all__ = [
    "EigenspaceDescriptor", "legendre_P", "legendre_table", "jacobi_P",
    "spectrum", "eigenspace_kernel_Z", "szego_quantities",
    "hormander_envelope", "DEFAULT_HORMANDER_C",
]

# Calibrated numerically: grid maximum of |K_L(x,y)| (1 + sqrt(N) d(x,y)) / N
# for the degree-10 sphere kernel is about 3.12 (and stays near 3.2 for other
# degrees), so 3.3 is a safe envelope constant; see the spectral tests.
DEFAULT_HORMANDER_C = 3.3


@dataclass(frozen=True)
class EigenspaceDescriptor:
    """One Laplacian eigenspace: index, eigenvalue, multiplicity."""
    index: int
    eigenvalue: float
    multiplicity: int


def legendre_P(ell: int, u) -> np.ndarray | float:
    """Legendre polynomial P_ell by the three-term recurrence.

    u is clamped into [-1, 1] (tolerance 1e-12 outside raises).
    """
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) > 1 + 1e-12):
        raise ValueError("argument outside [-1, 1]")
    u = np.clip(u, -1.0, 1.0)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    pm, p = np.ones_like(u), u.copy()
    if ell == 0:
        out = pm
    elif ell == 1:
        out = p
    else:
        for n in range(2, ell + 1):
            pm, p = p, ((2 * n - 1) * u * p - (n - 1) * pm) / n
        out = p
    return float(out[0]) if scalar else out


def legendre_table(L: int, u: np.ndarray) -> np.ndarray:
    """P_0..P_L at u, shape (L+1,) + u.shape."""
    u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
    out = np.empty((L + 1,) + u.shape)
    out[0] = 1.0
    if L >= 1:
        out[1] = u
    for n in range(2, L + 1):
        out[n] = ((2 * n - 1) * u * out[n - 1] - (n - 1) * out[n - 2]) / n
    return out


def jacobi_P(L: int, alpha: float, beta: float, u) -> np.ndarray | float:
    """Jacobi polynomial P_L^(alpha, beta) by the three-term recurrence."""
    if alpha <= -1 or beta <= -1:
        raise ValueError("Jacobi parameters must exceed -1")
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    a, b = alpha, beta
    pm = np.ones_like(u)
    if L == 0:
        out = pm
    else:
        p = (a + 1) + (a + b + 2) * (u - 1) / 2
        for n in range(2, L + 1):
            c1 = 2 * n * (n + a + b) * (2 * n + a + b - 2)
            c2 = (2 * n + a + b - 1) * (a * a - b * b)
            c3 = (2 * n + a + b - 1) * (2 * n + a + b) * (2 * n + a + b - 2)
            c4 = 2 * (n + a - 1) * (n + b - 1) * (2 * n + a + b)
            pm, p = p, ((c2 + c3 * u) * p - c4 * pm) / c1
        out = p
    return float(out[0]) if scalar else out


@lru_cache(maxsize=64)
def _torus_shells(m: ManifoldDesc, lam_cap: float):
    """Dual-lattice shells with eigenvalue below lam_cap.

    Returns (descriptors, vectors) where vectors[i] holds the dual vectors
    nu = D j (rows) of shell i; eigenvalues are 4 pi^2 ||nu||^2 grouped with
    relative tolerance 1e-9.
    """
    G = m.generator_matrix
    D = np.linalg.inv(G).T
    R = np.sqrt(lam_cap) / (2 * np.pi)
    if m.d == 2:
        norm = lattice.dual_basis_norm(D[:, 0], D[:, 1])
        J = lattice.ball_points(norm, R, d=2)
    else:
        # d = 3 standard torus only (identity generators)
        norm = lattice.p_norm(2)
        J = lattice.ball_points(norm, R, d=3)
        D = np.eye(3)
    nu = J @ D.T
    lam = 4 * np.pi ** 2 * (nu ** 2).sum(axis=1)
    order = np.argsort(lam)
    lam, nu = lam[order], nu[order]
    descs, vecs = [], []
    i = 0
    while i < lam.shape[0]:
        jj = i
        while jj + 1 < lam.shape[0] and lam[jj + 1] <= lam[i] * (1 + 1e-9) + 1e-12:
            jj += 1
        descs.append(EigenspaceDescriptor(len(descs), float(lam[i:jj + 1].mean()),
                                          jj - i + 1))
        vecs.append(nu[i:jj + 1])
        i = jj + 1
    return tuple(descs), tuple(vecs)


def spectrum(m: ManifoldDesc, count: int | None = None,
             lam_min_exceed: float | None = None):
    """First eigenspaces of m, by count or until the eigenvalue passes a cap.

    Sphere: lambda_ell = ell(ell+1) with multiplicity 2 ell + 1. Torus:
    4 pi^2 ||nu||^2 over dual-lattice shells with shell cardinalities.
    """
    if (count is None) == (lam_min_exceed is None):
        raise ValueError("give exactly one of count, lam_min_exceed")
    if m.kind == "sphere2":
        if count is None:
            # smallest ell with ell(ell+1) >= cap, inclusive
            ell = 0
            while ell * (ell + 1) < lam_min_exceed:
                ell += 1
            count = ell + 1
        return [EigenspaceDescriptor(l, float(l * (l + 1)), 2 * l + 1)
                for l in range(count)]
    cap = lam_min_exceed
    if cap is None:
        cap = 16.0
        while True:
            descs, _ = _torus_shells(m, cap)
            if len(descs) >= count:
                return list(descs[:count])
            cap *= 2
    descs, _ = _torus_shells(m, cap * 1.5 + 64.0)
    out = []
    for dsc in descs:
        out.append(dsc)
        if dsc.eigenvalue >= cap:
            break
    return out


def torus_shell_vectors(m: ManifoldDesc, index: int) -> np.ndarray:
    """Dual vectors of shell `index` (rows), for exponential sums."""
    cap = 16.0
    while True:
        descs, vecs = _torus_shells(m, cap)
        if len(descs) > index:
            return vecs[index]
        cap *= 2


def eigenspace_kernel_Z(m: ManifoldDesc, ell: int, x, y) -> float:
    """Reproducing kernel of eigenspace ell at (x, y); diagonal = multiplicity."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if m.kind == "sphere2":
        return float((2 * ell + 1) * legendre_P(ell, float(x @ y)))
    V = torus_shell_vectors(m, ell)
    return float(np.cos(2 * np.pi * (V @ (x - y))).sum())


def szego_quantities(L: int, alpha: float, beta: float, theta) -> dict:
    """k(theta) and the scaled boundary quantity for Jacobi asymptotics.

    k(theta) = pi^{-1/2} (sin t/2)^{-a-1/2} (cos t/2)^{-b-1/2};
    bound_quantity = L (sin t/2)^{2a+1} (cos t/2)^{2b+1} P_L^{(a,b)}(cos t)^2.
    theta may be a scalar or an array inside (0, pi).
    """
    theta = np.asarray(theta, dtype=float)
    scalar = theta.ndim == 0
    if np.any(theta <= 0) or np.any(theta >= np.pi):
        raise ValueError("theta must lie in (0, pi)")
    s, c = np.sin(theta / 2), np.cos(theta / 2)
    k = np.pi ** (-0.5) * s ** (-alpha - 0.5) * c ** (-beta - 0.5)
    P = jacobi_P(L, alpha, beta, np.cos(theta))
    bq = L * s ** (2 * alpha + 1) * c ** (2 * beta + 1) * P * P
    if scalar:
        return {"k": float(k), "bound_quantity": float(bq)}
    return {"k": k, "bound_quantity": np.asarray(bq)}


def hormander_envelope(N: int, d: int, r, C: float = DEFAULT_HORMANDER_C):
    """Pointwise kernel envelope C N / (1 + N^{1/d} r)."""
    r = np.asarray(r, dtype=float)
    out = C * N / (1.0 + N ** (1.0 / d) * r)
    return float(out) if out.ndim == 0 else out
