"""Projection kernels and basis evaluations for every ensemble.

Bases are orthonormal for the normalized volume measure, so projection
kernels satisfy K(x, x) = N exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import lattice
from .manifold import ManifoldDesc, equal_area_partition, sphere2, uniform_sample_many
from .spectral import legendre_table

__all__ = [
    "EnsembleSpec", "harmonic_sphere", "harmonic_torus", "spherical_ensemble",
    "gaf_zeros", "jittered", "iid",
    "basis_eval", "basis_eval_many", "kernel_eval", "kernel_gram",
    "kernel_diag_check", "sphere_harmonics", "sphere_harmonic_columns",
]


@dataclass(frozen=True)
class EnsembleSpec:
    """A point-process definition with its derived point count N.

    variant: harmonic | spherical | gaf | jittered | iid.
    L and p apply to harmonic specs (p is the torus ball norm; tori with
    non-identity generators use the dual-basis norm instead and ignore p).
    n0 is the lowest coefficient degree of the GAF polynomial (0 or 1).
    """
    variant: str
    N: int
    manifold: ManifoldDesc | None = None
    L: int | None = None
    p: float | None = None
    n0: int = 0

    @property
    def label(self) -> str:
        if self.variant == "harmonic":
            if self.manifold.kind == "sphere2":
                return f"harmonic(L={self.L})"
            if self.manifold.generators is not None:
                return f"harmonic(L={self.L},lattice)"
            pl = "inf" if np.isinf(self.p) else f"{self.p:g}"
            return f"harmonic(L={self.L},p={pl})"
        return self.variant


def harmonic_sphere(L: int) -> EnsembleSpec:
    if L < 0:
        raise ValueError("L must be >= 0")
    return EnsembleSpec("harmonic", (L + 1) ** 2, sphere2(), L=L)


def _torus_norm(m: ManifoldDesc, p: float) -> lattice.LatticeNorm:
    if m.generators is not None:
        D = np.linalg.inv(m.generator_matrix).T
        return lattice.dual_basis_norm(D[:, 0], D[:, 1])
    return lattice.p_norm(p)


def harmonic_torus(L: float, p: float = 2.0, m: ManifoldDesc | None = None) -> EnsembleSpec:
    from .manifold import torus
    if m is None:
        m = torus(2)
    if m.kind != "torus":
        raise ValueError("harmonic_torus needs a torus manifold")
    if m.generators is not None and m.d != 2:
        raise ValueError("general-lattice tori are two dimensional")
    N = lattice.count_ball(_torus_norm(m, p), L, d=m.d)
    return EnsembleSpec("harmonic", N, m, L=L, p=float(p))


def spherical_ensemble(N: int) -> EnsembleSpec:
    if N < 1:
        raise ValueError("N must be >= 1")
    return EnsembleSpec("spherical", N, sphere2())


def gaf_zeros(N: int, n0: int = 0) -> EnsembleSpec:
    if not 1 <= N <= 1000:
        raise ValueError("N must be in [1, 1000]")
    if n0 not in (0, 1):
        raise ValueError("n0 must be 0 or 1")
    return EnsembleSpec("gaf", N, sphere2(), n0=n0)


def jittered(m: ManifoldDesc, N: int) -> EnsembleSpec:
    return EnsembleSpec("jittered", N, m)


def iid(m: ManifoldDesc, N: int) -> EnsembleSpec:
    return EnsembleSpec("iid", N, m)


# ---------------------------------------------------------------- sphere SH

def sphere_harmonics(L: int, X: np.ndarray) -> np.ndarray:
    """All real spherical harmonics of degree <= L at points X (n, 3).

    Normalized so the squared basis sums to (L+1)^2 pointwise (orthonormal
    under the probability measure). Column order per degree ell:
    m = 0, then cos/sin pairs for m = 1..ell.
    """
    X = np.atleast_2d(X)
    n = X.shape[0]
    x = np.clip(X[:, 2], -1.0, 1.0)
    s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    phi = np.arctan2(X[:, 1], X[:, 0])
    out = np.empty((n, (L + 1) ** 2))
    cols = sphere_harmonic_columns(L)
    # semi-normalized associated Legendre B_{l m} column by column over m
    Bmm = np.ones(n)
    for m in range(L + 1):
        if m > 0:
            Bmm = np.sqrt((2 * m + 1) / (2.0 * m)) * s * Bmm
        cm = np.sqrt(2.0) * np.cos(m * phi) if m else None
        sm = np.sqrt(2.0) * np.sin(m * phi) if m else None
        Bprev, Bcur = None, Bmm
        for ell in range(m, L + 1):
            if ell == m:
                B = Bmm
            elif ell == m + 1:
                B = np.sqrt(2 * m + 3.0) * x * Bmm
            else:
                a = np.sqrt((4.0 * ell * ell - 1) / (ell * ell - m * m))
                b = np.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1) ** 2 - 1))
                B = a * (x * Bcur - b * Bprev)
            if ell > m:
                Bprev, Bcur = Bcur, B
            if m == 0:
                out[:, cols[(ell, 0, "c")]] = B
            else:
                out[:, cols[(ell, m, "c")]] = B * cm
                out[:, cols[(ell, m, "s")]] = B * sm
    return out


@lru_cache(maxsize=64)
def sphere_harmonic_columns(L: int) -> dict:
    """Column index of each (ell, m, kind) in the sphere_harmonics matrix."""
    cols = {}
    c = 0
    for ell in range(L + 1):
        cols[(ell, 0, "c")] = c
        c += 1
        for m in range(1, ell + 1):
            cols[(ell, m, "c")] = c
            cols[(ell, m, "s")] = c + 1
            c += 2
    return cols


@lru_cache(maxsize=64)
def _torus_freqs(spec: EnsembleSpec) -> np.ndarray:
    """Dual frequencies nu (rows) of the torus harmonic ensemble."""
    m = spec.manifold
    norm = _torus_norm(m, spec.p)
    J = lattice.ball_points(norm, spec.L, d=m.d)
    if m.generators is not None:
        D = np.linalg.inv(m.generator_matrix).T
        return J.astype(float) @ D.T
    return J.astype(float)


@lru_cache(maxsize=64)
def _partition_for(spec: EnsembleSpec):
    return equal_area_partition(spec.manifold, spec.N)


def basis_eval_many(spec: EnsembleSpec, X: np.ndarray) -> np.ndarray:
    """Orthonormal basis values, shape (n, N). Projection variants only."""
    X = np.atleast_2d(X)
    if spec.variant == "harmonic":
        if spec.manifold.kind == "sphere2":
            return sphere_harmonics(spec.L, X)
        nu = _torus_freqs(spec)
        return np.exp(2j * np.pi * (X @ nu.T))
    if spec.variant == "jittered":
        part = _partition_for(spec)
        idx = part.locate(X)
        out = np.zeros((X.shape[0], spec.N))
        out[np.arange(X.shape[0]), idx] = np.sqrt(spec.N)
        return out
    raise ValueError(f"no orthonormal basis for variant {spec.variant!r}")


def basis_eval(spec: EnsembleSpec, x) -> np.ndarray:
    return basis_eval_many(spec, np.asarray(x)[None, :])[0]


# ------------------------------------------------------------------ kernels

def _stereo(X: np.ndarray) -> np.ndarray:
    """Stereographic chart sending the north pole to infinity."""
    return (X[:, 0] + 1j * X[:, 1]) / (1.0 - X[:, 2])

_ROTATIONS = None


def _safe_rotation(X: np.ndarray) -> np.ndarray:
    """A rotation keeping every row of X away from the chart pole."""
    global _ROTATIONS
    if _ROTATIONS is None:
        ry = np.array([[0.0, 0, 1], [0, 1, 0], [-1, 0, 0]])
        rx = np.array([[1.0, 0, 0], [0, 0, -1], [0, 1, 0]])
        gen = np.random.default_rng(1234)
        extra = np.linalg.qr(gen.normal(size=(3, 3)))[0]
        _ROTATIONS = [np.eye(3), ry, rx, extra]
    for R in _ROTATIONS:
        if np.all((X @ R.T)[:, 2] < 1.0 - 1e-6):
            return R
    raise RuntimeError("no pole-avoiding rotation found")


def _spherical_kernel(N: int, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    R = _safe_rotation(np.vstack([X, Y]))
    fx = _stereo(X @ R.T)
    fy = _stereo(Y @ R.T)
    lx = np.log1p(np.abs(fx) ** 2)
    ly = np.log1p(np.abs(fy) ** 2)
    cross = np.log(1.0 + fx[:, None] * np.conj(fy)[None, :])
    return N * np.exp((N - 1) * (cross - 0.5 * (lx[:, None] + ly[None, :])))


def kernel_gram(spec: EnsembleSpec, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    """Kernel matrix K(x_i, y_j); Hermitian PSD when Y is X."""
    X = np.atleast_2d(X)
    Y = X if Y is None else np.atleast_2d(Y)
    if spec.variant == "harmonic":
        if spec.manifold.kind == "sphere2":
            u = np.clip(X @ Y.T, -1.0, 1.0)
            tab = legendre_table(spec.L, u)
            w = 2 * np.arange(spec.L + 1) + 1.0
            return np.tensordot(w, tab, axes=(0, 0))
        nu = _torus_freqs(spec)
        Ex = np.exp(2j * np.pi * (X @ nu.T))
        Ey = np.exp(2j * np.pi * (Y @ nu.T))
        return Ex @ Ey.conj().T
    if spec.variant == "spherical":
        return _spherical_kernel(spec.N, X, Y)
    if spec.variant == "jittered":
        part = _partition_for(spec)
        ix, iy = part.locate(X), part.locate(Y)
        return spec.N * (ix[:, None] == iy[None, :]).astype(float)
    raise ValueError(f"variant {spec.variant!r} has no determinantal kernel")


def kernel_eval(spec: EnsembleSpec, x, y):
    """K(x, y); complex for the torus and spherical-ensemble kernels."""
    val = kernel_gram(spec, np.asarray(x)[None, :], np.asarray(y)[None, :])[0, 0]
    return val


def kernel_diag_check(spec: EnsembleSpec, samples: int, rng) -> float:
    """Max |K(x,x) - N| over uniformly sampled x; a self-test."""
    X = uniform_sample_many(spec.manifold, samples, rng)
    diag = np.array([kernel_eval(spec, x, x) for x in X])
    return float(np.abs(diag - spec.N).max())
