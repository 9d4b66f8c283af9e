"""Samplers for every ensemble: projection DPPs via sequential conditional
sampling, the spherical ensemble via generalized eigenvalues, GAF zeros via
companion matrices, and i.i.d. baselines.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .kernels import EnsembleSpec, basis_eval_many, _partition_for
from .manifold import ManifoldDesc, uniform_sample_many

__all__ = [
    "PointSet", "EnvelopeViolation",
    "sample_projection_dpp", "sample_spherical_ensemble", "sample_gaf_zeros",
    "sample_iid", "sample_ensemble",
]


@dataclass
class PointSet:
    """A sampled configuration with its provenance."""
    points: np.ndarray
    spec: EnsembleSpec
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.points.shape[0]


class EnvelopeViolation(RuntimeError):
    """A rejection-sampling candidate exceeded the certified envelope."""


@lru_cache(maxsize=16)
def _envelope_grid(m: ManifoldDesc) -> np.ndarray:
    """Fixed quasi-uniform grid of about 1e4 nodes for envelope estimation."""
    n = 10_000
    if m.kind == "sphere2":
        i = np.arange(n)
        z = 1.0 - (2.0 * i + 1.0) / n
        phi = i * np.pi * (3.0 - np.sqrt(5.0))
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    k = int(np.ceil(n ** (1.0 / m.d)))
    axes = [(np.arange(k) + 0.5) / k] * m.d
    mesh = np.meshgrid(*axes, indexing="ij")
    T = np.stack([g.ravel() for g in mesh], axis=1)
    return T @ m.generator_matrix.T


def _hkpv_once(spec: EnsembleSpec, rng, safety: float, batch: int = 64):
    """One sequential-sampler run; raises EnvelopeViolation on a bad envelope."""
    N = spec.N
    m = spec.manifold
    grid = _envelope_grid(m)
    Phi_grid = basis_eval_many(spec, grid)
    r2_grid = np.abs(Phi_grid) ** 2 @ np.ones(N)
    cdtype = Phi_grid.dtype
    E = np.zeros((N, N), dtype=cdtype)
    points = np.zeros((N, m.ambient_dim))
    rejections = 0
    for i in range(N):
        remaining = N - i
        s_hat = r2_grid.max() / remaining
        env = s_hat * safety
        accepted = False
        while not accepted:
            C = uniform_sample_many(m, batch, rng)
            PhiC = basis_eval_many(spec, C)
            if i:
                coef = PhiC @ E[:i].conj().T
                r2 = (np.abs(PhiC) ** 2).sum(axis=1) - (np.abs(coef) ** 2).sum(axis=1)
            else:
                r2 = (np.abs(PhiC) ** 2).sum(axis=1)
            dens = np.maximum(r2, 0.0) / remaining
            if np.any(dens > env):
                raise EnvelopeViolation(
                    f"step {i}: density {dens.max():.6g} exceeds envelope {env:.6g}")
            u = rng.uniform(size=batch)
            hits = np.nonzero(u * env < dens)[0]
            if hits.size == 0:
                rejections += batch
                continue
            j = hits[0]
            rejections += int(j)
            points[i] = C[j]
            phi = PhiC[j]
            accepted = True
        # contract the frame: orthonormalize phi against the accepted span,
        # with one reorthogonalization pass
        v = phi.astype(cdtype)
        if i:
            v = v - (E[:i].conj() @ v) @ E[:i]
            v = v - (E[:i].conj() @ v) @ E[:i]
        nv = np.linalg.norm(v)
        if nv < 1e-10:
            raise EnvelopeViolation(f"step {i}: degenerate residual norm {nv:.3g}")
        E[i] = v / nv
        r2_grid = np.maximum(r2_grid - np.abs(Phi_grid @ E[i].conj()) ** 2, 0.0)
    return points, rejections


def sample_projection_dpp(spec: EnsembleSpec, rng, seed: int | None = None,
                          safety: float = 1.2, max_retries: int = 3) -> PointSet:
    """Exact projection-DPP sample by sequential conditional sampling.

    At step i the next point follows the conditional density K_i(x,x)/(N-i+1);
    sampling is by rejection against the uniform proposal with envelope
    safety * (grid sup of the density). Candidates above the envelope abort
    the attempt, and the run retries with a larger safety factor so an
    invalid envelope is detectable rather than silently biasing.
    """
    if spec.variant == "jittered":
        part = _partition_for(spec)
        pts = part.sample_in_cell(np.arange(spec.N), rng)
        return PointSet(pts, spec, seed, {"rejections": 0})
    if spec.variant != "harmonic":
        raise ValueError(f"not a projection variant: {spec.variant!r}")
    s = safety
    for attempt in range(max_retries + 1):
        try:
            pts, rej = _hkpv_once(spec, rng, s)
            return PointSet(pts, spec, seed,
                            {"rejections": rej, "retries": attempt, "safety": s})
        except EnvelopeViolation:
            if attempt == max_retries:
                raise
            s *= 1.5
    raise AssertionError("unreachable")


def sample_spherical_ensemble(N: int, rng, seed: int | None = None) -> PointSet:
    """Eigenvalues of the pencil (B, A) for complex Gaussian A, B, lifted
    to the sphere by inverse stereographic projection."""
    from .kernels import spherical_ensemble
    spec = spherical_ensemble(N)
    for attempt in range(3):
        A = (rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))) / np.sqrt(2)
        B = (rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))) / np.sqrt(2)
        try:
            z = scipy.linalg.eig(B, A, right=False)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(z)):
            return PointSet(_lift(z), spec, seed, {"retries": attempt})
    raise RuntimeError("generalized eigenvalue computation failed 3 times")


def _lift(z: np.ndarray) -> np.ndarray:
    """Inverse stereographic projection, north pole at infinity."""
    den = 1.0 + np.abs(z) ** 2
    return np.column_stack([2 * z.real / den, 2 * z.imag / den,
                            (np.abs(z) ** 2 - 1.0) / den])


def _gaf_roots(c: np.ndarray) -> np.ndarray:
    """All roots of sum c_n z^n, stabilized for large moduli.

    Small roots come from the balanced companion matrix of the polynomial,
    large ones from the reversed polynomial z^N f(1/z); each root is
    polished with a few Newton steps in its well-conditioned chart.
    """
    N = len(c) - 1
    roots_p = np.roots(c[::-1])
    roots_q = np.roots(c)
    inside = roots_p[np.abs(roots_p) <= 1.0]
    wout = roots_q[np.abs(roots_q) < 1.0]
    if inside.size + wout.size == N:
        inside = _newton(c, inside)
        wout = _newton(c[::-1], wout)
        roots = np.concatenate([inside, 1.0 / wout]) if wout.size else inside
    else:
        roots = _newton(c, roots_p)
    return roots


def _newton(c: np.ndarray, z: np.ndarray, iters: int = 3) -> np.ndarray:
    dc = c[1:] * np.arange(1, len(c))
    for _ in range(iters):
        f = np.polyval(c[::-1], z)
        df = np.polyval(dc[::-1], z)
        step = np.where(df != 0, f / np.where(df != 0, df, 1.0), 0.0)
        z = z - np.clip(np.abs(step), 0, 0.5) * np.exp(1j * np.angle(step))
    return z


def _gaf_residual(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Relative backward error |f(z)| / sum |c_n| |z|^n, via the reversed
    polynomial outside the unit disk."""
    out = np.empty(z.shape[0])
    az = np.abs(z)
    for i, (zi, ai) in enumerate(zip(z, az)):
        if ai <= 1.0:
            num = abs(np.polyval(c[::-1], zi))
            den = np.polyval(np.abs(c[::-1]), ai)
        else:
            w = 1.0 / zi
            num = abs(np.polyval(c, w))
            den = np.polyval(np.abs(c), abs(w))
        out[i] = num / max(den, 1e-300)
    return out


def sample_gaf_zeros(N: int, rng, seed: int | None = None, n0: int = 0) -> PointSet:
    """Zeros of the Kostlan random polynomial sum a_n sqrt(C(N,n)) z^n,
    lifted to the sphere. n0 = 1 drops the constant coefficient (forcing a
    deterministic root at 0), matching the alternative indexing."""
    from .kernels import gaf_zeros
    spec = gaf_zeros(N, n0=n0)
    a = (rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)) / np.sqrt(2)
    if n0 == 1:
        a[0] = 0.0
    n = np.arange(N + 1)
    c = a * np.exp(0.5 * (gammaln(N + 1) - gammaln(n + 1) - gammaln(N - n + 1)))
    roots = _gaf_roots(c)
    if roots.shape[0] != N:
        raise RuntimeError(f"root count {roots.shape[0]} != {N}")
    res = _gaf_residual(c, roots)
    meta = {"max_residual": float(res.max())}
    if res.max() > 1e-6:
        meta["residual_warning"] = True
    return PointSet(_lift(roots), spec, seed, meta)


def sample_iid(m: ManifoldDesc, N: int, rng, seed: int | None = None) -> PointSet:
    from .kernels import iid
    return PointSet(uniform_sample_many(m, N, rng), iid(m, N), seed, {})


def sample_ensemble(spec: EnsembleSpec, rng, seed: int | None = None) -> PointSet:
    """Dispatch a sample of any ensemble variant."""
    if spec.variant in ("harmonic", "jittered"):
        return sample_projection_dpp(spec, rng, seed)
    if spec.variant == "spherical":
        return sample_spherical_ensemble(spec.N, rng, seed)
    if spec.variant == "gaf":
        return sample_gaf_zeros(spec.N, rng, seed, n0=spec.n0)
    if spec.variant == "iid":
        return sample_iid(spec.manifold, spec.N, rng, seed)
    raise ValueError(f"unknown variant {spec.variant!r}")
