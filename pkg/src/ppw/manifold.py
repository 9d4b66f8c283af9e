"""Geometry of the supported spaces: the unit 2-sphere and flat d-tori.

Distances, uniform sampling, equal-area partitions, and the quantized
quadrature targets used by the transport module. The volume form is
normalized to total mass 1 everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "ManifoldDesc", "Partition", "QuadratureTarget",
    "sphere2", "torus",
    "geodesic_distance", "pairwise_distance", "uniform_sample",
    "uniform_sample_many", "equal_area_partition", "quadrature_target",
]


@dataclass(frozen=True)
class ManifoldDesc:
    """Which space: 'sphere2' or 'torus' with lattice generators.

    generators are the columns of the lattice basis matrix, stored as a
    nested tuple so the descriptor stays hashable. The identity lattice
    gives the standard torus. Volume is normalized to 1.
    """
    kind: str
    d: int
    generators: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("sphere2", "torus"):
            raise ValueError(f"unknown manifold kind {self.kind!r}")
        if self.kind == "sphere2" and self.d != 2:
            raise ValueError("sphere2 has dimension 2")
        if self.kind == "torus":
            G = self.generator_matrix
            if G.shape != (self.d, self.d) or abs(np.linalg.det(G)) < 1e-12:
                raise ValueError("generators must form an invertible d x d matrix")

    @property
    def generator_matrix(self) -> np.ndarray:
        if self.kind == "sphere2":
            raise ValueError("sphere has no lattice generators")
        if self.generators is None:
            return np.eye(self.d)
        # stored as a tuple of columns
        return np.array(self.generators, dtype=float).T

    @property
    def ambient_dim(self) -> int:
        return 3 if self.kind == "sphere2" else self.d

    @property
    def label(self) -> str:
        if self.kind == "sphere2":
            return "sphere2"
        if self.generators is None:
            return f"torus{self.d}"
        return f"torus{self.d}[lattice]"

    def diameter(self) -> float:
        if self.kind == "sphere2":
            return float(np.pi)
        return _torus_diameter(self)


def sphere2() -> ManifoldDesc:
    return ManifoldDesc("sphere2", 2)


def torus(d: int = 2, generators=None) -> ManifoldDesc:
    """Flat torus R^d / Gamma. generators: columns of the lattice basis."""
    if generators is not None:
        G = np.asarray(generators, dtype=float)
        if G.shape != (d, d) or abs(np.linalg.det(G)) < 1e-12:
            raise ValueError("generators must form an invertible d x d matrix")
        if d == 2:
            G = _gauss_reduce(G)
        gen = tuple(tuple(G[:, j]) for j in range(d))
        return ManifoldDesc("torus", d, gen)
    return ManifoldDesc("torus", d, None)


def _gauss_reduce(G: np.ndarray) -> np.ndarray:
    """Lagrange-Gauss reduction of a 2d lattice basis (columns)."""
    u, v = G[:, 0].copy(), G[:, 1].copy()
    if u @ u > v @ v:
        u, v = v, u
    while True:
        mu = round((u @ v) / (u @ u))
        v = v - mu * u
        if v @ v >= u @ u:
            break
        u, v = v, u
    return np.column_stack([u, v])


def _shift_block(m: ManifoldDesc) -> np.ndarray:
    """All 3^d lattice shifts G z, z in {-1,0,1}^d, shape (3^d, d)."""
    G = m.generator_matrix
    grids = np.meshgrid(*([np.array([-1.0, 0.0, 1.0])] * m.d), indexing="ij")
    Z = np.stack([g.ravel() for g in grids], axis=1)
    return Z @ G.T


def geodesic_distance(m: ManifoldDesc, x, y) -> float:
    """Geodesic distance between two points of m."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("non-finite coordinates")
    if m.kind == "sphere2":
        return float(np.arccos(np.clip(x @ y, -1.0, 1.0)))
    delta = x - y
    shifts = _shift_block(m)
    return float(np.sqrt(((delta[None, :] - shifts) ** 2).sum(axis=1).min()))


def pairwise_distance(m: ManifoldDesc, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Geodesic distance matrix between point arrays X (n,dim) and Y (k,dim)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if m.kind == "sphere2":
        return np.arccos(np.clip(X @ Y.T, -1.0, 1.0))
    delta = X[:, None, :] - Y[None, :, :]
    best = None
    for s in _shift_block(m):
        d2 = ((delta - s) ** 2).sum(axis=2)
        best = d2 if best is None else np.minimum(best, d2)
    return np.sqrt(best)


def uniform_sample_many(m: ManifoldDesc, n: int, rng) -> np.ndarray:
    """n independent samples of the normalized volume measure."""
    if m.kind == "sphere2":
        p = rng.normal(size=(n, 3))
        return p / np.linalg.norm(p, axis=1, keepdims=True)
    t = rng.uniform(size=(n, m.d))
    return t @ m.generator_matrix.T


def uniform_sample(m: ManifoldDesc, rng) -> np.ndarray:
    return uniform_sample_many(m, 1, rng)[0]


def _torus_coords(m: ManifoldDesc, X: np.ndarray) -> np.ndarray:
    """Lattice-basis coordinates in [0,1) for torus points."""
    G = m.generator_matrix
    t = np.linalg.solve(G, np.atleast_2d(X).T).T
    return np.mod(t, 1.0)


@lru_cache(maxsize=32)
def _torus_diameter(m: ManifoldDesc) -> float:
    """Upper bound for the torus diameter (covering radius of the lattice).

    Grid maximum of the distance-to-lattice function plus a Lipschitz slack;
    the function is 1-Lipschitz, so this is a rigorous over-estimate.
    """
    G = m.generator_matrix
    if m.d == 2 and m.generators is None:
        return float(np.sqrt(2.0) / 2.0)
    if m.d == 3 and m.generators is None:
        return float(np.sqrt(3.0) / 2.0)
    k = 65 if m.d == 2 else 17
    axes = [np.linspace(0.0, 1.0, k, endpoint=False) for _ in range(m.d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    T = np.stack([g.ravel() for g in mesh], axis=1)
    X = T @ G.T
    shifts = _shift_block(m)
    best = None
    for s in shifts:
        d2 = ((X - s) ** 2).sum(axis=1)
        best = d2 if best is None else np.minimum(best, d2)
    step = np.linalg.norm(G @ np.full(m.d, 1.0 / k))
    return float(np.sqrt(best.max()) + step)


@dataclass(frozen=True)
class Cell:
    center: np.ndarray
    volume: float
    diameter: float


class Partition:
    """Equal-area partition: centers, exact volumes, diameter bounds.

    Subclasses implement point location and uniform sampling inside a cell,
    which is what jittered sampling needs.
    """

    manifold: ManifoldDesc
    N: int
    centers: np.ndarray
    volumes: np.ndarray
    diameters: np.ndarray

    @property
    def cells(self):
        return [Cell(self.centers[i], float(self.volumes[i]),
                     float(self.diameters[i])) for i in range(self.N)]

    @property
    def q(self) -> float:
        return float(self.diameters.max())

    def locate(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample_in_cell(self, idx: np.ndarray, rng) -> np.ndarray:
        raise NotImplementedError


class SpherePartition(Partition):
    """Recursive zonal construction: polar caps plus collar rings of sectors.

    Cap colatitudes and collar boundaries are placed so every cell has area
    exactly 1/N (up to roundoff); collars are split into equal sectors.
    """

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("N must be >= 1")
        self.manifold = sphere2()
        self.N = N
        # collar structure: colatitude boundaries and per-collar sector counts
        if N == 1:
            bounds = np.array([0.0, np.pi])
            counts = np.array([1])
        elif N == 2:
            bounds = np.array([0.0, np.pi / 2, np.pi])
            counts = np.array([1, 1])
        else:
            theta_c = np.arccos(1.0 - 2.0 / N)
            ideal = np.sqrt(4.0 * np.pi / N)
            n_collars = max(1, int(round((np.pi - 2 * theta_c) / ideal)))
            fitting = (np.pi - 2 * theta_c) / n_collars
            # ideal cell counts per collar, rounded with running correction
            counts = [1]
            correction = 0.0
            for i in range(n_collars):
                a = theta_c + i * fitting
                b = theta_c + (i + 1) * fitting
                ideal_cnt = N * (np.cos(a) - np.cos(b)) / 2.0
                y = max(1, int(round(ideal_cnt + correction)))
                correction += ideal_cnt - y
                counts.append(y)
            counts.append(1)
            counts = np.array(counts)
            # force exact total N by adjusting the largest collar
            excess = counts.sum() - N
            if excess != 0:
                k = 1 + int(np.argmax(counts[1:-1]))
                counts[k] -= excess
                if counts[k] < 1:
                    raise RuntimeError("degenerate zonal partition")
            # exact-area colatitude boundaries from cumulative cell counts
            cum = np.concatenate([[0], np.cumsum(counts)])
            bounds = np.arccos(np.clip(1.0 - 2.0 * cum / N, -1.0, 1.0))
        self.bounds = bounds
        self.counts = counts
        self._build_cells()

    def _build_cells(self):
        N = self.N
        centers = np.zeros((N, 3))
        diams = np.zeros(N)
        starts = np.concatenate([[0], np.cumsum(self.counts)])
        for c, (ta, tb, cnt) in enumerate(zip(self.bounds[:-1],
                                              self.bounds[1:], self.counts)):
            width = 2.0 * np.pi / cnt
            # area-median colatitude for the center
            tm = np.arccos(np.clip((np.cos(ta) + np.cos(tb)) / 2.0, -1, 1))
            if cnt == 1 and ta == 0.0:
                tm = 0.0
            if cnt == 1 and tb >= np.pi - 1e-12 and self.counts.shape[0] > 1 \
                    and c == self.counts.shape[0] - 1:
                tm = np.pi
            diam = _sphere_rect_diameter(ta, tb, width if cnt > 1 else 2 * np.pi)
            for k in range(cnt):
                phi = (k + 0.5) * width
                i = starts[c] + k
                centers[i] = (np.sin(tm) * np.cos(phi),
                              np.sin(tm) * np.sin(phi),
                              np.cos(tm))
                diams[i] = diam
        if N == 1:
            centers[0] = (0.0, 0.0, 1.0)
            diams[0] = np.pi
        self.centers = centers
        self.volumes = np.full(N, 1.0 / N)
        self.diameters = diams

    def locate(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        theta = np.arccos(np.clip(X[:, 2], -1, 1))
        phi = np.mod(np.arctan2(X[:, 1], X[:, 0]), 2 * np.pi)
        collar = np.clip(np.searchsorted(self.bounds, theta, side="right") - 1,
                         0, len(self.counts) - 1)
        starts = np.concatenate([[0], np.cumsum(self.counts)])
        cnt = self.counts[collar]
        sector = np.minimum((phi / (2 * np.pi) * cnt).astype(int), cnt - 1)
        return starts[collar] + sector

    def sample_in_cell(self, idx, rng) -> np.ndarray:
        idx = np.atleast_1d(idx)
        starts = np.concatenate([[0], np.cumsum(self.counts)])
        collar = np.searchsorted(starts, idx, side="right") - 1
        sector = idx - starts[collar]
        ta, tb = self.bounds[collar], self.bounds[collar + 1]
        cnt = self.counts[collar]
        # cos(theta) uniform on [cos tb, cos ta], phi uniform in the sector
        u = rng.uniform(size=idx.shape[0])
        ct = np.cos(ta) + u * (np.cos(tb) - np.cos(ta))
        st = np.sqrt(np.maximum(0.0, 1.0 - ct ** 2))
        phi = (sector + rng.uniform(size=idx.shape[0])) * (2 * np.pi / cnt)
        return np.column_stack([st * np.cos(phi), st * np.sin(phi), ct])


def _sphere_rect_diameter(ta: float, tb: float, w: float) -> float:
    """Exact geodesic diameter of {theta in [ta,tb]} x {phi width w}.

    For fixed colatitudes the angle cosine decreases in the azimuth gap, so
    the maximum distance sits at full gap; over the colatitude square the
    minimum of the cosine is attained at corners or at a one-edge critical
    point (no interior critical points for 0 < w < pi).
    """
    weff = min(w, np.pi)
    cw = np.cos(weff)
    best = 1.0
    for t1 in (ta, tb):
        for t2 in (ta, tb):
            f = np.cos(t1) * np.cos(t2) + np.sin(t1) * np.sin(t2) * cw
            best = min(best, f)
        R = np.hypot(np.cos(t1), np.sin(t1) * cw)
        psi = np.arctan2(np.sin(t1) * cw, np.cos(t1))
        t2s = psi + np.pi
        if ta < t2s < tb:
            best = min(best, -R)
    return float(np.arccos(np.clip(best, -1.0, 1.0)))


class TorusPartition(Partition):
    """Axis slab splitting with exact 1/N volumes on the flat torus.

    Axis 0 is cut into near-cube-root (or square-root) many slabs whose
    thicknesses are proportional to their cell counts, recursively; every
    cell is a box in lattice coordinates with volume exactly 1/N.
    """

    def __init__(self, m: ManifoldDesc, N: int):
        if N < 1:
            raise ValueError("N must be >= 1")
        self.manifold = m
        self.N = N
        boxes = np.zeros((N, m.d, 2))
        _split_boxes(boxes, np.repeat([[0.0, 1.0]], m.d, axis=0), N, 0, 0)
        self.boxes = boxes
        G = m.generator_matrix
        mids = (boxes[:, :, 0] + boxes[:, :, 1]) / 2.0
        self.centers = mids @ G.T
        self.volumes = np.full(N, 1.0 / N)
        sides = boxes[:, :, 1] - boxes[:, :, 0]
        # diameter of the image box under G: max over corner sign patterns
        signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * m.d),
                                     indexing="ij")).reshape(m.d, -1).T
        diag = np.sqrt((((sides[:, None, :] * signs[None, :, :]) @ G.T) ** 2)
                       .sum(axis=2)).max(axis=1)
        self.diameters = np.minimum(diag, m.diameter())
        # row structure for locate: sorted boxes are built in axis order
        self._lo = boxes[:, :, 0].copy()
        self._hi = boxes[:, :, 1].copy()

    def locate(self, X: np.ndarray) -> np.ndarray:
        t = _torus_coords(self.manifold, X)
        eps = 1e-12
        inside = (t[:, None, :] >= self._lo[None, :, :] - eps) & \
                 (t[:, None, :] < self._hi[None, :, :] + eps)
        return inside.all(axis=2).argmax(axis=1)

    def sample_in_cell(self, idx, rng) -> np.ndarray:
        idx = np.atleast_1d(idx)
        lo = self._lo[idx]
        hi = self._hi[idx]
        t = lo + rng.uniform(size=lo.shape) * (hi - lo)
        return t @ self.manifold.generator_matrix.T


def _split_boxes(out: np.ndarray, box: np.ndarray, n: int, axis: int, pos: int) -> int:
    """Fill out[pos:pos+n] with n equal-volume sub-boxes of box."""
    d = box.shape[0]
    if axis == d - 1:
        lo, hi = box[axis]
        edges = lo + (hi - lo) * np.arange(n + 1) / n
        for i in range(n):
            out[pos + i] = box
            out[pos + i, axis] = (edges[i], edges[i + 1])
        return pos + n
    r = max(1, int(round(n ** (1.0 / (d - axis)))))
    counts = np.full(r, n // r)
    counts[: n % r] += 1
    counts = counts[counts > 0]
    lo, hi = box[axis]
    edges = lo + (hi - lo) * np.concatenate([[0], np.cumsum(counts)]) / n
    for i, c in enumerate(counts):
        sub = box.copy()
        sub[axis] = (edges[i], edges[i + 1])
        pos = _split_boxes(out, sub, int(c), axis + 1, pos)
    return pos


def equal_area_partition(m: ManifoldDesc, N: int) -> Partition:
    """N cells of volume exactly 1/N with recorded diameter bounds."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if m.kind == "sphere2":
        return SpherePartition(N)
    return TorusPartition(m, N)


@dataclass(frozen=True)
class QuadratureTarget:
    """Quantized stand-in for the volume form: M nodes of weight 1/M.

    q is the max cell diameter of the underlying partition, a valid upper
    bound for W2 between the volume form and this discrete measure.
    """
    points: np.ndarray
    weights: np.ndarray
    q: float

    @property
    def M(self) -> int:
        return self.points.shape[0]


def quadrature_target(m: ManifoldDesc, M: int) -> QuadratureTarget:
    part = equal_area_partition(m, M)
    return QuadratureTarget(part.centers, np.full(M, 1.0 / M), part.q)
