"""Spectral statistics of sampled configurations: eigenspace sums, the
heat-smoothing W2 upper bound and its optimization over the smoothing time,
exact and Monte Carlo variances of linear statistics, the GAF eigenspace
variance bound, and log-log rate fitting.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, exp1

from .kernels import EnsembleSpec, kernel_gram
from .manifold import quadrature_target
from .samplers import sample_ensemble
from .spectral import _torus_shells

__all__ = [
    "SmoothingBoundConfig", "RateFit", "EigenStatTable", "VarianceEstimate",
    "MCStats", "SmoothingOpt",
    "eigenspace_statistic", "smoothing_bound", "optimize_smoothing_time",
    "variance_exact", "variance_mc", "gaf_variance_bound", "fit_rate",
]


@dataclass
class SmoothingBoundConfig:
    """Parameters of the heat-smoothing W2 bound."""
    t: float
    K_M: float = 0.0
    l_max: int | None = None
    tail_mode: str = "weyl_bound"


class EigenStatTable:
    """Lazily extended table of S_l = sum over the eigenspace basis of
    |sum_n phi(x_n)|^2, computed from eigenspace kernels so no individual
    eigenfunctions are needed.

    Sphere: pairwise-cosine Legendre recurrence, one O(N^2) pass per degree.
    Torus: exponential sums over dual-lattice shells, grown on demand.
    """

    def __init__(self, ps):
        self.m = ps.spec.manifold
        X = np.asarray(ps.points, dtype=float)
        self.N = X.shape[0]
        if self.m.kind == "sphere2":
            u = np.clip(X @ X.T, -1.0, 1.0)
            self._u = u
            self._P_prev = np.ones_like(u)
            self._P_cur = u.copy()
            # S_0 = N^2 (constant eigenfunction), S_1 = 3 sum P_1
            self._S = [float(self.N) ** 2, 3.0 * float(u.sum())]
            self._lam = [0.0, 2.0]
            self._mult = [1, 3]
        else:
            self._X = X
            self._S = [float(self.N) ** 2]
            self._lam = [0.0]
            self._mult = [1]
            self._cap = 16.0

    def extend(self, idx: int) -> None:
        if self.m.kind == "sphere2":
            while len(self._S) <= idx:
                ell = len(self._S)  # degree about to be appended
                Pn = ((2 * ell - 1) * self._u * self._P_cur
                      - (ell - 1) * self._P_prev) / ell
                self._P_prev, self._P_cur = self._P_cur, Pn
                self._S.append(float((2 * ell + 1) * Pn.sum()))
                self._lam.append(float(ell * (ell + 1)))
                self._mult.append(2 * ell + 1)
            return
        while True:
            descs, vecs = _torus_shells(self.m, self._cap)
            if len(descs) > idx:
                break
            self._cap *= 2.0
        for i in range(len(self._S), idx + 1):
            V = vecs[i]
            ph = np.exp(2j * np.pi * (self._X @ V.T)).sum(axis=0)
            self._S.append(float((np.abs(ph) ** 2).sum()))
            self._lam.append(descs[i].eigenvalue)
            self._mult.append(descs[i].multiplicity)

    def get(self, idx: int):
        """(eigenvalue, multiplicity, S) of eigenspace idx."""
        self.extend(idx)
        return self._lam[idx], self._mult[idx], self._S[idx]

    def arrays(self, upto: int):
        """(lam, mult, S) arrays for indices 0..upto inclusive."""
        self.extend(upto)
        k = upto + 1
        return (np.array(self._lam[:k]), np.array(self._mult[:k]),
                np.array(self._S[:k]))


def eigenspace_statistic(ps, ell: int, table: EigenStatTable | None = None) -> float:
    """S_ell of the configuration; always in [0, N^2 m_ell]."""
    if table is None:
        table = EigenStatTable(ps)
    _, mult, S = table.get(ell)
    return float(min(max(S, 0.0), ps.points.shape[0] ** 2 * mult))


def _default_cutoff(table: EigenStatTable, t: float) -> int:
    """Smallest truncation index whose eigenvalue reaches 40 / t."""
    target = 40.0 / t
    if table.m.kind == "sphere2":
        ell = int(np.ceil((-1.0 + np.sqrt(1.0 + 4.0 * target)) / 2.0))
        return max(ell, 1)
    idx = 1
    while table.get(idx)[0] < target:
        idx += 1
    return idx


def _covering_radius_bound(D: np.ndarray) -> float:
    """Half the longest diagonal of the fundamental cell of the lattice with
    basis columns D; every point of space is within this of a lattice point."""
    d = D.shape[1]
    if d == 2:
        # reduce the basis first so the diagonal bound is tight
        b1, b2 = D[:, 0].copy(), D[:, 1].copy()
        for _ in range(64):
            if b1 @ b1 > b2 @ b2:
                b1, b2 = b2, b1
            mu = round((b2 @ b1) / (b1 @ b1))
            if mu == 0:
                break
            b2 = b2 - mu * b1
        D = np.column_stack([b1, b2])
    signs = np.array(np.meshgrid(*([[1.0, -1.0]] * d))).reshape(d, -1)
    return 0.5 * float(np.linalg.norm(D @ signs, axis=0).max())


def _sphere_tail(ell_max: int, t: float) -> float:
    """sum over ell > ell_max of e^{-ell(ell+1)t} (2 ell + 1)/(ell(ell+1)),
    over-bounded by exp1 via the slice comparison e^{-l^2 t} 2/l <=
    2 int_{l-1}^{l} e^{-s^2 t}/s ds."""
    return float(exp1(ell_max ** 2 * t))


def _torus_tail(m, R: float, count_inside: int, t: float) -> float:
    """Closed-form over-bound of sum over dual vectors ||nu|| > R of
    e^{-4 pi^2 ||nu||^2 t} / (4 pi^2 ||nu||^2).

    Summation by parts against the ball-count majorant
    #B(r) <= V_d (r + rho)^d / det (rho a covering-radius bound) gives
    int_R^inf (-h') F(r) dr - h(R) #B(R) with #B(R) known exactly; the
    integral is elementary after the expansion (r+rho)^d / r. The construction
    makes the bound decrease whenever the cutoff grows.
    """
    d = m.d
    G = m.generator_matrix
    D = np.linalg.inv(G).T
    det = abs(np.linalg.det(D))
    rho = _covering_radius_bound(D)
    Vd = np.pi if d == 2 else 4.0 * np.pi / 3.0
    beta = 4.0 * np.pi ** 2 * t
    x = beta * R * R
    if x > 700.0:
        return 0.0
    eR = np.exp(-x)
    sb = np.sqrt(beta)
    # I_n = int_R^inf e^{-beta r^2} r^n dr for n = -1, 0, 1, 2
    I = {
        -1: 0.5 * exp1(x),
        0: 0.5 * np.sqrt(np.pi) / sb * erfc(sb * R),
        1: eR / (2.0 * beta),
        2: R * eR / (2.0 * beta) + np.sqrt(np.pi) * erfc(sb * R) / (4.0 * beta * sb),
    }
    from math import comb
    integral = sum(comb(d, k) * rho ** (d - k) * I[k - 1] for k in range(d + 1))
    val = (2.0 * (Vd / det) * (1.0 + 1.0 / x) * integral
           - (eR / x) * count_inside)
    return float(max(val, 0.0))


def smoothing_bound(ps, cfg: SmoothingBoundConfig,
                    table: EigenStatTable | None = None) -> float:
    """Rigorous W2 upper bound for the configuration:
    sqrt(d t + K_M t^{3/2}) + 2 sqrt((1/N^2)(head + tail)), the head summing
    e^{-lam t}/lam S_l over eigenspaces up to the truncation index and the
    tail over-bounding the remainder through S_l <= N^2 m_l and lattice or
    degree counting."""
    if cfg.t <= 0:
        raise ValueError("smoothing time must be positive")
    if cfg.tail_mode != "weyl_bound":
        raise ValueError(f"unknown tail_mode {cfg.tail_mode!r}")
    if table is None:
        table = EigenStatTable(ps)
    t = cfg.t
    N = table.N
    d = table.m.d
    cut = cfg.l_max if cfg.l_max is not None else _default_cutoff(table, t)
    if cut < 1:
        raise ValueError("l_max must be >= 1")
    lam, mult, S = table.arrays(cut)
    S = np.clip(S, 0.0, (float(N) ** 2) * mult)
    head = float((np.exp(-lam[1:] * t) / lam[1:] * S[1:]).sum())
    if table.m.kind == "sphere2":
        tail = N ** 2 * _sphere_tail(cut, t)
    else:
        R = np.sqrt(lam[cut] / (4.0 * np.pi ** 2))
        tail = N ** 2 * _torus_tail(table.m, R, int(mult.sum()), t)
    smooth = np.sqrt(d * t + cfg.K_M * t ** 1.5)
    return float(smooth + 2.0 * np.sqrt((head + tail) / N ** 2))


@dataclass(frozen=True)
class SmoothingOpt:
    t_star: float
    bound_star: float


def optimize_smoothing_time(ps, cfg: SmoothingBoundConfig | None = None,
                            tol: float = 1e-3) -> SmoothingOpt:
    """Golden-section minimization of the smoothing bound over
    log t in [log N^{-2}, 0]; the eigenspace table is shared across
    evaluations so only the deepest probe pays the extension cost."""
    N = ps.points.shape[0]
    K_M = cfg.K_M if cfg is not None else 0.0
    table = EigenStatTable(ps)

    def f(logt):
        return smoothing_bound(ps, SmoothingBoundConfig(t=np.exp(logt), K_M=K_M),
                               table)

    lo, hi = -2.0 * np.log(max(N, 1)), 0.0
    if hi - lo < 1e-12:
        return SmoothingOpt(1.0, f(0.0))
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    f1, f2 = f(c1), f(c2)
    while b - a > tol:
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - invphi * (b - a)
            f1 = f(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (b - a)
            f2 = f(c2)
    logt = c1 if f1 <= f2 else c2
    return SmoothingOpt(float(np.exp(logt)), float(min(f1, f2)))


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    refinement_delta: float

    def __float__(self):
        return self.value


def variance_exact(spec: EnsembleSpec, f, M: int = 3600,
                   M_coarse: int = 2304) -> VarianceEstimate:
    """Variance of the linear statistic sum f(x_n) under a projection
    ensemble, by the double quadrature of
    (1/2) integral |f(x)-f(y)|^2 |K(x,y)|^2 dx dy over equal-area grids;
    the coarse-vs-fine difference is reported as refinement_delta."""
    if spec.variant not in ("harmonic", "jittered"):
        raise ValueError(f"no projection kernel for variant {spec.variant!r}")

    def once(Mq):
        tg = quadrature_target(spec.manifold, Mq)
        X = tg.points
        fx = np.asarray(f(X), dtype=float)
        acc = 0.0
        for s in range(0, Mq, 256):
            e = min(s + 256, Mq)
            Kb = kernel_gram(spec, X[s:e], X)
            W = (fx[s:e, None] - fx[None, :]) ** 2 * np.abs(Kb) ** 2
            acc += W.sum()
        return 0.5 * acc / Mq ** 2

    fine = once(M)
    coarse = once(M_coarse)
    return VarianceEstimate(float(fine), float(abs(fine - coarse)))


@dataclass(frozen=True)
class MCStats:
    mean: float
    variance: float
    stderr: float        # jackknife standard error of the variance
    stderr_mean: float
    replicas: int


def variance_mc(spec: EnsembleSpec, f, replicas: int, rng) -> MCStats:
    """Monte Carlo mean/variance of the linear statistic over independent
    replicas, with a jackknife standard error for the variance."""
    if replicas < 100:
        raise ValueError("need at least 100 replicas")
    vals = np.empty(replicas)
    for r in range(replicas):
        ps = sample_ensemble(spec, rng)
        vals[r] = float(np.sum(f(ps.points)))
    mean = float(vals.mean())
    var = float(vals.var(ddof=1))
    R = replicas
    s1 = vals.sum()
    s2 = (vals ** 2).sum()
    mean_i = (s1 - vals) / (R - 1)
    var_i = (s2 - vals ** 2 - (R - 1) * mean_i ** 2) / (R - 2)
    se_var = float(np.sqrt((R - 1) / R * ((var_i - var_i.mean()) ** 2).sum()))
    return MCStats(mean, var, se_var, float(vals.std(ddof=1) / np.sqrt(R)), R)


def gaf_variance_bound(ell: int, N: int) -> float:
    """Upper bound (2l+1) (l(l+1))^2 pi^2 / (6N) on the summed variance of
    degree-l spherical-harmonic statistics under the GAF zero ensemble."""
    if ell < 1:
        raise ValueError("ell must be >= 1; the degree-0 statistic is "
                         "deterministic")
    return float((2 * ell + 1) * (ell * (ell + 1)) ** 2 * np.pi ** 2 / (6.0 * N))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    model: str
    residual_sse: float
    point_stderr: np.ndarray = field(repr=False)
    se_slope: float = np.nan
    n_points: int = 0


def fit_rate(records, model: str = "pure_power") -> RateFit:
    """OLS fit of log W against log N.

    pure_power fits log W = slope log N + c; power_with_sqrt_log removes a
    sqrt(log N) factor first, so data W = sqrt(log N) N^g recovers slope g
    with zero residual. Records are (N, W) or (N, W, stderr) tuples.
    """
    if model not in ("pure_power", "power_with_sqrt_log"):
        raise ValueError(f"unknown model {model!r}")
    recs = [tuple(r) for r in records]
    Ns = np.array([r[0] for r in recs], dtype=float)
    Ws = np.array([r[1] for r in recs], dtype=float)
    ses = np.array([r[2] if len(r) > 2 else np.nan for r in recs], dtype=float)
    if len(np.unique(Ns)) < 4:
        raise ValueError("need at least 4 distinct N values")
    if (Ws <= 0).any():
        raise ValueError("all W values must be positive")
    x = np.log(Ns)
    y = np.log(Ws)
    if model == "power_with_sqrt_log":
        if (Ns <= 1).any():
            raise ValueError("N must exceed 1 for the log-corrected model")
        y = y - 0.5 * np.log(np.log(Ns))
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    sse = float(resid @ resid)
    n = len(x)
    if n > 2:
        sxx = ((x - x.mean()) ** 2).sum()
        se_slope = float(np.sqrt(sse / (n - 2) / sxx))
    else:
        se_slope = np.nan
    return RateFit(float(coef[0]), float(coef[1]), model, sse, ses, se_slope, n)
