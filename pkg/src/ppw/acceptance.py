"""Acceptance suite: thirteen numbered criteria combining Monte Carlo rate
reproduction (fitted log-log slopes inside pinned windows) with exact
inequality and identity checks. run_all executes every criterion with
deterministic seeding and returns one CriterionResult each; the CLI `accept`
subcommand and the test suite both route through here.

Frozen constants below (packing ratio caps, the Szego envelope cap) were
measured once from exhaustive enumeration at the pinned scales and recorded
with margin; the suite re-measures and compares against them.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cli import build_spec, manifold_by_name
from .kernels import _torus_norm
from .lattice import (annulus_difference_count, ball_points, count_ball,
                      gauss_circle_check, p_norm)
from .samplers import sample_ensemble
from .spectral import jacobi_P, szego_quantities
from .statistics import (SmoothingBoundConfig, fit_rate, gaf_variance_bound,
                         optimize_smoothing_time, variance_exact, variance_mc)
from .transport import solve_discrete_ot, w1_packing_lower_bound, w2_to_volume

# slope windows per criterion
WINDOW_SPHERE = (-0.58, -0.42)
WINDOW_GAF = (-0.60, -0.40)
WINDOW_TORUS = (-0.58, -0.42)
WINDOW_HEX = (-0.60, -0.40)
WINDOW_JITTER3 = (-0.40, -0.27)

# measured 2.125 (p=2) and 2.9168 (p=inf, hex dual) over L in {8,16,32,64},
# all 0 < ||k|| < L/2; cap frozen with margin
PACKING_RATIO_CAP = 3.0
# measured envelope max 0.4237 over the four parameter pairs, L in 10..200
SZEGO_CAP = 0.5
# late/mid saturation ratio measured <= 1.033; a power-law growth of L^0.3
# would exceed 1.09 on the same windows
SZEGO_SATURATION_CAP = 1.08

_SWEEP_IDS = {"c1": 1, "c2": 2, "c3": 3, "c4p2": 41, "c4pinf": 42,
              "c4hex": 43, "c5sphere": 51, "c5torus": 52, "c6": 6}


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    details: str
    data: dict = field(default_factory=dict)


@dataclass
class _Record:
    key: str
    N: int
    replica: int
    w2: float
    bracket_low: float
    bracket_high: float
    packing: float
    bound: float | None = None
    seconds: float = 0.0


class Suite:
    """Shared state: sweeps run once, criteria 5/7/13 reuse the records."""

    def __init__(self, seed: int = 0, quick: bool = False, log=None):
        self.seed = seed
        self.quick = quick
        self.records: dict[str, list[_Record]] = {}
        self.fits: dict[str, object] = {}
        self._log = log if log is not None else (lambda s: None)

    def reps(self, r: int) -> int:
        return max(4, r // 5) if self.quick else r

    def _rng(self, sweep_id: int, N: int, rep: int):
        ss = np.random.SeedSequence(entropy=self.seed,
                                    spawn_key=(sweep_id, N, rep))
        return np.random.default_rng(ss)

    def sweep(self, key: str, specs, replicas: int, *, bounds: bool = False,
              m_mult: int = 64) -> list:
        if key in self.records:
            return self.records[key]
        recs = []
        sid = _SWEEP_IDS[key]
        for spec in specs:
            t0 = time.perf_counter()
            for rep in range(replicas):
                rng = self._rng(sid, spec.N, rep)
                t1 = time.perf_counter()
                ps = sample_ensemble(spec, rng)
                est = w2_to_volume(ps, M=m_mult * spec.N, solver="exact")
                dt = time.perf_counter() - t1   # sampling + transport only
                bound = None
                if bounds:
                    bound = optimize_smoothing_time(
                        ps, SmoothingBoundConfig(t=1.0, K_M=0.0)).bound_star
                recs.append(_Record(
                    key, spec.N, rep, est.value, est.bracket_low,
                    est.bracket_high,
                    w1_packing_lower_bound(spec.N, spec.manifold),
                    bound, dt))
            self._log(f"{key}: N={spec.N} x{replicas} done "
                      f"({time.perf_counter() - t0:.1f}s)")
        self.records[key] = recs
        return recs

    def fit(self, key: str, model: str = "pure_power"):
        fk = (key, model)
        if fk not in self.fits:
            by_n = {}
            for r in self.records[key]:
                by_n.setdefault(r.N, []).append(r.w2)
            means = [(N, float(np.mean(v))) for N, v in sorted(by_n.items())]
            self.fits[fk] = fit_rate(means, model)
        return self.fits[fk]


def _slope_criterion(suite, index, name, key, specs, replicas, window,
                     bounds=False, budget_s=None):
    recs = suite.sweep(key, specs, suite.reps(replicas), bounds=bounds)
    core = sum(r.seconds for r in recs)   # sampling + transport time
    ft = suite.fit(key)
    lo, hi = window
    ok = lo <= ft.slope <= hi
    details = (f"slope={ft.slope:.4f} (window [{lo}, {hi}]), "
               f"sse={ft.residual_sse:.3e}, core {core:.0f}s")
    if budget_s is not None:
        ok = ok and core <= budget_s
        details += f" (budget {budget_s:.0f}s)"
    return CriterionResult(index, name, bool(ok), details,
                           {"slope": ft.slope, "seconds": core})


# ------------------------------------------------------------ criteria 1-6

def criterion_1(suite: Suite) -> CriterionResult:
    m = manifold_by_name("sphere2")
    specs = [build_spec("harmonic", m, L=L) for L in (3, 5, 7, 11, 15, 23, 31)]
    return _slope_criterion(
        suite, 1, "harmonic ensemble rate on the sphere", "c1", specs, 20,
        WINDOW_SPHERE, bounds=True, budget_s=1800.0)


def criterion_2(suite: Suite) -> CriterionResult:
    m = manifold_by_name("sphere2")
    specs = [build_spec("spherical", m, N=N)
             for N in (16, 32, 64, 128, 256, 512)]
    return _slope_criterion(
        suite, 2, "spherical ensemble rate", "c2", specs, 20, WINDOW_SPHERE)


def criterion_3(suite: Suite) -> CriterionResult:
    m = manifold_by_name("sphere2")
    specs = [build_spec("gaf", m, N=N) for N in (16, 32, 64, 128, 256)]
    return _slope_criterion(
        suite, 3, "random polynomial zero rate", "c3", specs, 30, WINDOW_GAF)


def criterion_4(suite: Suite) -> CriterionResult:
    t2 = manifold_by_name("torus2")
    hx = manifold_by_name("hex2")
    parts = []
    suite.sweep("c4p2", [build_spec("harmonic", t2, L=L, p=2.0)
                         for L in (2, 3, 4, 6, 8, 11)],
                suite.reps(20), bounds=True)
    suite.sweep("c4pinf", [build_spec("harmonic", t2, L=L, p=np.inf)
                           for L in (1, 2, 3, 5, 7, 10)],
                suite.reps(20), bounds=True)
    suite.sweep("c4hex", [build_spec("harmonic", hx, L=L)
                          for L in (1, 2, 3, 4, 5, 6)],
                suite.reps(20), bounds=True)
    ok = True
    for key, window in (("c4p2", WINDOW_TORUS), ("c4pinf", WINDOW_TORUS),
                        ("c4hex", WINDOW_HEX)):
        ft = suite.fit(key)
        good = window[0] <= ft.slope <= window[1]
        ok = ok and good
        parts.append(f"{key}: slope={ft.slope:.4f} in [{window[0]}, "
                     f"{window[1]}] {'ok' if good else 'FAIL'}")
    return CriterionResult(4, "torus harmonic ensemble rates", bool(ok),
                           "; ".join(parts))


def criterion_5(suite: Suite) -> CriterionResult:
    sph = manifold_by_name("sphere2")
    t2 = manifold_by_name("torus2")
    sphere_ns = [(L + 1) ** 2 for L in (3, 5, 7, 11, 15, 23, 31)]
    torus_ns = [count_ball(p_norm(2), L) for L in (2, 3, 4, 6, 8, 11)]
    # the SSE model comparison needs the Monte Carlo noise floor well below
    # the sqrt-log curvature signal, hence more replicas than the DPP sweeps
    suite.sweep("c5sphere", [build_spec("iid", sph, N=N) for N in sphere_ns],
                suite.reps(30))
    suite.sweep("c5torus", [build_spec("iid", t2, N=N) for N in torus_ns],
                suite.reps(60))
    parts, ok = [], True
    for key, rivals in (("c5sphere", ("c1", "c2", "c3")),
                        ("c5torus", ("c4p2", "c4pinf", "c4hex"))):
        pure = suite.fit(key, "pure_power")
        logc = suite.fit(key, "power_with_sqrt_log")
        sse_ok = logc.residual_sse < pure.residual_sse
        ok = ok and sse_ok
        parts.append(f"{key}: sse log={logc.residual_sse:.3e} < "
                     f"pure={pure.residual_sse:.3e} "
                     f"{'ok' if sse_ok else 'FAIL'}")
        for rk in rivals:
            if rk not in suite.records:
                parts.append(f"{rk}: missing")
                ok = False
                continue
            above = pure.slope > suite.fit(rk).slope
            ok = ok and above
            parts.append(f"slope {pure.slope:.4f} > {rk} "
                         f"{suite.fit(rk).slope:.4f} "
                         f"{'ok' if above else 'FAIL'}")
    return CriterionResult(5, "independent-sampling contrast", bool(ok),
                           "; ".join(parts))


def criterion_6(suite: Suite) -> CriterionResult:
    t3 = manifold_by_name("torus3")
    specs = [build_spec("jittered", t3, N=k ** 3) for k in range(2, 9)]
    return _slope_criterion(
        suite, 6, "stratified sampling rate in dimension three", "c6",
        specs, 20, WINDOW_JITTER3)


# ----------------------------------------------------------- criteria 7-9

def criterion_7(suite: Suite) -> CriterionResult:
    keys = [k for k in ("c1", "c4p2", "c4pinf", "c4hex") if k in suite.records]
    if not keys:
        return CriterionResult(7, "smoothing bound soundness", False,
                               "no sweep records available")
    total = viol = 0
    margin = np.inf
    for key in keys:
        for r in suite.records[key]:
            if r.bound is None:
                continue
            total += 1
            margin = min(margin, r.bound - r.bracket_low)
            if r.bound < r.bracket_low:
                viol += 1
    ok = viol == 0 and total > 0
    return CriterionResult(
        7, "smoothing bound soundness", bool(ok),
        f"{total} configurations, {viol} violations, "
        f"min(bound - bracket_low)={margin:.4f}")


def criterion_8(suite: Suite) -> CriterionResult:
    m = manifold_by_name("sphere2")
    fns = {
        "deg1": lambda X: np.sqrt(3.0) * X[:, 2],
        "deg2": lambda X: np.sqrt(5.0) * (3.0 * X[:, 2] ** 2 - 1.0) / 2.0,
    }
    reps = 400 if suite.quick else 2000
    parts, ok = [], True
    task = 81
    for L in (2, 4):
        spec = build_spec("harmonic", m, L=L)
        for fname, f in fns.items():
            exact = variance_exact(spec, f).value
            mc = variance_mc(spec, f, reps, suite._rng(task, spec.N, 0))
            task += 1
            dev = abs(mc.variance - exact) / mc.stderr
            good = dev <= 5.0
            ok = ok and good
            parts.append(f"L={L} {fname}: exact={exact:.4f} "
                         f"mc={mc.variance:.4f} dev={dev:.2f}se "
                         f"{'ok' if good else 'FAIL'}")
    return CriterionResult(8, "linear-statistic variance, exact vs MC",
                           bool(ok), "; ".join(parts))


def _real_harmonics(ell: int, X: np.ndarray) -> np.ndarray:
    """Orthonormal real basis of degree ell (unit integrals against the
    normalized measure), shape (2 ell + 1, len(X))."""
    x, y, z = X[:, 0], X[:, 1], X[:, 2]
    if ell == 1:
        return np.sqrt(3.0) * np.stack([x, y, z])
    if ell == 2:
        r15 = np.sqrt(15.0)
        return np.stack([r15 * x * y, r15 * y * z, r15 * z * x,
                         np.sqrt(5.0) / 2.0 * (3.0 * z * z - 1.0),
                         r15 / 2.0 * (x * x - y * y)])
    raise ValueError("degrees 1 and 2 only")


def criterion_9(suite: Suite) -> CriterionResult:
    m = manifold_by_name("sphere2")
    reps = 400 if suite.quick else 2000
    parts, ok = [], True
    for N in (32, 64):
        spec = build_spec("gaf", m, N=N)
        rng = suite._rng(91, N, 0)
        sums = {1: np.empty((reps, 3)), 2: np.empty((reps, 5))}
        for i in range(reps):
            ps = sample_ensemble(spec, rng)
            for ell in (1, 2):
                sums[ell][i] = _real_harmonics(ell, ps.points).sum(axis=1)
        for ell in (1, 2):
            A = sums[ell]
            R = A.shape[0]
            mu = A.mean(axis=0)
            dev2 = (A - mu) ** 2
            s2 = dev2.sum(axis=0)
            total = float((s2 / (R - 1)).sum())
            # leave-one-out totals from the centered squares
            loo = (s2[None, :] - dev2 * R / (R - 1)) / (R - 2)
            t_loo = loo.sum(axis=1)
            se = float(np.sqrt((R - 1) / R * ((t_loo - t_loo.mean()) ** 2).sum()))
            cap = gaf_variance_bound(ell, N) + 5.0 * se
            good = total <= cap
            ok = ok and good
            parts.append(f"N={N} l={ell}: sumvar={total:.3f} <= "
                         f"bound+5se={cap:.3f} {'ok' if good else 'FAIL'}")
    return CriterionResult(9, "eigenspace variance bound for zero ensembles",
                           bool(ok), "; ".join(parts))


# --------------------------------------------------------- criteria 10-13

def _exhaustive_lattice_invariants(norm, L_max=64, packing_levels=(8, 16, 32, 64),
                                   rng=None, spots_per_level=2):
    """Inclusion bound for every (L, k) with 0 < ||k|| < L/2, L <= L_max,
    via vectorized set differences on library-enumerated balls, plus direct
    annulus_difference_count spot checks; returns (ok, max packing ratio)."""
    tol = 1e-9
    worst = 0.0
    for L in range(1, L_max + 1):
        B = ball_points(norm, L, d=2)
        bvals = np.sort(norm.evaluate(B))
        ks = ball_points(norm, L / 2, d=2)
        kvals = norm.evaluate(ks)
        keep = (kvals > 0) & (kvals < L / 2 * (1 - 1e-12))
        ks, kvals = ks[keep], kvals[keep]
        if not len(ks):
            continue
        adcs = np.empty(len(ks), dtype=np.int64)
        for s in range(0, len(ks), 256):
            kk = ks[s:s + 256]
            d = norm.evaluate(B[None, :, :] - kk[:, None, :])
            adcs[s:s + 256] = (d > L * (1 + tol)).sum(axis=1)
        ubs = len(B) - np.searchsorted(bvals, (L - kvals) * (1 + tol),
                                       side="right")
        if np.any(adcs > ubs):
            return False, worst
        if rng is not None:
            for idx in rng.choice(len(ks), size=min(spots_per_level, len(ks)),
                                  replace=False):
                if annulus_difference_count(norm, ks[idx], L) != adcs[idx]:
                    return False, worst
        if L in packing_levels:
            worst = max(worst, float(
                (adcs / (L * np.hypot(ks[:, 0], ks[:, 1]))).max()))
    return True, worst


def criterion_10(suite: Suite) -> CriterionResult:
    parts, ok = [], True
    # MC identity for the exponential-sum second moment
    t2 = manifold_by_name("torus2")
    spec = build_spec("harmonic", t2, L=3, p=2.0)
    reps = 120 if suite.quick else 400
    rng = suite._rng(100, spec.N, 0)
    samples = [sample_ensemble(spec, rng).points for _ in range(reps)]
    norm2 = p_norm(2)
    for k in ((1, 0), (1, 1), (2, 1)):
        exact = annulus_difference_count(norm2, k, 3)
        vals = np.array([np.abs(np.exp(2j * np.pi * (X @ k)).sum()) ** 2
                         for X in samples])
        se = vals.std(ddof=1) / np.sqrt(reps)
        dev = abs(vals.mean() - exact) / se
        good = dev <= 5.0
        ok = ok and good
        parts.append(f"k={k}: exact={exact} mc={vals.mean():.2f} "
                     f"dev={dev:.2f}se {'ok' if good else 'FAIL'}")
    # exhaustive inclusion + packing invariants
    lmax = 32 if suite.quick else 64
    levels = tuple(l for l in (8, 16, 32, 64) if l <= lmax)
    norms = {"p2": norm2, "pinf": p_norm(np.inf),
             "hex": _torus_norm(manifold_by_name("hex2"), 2.0)}
    for ni, (name, norm) in enumerate(norms.items()):
        inc_ok, ratio = _exhaustive_lattice_invariants(
            norm, lmax, levels, suite._rng(101, 0, ni))
        good = inc_ok and ratio <= PACKING_RATIO_CAP
        ok = ok and good
        parts.append(f"{name}: inclusion L<={lmax} "
                     f"{'ok' if inc_ok else 'FAIL'}, packing ratio "
                     f"{ratio:.3f} <= {PACKING_RATIO_CAP}")
    # disk count error bound
    worst = max(abs(gauss_circle_check(float(r)).error) / r
                for r in range(1, 201))
    gc_ok = worst <= 2 * np.sqrt(2) * np.pi
    ok = ok and gc_ok
    parts.append(f"disk count |E(r)|/r max={worst:.3f} "
                 f"{'ok' if gc_ok else 'FAIL'}")
    return CriterionResult(10, "lattice counting suite", bool(ok),
                           "; ".join(parts))


def _brute_force_ot(cost, a, b) -> float:
    """Exact 3x3 transport by enumerating all 5-cell supports (every basic
    feasible solution lives on one)."""
    from itertools import combinations
    best = np.inf
    cells = [(i, j) for i in range(3) for j in range(3)]
    rhs = np.concatenate([a, b[:2]])   # drop one redundant constraint
    for sup in combinations(cells, 5):
        A = np.zeros((5, 5))
        for col, (i, j) in enumerate(sup):
            A[i, col] = 1.0
            if j < 2:
                A[3 + j, col] = 1.0
        try:
            x = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            continue
        if not np.allclose(A @ x, rhs, atol=1e-9) or np.any(x < -1e-12):
            continue
        val = sum(cost[i, j] * xi for (i, j), xi in zip(sup, x))
        best = min(best, float(val))
    return best


def criterion_11(suite: Suite) -> CriterionResult:
    rng = suite._rng(110, 3, 0)
    cases = 30 if suite.quick else 100
    worst = 0.0
    for _ in range(cases):
        cost = rng.random((3, 3))
        a = rng.random(3) + 0.05
        b = rng.random(3) + 0.05
        a, b = a / a.sum(), b / b.sum()
        res = solve_discrete_ot(cost, a, b, solver="exact")
        ref = _brute_force_ot(cost, a, b)
        worst = max(worst, abs(res.value - ref))
    lp_ok = worst <= 1e-9
    # one-point configuration against the closed-form second moment
    m = manifold_by_name("sphere2")
    from .samplers import PointSet
    ps = PointSet(np.array([[0.0, 0.0, 1.0]]), build_spec("iid", m, N=1))
    est = w2_to_volume(ps, M=8192, solver="exact")
    target = np.sqrt((np.pi ** 2 - 4.0) / 2.0)
    atom_ok = est.bracket_low <= target <= est.bracket_high
    ok = lp_ok and atom_ok
    details = (f"{cases} random 3x3: max |exact - enumeration| = {worst:.2e}"
               f" {'ok' if lp_ok else 'FAIL'}; one-point value "
               f"{target:.6f} in [{est.bracket_low:.6f}, "
               f"{est.bracket_high:.6f}] {'ok' if atom_ok else 'FAIL'}")
    return CriterionResult(11, "transport oracle", bool(ok), details)


def _jacobi_closed(n, a, b, x):
    z = (1.0 - x) / 2.0
    if n == 0:
        return np.ones_like(x)
    if n == 1:
        return (a - b) / 2.0 + (a + b + 2.0) * x / 2.0
    return ((a + 1) * (a + 2) / 2.0 - (a + 2) * (a + b + 3) * z
            + (a + b + 3) * (a + b + 4) * z * z / 2.0)


def criterion_12(suite: Suite) -> CriterionResult:
    pairs = [(0.0, -0.5), (1.0, 0.0), (3.0, 1.0), (7.0, 3.0)]
    parts, ok = [], True
    for a, b in pairs:
        mx = {}
        for L in range(10, 201):
            th = np.linspace(2.0 / L, np.pi - 2.0 / L, 6 * L)
            mx[L] = float(szego_quantities(L, a, b, th)["bound_quantity"].max())
        overall = max(mx.values())
        mid = max(mx[L] for L in range(100, 150))
        late = max(mx[L] for L in range(150, 201))
        sat = late / mid
        good = overall <= SZEGO_CAP and sat <= SZEGO_SATURATION_CAP
        ok = ok and good
        parts.append(f"({a:g},{b:g}): max={overall:.4f} sat={sat:.4f} "
                     f"{'ok' if good else 'FAIL'}")
    x = np.linspace(-1.0, 1.0, 41)
    err = 0.0
    for a, b in pairs:
        for n in (0, 1, 2):
            err = max(err, float(np.max(np.abs(
                jacobi_P(n, a, b, x) - _jacobi_closed(n, a, b, x)))))
    rec_ok = err <= 1e-12
    ok = ok and rec_ok
    parts.append(f"recurrence vs closed forms: max err {err:.2e} "
                 f"{'ok' if rec_ok else 'FAIL'}")
    return CriterionResult(12, "orthogonal polynomial envelope suite",
                           bool(ok), "; ".join(parts))


def criterion_13(suite: Suite) -> CriterionResult:
    total = viol = 0
    margin = np.inf
    for recs in suite.records.values():
        for r in recs:
            total += 1
            margin = min(margin, r.bracket_high - r.packing)
            if r.bracket_high < r.packing:
                viol += 1
    ok = viol == 0 and total > 0
    return CriterionResult(
        13, "packing lower bound across all sweeps", bool(ok),
        f"{total} records, {viol} violations, "
        f"min(bracket_high - packing)={margin:.4f}")


_CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
             criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
             criterion_11, criterion_12, criterion_13]


def run_all(seed: int = 0, quick: bool = False, log=print) -> list:
    """Run the thirteen criteria in order on a shared suite state."""
    suite = Suite(seed=seed, quick=quick, log=log)
    results = []
    for fn in _CRITERIA:
        t0 = time.perf_counter()
        try:
            res = fn(suite)
        except Exception as exc:
            idx = int(fn.__name__.split("_")[1])
            res = CriterionResult(idx, fn.__name__, False,
                                  f"{type(exc).__name__}: {exc}")
        if log is not None:
            log(f"criterion {res.index}: "
                f"{'PASS' if res.passed else 'FAIL'} "
                f"({time.perf_counter() - t0:.0f}s) {res.details}")
        results.append(res)
    return results


def write_report(results, out_dir) -> None:
    from pathlib import Path
    lines = ["acceptance report", "================="]
    for r in results:
        lines.append(f"[{'PASS' if r.passed else 'FAIL'}] criterion "
                     f"{r.index}: {r.name}")
        lines.append(f"    {r.details}")
    lines.append(f"overall: {'PASS' if all(r.passed for r in results) else 'FAIL'}")
    Path(out_dir, "acceptance_report.txt").write_text(
        "\n".join(lines) + "\n", encoding="utf-8")
