"""Experiment runner: config parsing, seeded sweeps with CSV persistence,
log-log rate plots, and the acceptance harness entry point.

Config files are flat key=value INI with an [experiment] section; the exact
keys are documented in config_schema.txt next to this module. All floats in
CSV output carry 17 significant digits so data columns round-trip bit-stably;
runtime columns are excluded from the reproducibility contract.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .kernels import (EnsembleSpec, _torus_norm, gaf_zeros, harmonic_sphere,
                      harmonic_torus, iid, jittered, spherical_ensemble)
from .lattice import (annulus_difference_count, count_ball,
                      gauss_circle_check, p_norm)
from .manifold import ManifoldDesc, sphere2, torus
from .samplers import sample_ensemble
from .statistics import (SmoothingBoundConfig, fit_rate,
                         optimize_smoothing_time, variance_exact, variance_mc)
from .transport import w2_to_volume

HEX_GENERATORS = ((1.0, 0.0), (-1.0 / np.sqrt(3.0), 2.0 / np.sqrt(3.0)))

DATA_HEADER = ["ensemble", "manifold", "N", "replica", "seed", "w2",
               "bracket_low", "bracket_high", "M", "runtime_ms", "solver",
               "bound", "t_star"]
ERROR_HEADER = ["ensemble", "manifold", "N", "replica", "seed", "error"]
SUMMARY_HEADER = ["ensemble", "manifold", "N", "replicas_ok", "mean_w2",
                  "stderr_w2", "mean_bracket_low", "mean_bracket_high",
                  "mean_runtime_ms", "mean_bias_delta", "slope_pure",
                  "sse_pure", "slope_logcorr", "sse_logcorr"]


def f17(x) -> str:
    """17-significant-digit float field; empty for missing values."""
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return format(float(x), ".17g")


def manifold_by_name(name: str) -> ManifoldDesc:
    if name == "sphere2":
        return sphere2()
    if name == "torus2":
        return torus(2)
    if name == "torus3":
        return torus(3)
    if name == "hex2":
        return torus(2, HEX_GENERATORS)
    raise ValueError(f"unknown manifold {name!r} "
                     "(expected sphere2|torus2|torus3|hex2)")


def resolve_level(ensemble: str, m: ManifoldDesc, N: int,
                  p: float = 2.0) -> int:
    """Invert the N(L) map of the harmonic ensembles."""
    if m.kind == "sphere2":
        L = int(round(np.sqrt(N))) - 1
        if (L + 1) ** 2 != N:
            raise ValueError(f"N={N} is not (L+1)^2 for any degree L")
        return L
    norm = _torus_norm(m, p)
    for L in range(0, 513):
        c = count_ball(norm, L, d=m.d)
        if c == N:
            return L
        if c > N:
            break
    raise ValueError(f"N={N} is not a lattice-ball count for this torus")


def build_spec(ensemble: str, m: ManifoldDesc, N: int | None = None,
               L: int | None = None, p: float = 2.0, n0: int = 0) -> EnsembleSpec:
    """Construct an ensemble spec from CLI-level identifiers; exactly one of
    N, L for the harmonic family, N for the rest."""
    if ensemble == "harmonic":
        if (N is None) == (L is None):
            raise ValueError("harmonic needs exactly one of N, L")
        if m.kind == "sphere2":
            return harmonic_sphere(L if L is not None else resolve_level(
                ensemble, m, N))
        if L is None:
            L = resolve_level(ensemble, m, N, p)
        return harmonic_torus(L, p=p, m=m)
    if N is None:
        raise ValueError(f"{ensemble} needs N")
    if ensemble == "spherical":
        if m.kind != "sphere2":
            raise ValueError("spherical ensemble lives on sphere2")
        return spherical_ensemble(N)
    if ensemble == "gaf":
        if m.kind != "sphere2":
            raise ValueError("gaf zeros live on sphere2")
        return gaf_zeros(N, n0=n0)
    if ensemble == "jittered":
        return jittered(m, N)
    if ensemble == "iid":
        return iid(m, N)
    raise ValueError(f"unknown ensemble {ensemble!r}")


# ------------------------------------------------------------------- config

_SCHEMA_KEYS = {
    "manifold": str, "ensembles": str, "ns": str, "levels": str,
    "replicas": int, "seed": int, "m_mult": int, "out": str,
    "solver": str, "threads": int, "p": float, "gaf_n0": int,
    "k_m": float, "bound": bool, "bias_check": bool,
}


@dataclass
class ExperimentConfig:
    """One sweep: ensembles x N schedule x replicas, plus solver knobs."""
    manifold: str = "sphere2"
    ensembles: list = field(default_factory=lambda: ["harmonic"])
    ns: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    replicas: int = 20
    seed: int = 0
    m_mult: int = 64
    out: str = "sweep_out"
    solver: str = "auto"
    threads: int = 1
    p: float = 2.0
    gaf_n0: int = 0
    k_m: float = 0.0
    bound: bool = False
    bias_check: bool = True

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        read = cp.read(path)
        if not read:
            raise ValueError(f"cannot read config {path}")
        if "experiment" not in cp:
            raise ValueError("config needs an [experiment] section")
        sec = cp["experiment"]
        kwargs = {}
        for key, raw in sec.items():
            if key not in _SCHEMA_KEYS:
                raise ValueError(f"unknown config key {key!r} "
                                 "(see config_schema.txt)")
            typ = _SCHEMA_KEYS[key]
            if typ is bool:
                kwargs[key] = sec.getboolean(key)
            elif typ in (int, float):
                kwargs[key] = typ(raw)
            else:
                kwargs[key] = raw
        for lk in ("ensembles", "ns", "levels"):
            if lk in kwargs:
                kwargs[lk] = [s.strip() for s in kwargs[lk].split(",") if s.strip()]
        if "ns" in kwargs:
            kwargs["ns"] = [int(s) for s in kwargs["ns"]]
        if "levels" in kwargs:
            kwargs["levels"] = [int(s) for s in kwargs["levels"]]
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self):
        if self.ns and self.levels:
            raise ValueError("give ns or levels, not both")
        if not self.ns and not self.levels:
            raise ValueError("config needs an N schedule (ns or levels)")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.solver not in ("auto", "exact", "entropic"):
            raise ValueError(f"unknown solver {self.solver!r}")
        manifold_by_name(self.manifold)

    def echo(self) -> str:
        lines = ["[experiment]"]
        for k in _SCHEMA_KEYS:
            v = getattr(self, k)
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    def schedule_for(self, ensemble: str, m: ManifoldDesc) -> list:
        if self.ns:
            return list(self.ns)
        return [build_spec("harmonic", m, L=L, p=self.p).N for L in self.levels]


# -------------------------------------------------------------------- sweep

@dataclass
class SweepRecord:
    ensemble: str
    manifold: str
    N: int
    replica: int
    seed: int
    w2: float
    bracket_low: float
    bracket_high: float
    M: int
    runtime_ms: float
    solver: str
    bound: float | None = None
    t_star: float | None = None
    bias_delta: float | None = None   # not serialized in the data CSV

    def row(self):
        return [self.ensemble, self.manifold, str(self.N), str(self.replica),
                str(self.seed), f17(self.w2), f17(self.bracket_low),
                f17(self.bracket_high), str(self.M), f17(self.runtime_ms),
                self.solver, f17(self.bound), f17(self.t_star)]


def _run_one(cfg: ExperimentConfig, m: ManifoldDesc, ei: int, ensemble: str,
             N: int, replica: int):
    """One replica: sample, W2 estimate, optional smoothing bound and
    4M bias re-solve. Returns (SweepRecord, None) or (None, error row)."""
    ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(ei, N, replica))
    seed_label = int(ss.generate_state(1, dtype=np.uint64)[0])
    rng = np.random.default_rng(ss)
    try:
        spec = build_spec(ensemble, m, N=N, p=cfg.p, n0=cfg.gaf_n0)
        t0 = time.perf_counter()
        ps = sample_ensemble(spec, rng, seed=seed_label)
        est = w2_to_volume(ps, M=cfg.m_mult * N, solver=cfg.solver)
        bound = t_star = None
        if cfg.bound and spec.variant in ("harmonic", "jittered"):
            opt = optimize_smoothing_time(
                ps, SmoothingBoundConfig(t=1.0, K_M=cfg.k_m))
            bound, t_star = opt.bound_star, opt.t_star
        bias_delta = None
        if cfg.bias_check and replica % 10 == 0:
            est4 = w2_to_volume(ps, M=4 * cfg.m_mult * N, solver=cfg.solver)
            bias_delta = abs(est4.value - est.value)
        ms = (time.perf_counter() - t0) * 1e3
        return SweepRecord(ensemble, cfg.manifold, N, replica, seed_label,
                           est.value, est.bracket_low, est.bracket_high,
                           est.M, ms, est.solver, bound, t_star,
                           bias_delta), None
    except Exception as exc:  # error record, sweep continues
        return None, [ensemble, cfg.manifold, str(N), str(replica),
                      str(seed_label), f"{type(exc).__name__}: {exc}"]


def run_sweep(cfg: ExperimentConfig) -> Path:
    """Execute the sweep and persist data.csv / summary.csv / errors.csv
    (when any) plus the echoed config and version into cfg.out."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    m = manifold_by_name(cfg.manifold)
    jobs = []
    for ei, ensemble in enumerate(cfg.ensembles):
        for N in cfg.schedule_for(ensemble, m):
            for r in range(cfg.replicas):
                jobs.append((cfg, m, ei, ensemble, int(N), r))
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(lambda j: _run_one(*j), jobs))
    else:
        results = [_run_one(*j) for j in jobs]
    records = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]

    (out / "config_used.ini").write_text(cfg.echo(), encoding="utf-8")
    (out / "run_info.txt").write_text(f"ppw {__version__}\n", encoding="utf-8")
    with open(out / "data.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATA_HEADER)
        for rec in records:
            w.writerow(rec.row())
    if errors:
        with open(out / "errors.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ERROR_HEADER)
            w.writerows(errors)
    _write_summary(records, out / "summary.csv")
    return out


def _write_summary(records, path):
    groups = {}
    for rec in records:
        groups.setdefault((rec.ensemble, rec.manifold), {}).setdefault(
            rec.N, []).append(rec)
    rows = []
    for (ens, man), by_n in groups.items():
        ns = sorted(by_n)
        means = []
        for N in ns:
            recs = by_n[N]
            vals = np.array([r.w2 for r in recs])
            means.append((N, float(vals.mean())))
        fits = {}
        if len([1 for _, mw in means if mw > 0]) >= 4:
            try:
                fits["pure"] = fit_rate(means, "pure_power")
                fits["log"] = fit_rate(means, "power_with_sqrt_log")
            except ValueError:
                fits = {}
        for N in ns:
            recs = by_n[N]
            vals = np.array([r.w2 for r in recs])
            deltas = [r.bias_delta for r in recs if r.bias_delta is not None]
            stderr = float(vals.std(ddof=1) / np.sqrt(len(vals))) \
                if len(vals) > 1 else np.nan
            rows.append([
                ens, man, str(N), str(len(recs)), f17(vals.mean()), f17(stderr),
                f17(np.mean([r.bracket_low for r in recs])),
                f17(np.mean([r.bracket_high for r in recs])),
                f17(np.mean([r.runtime_ms for r in recs])),
                f17(np.mean(deltas) if deltas else None),
                f17(fits["pure"].slope if fits else None),
                f17(fits["pure"].residual_sse if fits else None),
                f17(fits["log"].slope if fits else None),
                f17(fits["log"].residual_sse if fits else None),
            ])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(rows)


# ------------------------------------------------------------------ outputs

def _read_csv(path, expected_header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if header != expected_header:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for i, row in enumerate(reader, start=2):
            if len(row) != len(expected_header):
                raise ValueError(f"{path}: malformed CSV row {i}")
            rows.append(row)
    return rows


def emit_outputs(data_dir, out_dir=None) -> int:
    """Render log-log rate plots (SVG) and a plain-text report from a sweep
    directory holding data.csv and summary.csv. Returns the exit code:
    0 normally, 2 when the data section is empty."""
    data_dir = Path(data_dir)
    out = Path(out_dir) if out_dir is not None else data_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = _read_csv(data_dir / "data.csv", DATA_HEADER)
    summary = _read_csv(data_dir / "summary.csv", SUMMARY_HEADER)
    report = ["rate report", "==========="]
    if not rows:
        report.append("no data")
        (out / "report.txt").write_text("\n".join(report) + "\n",
                                        encoding="utf-8")
        return 2

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "ppw"

    groups = {}
    for row in summary:
        groups.setdefault((row[0], row[1]), []).append(row)
    for (ens, man), g in sorted(groups.items()):
        ns = np.array([int(r[2]) for r in g])
        mw = np.array([float(r[4]) for r in g])
        se = np.array([float(r[5]) if r[5] else 0.0 for r in g])
        order = np.argsort(ns)
        ns, mw, se = ns[order], mw[order], se[order]
        slope_p = g[0][10]
        report.append(f"ensemble={ens} manifold={man} points={len(ns)}")
        report.append(f"  N in [{ns.min()}, {ns.max()}], "
                      f"replicas {g[0][3]}")
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.errorbar(ns, mw, yerr=se, fmt="o", ms=4, capsize=2, label="mean W2")
        if len(ns) >= 4 and slope_p:
            fit_p = fit_rate(list(zip(ns, mw)), "pure_power")
            fit_l = fit_rate(list(zip(ns, mw)), "power_with_sqrt_log")
            xs = np.geomspace(ns.min(), ns.max(), 64)
            ax.plot(xs, np.exp(fit_p.intercept) * xs ** fit_p.slope,
                    label=f"pure: slope {fit_p.slope:.3f}")
            ax.plot(xs, np.exp(fit_l.intercept) * np.sqrt(np.log(xs))
                    * xs ** fit_l.slope, "--",
                    label=f"sqrt-log: slope {fit_l.slope:.3f}")
            report.append(f"  pure_power:     slope={fit_p.slope:.6f} "
                          f"intercept={fit_p.intercept:.6f} "
                          f"sse={fit_p.residual_sse:.6e}")
            report.append(f"  power_sqrt_log: slope={fit_l.slope:.6f} "
                          f"intercept={fit_l.intercept:.6f} "
                          f"sse={fit_l.residual_sse:.6e}")
        else:
            report.append(f"  insufficient N values for fit ({len(ns)})")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("N")
        ax.set_ylabel("E W2")
        ax.set_title(f"{ens} on {man}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(out / f"rates_{ens}_{man}.svg", metadata={"Date": None})
        plt.close(fig)
    (out / "report.txt").write_text("\n".join(report) + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------------- CLI

def _master_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("PPW_SEED")
    if env is not None:
        return int(env)
    return 0


def _spec_from_args(args):
    m = manifold_by_name(args.manifold)
    p = np.inf if args.p == "inf" else float(args.p)
    return build_spec(args.ensemble, m, N=args.N, L=args.L, p=p, n0=args.n0)


def _cmd_sample(args) -> int:
    spec = _spec_from_args(args)
    rng = np.random.default_rng(np.random.SeedSequence(_master_seed(args)))
    ps = sample_ensemble(spec, rng, seed=_master_seed(args))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "points.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        dim = ps.points.shape[1]
        w.writerow([f"x{i}" for i in range(dim)])
        for row in ps.points:
            w.writerow([f17(v) for v in row])
    print(f"{spec.label}: N={ps.N} -> {path}")
    return 0


def _cmd_w2(args) -> int:
    spec = _spec_from_args(args)
    rng = np.random.default_rng(np.random.SeedSequence(_master_seed(args)))
    ps = sample_ensemble(spec, rng, seed=_master_seed(args))
    est = w2_to_volume(ps, M=args.m_mult * spec.N, solver=args.solver)
    print(f"{spec.label} N={spec.N} M={est.M} solver={est.solver}: "
          f"W2={est.value:.6g} bracket=[{est.bracket_low:.6g}, "
          f"{est.bracket_high:.6g}] gap={est.duality_gap:.3g}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    elif os.environ.get("PPW_SEED") is not None:
        cfg.seed = int(os.environ["PPW_SEED"])
    if args.out is not None:
        cfg.out = args.out
    if args.threads is not None:
        cfg.threads = args.threads
    if args.solver is not None:
        cfg.solver = args.solver
    if args.m_mult is not None:
        cfg.m_mult = args.m_mult
    out = run_sweep(cfg)
    code = emit_outputs(out)
    print(f"sweep written to {out}")
    return code


def _cmd_variance(args) -> int:
    spec = _spec_from_args(args)
    f = _harmonic_statistic(args.f)
    ve = variance_exact(spec, f)
    rng = np.random.default_rng(np.random.SeedSequence(_master_seed(args)))
    mc = variance_mc(spec, f, args.replicas, rng)
    print(f"{spec.label} N={spec.N} f={args.f}: exact={ve.value:.6g} "
          f"(refine delta {ve.refinement_delta:.2g}) mc={mc.variance:.6g} "
          f"stderr={mc.stderr:.3g}")
    return 0


def _harmonic_statistic(name: str):
    table = {
        "y10": lambda X: np.sqrt(3.0) * X[:, 2],
        "y20": lambda X: np.sqrt(5.0) * (3.0 * X[:, 2] ** 2 - 1.0) / 2.0,
    }
    if name not in table:
        raise ValueError(f"unknown statistic {name!r} (y10|y20)")
    return table[name]


def _cmd_bound(args) -> int:
    spec = _spec_from_args(args)
    rng = np.random.default_rng(np.random.SeedSequence(_master_seed(args)))
    ps = sample_ensemble(spec, rng, seed=_master_seed(args))
    if args.t is not None:
        from .statistics import smoothing_bound
        b = smoothing_bound(ps, SmoothingBoundConfig(t=args.t, K_M=args.k_m))
        print(f"{spec.label} N={spec.N} t={args.t:.6g}: bound={b:.6g}")
    else:
        opt = optimize_smoothing_time(ps, SmoothingBoundConfig(t=1.0,
                                                               K_M=args.k_m))
        print(f"{spec.label} N={spec.N}: bound*={opt.bound_star:.6g} "
              f"t*={opt.t_star:.6g}")
    return 0


def _cmd_lattice(args) -> int:
    if args.norm == "hex":
        norm = _torus_norm(manifold_by_name("hex2"), 2.0)
        d = 2
    else:
        p = np.inf if args.norm == "inf" else float(args.norm)
        norm = p_norm(p)
        d = args.d
    print(f"count_ball(L={args.L}) = {count_ball(norm, args.L, d=d)}")
    if args.k:
        k = tuple(int(s) for s in args.k.split(","))
        print(f"annulus_difference_count(k={k}) = "
              f"{annulus_difference_count(norm, k, args.L)}")
    if args.gauss_max:
        worst = max(abs(gauss_circle_check(float(r)).error) / r
                    for r in range(1, args.gauss_max + 1))
        print(f"gauss circle r<={args.gauss_max}: max |E(r)|/r = "
              f"{worst:.6f} (bound {2 * np.sqrt(2) * np.pi:.6f})")
    return 0


def _cmd_fit(args) -> int:
    rows = _read_csv(Path(args.data), DATA_HEADER)
    groups = {}
    for row in rows:
        groups.setdefault((row[0], row[1]), {}).setdefault(
            int(row[2]), []).append(float(row[5]))
    for (ens, man), by_n in sorted(groups.items()):
        recs = [(N, float(np.mean(v))) for N, v in sorted(by_n.items())]
        if len(recs) < 4:
            print(f"{ens}/{man}: insufficient N values for fit ({len(recs)})")
            continue
        for model in ("pure_power", "power_with_sqrt_log"):
            ft = fit_rate(recs, model)
            print(f"{ens}/{man} {model}: slope={ft.slope:.6f} "
                  f"intercept={ft.intercept:.6f} sse={ft.residual_sse:.6e}")
    return 0


def _cmd_plot(args) -> int:
    return emit_outputs(args.data, args.out)


def _cmd_accept(args) -> int:
    from .acceptance import run_all, write_report
    results = run_all(seed=_master_seed(args), quick=args.quick)
    out = Path(args.out or "acceptance_out")
    out.mkdir(parents=True, exist_ok=True)
    write_report(results, out)
    ok = all(r.passed for r in results)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] criterion {r.index}: "
              f"{r.name}: {r.details}")
    return 0 if ok else 1


def _add_common(sp, seed=True):
    if seed:
        sp.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides PPW_SEED)")
    sp.add_argument("--out", type=str, default=None)


def _add_spec_args(sp):
    sp.add_argument("--ensemble", default="harmonic",
                    choices=["harmonic", "spherical", "gaf", "jittered", "iid"])
    sp.add_argument("--manifold", default="sphere2",
                    choices=["sphere2", "torus2", "torus3", "hex2"])
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--L", type=int, default=None)
    sp.add_argument("--p", default="2", help="torus ball norm: 2|inf")
    sp.add_argument("--n0", type=int, default=0, choices=[0, 1],
                    help="gaf coefficient start index")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="ppw",
        description="point processes and W2 rate experiments")
    ap.add_argument("--version", action="version",
                    version=f"ppw {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="draw one configuration to CSV")
    _add_spec_args(sp)
    _add_common(sp)
    sp.set_defaults(func=_cmd_sample)

    sp = sub.add_parser("w2", help="one W2 estimate with bracket")
    _add_spec_args(sp)
    _add_common(sp)
    sp.add_argument("--m-mult", type=int, default=64)
    sp.add_argument("--solver", default="auto",
                    choices=["auto", "exact", "entropic"])
    sp.set_defaults(func=_cmd_w2)

    sp = sub.add_parser("sweep", help="run a configured sweep")
    sp.add_argument("--config", required=True)
    _add_common(sp)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--solver", default=None,
                    choices=["auto", "exact", "entropic"])
    sp.add_argument("--m-mult", type=int, default=None)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("variance", help="exact vs MC variance of a statistic")
    _add_spec_args(sp)
    _add_common(sp)
    sp.add_argument("--f", default="y10", choices=["y10", "y20"])
    sp.add_argument("--replicas", type=int, default=400)
    sp.set_defaults(func=_cmd_variance)

    sp = sub.add_parser("bound", help="smoothing W2 upper bound")
    _add_spec_args(sp)
    _add_common(sp)
    sp.add_argument("--t", type=float, default=None,
                    help="smoothing time (omit to optimize)")
    sp.add_argument("--k-m", type=float, default=0.0)
    sp.set_defaults(func=_cmd_bound)

    sp = sub.add_parser("lattice", help="lattice ball counts and checks")
    sp.add_argument("--norm", default="2", help="2|inf|hex")
    sp.add_argument("--d", type=int, default=2, choices=[2, 3])
    sp.add_argument("--L", type=float, required=True)
    sp.add_argument("--k", default=None, help="shift vector, e.g. 1,0")
    sp.add_argument("--gauss-max", type=int, default=None)
    sp.set_defaults(func=_cmd_lattice)

    sp = sub.add_parser("fit", help="rate fits from a data CSV")
    sp.add_argument("--data", required=True)
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("plot", help="plots + report from a sweep directory")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_plot)

    sp = sub.add_parser("accept", help="run the acceptance suite")
    _add_common(sp)
    sp.add_argument("--quick", action="store_true",
                    help="reduced replica counts (not the formal gate)")
    sp.set_defaults(func=_cmd_accept)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
