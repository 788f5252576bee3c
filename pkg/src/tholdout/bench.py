"""Monte-Carlo benchmark harness: reference densities, risk and complexity.

A campaign runs over a grid of (density, family, sample size) cells with J
seeded replicates each.  Per replicate: sample, split, build the family on
the training part, run each requested selection method, optionally refit the
selected recipe on the full sample, and record losses against the true pdf,
test counts and complexity ratios.  Replicate seeds derive from a stable hash
of (master seed, cell labels, replicate index), so results are byte-identical
across runs and thread counts (wall-clock columns excluded).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import stats

from .densities import (
    Density,
    GaussianKde,
    HistogramDensity,
    MixtureDensity,
    ParametricDensity,
    ScipyReference,
    TruncatedCauchy,
)
from .estimators import (
    build_family,
    fit_irregular_histograms,
    split_sample,
)
from .metrics import QuadratureSpec, hellinger_sq, lq_distance
from .robust_tests import TestKind
from .selection import (
    SelectionOutcome,
    approx_select,
    brute_force_select,
    classical_ho_select,
    exact_select,
)

__all__ = [
    "BenchmarkDensity",
    "builtin_densities",
    "ExperimentConfig",
    "RiskReport",
    "run_experiment",
    "empirical_risk",
    "normalized_log2_ratio",
    "complexity_slope",
    "empirical_quantile",
    "CSV_COLUMNS",
    "derive_seed",
]

METHODS = ("exact", "approx", "brute", "ls", "kl")
LOSSES = ("hellinger2", "l1", "l2")

# Lighter-than-library quadrature used by campaigns: selection consistency
# only needs the within-run distance matrix, and risks are reported to ~1e-4,
# so ~1e-5-accurate integrals keep campaigns fast at desk scale.
BENCH_QUAD = QuadratureSpec(panels=16, refine=8, tol=1e-5, max_doublings=2)

CSV_COLUMNS = (
    "density",
    "family",
    "n",
    "p",
    "theta",
    "test",
    "method",
    "c",
    "last",
    "replicate",
    "loss_name",
    "loss_value",
    "tests_used",
    "complexity_ratio",
    "wall_ms",
    "seed",
)


@dataclass(frozen=True)
class BenchmarkDensity:
    """Named reference density with an exact sampler."""

    label: str
    density: Density

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.density.sample(n, rng)


def builtin_densities() -> list[BenchmarkDensity]:
    """The built-in reference suite (12 densities, exact pdfs and samplers)."""
    gauss = ParametricDensity("gaussian", (0.0, 1.0), kind="reference")
    mix2 = MixtureDensity(
        [
            ParametricDensity("gaussian", (-1.5, 0.5), kind="reference"),
            ParametricDensity("gaussian", (1.5, 1.0), kind="reference"),
        ],
        [0.5, 0.5],
    )
    claw3 = MixtureDensity(
        [
            ParametricDensity("gaussian", (0.0, 1.0), kind="reference"),
            ParametricDensity("gaussian", (-1.0, 0.1), kind="reference"),
            ParametricDensity("gaussian", (1.0, 0.1), kind="reference"),
        ],
        [0.5, 0.25, 0.25],
    )
    steps = HistogramDensity(
        [0.0, 0.2, 0.35, 0.5, 0.8, 1.0],
        [0.3, 0.05, 0.25, 0.1, 0.3],
        kind="reference",
    )
    return [
        BenchmarkDensity("uniform", ParametricDensity("uniform", (0.0, 1.0), kind="reference")),
        BenchmarkDensity("exponential", ParametricDensity("exponential", (1.0,), kind="reference")),
        BenchmarkDensity("gaussian", gauss),
        BenchmarkDensity("lognormal", ParametricDensity("lognormal", (0.0, 1.0), kind="reference")),
        BenchmarkDensity("laplace", ScipyReference(stats.laplace(0.0, 1.0))),
        BenchmarkDensity("cauchy_trunc", TruncatedCauchy(-20.0, 20.0)),
        BenchmarkDensity("beta22", ParametricDensity("beta", (2.0, 2.0), kind="reference")),
        BenchmarkDensity("gamma21", ParametricDensity("gamma", (2.0, 1.0), kind="reference")),
        BenchmarkDensity("chisq1", ParametricDensity("chisquare", (1.0,), kind="reference")),
        BenchmarkDensity("gauss_mix2", mix2),
        BenchmarkDensity("claw3", claw3),
        BenchmarkDensity("steps", steps),
    ]


def density_registry() -> dict[str, BenchmarkDensity]:
    return {b.label: b for b in builtin_densities()}


def empirical_risk(losses) -> float:
    """Arithmetic mean of per-replicate losses."""
    losses = np.asarray(losses, dtype=np.float64)
    if losses.size == 0:
        raise ValueError("need at least one loss value")
    return float(np.mean(losses))


def normalized_log2_ratio(r1: float, r2: float, loss: str) -> float:
    """(1/r) log2(r1/r2) with r = 1 for l1 and 2 for l2/hellinger2.

    Positive values mean the second procedure has smaller risk.  A zero risk
    yields an infinite sentinel.
    """
    norm = {"l1": 1.0, "l2": 2.0, "hellinger2": 2.0}[loss]
    if r1 < 0 or r2 < 0:
        raise ValueError("risks must be nonnegative")
    if r1 == 0 or r2 == 0:
        return math.inf if r2 == 0 and r1 > 0 else (-math.inf if r1 == 0 and r2 > 0 else 0.0)
    return math.log2(r1 / r2) / norm


def empirical_quantile(values, q: float) -> float:
    """Order statistic at index ceil(q*n) into the sorted sample (0-based)."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("need at least one value")
    idx = min(int(math.ceil(q * v.size)), v.size - 1)
    return float(v[idx])


def complexity_slope(samples) -> float:
    """OLS slope of mean log test count against log(M - 1)."""
    ms = np.asarray([m for m, _ in samples], dtype=np.float64)
    ys = np.asarray([y for _, y in samples], dtype=np.float64)
    if np.unique(ms).size < 2:
        raise ValueError("need at least two distinct family sizes")
    return float(np.polyfit(np.log(ms - 1.0), ys, 1)[0])


def derive_seed(master: int, density: str, family: str, n: int, replicate: int) -> int:
    """Stable 64-bit per-replicate seed (identical across processes/platforms)."""
    key = f"{master}|{density}|{family}|{n}|{replicate}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


@dataclass(frozen=True)
class ExperimentConfig:
    """Monte-Carlo campaign description (see README for the file format)."""

    densities: tuple[str, ...]
    families: tuple[str, ...]
    n: tuple[int, ...]
    replicates: int
    seed: int
    p: float = 0.5
    theta: float = 0.25
    test: str = "birge"
    methods: tuple[str, ...] = ("exact",)
    c: float | None = None
    losses: tuple[str, ...] = ("hellinger2",)
    last: str = "full"
    baseline: str | None = None
    panels: int | None = None
    refine: int | None = None
    threads: int = 1

    def __post_init__(self):
        if not self.densities or not self.families or not self.n:
            raise ValueError("densities, families and n must be nonempty")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must be in (0, 1)")
        if self.test not in ("birge", "baraud"):
            raise ValueError("test must be 'birge' or 'baraud'")
        if self.last not in ("training", "full"):
            raise ValueError("last must be 'training' or 'full'")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ValueError(f"unknown methods {sorted(bad)}")
        bad = set(self.losses) - set(LOSSES)
        if bad or not self.losses:
            raise ValueError(f"unknown losses {sorted(bad)}")
        if self.c is not None and not self.c > 0:
            raise ValueError("c must be positive")
        if self.baseline is not None and self.baseline not in self.methods:
            raise ValueError("baseline must be one of the requested methods")
        if any(v < 8 for v in self.n):
            raise ValueError("sample sizes must be >= 8")

    @property
    def quad(self) -> QuadratureSpec:
        return replace(
            BENCH_QUAD,
            panels=self.panels if self.panels is not None else BENCH_QUAD.panels,
            refine=self.refine if self.refine is not None else BENCH_QUAD.refine,
        )

    @property
    def kind(self) -> TestKind:
        return TestKind.birge(self.theta) if self.test == "birge" else TestKind.baraud()

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        kwargs = dict(data)
        for key in ("densities", "families", "methods", "losses"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        if "n" in kwargs:
            kwargs["n"] = tuple(int(v) for v in np.atleast_1d(kwargs["n"]))
        known = set(cls.__dataclass_fields__)
        unknown = set(kwargs) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**kwargs)


@dataclass
class RiskReport:
    """Campaign results: flat rows plus recorded per-replicate failures."""

    config: ExperimentConfig
    rows: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def risk(self, density: str, family: str, n: int, method: str, loss: str) -> float:
        vals = [
            r["loss_value"]
            for r in self.rows
            if r["density"] == density
            and r["family"] == family
            and r["n"] == n
            and r["method"] == method
            and r["loss_name"] == loss
        ]
        return empirical_risk(vals)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow([_csv_cell(row[c]) for c in CSV_COLUMNS])

    def summary(self) -> dict:
        return summarize(self)

    def write_summary(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fit_one_parametric(family: str, x: np.ndarray) -> ParametricDensity | None:
    """Moment fit of a single named family; None when infeasible on x."""
    xs = np.sort(x)
    lo, hi = float(xs[0]), float(xs[-1])
    m = float(np.mean(x))
    v = float(np.var(x, ddof=1))
    try:
        if family == "gaussian":
            return ParametricDensity("gaussian", (m, math.sqrt(v)))
        if family == "exponential":
            return ParametricDensity("exponential", (1.0 / m,)) if lo >= 0 else None
        if family == "lognormal":
            if lo <= 0:
                return None
            lx = np.log(x)
            return ParametricDensity("lognormal", (float(np.mean(lx)), float(np.std(lx, ddof=1))))
        if family == "chisquare":
            return ParametricDensity("chisquare", (m,)) if lo >= 0 else None
        if family == "gamma":
            return ParametricDensity("gamma", (m * m / v, m / v)) if lo >= 0 else None
        if family == "beta":
            if not (lo > 0 and hi < 1):
                return None
            t = m * (1.0 - m) / v - 1.0
            return ParametricDensity("beta", (m * t, (1.0 - m) * t))
        if family == "uniform":
            return ParametricDensity("uniform", (lo, hi))
    except ValueError:
        return None
    raise ValueError(f"unknown parametric family {family!r}")


def refit_on_full(recipe: tuple, x: np.ndarray, training_member: Density) -> tuple[Density, bool]:
    """Re-apply the selected estimator's recipe on the full sample.

    Regular histograms keep their bin count, irregular histograms rerun the
    partition search at the same bin count, kernels re-evaluate the bandwidth
    formula with the full range, parametrics refit the same family.  Returns
    (density, refit_ok); an infeasible refit falls back to the training fit.
    """
    xs = np.sort(np.asarray(x, dtype=np.float64))
    tag = recipe[0]
    if tag == "SR":
        d = recipe[1]
        counts, edges = np.histogram(xs, bins=d, range=(xs[0], xs[-1]))
        return HistogramDensity(edges, counts / xs.size), True
    if tag == "SI":
        d = recipe[1]
        fits = fit_irregular_histograms(xs)
        if d <= len(fits):
            return fits[d - 1], True
        return training_member, False
    if tag == "SK":
        j = recipe[1]
        h = (xs[-1] - xs[0]) / (2.0 * j)
        return GaussianKde(xs, h), True
    if tag == "SP":
        fitted = _fit_one_parametric(recipe[1], xs)
        if fitted is None:
            return training_member, False
        return fitted, True
    raise ValueError(f"unknown recipe {recipe!r}")


def _run_method(method, fam, x_v, kind, c, start):
    if method == "exact":
        return exact_select(fam, x_v, kind, start=start)
    if method == "approx":
        return approx_select(fam, x_v, kind, start=start, c=c if c is not None else 1.0)
    if method == "brute":
        return brute_force_select(fam, x_v, kind)
    return classical_ho_select(fam, x_v, method)


def _loss_value(loss: str, est: Density, truth: Density, quad: QuadratureSpec) -> float:
    if loss == "hellinger2":
        return hellinger_sq(est, truth, quad)
    return lq_distance(est, truth, 1 if loss == "l1" else 2, quad)


def run_cell_replicate(cfg: ExperimentConfig, density_label: str, family: str, n: int, replicate: int):
    """One (cell, replicate): returns (rows, failures)."""
    truth = density_registry()[density_label]
    seed = derive_seed(cfg.seed, density_label, family, n, replicate)
    seq = np.random.SeedSequence(seed)
    s_sample, s_split = seq.spawn(2)
    rows: list[dict] = []
    failures: list[dict] = []
    base = dict(
        density=density_label,
        family=family,
        n=n,
        p=cfg.p,
        theta=cfg.theta,
        test=cfg.test,
        last=cfg.last,
        replicate=replicate,
        seed=seed,
    )
    try:
        x = truth.sample(n, np.random.default_rng(s_sample))
        split = split_sample(x, cfg.p, seed=int(s_split.generate_state(1)[0]))
        fam = build_family(family, split.training, quad=cfg.quad)
        start = None
        if any(m in ("exact", "approx") for m in cfg.methods):
            start = classical_ho_select(fam, split.validation, "ls").chosen
    except Exception as exc:  # degenerate draw: record and skip the replicate
        return rows, [dict(base, method="*", error=f"{type(exc).__name__}: {exc}")]

    loss_memo: dict[tuple, dict[str, float]] = {}
    for method in cfg.methods:
        t0 = time.perf_counter()
        try:
            outcome = _run_method(method, fam, split.validation, cfg.kind, cfg.c, start)
            recipe = fam.recipes[outcome.chosen]
            if cfg.last == "full":
                est, _ok = refit_on_full(recipe, split.full, fam.members[outcome.chosen])
            else:
                est = fam.members[outcome.chosen]
            key = (recipe, cfg.last)
            if key not in loss_memo:
                loss_memo[key] = {
                    loss: _loss_value(loss, est, truth.density, cfg.quad) for loss in cfg.losses
                }
            wall_ms = (time.perf_counter() - t0) * 1e3
            for loss in cfg.losses:
                rows.append(
                    dict(
                        base,
                        method=method,
                        c=cfg.c if method == "approx" else None,
                        loss_name=loss,
                        loss_value=loss_memo[key][loss],
                        tests_used=outcome.tests_used,
                        complexity_ratio=outcome.complexity,
                        wall_ms=wall_ms,
                        m_candidates=len(fam),
                        chosen_label=fam.labels[outcome.chosen],
                        criterion=outcome.criterion,
                    )
                )
        except Exception as exc:
            failures.append(dict(base, method=method, error=f"{type(exc).__name__}: {exc}"))
    return rows, failures


def _worker(args):
    cfg_dict, density_label, family, n, replicate = args
    cfg = ExperimentConfig.from_json(cfg_dict)
    return run_cell_replicate(cfg, density_label, family, n, replicate)


def run_experiment(cfg: ExperimentConfig, progress=None) -> RiskReport:
    """Run the full campaign; deterministic given the config (incl. threads)."""
    registry = density_registry()
    unknown = set(cfg.densities) - set(registry)
    if unknown:
        raise ValueError(f"unknown densities {sorted(unknown)}")
    tasks = [
        (cfg.to_json(), d, f, n, r)
        for d in cfg.densities
        for f in cfg.families
        for n in cfg.n
        for r in range(cfg.replicates)
    ]
    report = RiskReport(config=cfg)
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = pool.map(_worker, tasks, chunksize=1)
            for done, (rows, fails) in enumerate(results, start=1):
                report.rows.extend(rows)
                report.failures.extend(fails)
                if progress:
                    progress(done, len(tasks))
    else:
        for done, task in enumerate(tasks, start=1):
            rows, fails = _worker(task)
            report.rows.extend(rows)
            report.failures.extend(fails)
            if progress:
                progress(done, len(tasks))
    key = ("density", "family", "n", "method", "replicate", "loss_name")
    report.rows.sort(key=lambda r: tuple(str(r[k]) for k in key))
    report.failures.sort(key=lambda r: tuple(str(r.get(k, "")) for k in key[:5]))
    return report


def summarize(report: RiskReport) -> dict:
    """Aggregate a campaign: mean risks, log2 risk ratios vs the baseline
    method, complexity quantiles (0.75/0.9/0.95) and test-count slopes."""
    cfg = report.config
    baseline = cfg.baseline or cfg.methods[0]
    cells: list[dict] = []
    w_log2: list[dict] = []
    risks: dict[tuple, float] = {}
    for d in cfg.densities:
        for f in cfg.families:
            for n in cfg.n:
                for method in cfg.methods:
                    sub = [
                        r
                        for r in report.rows
                        if r["density"] == d
                        and r["family"] == f
                        and r["n"] == n
                        and r["method"] == method
                    ]
                    if not sub:
                        continue
                    ratios = sorted(
                        {r["replicate"]: r["complexity_ratio"] for r in sub}.items()
                    )
                    tests = sorted({r["replicate"]: r["tests_used"] for r in sub}.items())
                    cell = dict(
                        density=d,
                        family=f,
                        n=n,
                        method=method,
                        m_candidates=int(np.median([r["m_candidates"] for r in sub])),
                        replicates=len(ratios),
                        mean_tests=float(np.mean([t for _, t in tests])),
                        mean_log_tests=float(np.mean(np.log([t for _, t in tests])))
                        if all(t > 0 for _, t in tests)
                        else None,
                        complexity_quantiles={
                            str(q): empirical_quantile([v for _, v in ratios], q)
                            for q in (0.75, 0.9, 0.95)
                        },
                        mean_risk={},
                    )
                    for loss in cfg.losses:
                        vals = [r["loss_value"] for r in sub if r["loss_name"] == loss]
                        risk = empirical_risk(vals)
                        cell["mean_risk"][loss] = risk
                        risks[(d, f, n, method, loss)] = risk
                    cells.append(cell)
    for (d, f, n, method, loss), risk in sorted(risks.items()):
        if method == baseline:
            continue
        ref = risks.get((d, f, n, baseline, loss))
        if ref is None:
            continue
        w_log2.append(
            dict(
                density=d,
                family=f,
                n=n,
                loss=loss,
                method=method,
                baseline=baseline,
                value=normalized_log2_ratio(risk, ref, loss),
            )
        )

    pooled: dict = {}
    for method in cfg.methods:
        if method in ("ls", "kl"):
            continue
        for n in cfg.n:
            vals = [
                r["complexity_ratio"]
                for r in report.rows
                if r["method"] == method and r["n"] == n and r["loss_name"] == cfg.losses[0]
            ]
            if vals:
                pooled[f"{method}|n={n}"] = {
                    str(q): empirical_quantile(vals, q) for q in (0.75, 0.9, 0.95)
                }

    slopes: list[dict] = []
    for method in cfg.methods:
        if method in ("ls", "kl"):
            continue
        for d in cfg.densities:
            for f in cfg.families:
                pts = []
                for n in cfg.n:
                    sub = [
                        r
                        for r in report.rows
                        if r["density"] == d
                        and r["family"] == f
                        and r["n"] == n
                        and r["method"] == method
                        and r["loss_name"] == cfg.losses[0]
                    ]
                    if not sub:
                        continue
                    m_candidates = sub[0]["m_candidates"]
                    logs = np.log([max(r["tests_used"], 1) for r in sub])
                    pts.append((m_candidates, float(np.mean(logs))))
                if len({m for m, _ in pts}) >= 2:
                    slopes.append(
                        dict(density=d, family=f, method=method, beta=complexity_slope(pts))
                    )

    oracle = None
    if "exact" in cfg.methods and "brute" in cfg.methods:
        loss0 = cfg.losses[0]
        crit: dict[tuple, dict[str, float]] = {}
        for r in report.rows:
            if r["loss_name"] != loss0 or r["method"] not in ("exact", "brute"):
                continue
            crit.setdefault((r["density"], r["family"], r["n"], r["replicate"]), {})[
                r["method"]
            ] = r["criterion"]
        pairs = [v for v in crit.values() if len(v) == 2]
        bad = sum(1 for v in pairs if abs(v["exact"] - v["brute"]) > 1e-12)
        oracle = dict(pairs=len(pairs), disagreements=bad)

    return dict(
        config=cfg.to_json(),
        backend_failures=len(report.failures),
        failures=report.failures,
        cells=cells,
        w_log2=w_log2,
        w_baseline=baseline,
        complexity_quantiles=pooled,
        beta_slopes=slopes,
        oracle_check=oracle,
    )
