"""Seeded Monte Carlo experiments and exports of the reference trajectories.

Replication ``i`` of an experiment plays one full game with seed
``splitmix64(master_seed + (i + 1) * 0x9E3779B97F4A7C15)``, so any single
replication can be replayed on its own. Aggregates are merged in
replication order and do not depend on the worker count.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import analytics
from .game import (
    BEHAVIORAL,
    COUNTING,
    GameConfig,
    GameState,
    InvalidConfigError,
    run_game,
    utilized_restaurants,
)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
SEED_DERIVATION = "splitmix64(master_seed + (index + 1) * 0x9E3779B97F4A7C15)"
FORMATS = ("csv", "json")
_SEMANTICS_ALIASES = {BEHAVIORAL: BEHAVIORAL, COUNTING: COUNTING, "analytic_counting": COUNTING}
Z95 = 1.96


def splitmix64(x: int) -> int:
    z = x & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def replication_seed(master_seed: int, index: int) -> int:
    return splitmix64(master_seed + (index + 1) * _GOLDEN)


@dataclass(frozen=True)
class ExperimentConfig:
    game: GameConfig
    replications: int = 1000
    master_seed: int = 0
    semantics: str = BEHAVIORAL
    output_path: str | None = None
    format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise InvalidConfigError("replications must be >= 1")
        if self.semantics not in _SEMANTICS_ALIASES:
            raise InvalidConfigError(f"unknown semantics {self.semantics!r}")
        object.__setattr__(self, "semantics", _SEMANTICS_ALIASES[self.semantics])
        if self.format not in FORMATS:
            raise InvalidConfigError(f"format must be one of {FORMATS}")
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        game = data.pop("game", {})
        return cls(game=game if isinstance(game, GameConfig) else GameConfig(**game), **data)


@dataclass(frozen=True)
class DayAggregate:
    day: int
    util_mean: float
    util_std: float
    util_ci95: float
    served_mean: float
    served_std: float
    served_ci95: float


def _mean_std_ci(x: np.ndarray) -> tuple[float, float, float]:
    reps = len(x)
    mean = float(x.mean())
    std = float(x.std(ddof=1)) if reps > 1 else 0.0
    return mean, std, Z95 * std / math.sqrt(reps)


def aggregate(utilization: np.ndarray, served: np.ndarray) -> list[DayAggregate]:
    """Per-day mean, sample std and 95% normal half-width over replications."""
    days = []
    for d in range(utilization.shape[1]):
        days.append(DayAggregate(d + 1, *_mean_std_ci(utilization[:, d]), *_mean_std_ci(served[:, d])))
    return days


@dataclass
class RunReport:
    """Aggregated output of :func:`run_monte_carlo`.

    ``utilization`` and ``served`` are ``(replications, days)`` arrays; a
    replication that finished early keeps its final utilization and serves
    nobody on the padded days.
    """

    config: ExperimentConfig
    days: list[DayAggregate]
    seeds: list[int]
    utilization: np.ndarray
    served: np.ndarray
    duration_s: float = 0.0
    days_played: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def replications(self) -> int:
        return len(self.seeds)

    def metadata(self) -> dict:
        # wall-clock time is deliberately left out so reports are reproducible byte for byte
        cfg = asdict(self.config)
        cfg.pop("output_path")
        cfg.pop("workers")
        return {
            "experiment": cfg,
            "replications": self.replications,
            "seed_derivation": SEED_DERIVATION,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        meta = self.metadata()
        buf.write(f"# experiment: {json.dumps(meta['experiment'], sort_keys=True)}\n")
        buf.write(f"# replications: {meta['replications']}\n")
        buf.write(f"# seed_derivation: {meta['seed_derivation']}\n")
        writer = csv.writer(buf, lineterminator="\n")
        names = [f.name for f in DayAggregate.__dataclass_fields__.values()]
        writer.writerow(names)
        for d in self.days:
            writer.writerow([d.day] + [f"{getattr(d, k):.9g}" for k in names[1:]])
        return buf.getvalue()

    def to_json(self) -> str:
        days = [{k: (v if k == "day" else float(f"{v:.9g}")) for k, v in asdict(d).items()} for d in self.days]
        return json.dumps({"metadata": self.metadata(), "days": days}, indent=1, sort_keys=True) + "\n"

    def write(self, path, fmt: str = "csv") -> None:
        text = self.to_json() if fmt == "json" else self.to_csv()
        with open(path, "w") as fh:
            fh.write(text)

    def write_replications_csv(self, path) -> None:
        """One row per replication and day, enough to recompute the aggregates."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["replication", "seed", "day", "utilization", "served"])
            for i, seed in enumerate(self.seeds):
                for d in range(self.utilization.shape[1]):
                    writer.writerow([i, seed, d + 1, repr(float(self.utilization[i, d])), int(self.served[i, d])])


def read_replications_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    reps = 1 + max(int(r["replication"]) for r in rows)
    days = max(int(r["day"]) for r in rows)
    util = np.zeros((reps, days))
    served = np.zeros((reps, days))
    for r in rows:
        i, d = int(r["replication"]), int(r["day"]) - 1
        util[i, d] = float(r["utilization"])
        served[i, d] = int(r["served"])
    return util, served


def _play(args) -> list[tuple[list[float], list[int]]]:
    game, semantics, seeds = args
    out = []
    for seed in seeds:
        logs = run_game(replace(game, seed=seed), semantics=semantics)
        out.append(([l.cumulative_utilization for l in logs], [l.served_today for l in logs]))
    return out


def _collect(game: GameConfig, semantics: str, seeds: list[int], workers: int):
    if workers == 1 or len(seeds) < 2:
        return _play((game, semantics, seeds))
    chunk = math.ceil(len(seeds) / (4 * workers))
    jobs = [(game, semantics, seeds[i:i + chunk]) for i in range(0, len(seeds), chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [r for part in pool.map(_play, jobs) for r in part]


def _pad(results) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    horizon = max(len(u) for u, _ in results)
    util = np.zeros((len(results), horizon))
    served = np.zeros((len(results), horizon))
    for i, (u, s) in enumerate(results):
        util[i, : len(u)] = u
        util[i, len(u):] = u[-1]
        served[i, : len(s)] = s
    return util, served, np.array([len(u) for u, _ in results])


def run_monte_carlo(config: ExperimentConfig) -> RunReport:
    """Play ``config.replications`` independent games and aggregate them per day."""
    started = time.perf_counter()
    seeds = [replication_seed(config.master_seed, i) for i in range(config.replications)]
    results = _collect(config.game, config.semantics, seeds, config.workers)
    util, served, played = _pad(results)
    report = RunReport(
        config=config,
        days=aggregate(util, served),
        seeds=seeds,
        utilization=util,
        served=served,
        duration_s=time.perf_counter() - started,
        days_played=played,
    )
    if config.output_path:
        report.write(config.output_path, config.format)
    return report


def mc_analytic_semantics(state: GameState, m: int | None = None) -> int:
    """Vacant restaurants appearing in the first ``m`` stops of some current tour."""
    m = state.config.m if m is None else m
    return len(utilized_restaurants(state.tours, m, state.reserved_by >= 0))


# --- theory vs simulation --------------------------------------------------------

@dataclass(frozen=True)
class CompareRow:
    day: int
    exact: float
    approx: float
    counting_mean: float | None = None
    counting_ci95: float | None = None
    behavioral_mean: float | None = None
    behavioral_ci95: float | None = None
    gap_mean: float | None = None
    gap_ci95: float | None = None


def _extend(values: np.ndarray, days: int) -> np.ndarray:
    if values.shape[1] >= days:
        return values
    pad = np.repeat(values[:, -1:], days - values.shape[1], axis=1)
    return np.hstack([values, pad])


def compare(
    n: int,
    m: int,
    replications: int,
    master_seed: int = 0,
    policy: str = "random",
    placement: str = "uniform",
    lam: float = 0.3,
    horizon: int | None = None,
    workers: int = 1,
    tsp_budget: int | None = None,
) -> list[CompareRow]:
    """Exact, approximate and paired Monte Carlo utilization, day by day.

    Both Monte Carlo columns use the same replication seeds, so each pair of
    games starts from identical layouts and tours. ``replications=0`` skips
    the simulation (useful for very large ``n``).
    """
    traj = analytics.trajectory(analytics.ModelParams(n, m))
    exact = traj.utilization
    days = max(len(exact), horizon or 0)
    count = behav = None
    if replications > 0:
        extra = {} if tsp_budget is None else {"tsp_budget": tsp_budget}
        game = GameConfig(int(n), m, tour_policy=policy, placement=placement, lam=lam, **extra)
        reports = [
            run_monte_carlo(ExperimentConfig(game, replications, master_seed, sem, workers=workers))
            for sem in (COUNTING, BEHAVIORAL)
        ]
        days = max([days] + [r.utilization.shape[1] for r in reports])
        count, behav = (_extend(r.utilization, days) for r in reports)
    if horizon is not None:
        days = horizon
    rows = []
    for d in range(days):
        f = exact[d] if d < len(exact) else exact[-1]
        row = dict(day=d + 1, exact=f, approx=analytics.approx_utilization(m, d + 1))
        if count is not None:
            cm, _, cci = _mean_std_ci(count[:, d])
            bm, _, bci = _mean_std_ci(behav[:, d])
            gm, _, gci = _mean_std_ci(behav[:, d] - count[:, d])
            row.update(counting_mean=cm, counting_ci95=cci, behavioral_mean=bm,
                       behavioral_ci95=bci, gap_mean=gm, gap_ci95=gci)
        rows.append(CompareRow(**row))
    return rows


def write_compare_csv(rows: list[CompareRow], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    names = list(CompareRow.__dataclass_fields__)
    writer.writerow(names)
    for r in rows:
        writer.writerow([r.day] + ["" if getattr(r, k) is None else f"{getattr(r, k):.9g}" for k in names[1:]])


# --- reference tables and curves ------------------------------------------------

REFERENCE_INSTANCES = ((2, 100), (2, 1000), (2, 10**6), (2, 10**9), (3, 10**9))


def reproduce_tables(m: int, n_list, out_dir) -> list[str]:
    """Write ``table_m{m}_n{n}.csv`` per ``n`` with 7 significant digits."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for n in n_list:
        if n < m:
            raise ValueError(f"n={n} must be >= m={m}")
        traj = analytics.trajectory(analytics.ModelParams(n, m))
        path = os.path.join(out_dir, f"table_m{m}_n{int(n)}.csv")
        with open(path, "w", newline="") as fh:
            analytics.write_trajectory_csv(traj, fh, digits=7)
        paths.append(path)
    return paths


@dataclass(frozen=True)
class SeriesSpec:
    """One curve: ``exact`` needs ``n`` and ``days``; ``approx`` samples ``[t_start, t_end]``."""

    kind: str
    m: int
    n: float | None = None
    days: int = 11
    t_start: float = 1.0
    t_end: float = 11.0
    samples: int = 11
    label: str | None = None

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == "exact":
            return f"exact_m{self.m}_n{self.n:g}"
        return f"approx_m{self.m}"


CURVE_SETS = {
    "exact": [SeriesSpec("exact", 2, n) for n in (100, 1000, 10**6, 10**9)] + [SeriesSpec("exact", 3, 10**9)],
    "approx-m2": [SeriesSpec("approx", 2, t_start=0.4, t_end=10.0, samples=100)],
    "approx-m3": [SeriesSpec("approx", 3, t_start=0.4, t_end=10.0, samples=100)],
}


def emit_figure_data(specs, out_path=None, fmt: str = "csv") -> dict[str, list[tuple[float, float]]]:
    """Utilization curves as ``{series: [(t, f), ...]}``; optionally written to disk."""
    curves: dict[str, list[tuple[float, float]]] = {}
    for spec in specs:
        if spec.kind == "exact":
            if spec.n is None:
                raise ValueError("exact series need n")
            f = analytics.trajectory(analytics.ModelParams(spec.n, spec.m), horizon=spec.days).utilization
            f = f + [f[-1]] * (spec.days - len(f))
            curves[spec.name] = [(float(t), v) for t, v in enumerate(f, start=1)]
        elif spec.kind == "approx":
            ts = np.linspace(spec.t_start, spec.t_end, spec.samples)
            curves[spec.name] = [(float(t), analytics.approx_utilization(spec.m, t)) for t in ts]
        else:
            raise ValueError(f"unknown series kind {spec.kind!r}")
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            if fmt == "json":
                json.dump({k: [[t, float(f"{v:.9g}")] for t, v in pts] for k, pts in curves.items()}, fh, indent=1)
                fh.write("\n")
            else:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["series", "t", "f"])
                for name, pts in curves.items():
                    writer.writerows([name, f"{t:.9g}", f"{v:.9g}"] for t, v in pts)
    return curves
