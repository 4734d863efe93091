"""Expected-value model of the m-stop game under equiprobable tours.

With ``n_t`` active agents each holding a uniformly random tour over the
``n_t`` never-used restaurants, a restaurant stays vacant through day ``t``
iff it is absent from the first ``m`` positions of every tour, which has
probability ``((n_t - m)/n_t) ** n_t``. Iterating that gives the day-by-day
expected number of active agents and the cumulative utilization.

``n_t`` is carried as a real number and never rounded.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field


class DegenerateDayError(ValueError):
    """Fewer active agents than stops: every active agent is served that day."""


@dataclass(frozen=True)
class ModelParams:
    n: float
    m: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if self.m > self.n:
            raise ValueError(f"m={self.m} exceeds n={self.n}")


@dataclass(frozen=True)
class DayStats:
    t: int
    n_t: float
    vp_t: float
    a_s: float
    a_u: float
    f_t: float


@dataclass
class Trajectory:
    params: ModelParams
    days: list[DayStats] = field(default_factory=list)

    @property
    def utilization(self) -> list[float]:
        return [d.f_t for d in self.days]

    @property
    def f_infinity(self) -> float:
        return self.days[-1].f_t

    @property
    def converged(self) -> bool:
        return bool(self.days) and self.days[-1].a_u == 0.0


def _power_term(base_num: float, n_t: float) -> float:
    """``(base_num / n_t) ** n_t`` evaluated in log space."""
    if base_num <= 0.0:
        return 0.0
    return math.exp(n_t * math.log1p((base_num - n_t) / n_t))


def vacancy_probability(n_t: float, m: int) -> float:
    """Probability that a never-used restaurant is still vacant at day's end."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if n_t < m:
        raise DegenerateDayError(f"n_t={n_t} < m={m}: all active agents are served")
    return _power_term(n_t - m, n_t)


def stage_vacancy_probability(n_t: float, z: int, m: int | None = None) -> float:
    """Vacancy probability at the beginning of stop ``z`` (``z = m+1`` is day's end)."""
    if z < 1 or (m is not None and z > m + 1):
        raise ValueError(f"stop index z={z} out of range")
    if n_t < z - 1:
        raise ValueError(f"n_t={n_t} < z-1={z - 1}")
    return _power_term(n_t + 1 - z, n_t)


def trajectory(params: ModelParams, horizon: int = 64) -> Trajectory:
    """Iterate the daily recurrence until everyone is served or ``horizon`` days."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n, m = float(params.n), params.m
    traj = Trajectory(params)
    n_t = n
    for t in range(1, horizon + 1):
        if n_t > m:
            vp = vacancy_probability(n_t, m)
            a_u = n_t * vp
            a_s = n_t - a_u
            f = (n - a_u) / n
        else:
            vp, a_s, a_u, f = 0.0, n_t, 0.0, 1.0
        traj.days.append(DayStats(t, n_t, vp, a_s, a_u, f))
        if a_u == 0.0:
            break
        n_t = a_u
    return traj


def position_probability(n: int, w: int) -> float:
    """Chance a given restaurant sits in one of ``w`` given tour positions."""
    if not 1 <= w <= n:
        raise ValueError(f"w must lie in 1..{n}, got {w}")
    return w / n


def appearance_distribution(n: int, w: int, l: int) -> float:
    """P(a restaurant occupies one of ``w`` fixed positions in exactly ``l`` of ``n`` tours)."""
    if not 0 <= l <= n:
        raise ValueError(f"l must lie in 0..{n}, got {l}")
    p = position_probability(n, w)
    return math.comb(n, l) * p**l * (1.0 - p) ** (n - l)


def day1_utilization_exact(n: float, m: int) -> float:
    return 1.0 - vacancy_probability(n, m)


def approx_stats(n: float, m: int, t: int) -> DayStats:
    """Large-``n`` exponential approximation of day ``t``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    n_t = n * math.exp(-(t - 1) * m)
    a_u = n * math.exp(-t * m)
    return DayStats(t, n_t, math.exp(-t * m), n_t - a_u, a_u, -math.expm1(-t * m))


def approx_utilization(m: int, t: float) -> float:
    """``1 - exp(-t m)``; ``t`` may be fractional for smooth curves."""
    return -math.expm1(-t * m)


TABLE_COLUMNS = ("day", "n_t", "vp", "a_s", "a_u", "f")


def trajectory_rows(traj: Trajectory, digits: int = 9) -> list[list[str]]:
    fmt = f"{{:.{digits}g}}"
    return [
        [str(d.t)] + [fmt.format(v) for v in (d.n_t, d.vp_t, d.a_s, d.a_u, d.f_t)]
        for d in traj.days
    ]


def write_trajectory_csv(traj: Trajectory, fh, digits: int = 9) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    writer.writerows(trajectory_rows(traj, digits))
