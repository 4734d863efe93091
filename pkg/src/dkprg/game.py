"""Day-by-day simulation of the m-stop distributed restaurant game.

Each day every active agent walks its tour for at most ``m`` stops. All
agents take stop ``z`` together before anyone moves on to stop ``z + 1``.
A restaurant that is reserved, or has already served someone today, turns
arrivals away; among simultaneous arrivals at a free restaurant one winner
is drawn uniformly. Winners keep their restaurant for good. In the evening
the remaining agents get fresh tours over the still-vacant restaurants.

Two scoring rules are available for a day:

``behavioral``
    agents actually walk as described above.
``counting``
    a vacant restaurant counts as used iff it appears among the first ``m``
    positions of some active tour; no walking is simulated.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from . import spatial
from .tsp import _metaheuristic_seq

TSP = "tsp"
RANDOM = "random"
POLICIES = (TSP, RANDOM)
BEHAVIORAL = "behavioral"
COUNTING = "counting"
SEMANTICS = (BEHAVIORAL, COUNTING)


class InvalidConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GameConfig:
    n: int
    m: int
    tour_policy: str = TSP
    placement: str = spatial.UNIFORM
    lam: float = 0.3
    seed: int = 0
    max_days: int = 64
    tsp_budget: int = 10_000

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidConfigError(f"n must be a positive integer, got {self.n}")
        if int(self.m) != self.m or not 1 <= self.m <= self.n:
            raise InvalidConfigError(f"m must satisfy 1 <= m <= n, got m={self.m}, n={self.n}")
        if self.tour_policy not in POLICIES:
            raise InvalidConfigError(f"tour_policy must be one of {POLICIES}")
        if self.placement not in spatial.PLACEMENTS:
            raise InvalidConfigError(f"placement must be one of {spatial.PLACEMENTS}")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidConfigError(f"lam must lie in [0, 1], got {self.lam}")
        if self.max_days < 1:
            raise InvalidConfigError("max_days must be >= 1")
        if self.tsp_budget < 1:
            raise InvalidConfigError("tsp_budget must be >= 1")


@dataclass(frozen=True)
class AgentState:
    id: int
    start: tuple[float, float]
    prefs: tuple[int, ...]
    tour: tuple[int, ...] | None = None
    restaurant: int | None = None

    @property
    def satisfied(self) -> bool:
        return self.restaurant is not None


@dataclass(frozen=True)
class RestaurantState:
    id: int
    location: tuple[float, float]
    reserved_by: int | None = None

    @property
    def vacant(self) -> bool:
        return self.reserved_by is None


@dataclass(frozen=True)
class DayLog:
    day: int
    active_at_start: int
    served_today: int
    still_unserved: int
    cumulative_utilization: float
    per_stop_services: tuple[int, ...]


@dataclass
class GameState:
    """Mutable state of one game.

    ``served_at[a]`` is the restaurant reserved by agent ``a`` (-1 while
    active) and ``reserved_by[r]`` the agent holding restaurant ``r``.
    ``tours`` has one row per entry of ``tour_agents``; restaurant ids are
    0-based.
    """

    config: GameConfig
    restaurants: np.ndarray
    starts: np.ndarray
    pref_seed: int
    served_at: np.ndarray
    reserved_by: np.ndarray
    tour_agents: np.ndarray
    tours: np.ndarray
    tour_rng: np.random.Generator
    service_rng: np.random.Generator
    day: int = 0
    logs: list[DayLog] = field(default_factory=list)

    _prefs: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def prefs(self) -> np.ndarray:
        """``prefs[a]`` lists restaurant ids from most to least preferred by ``a``."""
        if self._prefs is None:
            rng = np.random.default_rng(self.pref_seed)
            self._prefs = _shuffle_rows(np.tile(np.arange(self.n), (self.n, 1)), rng)
        return self._prefs

    def active_agents(self) -> np.ndarray:
        return np.flatnonzero(self.served_at < 0)

    def vacant_restaurants(self) -> np.ndarray:
        return np.flatnonzero(self.reserved_by < 0)

    def tour_of(self, agent: int) -> np.ndarray | None:
        rows = np.flatnonzero(self.tour_agents == agent)
        return self.tours[rows[0]] if len(rows) else None

    def agent(self, a: int) -> AgentState:
        tour = self.tour_of(a)
        return AgentState(
            id=a,
            start=tuple(float(v) for v in self.starts[a]),
            prefs=tuple(int(r) for r in self.prefs[a]),
            tour=None if self.served_at[a] >= 0 or tour is None else tuple(int(r) for r in tour),
            restaurant=int(self.served_at[a]) if self.served_at[a] >= 0 else None,
        )

    def restaurant(self, r: int) -> RestaurantState:
        holder = int(self.reserved_by[r])
        return RestaurantState(r, tuple(float(v) for v in self.restaurants[r]), holder if holder >= 0 else None)

    def to_json(self) -> dict:
        return {
            "config": asdict(self.config),
            "day": self.day,
            "agents": [asdict(self.agent(a)) for a in range(self.n)],
            "restaurants": [asdict(self.restaurant(r)) for r in range(self.n)],
        }


def _child_seeds(seed: int, count: int) -> list[int]:
    return np.random.default_rng(int(seed) % 2**64).integers(2**63, size=count).tolist()


@njit(cache=True)
def _shuffle_rows_kernel(rows, u):
    k, v = rows.shape
    for a in range(k):
        for i in range(v - 1, 0, -1):
            j = int(u[a, i] * (i + 1))
            tmp = rows[a, i]
            rows[a, i] = rows[a, j]
            rows[a, j] = tmp
    return rows


def _shuffle_rows(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independent Fisher-Yates shuffle of every row (in place)."""
    return _shuffle_rows_kernel(rows, rng.random(rows.shape))


def new_game(config: GameConfig) -> GameState:
    n = config.n
    s_rest, s_start, s_pref, s_tour, s_service = _child_seeds(config.seed, 5)
    state = GameState(
        config=config,
        restaurants=spatial.sample_uniform_points(n, s_rest),
        starts=spatial.agent_starts(n, config.placement, s_start),
        pref_seed=s_pref,
        served_at=np.full(n, -1, dtype=np.int64),
        reserved_by=np.full(n, -1, dtype=np.int64),
        tour_agents=np.empty(0, dtype=np.int64),
        tours=np.empty((0, n), dtype=np.int64),
        tour_rng=np.random.default_rng(s_tour),
        service_rng=np.random.default_rng(s_service),
    )
    _assign_tours(state)
    return state


def _assign_tours(state: GameState) -> None:
    agents = state.active_agents()
    vacant = state.vacant_restaurants()
    if state.config.tour_policy == RANDOM:
        tours = _shuffle_rows(np.tile(vacant, (len(agents), 1)), state.tour_rng)
    else:
        pts = state.restaurants[vacant]
        diff = pts[:, None, :] - pts[None, :, :]
        between = np.sqrt((diff**2).sum(-1))
        tours = np.array([_tsp_tour(state, a, vacant, between) for a in agents], dtype=np.int64)
    state.tour_agents = agents
    state.tours = tours.reshape(len(agents), len(vacant))


@njit(cache=True)
def _agent_costs(start, pts, between, pen, lam):
    # same blend as tsp.build_personal_instance, reusing restaurant distances
    v = pts.shape[0]
    dist = np.empty((v + 1, v + 1))
    dist[1:, 1:] = between
    dist[0, 0] = 0.0
    for j in range(v):
        d = np.hypot(pts[j, 0] - start[0], pts[j, 1] - start[1])
        dist[0, j + 1] = d
        dist[j + 1, 0] = d
    d_max = dist.max()
    scale = (1.0 - lam) / d_max if d_max > 0 else 0.0
    for i in range(v + 1):
        for j in range(v + 1):
            dist[i, j] = 0.0 if i == j else scale * dist[i, j] + 0.5 * lam * (pen[i] + pen[j])
    return dist


def _tsp_tour(state: GameState, agent: int, vacant: np.ndarray, between: np.ndarray) -> np.ndarray:
    cfg = state.config
    v = len(vacant)
    # rank restaurants by the agent's original ordering, restricted to the vacant ones
    node_of = np.full(state.n, -1, dtype=np.int64)
    node_of[vacant] = np.arange(1, v + 1)
    ranked = node_of[state.prefs[agent]]
    ranked = ranked[ranked > 0]
    pen = np.zeros(v + 1)
    pen[ranked] = np.arange(v) / max(v - 1, 1)
    costs = _agent_costs(state.starts[agent], state.restaurants[vacant], between, pen, cfg.lam)
    seq = _metaheuristic_seq(costs, cfg.tsp_budget, int(state.tour_rng.integers(2**32)), hashed=False)
    return vacant[seq[1:] - 1]


def utilized_restaurants(tours: np.ndarray, m: int, unavailable: np.ndarray | None = None) -> np.ndarray:
    """Restaurants in the first ``m`` positions of at least one tour."""
    used = np.unique(tours[:, :m])
    if unavailable is not None:
        used = used[~unavailable[used]]
    return used


def _behavioral_day(state: GameState, rng: np.random.Generator):
    m = state.config.m
    tours = state.tours
    k, v = tours.shape
    busy = state.reserved_by >= 0
    unserved = np.ones(k, dtype=bool)
    won_at = np.full(k, -1, dtype=np.int64)
    per_stop = []
    for z in range(m):
        if z >= v:
            per_stop.append(0)
            continue
        rows = np.flatnonzero(unserved)
        targets = tours[rows, z]
        free = ~busy[targets]
        rows, targets = rows[free], targets[free]
        if len(rows) == 0:
            per_stop.append(0)
            continue
        # uniform winner per restaurant: smallest random key among its arrivals
        order = np.lexsort((rng.random(len(rows)), targets))
        t_sorted = targets[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = t_sorted[1:] != t_sorted[:-1]
        winners = rows[order][first]
        busy[t_sorted[first]] = True
        unserved[winners] = False
        won_at[winners] = t_sorted[first]
        per_stop.append(len(winners))
    return won_at, per_stop


def _counting_day(state: GameState):
    m = state.config.m
    tours = state.tours
    k = tours.shape[0]
    reserved = state.reserved_by >= 0
    taken = reserved.copy()
    won_at = np.full(k, -1, dtype=np.int64)
    per_stop = []
    # A restaurant is used on the stop where it first shows up. Each one is
    # paired with the lowest-indexed free agent listing it at that stop, or
    # failing that with any leftover agent, so reserved counts stay equal
    # to satisfied counts.
    for z in range(min(m, tours.shape[1])):
        targets = tours[:, z]
        new = np.flatnonzero(~taken[targets])
        fresh = np.unique(targets[new])
        per_stop.append(len(fresh))
        rows = new[won_at[new] < 0]
        r_sorted, first_idx = np.unique(targets[rows], return_index=True)
        won_at[rows[first_idx]] = r_sorted
        taken[fresh] = True
    per_stop += [0] * (m - len(per_stop))
    orphans = np.setdiff1d(np.flatnonzero(taken & ~reserved), won_at[won_at >= 0])
    spare = np.flatnonzero(won_at < 0)
    won_at[spare[: len(orphans)]] = orphans
    return won_at, per_stop


def play_day(state: GameState, rng: np.random.Generator | None = None, semantics: str = BEHAVIORAL) -> DayLog:
    """Play one day in place and return its log."""
    if semantics not in SEMANTICS:
        raise ValueError(f"semantics must be one of {SEMANTICS}")
    agents = state.tour_agents
    active = len(state.active_agents())
    if active == 0:
        raise ValueError("no active agents left to play a day")
    if semantics == BEHAVIORAL:
        won_at, per_stop = _behavioral_day(state, state.service_rng if rng is None else rng)
    else:
        won_at, per_stop = _counting_day(state)
    won = won_at >= 0
    state.served_at[agents[won]] = won_at[won]
    state.reserved_by[won_at[won]] = agents[won]
    state.tour_agents = agents[~won]
    state.tours = state.tours[~won]
    state.day += 1
    unserved = active - int(won.sum())
    log = DayLog(
        day=state.day,
        active_at_start=active,
        served_today=int(won.sum()),
        still_unserved=unserved,
        cumulative_utilization=(state.n - unserved) / state.n,
        per_stop_services=tuple(int(c) for c in per_stop),
    )
    state.logs.append(log)
    return log


def revise(state: GameState) -> GameState:
    """Evening step: unserved agents re-plan over the vacant restaurants only."""
    if len(state.active_agents()):
        _assign_tours(state)
    return state


def utilization(state: GameState) -> float:
    return float(np.count_nonzero(state.served_at >= 0)) / state.n


def run_game(config: GameConfig, semantics: str = BEHAVIORAL) -> list[DayLog]:
    state = new_game(config)
    logs = []
    while True:
        logs.append(play_day(state, semantics=semantics))
        if logs[-1].still_unserved == 0 or state.day >= config.max_days:
            return logs
        revise(state)


DAYLOG_COLUMNS = ("day", "active_at_start", "served_today", "still_unserved", "utilization")


def write_daylogs_csv(logs: list[DayLog], fh, per_stop: bool = False) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    m = max((len(l.per_stop_services) for l in logs), default=0)
    header = list(DAYLOG_COLUMNS)
    if per_stop:
        header += [f"stop{z}" for z in range(1, m + 1)]
    writer.writerow(header)
    for log in logs:
        row = [log.day, log.active_at_start, log.served_today, log.still_unserved,
               f"{log.cumulative_utilization:.9g}"]
        if per_stop:
            row += list(log.per_stop_services)
        writer.writerow(row)


def dump_state(state: GameState, fh) -> None:
    json.dump(state.to_json(), fh, indent=1)
