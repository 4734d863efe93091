"""Personalised TSP instances and solvers.

Node 0 is the agent's starting point (the depot); nodes ``1..n`` are
restaurants. A :class:`Tour` lists the restaurants in visiting order, the
depot being implicit at both ends.

Solvers:

* :func:`solve_exact` -- Held-Karp over subsets, for at most 16 nodes.
* :func:`nearest_neighbor` -- greedy construction.
* :func:`improve_2opt` -- first-improvement 2-opt descent.
* :func:`solve_metaheuristic` -- general VNS: 2-opt + Or-opt descent with
  double-bridge shaking, bounded by a number of move evaluations.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

EXACT_MAX_NODES = 16
_EPS = 1e-10


class InstanceTooLargeError(ValueError):
    """Raised when the exact solver is asked for more than 16 nodes."""


@dataclass(frozen=True, eq=False)
class TspInstance:
    costs: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.costs, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise ValueError("cost matrix must be square with at least one restaurant")
        if not np.allclose(c, c.T, rtol=0.0, atol=1e-12):
            raise ValueError("cost matrix must be symmetric")
        if np.any(np.diag(c) != 0.0):
            raise ValueError("cost matrix must have a zero diagonal")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("costs must be finite and non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "costs", c)

    @property
    def node_count(self) -> int:
        return self.costs.shape[0]

    @property
    def n(self) -> int:
        """Number of restaurants."""
        return self.costs.shape[0] - 1


@dataclass(frozen=True)
class Tour:
    visit_order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(v) for v in self.visit_order)
        if sorted(order) != list(range(1, len(order) + 1)):
            raise ValueError(f"visit order {order} is not a permutation of 1..{len(order)}")
        object.__setattr__(self, "visit_order", order)

    def __len__(self) -> int:
        return len(self.visit_order)

    def closed(self) -> list[int]:
        """The tour with the depot at both ends."""
        return [0, *self.visit_order, 0]

    def canonical(self) -> tuple[int, ...]:
        """Orientation-free key: the smaller of the order and its reversal."""
        return min(self.visit_order, self.visit_order[::-1])


def preference_penalties(prefs: Sequence[int], n: int) -> np.ndarray:
    """Penalty per node: 0 for the depot, ``(rank-1)/(n-1)`` for restaurants."""
    order = [int(r) for r in prefs]
    if sorted(order) != list(range(1, n + 1)):
        raise ValueError(f"preference ranking must be a permutation of 1..{n}")
    pen = np.zeros(n + 1)
    pen[order] = np.arange(n) / max(n - 1, 1)
    return pen


def blend_costs(dist: np.ndarray, pen: np.ndarray, lam: float) -> np.ndarray:
    """``(1-lam) * dist/d_max + lam * (pen_u + pen_v)/2`` with a zero diagonal."""
    d_max = dist.max()
    scaled = dist / d_max if d_max > 0 else np.zeros_like(dist)
    costs = (1.0 - lam) * scaled + lam * 0.5 * (pen[:, None] + pen[None, :])
    np.fill_diagonal(costs, 0.0)
    return costs


def build_personal_instance(start, restaurants, prefs: Sequence[int], lam: float = 0.3) -> TspInstance:
    """Cost matrix mixing normalised distance with the agent's preferences.

    ``prefs`` lists restaurant node ids (1-based, in the order of
    ``restaurants``) from most to least preferred.
    """
    pts = np.asarray(restaurants, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n < 1:
        raise ValueError("at least one restaurant is required")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    nodes = np.vstack([np.asarray(start, dtype=float).reshape(1, 2), pts])
    diff = nodes[:, None, :] - nodes[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    return TspInstance(blend_costs(dist, preference_penalties(prefs, n), lam))


def _check_tour(instance: TspInstance, tour: Tour) -> None:
    if len(tour) != instance.n:
        raise ValueError(f"tour visits {len(tour)} restaurants, instance has {instance.n}")


def tour_cost(instance: TspInstance, tour: Tour) -> float:
    _check_tour(instance, tour)
    seq = tour.closed()
    return float(instance.costs[seq[:-1], seq[1:]].sum())


def random_tour(n: int, seed: int) -> Tour:
    """Uniformly random visiting order (Fisher-Yates via numpy)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(int(seed) % 2**64)
    return Tour(tuple(rng.permutation(n) + 1))


# --- exact -----------------------------------------------------------------

@njit(cache=True)
def _held_karp_table(c):
    # best[S, j]: cheapest path leaving the depot, covering subset S of
    # restaurants (bit j-1 for node j) and ending at j.
    n = c.shape[0] - 1
    full = 1 << n
    best = np.full((full, n + 1), np.inf)
    for j in range(1, n + 1):
        best[1 << (j - 1), j] = c[0, j]
    for mask in range(1, full):
        for j in range(1, n + 1):
            bit = 1 << (j - 1)
            if not (mask & bit):
                continue
            cur = best[mask, j]
            if cur == np.inf:
                continue
            for k in range(1, n + 1):
                kb = 1 << (k - 1)
                if mask & kb:
                    continue
                cand = cur + c[j, k]
                if cand < best[mask | kb, k]:
                    best[mask | kb, k] = cand
    return best


def solve_exact(instance: TspInstance) -> Tour:
    """Optimal tour; ties go to the lexicographically smallest visit order."""
    if instance.node_count > EXACT_MAX_NODES:
        raise InstanceTooLargeError(
            f"exact solver is capped at {EXACT_MAX_NODES} nodes, got {instance.node_count}"
        )
    c = instance.costs
    n = instance.n
    best = _held_karp_table(c)
    # With symmetric costs, best[S, j] is also the cheapest way to start at j,
    # cover S and return to the depot, which lets us rebuild the tour
    # front-to-back and take the smallest index among optimal choices.
    remaining = (1 << n) - 1
    target = min(c[0, j] + best[remaining, j] for j in range(1, n + 1))
    tol = 1e-9 * max(1.0, abs(target))
    order = []
    prev = 0
    for _ in range(n):
        for j in range(1, n + 1):
            if remaining & (1 << (j - 1)) and c[prev, j] + best[remaining, j] <= target + tol:
                order.append(j)
                target -= c[prev, j]
                remaining &= ~(1 << (j - 1))
                prev = j
                break
    return Tour(tuple(order))


# --- local search kernels ----------------------------------------------------
# Tours are int64 arrays of length n+1 with the depot fixed at index 0.

@njit(cache=True)
def _nearest_neighbor(c):
    size = c.shape[0]
    seq = np.zeros(size, dtype=np.int64)
    used = np.zeros(size, dtype=np.bool_)
    used[0] = True
    cur = 0
    for pos in range(1, size):
        nxt = -1
        bestc = np.inf
        for j in range(1, size):
            if not used[j] and c[cur, j] < bestc:
                bestc = c[cur, j]
                nxt = j
        seq[pos] = nxt
        used[nxt] = True
        cur = nxt
    return seq


@njit(cache=True)
def _seq_cost(c, seq):
    total = 0.0
    size = seq.shape[0]
    for i in range(size):
        total += c[seq[i], seq[(i + 1) % size]]
    return total


@njit(cache=True)
def _two_opt(c, seq, max_evals, eps):
    """First-improvement 2-opt until a full pass finds nothing or evals run out."""
    size = seq.shape[0]
    evals = 0
    improved_any = False
    improved = True
    while improved:
        improved = False
        for i in range(1, size - 1):
            for j in range(i + 1, size):
                if evals >= max_evals:
                    return evals, improved_any
                evals += 1
                a = seq[i - 1]
                b = seq[i]
                cc = seq[j]
                d = seq[(j + 1) % size]
                delta = c[a, cc] + c[b, d] - c[a, b] - c[cc, d]
                if delta < -eps:
                    lo = i
                    hi = j
                    while lo < hi:
                        tmp = seq[lo]
                        seq[lo] = seq[hi]
                        seq[hi] = tmp
                        lo += 1
                        hi -= 1
                    improved = True
                    improved_any = True
    return evals, improved_any


@njit(cache=True)
def _or_opt(c, seq, max_evals, eps):
    """Apply the first improving relocation of a 1-3 node segment, if any."""
    size = seq.shape[0]
    evals = 0
    for seg in range(1, 4):
        if seg > size - 2:
            break
        for i in range(1, size - seg + 1):
            p = seq[i - 1]
            s0 = seq[i]
            s1 = seq[i + seg - 1]
            q = seq[(i + seg) % size]
            removal = c[p, s0] + c[s1, q] - c[p, q]
            for j in range(size):
                # skip edges touching or inside the segment
                if j >= i - 1 and j <= i + seg - 1:
                    continue
                if evals >= max_evals:
                    return evals, False
                evals += 1
                x = seq[j]
                y = seq[(j + 1) % size]
                fwd = c[x, s0] + c[s1, y] - c[x, y]
                rev = c[x, s1] + c[s0, y] - c[x, y]
                reverse = rev < fwd
                add = rev if reverse else fwd
                if add - removal < -eps:
                    segment = seq[i:i + seg].copy()
                    if reverse:
                        segment = segment[::-1].copy()
                    rest = np.concatenate((seq[:i], seq[i + seg:]))
                    pos = 0
                    for t in range(rest.shape[0]):
                        if rest[t] == x:
                            pos = t
                            break
                    out = np.concatenate((rest[:pos + 1], segment, rest[pos + 1:]))
                    seq[:] = out
                    return evals, True
    return evals, False


@njit(cache=True)
def _vnd(c, seq, max_evals, eps):
    used = 0
    while used < max_evals:
        e, _ = _two_opt(c, seq, max_evals - used, eps)
        used += e
        if used >= max_evals:
            break
        e, moved = _or_opt(c, seq, max_evals - used, eps)
        used += e
        if not moved:
            break
    return used


def _as_tour(seq: np.ndarray) -> Tour:
    return Tour(tuple(int(v) for v in seq[1:]))


def _as_seq(tour: Tour) -> np.ndarray:
    return np.array([0, *tour.visit_order], dtype=np.int64)


def nearest_neighbor(instance: TspInstance) -> Tour:
    return _as_tour(_nearest_neighbor(instance.costs))


def improve_2opt(instance: TspInstance, tour: Tour) -> Tour:
    _check_tour(instance, tour)
    seq = _as_seq(tour)
    _two_opt(instance.costs, seq, np.iinfo(np.int64).max, _EPS)
    return _as_tour(seq)


@njit(cache=True)
def _double_bridge(seq):
    n = seq.shape[0] - 1
    out = seq.copy()
    if n < 4:
        # too short for four segments: random restart instead
        for i in range(n, 1, -1):
            j = np.random.randint(1, i + 1)
            tmp = out[i]
            out[i] = out[j]
            out[j] = tmp
        return out
    cuts = np.random.choice(np.arange(2, n + 1), 3, replace=False)
    cuts.sort()
    p1, p2, p3 = cuts[0], cuts[1], cuts[2]
    return np.concatenate((seq[:p1], seq[p2:p3], seq[p1:p2], seq[p3:]))


@njit(cache=True)
def _gvns(c, seq, budget, seed, eps):
    np.random.seed(seed)
    used = _vnd(c, seq, budget, eps)
    best = seq.copy()
    best_cost = _seq_cost(c, best)
    while used < budget:
        trial = _double_bridge(best)
        used += _vnd(c, trial, budget - used, eps)
        cost = _seq_cost(c, trial)
        if cost < best_cost - eps:
            best = trial
            best_cost = cost
    return best


def _seed32(seed: int) -> int:
    return int(np.random.SeedSequence(int(seed) % 2**64).generate_state(1)[0])


def solve_metaheuristic(instance: TspInstance, budget: int = 100_000, seed: int = 0) -> Tour:
    """GVNS from a nearest-neighbour start; returns the best tour seen.

    ``budget`` caps the number of move evaluations spent in local search.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    return _as_tour(_metaheuristic_seq(instance.costs, budget, seed))


def _metaheuristic_seq(c: np.ndarray, budget: int, seed: int, hashed: bool = True) -> np.ndarray:
    seq = _nearest_neighbor(c)
    if c.shape[0] <= 3:
        return seq
    return _gvns(c, seq, budget, _seed32(seed) if hashed else seed, _EPS)


# --- instance files ----------------------------------------------------------

def write_instance(instance: TspInstance, descriptor_path, edges_path=None, depot: int = 0) -> None:
    """Write ``i,j,cost`` edges (i < j) plus a JSON descriptor pointing at them."""
    descriptor_path = os.fspath(descriptor_path)
    if edges_path is None:
        edges_path = os.path.splitext(descriptor_path)[0] + ".csv"
    edges_path = os.fspath(edges_path)
    with open(edges_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "cost"])
        n = instance.node_count
        for i in range(n):
            for j in range(i + 1, n):
                writer.writerow([i, j, repr(float(instance.costs[i, j]))])
    rel = os.path.relpath(edges_path, os.path.dirname(os.path.abspath(descriptor_path)))
    with open(descriptor_path, "w") as fh:
        json.dump({"node_count": instance.node_count, "depot": depot, "edges": rel}, fh, indent=2)


def _read_edges(path, node_count=None) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [(int(r["i"]), int(r["j"]), float(r["cost"])) for r in csv.DictReader(fh)]
    if node_count is None:
        node_count = 1 + max(max(i, j) for i, j, _ in rows)
    c = np.zeros((node_count, node_count))
    seen = np.eye(node_count, dtype=bool)
    for i, j, w in rows:
        if i == j:
            continue
        c[i, j] = c[j, i] = w
        seen[i, j] = seen[j, i] = True
    if not seen.all():
        raise ValueError(f"edge list {path} does not cover every node pair")
    return c


def read_instance(path) -> tuple[TspInstance, list[int]]:
    """Load an instance from a JSON descriptor or a bare edge CSV.

    Nodes are relabelled so the depot becomes node 0; the returned list maps
    each internal node id back to its label in the file.
    """
    path = os.fspath(path)
    if path.endswith(".json"):
        with open(path) as fh:
            desc = json.load(fh)
        edges = os.path.join(os.path.dirname(os.path.abspath(path)), desc["edges"])
        c = _read_edges(edges, int(desc["node_count"]))
        depot = int(desc.get("depot", 0))
    else:
        c = _read_edges(path)
        depot = 0
    labels = [depot] + [v for v in range(c.shape[0]) if v != depot]
    return TspInstance(c[np.ix_(labels, labels)]), labels
