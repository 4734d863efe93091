import numpy as np
import pytest

from dkprg.tsp import TspInstance

# Four-node example: nodes 1..4 with node 1 as the start, relabelled 0..3 here.
FOUR_NODE_COSTS = np.array(
    [
        [0, 11, 7, 42],
        [11, 0, 35, 19],
        [7, 35, 0, 12],
        [42, 19, 12, 0],
    ],
    dtype=float,
)


@pytest.fixture
def four_nodes():
    return TspInstance(FOUR_NODE_COSTS)


def random_euclidean_instance(rng: np.random.Generator, n: int) -> TspInstance:
    pts = rng.random((n + 1, 2))
    return TspInstance(np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1)))


def embedded_state(tours, n_total, m, vacant, seed=0):
    """Game of ``n_total`` restaurants where only ``vacant`` are free.

    ``tours[i]`` indexes into ``vacant``; active agents are 0..len(tours)-1
    and the rest already hold the reserved restaurants.
    """
    from dkprg.game import GameConfig, new_game

    vacant = np.asarray(vacant, dtype=np.int64)
    k = len(tours)
    assert len(vacant) == k
    state = new_game(GameConfig(n_total, m, tour_policy="random", seed=seed))
    taken = np.setdiff1d(np.arange(n_total), vacant)
    state.served_at[k:] = taken
    state.reserved_by[taken] = np.arange(k, n_total)
    state.tour_agents = np.arange(k, dtype=np.int64)
    state.tours = vacant[np.asarray(tours, dtype=np.int64).reshape(k, k)]
    return state


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
