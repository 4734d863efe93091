import io
import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dkprg.analytics import (
    DegenerateDayError,
    ModelParams,
    appearance_distribution,
    approx_stats,
    approx_utilization,
    day1_utilization_exact,
    position_probability,
    stage_vacancy_probability,
    trajectory,
    trajectory_rows,
    vacancy_probability,
    write_trajectory_csv,
)


def enumerate_vacancy(n: int, m: int) -> Fraction:
    """P(restaurant 0 absent from every agent's first m stops), by enumeration of m-prefixes."""
    prefixes = list(itertools.permutations(range(n), m))
    hits = sum(
        all(0 not in p for p in combo) for combo in itertools.product(prefixes, repeat=n)
    )
    return Fraction(hits, len(prefixes) ** n)


@pytest.mark.parametrize("n, m", [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3)])
def test_vacancy_probability_matches_enumeration(n, m):
    assert vacancy_probability(n, m) == pytest.approx(float(enumerate_vacancy(n, m)), abs=1e-15)
    assert float(enumerate_vacancy(n, m)) == pytest.approx(((n - m) / n) ** n, abs=1e-15)


def test_vacancy_probability_values():
    assert vacancy_probability(100, 2) == pytest.approx(0.98**100, rel=1e-13)
    assert vacancy_probability(3, 1) == pytest.approx(8 / 27)
    assert vacancy_probability(5, 5) == 0.0
    with pytest.raises(DegenerateDayError):
        vacancy_probability(2, 3)
    with pytest.raises(ValueError):
        vacancy_probability(4, 0)


def test_mean_vacant_three_agents_one_stop():
    # 27 assignments of 3 agents to 3 restaurants: mean vacant count is 8/9
    vacant = [3 - len(set(a)) for a in itertools.product(range(3), repeat=3)]
    assert Fraction(sum(vacant), 27) == Fraction(8, 9)
    assert 3 * vacancy_probability(3, 1) == pytest.approx(8 / 9)


def test_stage_vacancy_probability():
    assert stage_vacancy_probability(10, 1) == 1.0
    assert stage_vacancy_probability(10, 3, m=2) == pytest.approx(vacancy_probability(10, 2))
    assert stage_vacancy_probability(10, 2) == pytest.approx(0.9**10)
    with pytest.raises(ValueError):
        stage_vacancy_probability(10, 4, m=2)
    with pytest.raises(ValueError):
        stage_vacancy_probability(10, 0)


def test_position_probability():
    assert position_probability(10, 3) == 0.3
    with pytest.raises(ValueError):
        position_probability(3, 4)


def test_appearance_distribution_matches_enumeration():
    # three agents, one stop each: count agents whose first stop is restaurant 0
    counts = [0] * 4
    for a in itertools.product(range(3), repeat=3):
        counts[sum(x == 0 for x in a)] += 1
    assert counts == [8, 12, 6, 1]
    for l, c in enumerate(counts):
        assert appearance_distribution(3, 1, l) == pytest.approx(c / 27)
    assert sum(appearance_distribution(10, 4, l) for l in range(11)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        appearance_distribution(3, 1, 4)


@pytest.mark.parametrize(
    "n, m, expected",
    [
        (100, 2, [0.8673804, 0.9848263, 1.0]),
        (1000, 2, [0.8649355, 0.9819923, 0.9978386, 0.9999921, 1.0]),
        (10**9, 3, [0.9502129, 0.9975212, 0.9998766, 0.9999939, 0.9999997, 1.0]),
    ],
)
def test_trajectory_regression(n, m, expected):
    f = trajectory(ModelParams(n, m)).utilization
    assert f[: len(expected)] == pytest.approx(expected, abs=1e-6)


def test_trajectory_million_agents():
    f = trajectory(ModelParams(10**6, 2)).utilization
    expected = [0.864665, 0.9816847, 0.9975216, 0.9996649, 0.9999549, 0.9999942, 0.9999995, 1.0]
    assert len(f) == 8
    assert f == pytest.approx(expected, abs=1e-5)


def test_trajectory_billion_agents_two_stops():
    traj = trajectory(ModelParams(10**9, 2))
    assert len(traj.days) == 11
    assert traj.converged and traj.f_infinity == 1.0
    assert traj.utilization[:8] == pytest.approx(
        [0.8646647, 0.9816844, 0.9975212, 0.9996645, 0.9999546, 0.9999939, 0.9999992, 0.9999999],
        abs=1e-6,
    )


def test_trajectory_day_accounting():
    traj = trajectory(ModelParams(100, 2))
    d1, d2, d3 = traj.days
    assert d1.n_t == 100
    assert d1.vp_t == pytest.approx(0.98**100)
    assert d1.a_u == pytest.approx(100 * 0.98**100)
    assert d2.n_t == d1.a_u  # carried unrounded
    assert d3.n_t < 2 and d3.vp_t == 0 and d3.a_s == d3.n_t and d3.f_t == 1


def test_trajectory_horizon():
    traj = trajectory(ModelParams(10**9, 2), horizon=4)
    assert len(traj.days) == 4 and not traj.converged
    with pytest.raises(ValueError):
        trajectory(ModelParams(10, 2), horizon=0)


@pytest.mark.parametrize("n, m", [(0.5, 1), (10, 0), (10, 1.5), (3, 4)])
def test_model_params_validation(n, m):
    with pytest.raises(ValueError):
        ModelParams(n, m)


@given(st.floats(1, 1e12), st.integers(1, 6))
def test_trajectory_invariants(n, m):
    if m > n:
        return
    traj = trajectory(ModelParams(n, m))
    prev = 0.0
    for day in traj.days:
        assert 0.0 <= day.vp_t <= 1.0
        assert day.a_s + day.a_u == pytest.approx(day.n_t, rel=1e-12)
        assert day.f_t >= prev - 1e-15 and day.f_t <= 1.0
        prev = day.f_t
    for a, b in zip(traj.days, traj.days[1:]):
        assert b.n_t == a.a_u
    assert traj.converged


@given(st.floats(10, 1e9), st.integers(1, 5))
def test_more_stops_help(n, m):
    assert day1_utilization_exact(n, m + 1) > day1_utilization_exact(n, m)


def test_classical_limit():
    assert 0.632120 <= day1_utilization_exact(10**6, 1) <= 0.632122


def test_approximations():
    for m in (2, 3):
        s = approx_stats(10**9, m, 1)
        assert s.f_t == pytest.approx(1 - math.exp(-m))
        assert s.vp_t == pytest.approx(math.exp(-m))
        assert approx_stats(1e9, m, 3).n_t == pytest.approx(1e9 * math.exp(-2 * m))
        exact = trajectory(ModelParams(10**9, m)).days[0].f_t
        assert abs(exact - approx_utilization(m, 1)) < 1e-6
    assert approx_utilization(2, 0.5) == pytest.approx(1 - math.exp(-1))
    with pytest.raises(ValueError):
        approx_stats(10, 2, 0)


def test_csv_output():
    buf = io.StringIO()
    write_trajectory_csv(trajectory(ModelParams(100, 2)), buf, digits=7)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "day,n_t,vp,a_s,a_u,f"
    assert lines[1].split(",")[0] == "1" and lines[1].endswith(",0.8673804")
    assert len(lines) == 4
    assert trajectory_rows(trajectory(ModelParams(100, 2)), 3)[2][-1] == "1"
