"""The recommend-then-study loop and its line serialization."""

import math

import numpy as np
import pytest

from foke import (
    MasteryState,
    SimConfig,
    TreeRelationMatrix,
    ValidationError,
    recommend_next,
    simulate_learner,
    trajectory_lines,
    update_mastery,
)


def matrix_of(values) -> TreeRelationMatrix:
    return TreeRelationMatrix(np.asarray(values, dtype=np.int64), tau=0.8)


def connected(k: int) -> TreeRelationMatrix:
    return matrix_of(np.ones((k, k), dtype=np.int64))


@pytest.mark.parametrize("kwargs", [
    {"delta": 0.0}, {"delta": 1.5}, {"max_steps": 0}, {"mastery_goal": 0.0},
    {"mastery_goal": 1.1},
])
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValidationError):
        SimConfig(**kwargs)


def test_single_tree_with_half_steps_takes_two_steps():
    trajectory = simulate_learner(connected(1), MasteryState.zeros(1),
                                  SimConfig(delta=0.5))
    assert [(s.step, s.chosen, s.mastery) for s in trajectory] == [
        (0, 0, (0.5,)), (1, 0, (1.0,))]
    assert trajectory_lines(trajectory) == ["0,0,0.5", "1,0,1.0"]


def test_already_mastered_start_is_an_empty_trajectory():
    assert simulate_learner(connected(3), MasteryState([1.0, 1.0, 1.0])) == []


def test_three_connected_trees_finish_within_the_step_budget():
    config = SimConfig(delta=0.34)
    trajectory = simulate_learner(connected(3), MasteryState.zeros(3), config)
    assert len(trajectory) <= 3 * math.ceil(1.0 / config.delta)
    assert trajectory[-1].mastery == (1.0, 1.0, 1.0)


def test_each_step_replays_the_recommender():
    matrix = matrix_of([[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    config = SimConfig(delta=0.4)
    trajectory = simulate_learner(matrix, MasteryState.zeros(3), config)
    state = MasteryState.zeros(3)
    for step in trajectory:
        expected = recommend_next(matrix, state)
        assert step.chosen == expected
        state = update_mastery(state, expected, config.delta)
        assert step.mastery == state.values
    assert state.all_mastered()


def test_mastery_length_must_match_the_matrix():
    with pytest.raises(ValidationError, match="entries"):
        simulate_learner(connected(3), MasteryState.zeros(2))


def test_total_mastery_never_decreases():
    trajectory = simulate_learner(connected(4), MasteryState([0.2, 0.0, 0.7, 0.1]),
                                  SimConfig(delta=0.25))
    totals = [sum(step.mastery) for step in trajectory]
    assert all(b >= a for a, b in zip(totals, totals[1:]))


def test_step_budget_cuts_the_run_short():
    trajectory = simulate_learner(connected(2), MasteryState.zeros(2),
                                  SimConfig(delta=0.1, max_steps=3))
    assert len(trajectory) == 3
    assert not MasteryState(trajectory[-1].mastery).all_mastered()


def test_lowered_goal_stops_earlier():
    trajectory = simulate_learner(connected(1), MasteryState.zeros(1),
                                  SimConfig(delta=0.5, mastery_goal=0.5))
    assert len(trajectory) == 1
    assert trajectory[0].mastery == (0.5,)


def test_trajectories_are_bit_reproducible():
    matrix = matrix_of([[1, 0, 1], [0, 1, 0], [1, 0, 1]])
    config = SimConfig(delta=0.37)
    first = simulate_learner(matrix, MasteryState.zeros(3), config)
    second = simulate_learner(matrix, MasteryState.zeros(3), config)
    assert trajectory_lines(first) == trajectory_lines(second)


def test_lines_use_shortest_round_trip_floats():
    trajectory = simulate_learner(connected(1), MasteryState.zeros(1),
                                  SimConfig(delta=0.1, max_steps=3))
    lines = trajectory_lines(trajectory)
    assert lines[0] == "0,0,0.1"
    assert lines[1] == "1,0,0.2"
    # 0.1 + 0.1 + 0.1 lands on the usual binary artifact, faithfully recorded
    assert lines[2] == f"2,0,{0.1 + 0.1 + 0.1!r}"
