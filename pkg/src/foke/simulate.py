"""Closed-loop learner simulation over the recommendation formula.

One tree is studied per step with a fixed mastery increment and no
forgetting: recommend, apply the increment, repeat until everything is
mastered or the step budget runs out. The dynamics are deterministic, so
trajectories are bit-reproducible under a fixed configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .inference import TreeRelationMatrix, recommend_next
from .profiles import MasteryState


@dataclass(frozen=True)
class SimConfig:
    delta: float = 0.34
    max_steps: int = 50
    mastery_goal: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise ValidationError(f"delta must lie in (0, 1], got {self.delta}")
        if self.max_steps < 1:
            raise ValidationError(f"max_steps must be >= 1, got {self.max_steps}")
        if not 0.0 < self.mastery_goal <= 1.0:
            raise ValidationError(
                f"mastery_goal must lie in (0, 1], got {self.mastery_goal}")


@dataclass(frozen=True)
class SimStep:
    step: int
    chosen: int | None
    mastery: tuple[float, ...]


def simulate_learner(matrix: TreeRelationMatrix, start: MasteryState,
                     config: SimConfig = SimConfig()) -> list[SimStep]:
    """Run the recommend-then-study loop from ``start``.

    Stops as soon as every mastery entry reaches the goal (an already
    satisfied start gives an empty trajectory), when the recommender has
    nothing left to offer, or after ``max_steps`` steps.
    """
    if len(start) != matrix.size:
        raise ValidationError(
            f"mastery has {len(start)} entries, matrix expects {matrix.size}")
    state = start
    trajectory: list[SimStep] = []
    for step in range(config.max_steps):
        if state.all_mastered(config.mastery_goal):
            break
        chosen = recommend_next(matrix, state)
        if chosen is None:
            break
        state = state.updated(chosen, config.delta)
        trajectory.append(SimStep(step, chosen, state.values))
    return trajectory


def trajectory_lines(trajectory: list[SimStep]) -> list[str]:
    """Line records ``step,chosen,s_1,...,s_K`` with shortest round-trip
    decimals, so identical trajectories serialize to identical bytes."""
    return [
        ",".join([str(step.step), "" if step.chosen is None else str(step.chosen)]
                 + [repr(v) for v in step.mastery])
        for step in trajectory
    ]
