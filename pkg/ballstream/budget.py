"""Constant model size through mistake-driven random ball eviction."""

import logging
from typing import Iterable, List, Optional

import numpy as np

from .ball import Ball, BallModel
from .errors import InvalidInputError

logger = logging.getLogger(__name__)


def eviction_distribution(balls: Iterable[Ball]) -> np.ndarray:
    """
    Laplace-corrected eviction probabilities, in iteration order.

    Ball i is discarded with probability (m_i + 1) / (sum_j m_j + |S|),
    where m_i is its mistake count.

    Raises:
        InvalidInputError: if no balls are given
    """
    weights = np.array([ball.mistake_count + 1 for ball in balls], dtype=np.float64)
    if weights.size == 0:
        raise InvalidInputError("eviction needs at least one candidate ball")
    return weights / weights.sum()


def draw_victim(rng: np.random.Generator, candidates: List[Ball]) -> Ball:
    """Sample one ball according to eviction_distribution()."""
    probabilities = eviction_distribution(candidates)
    return candidates[int(rng.choice(len(candidates), p=probabilities))]


class BudgetPolicy:
    """Keeps a model at no more than max_balls balls."""

    def __init__(self, max_balls: int, rng: np.random.Generator):
        if max_balls < 1:
            raise InvalidInputError(f"max_balls must be positive, got {max_balls}")
        self.max_balls = int(max_balls)
        self.rng = rng

    def maybe_evict(self, model: BallModel, exempt: Optional[int] = None) -> Optional[int]:
        """
        Evict one ball if the model is over budget.

        Called right after a ball insertion; the newly inserted ball (exempt)
        is not a candidate.

        Returns:
            The evicted ball id, or None if the model is within budget
        """
        return maybe_evict(self, model, exempt)


def maybe_evict(policy: BudgetPolicy, model: BallModel, exempt: Optional[int] = None) -> Optional[int]:
    if len(model) <= policy.max_balls:
        return None

    candidates = [ball for ball in model if ball.ball_id != exempt]
    victim = draw_victim(policy.rng, candidates)
    model.remove_ball(victim.ball_id)
    logger.debug(
        f"Evicted ball {victim.ball_id} ({victim.mistake_count} mistakes); "
        f"{len(model)} balls remain"
    )
    return victim.ball_id
