"""AUTO and AUTO-ADJ: per-ball radii that start at the nearest-center distance and shrink on mistakes."""

import logging
from enum import Enum
from typing import Optional

from .ball import Ball, CenterCounter, Label, majority_predict, register_label, update_counts
from .budget import BudgetPolicy
from .config import config
from .errors import InvalidInputError
from .learner import BallLearner, Variant
from .metric import EUCLIDEAN, FeatureVector, Metric, distance

logger = logging.getLogger(__name__)


class BootstrapState(str, Enum):
    AWAITING_FIRST = "awaiting_first"
    AWAITING_SECOND_LABEL = "awaiting_second_label"
    RUNNING = "running"


def shrunk_radius(init_radius: float, mistakes: int, d_hat: float) -> float:
    """R_s * max(m_s, 1)^(-1/(2 + d_hat)); a ball without mistakes keeps R_s."""
    return init_radius * max(mistakes, 1) ** (-1.0 / (2.0 + d_hat))


class AutoLearner(BallLearner):
    """
    AUTO (and AUTO-ADJ with adjust_centers=True).

    The learner waits until two different labels were seen, then places a
    new ball whenever a point falls outside its nearest ball. A new ball's
    radius is its distance to that nearest center; radii shrink with the
    ball's mistake count at a rate set by the dimension estimate d_hat.
    """

    def __init__(
        self,
        d_hat: float = 2.0,
        adjust_centers: bool = False,
        metric: Metric = EUCLIDEAN,
        linear_index: Optional[bool] = None,
        budget: Optional[BudgetPolicy] = None,
    ):
        super().__init__(metric=metric, linear_index=linear_index, budget=budget)
        if d_hat <= 0:
            raise InvalidInputError(f"d_hat must be positive, got {d_hat}")
        self.d_hat = float(d_hat)
        self.adjust_centers = adjust_centers
        self.variant = Variant.AUTO_ADJ if adjust_centers else Variant.AUTO
        self.bootstrap = BootstrapState.AWAITING_FIRST
        self._first_label: Optional[Label] = None

    def predict(self, x: FeatureVector) -> Optional[Label]:
        if self.bootstrap is not BootstrapState.RUNNING:
            return self._first_label if self._first_label is not None else self.model.labels.first()
        ball, _ = self._nearest(x)
        return majority_predict(ball, self.model.labels)

    def update(self, x: FeatureVector, y: Label) -> None:
        self.steps_seen += 1
        register_label(self.model, y)
        if self.bootstrap is not BootstrapState.RUNNING:
            self.auto_bootstrap(x, y)
        else:
            self.auto_step(x, y)

    def auto_bootstrap(self, x: FeatureVector, y: Label) -> bool:
        """
        Feed one example before two distinct labels have been seen.

        Returns:
            True; every bootstrap example is consumed
        """
        if self.bootstrap is BootstrapState.AWAITING_FIRST:
            ball = self.model.add_ball(x, y, radius=1.0, birth_index=self.steps_seen)
            self._first_label = y
            self.bootstrap = BootstrapState.AWAITING_SECOND_LABEL
            self._after_insert(ball)
            return True

        if y == self._first_label:
            return True

        first = next(iter(self.model))
        radius = max(distance(first.center, x, self.model.metric), config.radius_floor)
        second = self.model.add_ball(x, y, radius=radius, birth_index=self.steps_seen)
        first.radius = first.init_radius = radius
        self.bootstrap = BootstrapState.RUNNING
        logger.info(f"Bootstrap finished at step {self.steps_seen} with radius {radius:.6g}")
        self._after_insert(second)
        return True

    def auto_step(self, x: FeatureVector, y: Label) -> Optional[Label]:
        """
        One update once the learner is running.

        Returns:
            The label the nearest ball predicted before the update
        """
        nearest, gap = self._nearest(x)
        predicted = majority_predict(nearest, self.model.labels)
        if gap <= nearest.radius:
            self._update_ball(nearest, x, y, predicted)
        else:
            radius = max(gap, config.radius_floor)
            ball = self.model.add_ball(x, y, radius=radius, birth_index=self.steps_seen)
            self._after_insert(ball)
        return predicted

    def _update_ball(self, ball: Ball, x: FeatureVector, y: Label, predicted: Label) -> None:
        if predicted != y:
            ball.mistake_count += 1
        elif self.adjust_centers:
            self.model.adjust_center(ball, x, CenterCounter.CENTER_UPDATE_COUNT)
        update_counts(ball, y)
        ball.radius = shrunk_radius(ball.init_radius, ball.mistake_count, self.d_hat)
        self.model.touch()
