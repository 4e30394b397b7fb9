"""BASE and BASE-ADJ: a shared, time-driven radius with online metric-dimension estimation."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .ball import Ball, CenterCounter, Label, majority_predict, register_label, update_counts
from .budget import BudgetPolicy
from .errors import InvalidInputError, InvalidStateError
from .learner import BallLearner, Variant
from .metric import EUCLIDEAN, FeatureVector, Metric

logger = logging.getLogger(__name__)


class BaseMode(str, Enum):
    BINARY_RANDOMIZED = "binary_randomized"
    MULTICLASS_MAJORITY = "multiclass_majority"


@dataclass
class PhaseState:
    """Phase bookkeeping for the metric-dimension estimate."""

    space_constant: float = 1.0
    phase_index: int = 1
    phase_step: int = 0
    dim_estimate: int = 1
    current_radius: float = 1.0

    def capacity(self) -> float:
        """Most balls a phase may hold before the dimension check fails: C 2^d eps^-d."""
        d = self.dim_estimate
        return self.space_constant * 2.0 ** d * self.current_radius ** (-d)

    def cover_bound(self) -> float:
        """Upper bound C 4^d eps^-d on the ball count at any step of a phase."""
        d = self.dim_estimate
        return self.space_constant * 4.0 ** d * self.current_radius ** (-d)

    def update_epsilon(self) -> None:
        if self.phase_step >= 1:
            self.current_radius = self.phase_step ** (-1.0 / (2 + self.dim_estimate))


def laplace_probability(positives: int, total: int) -> Tuple[float, float, float]:
    """
    Randomized prediction probability for a binary ball.

    Returns:
        (q_s, gamma_s, p_t): the Laplace estimate, the band half-width and the
        probability of predicting label 1
    """
    q = (positives + 1) / (total + 2)
    gamma = 1.0 / (2.0 * math.sqrt(total + 2))
    if q < 0.5 - gamma:
        p = 0.0
    elif q > 0.5 + gamma:
        p = 1.0
    else:
        p = 0.5 + (q - 0.5) / (2.0 * gamma)
    return q, gamma, p


class BaseLearner(BallLearner):
    """
    BASE (and BASE-ADJ with adjust_centers=True).

    All balls share one radius eps_t = t_i^(-1/(2+d_i)), where t_i counts the
    update steps of the current phase and d_i is the running estimate of the
    metric dimension. When a phase holds more balls than the estimate allows,
    the cover is dropped and rebuilt with a larger estimate.
    """

    def __init__(
        self,
        c_hat: float = 1.0,
        mode: BaseMode = BaseMode.MULTICLASS_MAJORITY,
        adjust_centers: bool = False,
        seed: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
        metric: Metric = EUCLIDEAN,
        linear_index: Optional[bool] = None,
        budget: Optional[BudgetPolicy] = None,
    ):
        super().__init__(metric=metric, linear_index=linear_index, budget=budget)
        if c_hat <= 0:
            raise InvalidInputError(f"c_hat must be positive, got {c_hat}")
        self.mode = BaseMode(mode)
        if adjust_centers and self.mode is BaseMode.BINARY_RANDOMIZED:
            raise InvalidInputError("center adjustment needs multiclass majority mode")
        self.adjust_centers = adjust_centers
        self.variant = Variant.BASE_ADJ if adjust_centers else Variant.BASE
        self.phase = PhaseState(space_constant=c_hat)
        self.rng = rng if rng is not None else np.random.default_rng(seed)

    @property
    def binary(self) -> bool:
        return self.mode is BaseMode.BINARY_RANDOMIZED

    def predict(self, x: FeatureVector) -> Optional[Label]:
        label, _ = self.predict_with_probability(x)
        return label

    def predict_with_probability(self, x: FeatureVector) -> Tuple[Optional[Label], float]:
        """
        Predict the label of x.

        Returns:
            (label, p_t). p_t is the probability of label 1 in binary mode and
            0.5 when the model is empty; in multiclass mode it is unused (0.5).
        """
        hit = self._nearest(x)
        if hit is None:
            default = 0 if self.binary else self.model.labels.first()
            return default, 0.5

        ball, _ = hit
        if not self.binary:
            return majority_predict(ball, self.model.labels), 0.5

        _, _, p = laplace_probability(ball.binary_positive_count, ball.total_count)
        label = 1 if self.rng.random() < p else 0
        return label, p

    def update(self, x: FeatureVector, y: Label) -> None:
        self.steps_seen += 1
        if self.binary and (isinstance(y, bool) or y not in (0, 1)):
            raise InvalidInputError(f"binary mode needs labels 0 or 1, got {y!r}")
        register_label(self.model, y)

        hit = self._nearest(x)
        if hit is not None and hit[1] <= self.phase.current_radius:
            self._update_ball(hit[0], x, y)
            self.phase.phase_step += 1
        else:
            self.add_ball_with_phase_check(x, y)
        self.phase.update_epsilon()

    def _update_ball(self, ball: Ball, x: FeatureVector, y: Label) -> None:
        if self.binary:
            ball.binary_positive_count += int(y)
        else:
            correct = majority_predict(ball, self.model.labels) == y
            if not correct:
                ball.mistake_count += 1
            elif self.adjust_centers:
                self.model.adjust_center(ball, x, CenterCounter.TOTAL_COUNT)
        update_counts(ball, y)
        ball.radius = self.phase.current_radius
        self.model.touch()

    def add_ball_with_phase_check(self, x: FeatureVector, y: Label) -> Ball:
        """
        Add a ball at x, first starting a new phase if the cover outgrew the
        current dimension estimate.

        Raises:
            InvalidStateError: if the shared radius reached 2, where the
                dimension update is undefined
        """
        phase = self.phase
        eps = phase.current_radius
        if eps >= 2.0:
            raise InvalidStateError(f"shared radius {eps} is not below 2")

        before = len(self.model)
        if before + 1 > phase.capacity():
            estimate = math.ceil(math.log((before + 1) / phase.space_constant) / math.log(2.0 / eps))
            new_dim = max(estimate, phase.dim_estimate + 1)
            logger.info(
                f"Phase {phase.phase_index} ended with {before} balls at radius {eps:.4g}; "
                f"dimension estimate {phase.dim_estimate} -> {new_dim}"
            )
            self.model.clear()
            phase.dim_estimate = new_dim
            phase.phase_index += 1
            phase.phase_step = 0

        ball = self.model.add_ball(x, y, radius=phase.current_radius, birth_index=self.steps_seen)
        if self.binary:
            ball.binary_positive_count = int(y)
        phase.phase_step += 1
        self._after_insert(ball)
        return ball

    def sync_radii(self) -> None:
        """Copy the shared radius onto every ball."""
        for ball in self.model:
            ball.radius = self.phase.current_radius

    def dump_records(self):
        self.sync_radii()
        return super().dump_records()
