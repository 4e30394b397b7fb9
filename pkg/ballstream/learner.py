"""Interface shared by all ball-cover learners."""

import logging
from abc import ABC, abstractmethod
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

from .ball import Ball, BallModel, Label
from .metric import EUCLIDEAN, FeatureVector, Metric

if TYPE_CHECKING:
    from .budget import BudgetPolicy

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    BASE = "base"
    BASE_ADJ = "base-adj"
    AUTO = "auto"
    AUTO_ADJ = "auto-adj"


class BallLearner(ABC):
    """
    A classifier that covers the input space with balls.

    predict() never changes the ball set. update() feeds one labeled example;
    callers decide which examples are fed (prequential sub-sampling).
    """

    variant: Variant

    def __init__(
        self,
        metric: Metric = EUCLIDEAN,
        linear_index: Optional[bool] = None,
        budget: Optional["BudgetPolicy"] = None,
    ):
        self.model = BallModel(metric, linear_index=linear_index)
        self.budget = budget
        self.steps_seen = 0
        self.evictions = 0
        self._cached_query: Optional[Tuple[FeatureVector, int, Optional[Tuple[Ball, float]]]] = None

    @abstractmethod
    def predict(self, x: FeatureVector) -> Optional[Label]:
        """Predict the label of x with the current model."""

    @abstractmethod
    def update(self, x: FeatureVector, y: Label) -> None:
        """Train on one labeled example."""

    def model_size(self) -> int:
        """Number of balls currently in the model."""
        return len(self.model)

    @property
    def labels(self) -> List[Label]:
        return self.model.labels.labels

    def dump_records(self) -> List[Dict]:
        return self.model.dump_records()

    def _nearest(self, x: FeatureVector) -> Optional[Tuple[Ball, float]]:
        """Nearest ball to x, reusing the last query if the model has not changed."""
        cached = self._cached_query
        if cached is not None and cached[0] is x and cached[1] == self.model.version:
            return cached[2]
        hit = self.model.nearest(x)
        self._cached_query = (x, self.model.version, hit)
        return hit

    def _after_insert(self, ball: Ball) -> None:
        """Hook run after every ball insertion; applies the budget, if any."""
        if self.budget is None:
            return
        evicted = self.budget.maybe_evict(self.model, exempt=ball.ball_id)
        if evicted is not None:
            self.evictions += 1
