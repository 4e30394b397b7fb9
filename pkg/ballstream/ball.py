"""Ball local classifiers and the ball model shared by every learner variant."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Hashable, Iterator, List, Optional, Tuple

from .errors import InvalidInputError, InvalidStateError
from .index import CenterIndex, make_index
from .metric import EUCLIDEAN, FeatureVector, Metric

logger = logging.getLogger(__name__)

Label = Hashable


class CenterCounter(str, Enum):
    """Which count divides the step of an incremental center update."""

    TOTAL_COUNT = "total_count"
    CENTER_UPDATE_COUNT = "center_update_count"


@dataclass
class Ball:
    """A ball B(center, radius) with its local label statistics."""

    ball_id: int
    center: FeatureVector
    radius: float
    init_radius: float
    birth_index: int
    class_counts: Dict[Label, int] = field(default_factory=dict)
    binary_positive_count: int = 0
    total_count: int = 0
    mistake_count: int = 0
    center_update_count: int = 1


class LabelRegistry:
    """Ordered set of observed labels, each mapped to a dense internal id."""

    def __init__(self):
        self._ids: Dict[Label, int] = {}

    def register(self, label: Label) -> bool:
        """Add label if unseen. Returns True when it was new."""
        if label in self._ids:
            return False
        self._ids[label] = len(self._ids)
        return True

    def id_of(self, label: Label) -> int:
        return self._ids[label]

    @property
    def labels(self) -> List[Label]:
        return list(self._ids)

    def first(self) -> Optional[Label]:
        return next(iter(self._ids), None)

    def __contains__(self, label: Label) -> bool:
        return label in self._ids

    def __len__(self) -> int:
        return len(self._ids)

    def __iter__(self) -> Iterator[Label]:
        return iter(self._ids)


def majority_predict(b: Ball, labels: LabelRegistry) -> Label:
    """
    Most frequent label in the ball.

    Ties go to the label registered first.

    Raises:
        InvalidStateError: if the ball holds no labels
    """
    if b.total_count < 1 or not b.class_counts:
        raise InvalidStateError(f"ball {b.ball_id} has no label counts")
    return max(b.class_counts.items(), key=lambda item: (item[1], -labels.id_of(item[0])))[0]


def update_counts(b: Ball, y: Label) -> None:
    """Count one more example of label y in the ball."""
    b.class_counts[y] = b.class_counts.get(y, 0) + 1
    b.total_count += 1


def adjust_center(b: Ball, x: FeatureVector, counter: CenterCounter) -> None:
    """
    Move the center one incremental-mean step toward x.

    With CENTER_UPDATE_COUNT, u_s is incremented and the step is (x - c) / u_s.
    With TOTAL_COUNT the step is (x - c) / (n_s + 1); the matching increment of
    n_s is made by the update_counts call that follows in the same round, so
    n_s keeps equal to the sum of the class counts.

    Raises:
        InvalidInputError: on dimension mismatch
    """
    if x.dimension != b.center.dimension:
        raise InvalidInputError(
            f"dimension mismatch: center {b.center.dimension} vs point {x.dimension}"
        )
    if counter is CenterCounter.CENTER_UPDATE_COUNT:
        b.center_update_count += 1
        divisor = b.center_update_count
    else:
        divisor = b.total_count + 1

    center = b.center.to_dense()
    moved = center + (x.to_dense() - center) / divisor
    b.center = FeatureVector(b.center.dimension, dense=moved)


class BallModel:
    """
    The set of balls, the label registry and the nearest-center index.

    Single writer: one learner owns and mutates a model.
    """

    def __init__(self, metric: Metric = EUCLIDEAN, linear_index: Optional[bool] = None):
        self.metric = metric
        self.labels = LabelRegistry()
        self.index: CenterIndex = make_index(metric, linear=linear_index)
        self._balls: Dict[int, Ball] = {}
        self._next_id = 0
        # Bumped on every mutation; lets learners reuse a nearest query.
        self.version = 0

    def __len__(self) -> int:
        return len(self._balls)

    def __iter__(self) -> Iterator[Ball]:
        return iter(self._balls.values())

    def __contains__(self, ball_id: int) -> bool:
        return ball_id in self._balls

    def get(self, ball_id: int) -> Ball:
        return self._balls[ball_id]

    def register_label(self, y: Label) -> bool:
        return register_label(self, y)

    def nearest(self, x: FeatureVector) -> Optional[Tuple[Ball, float]]:
        """Nearest ball to x and its center distance, or None if the model is empty."""
        hit = self.index.nearest(x)
        if hit is None:
            return None
        return self._balls[hit.ball_id], hit.distance

    def add_ball(
        self,
        center: FeatureVector,
        y: Label,
        radius: float,
        birth_index: int,
        init_radius: Optional[float] = None,
    ) -> Ball:
        """Create a ball at center holding one example of label y."""
        if y not in self.labels:
            raise InvalidInputError(f"label {y!r} is not registered")
        ball = Ball(
            ball_id=self._next_id,
            center=center,
            radius=radius,
            init_radius=radius if init_radius is None else init_radius,
            birth_index=birth_index,
        )
        update_counts(ball, y)
        self._next_id += 1
        self._balls[ball.ball_id] = ball
        self.index.insert(ball.ball_id, center)
        self.version += 1
        logger.debug(f"Added ball {ball.ball_id} (radius {radius:.6g}) at step {birth_index}")
        return ball

    def remove_ball(self, ball_id: int) -> Ball:
        if ball_id not in self._balls:
            raise InvalidInputError(f"no ball with id {ball_id}")
        self.index.remove(ball_id)
        self.version += 1
        return self._balls.pop(ball_id)

    def adjust_center(self, b: Ball, x: FeatureVector, counter: CenterCounter) -> None:
        """adjust_center() plus the matching index update."""
        adjust_center(b, x, counter)
        self.index.relocate(b.ball_id, b.center)
        self.version += 1

    def touch(self) -> None:
        """Record an in-place change to ball statistics."""
        self.version += 1

    def clear(self) -> None:
        """Drop every ball; the label registry is kept."""
        self._balls.clear()
        self.index.clear()
        self.version += 1

    def dump_records(self) -> List[Dict]:
        """One JSON-ready record per ball, in birth order."""
        records = []
        for ball in sorted(self._balls.values(), key=lambda b: b.ball_id):
            records.append({
                "ball_id": ball.ball_id,
                "birth_index": ball.birth_index,
                "center": ball.center.tolist(),
                "radius": float(ball.radius),
                "init_radius": float(ball.init_radius),
                "class_counts": {str(label): count for label, count in ball.class_counts.items()},
                "total_count": ball.total_count,
                "mistake_count": ball.mistake_count,
                "center_update_count": ball.center_update_count,
            })
        return records


def register_label(model: BallModel, y: Label) -> bool:
    """
    Add y to the model's label registry.

    Returns:
        True if y was not seen before
    """
    added = model.labels.register(y)
    if added:
        logger.info(f"New class label {y!r} (K={len(model.labels)})")
    return added
