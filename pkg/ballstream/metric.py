"""Feature vectors, the distance metric and unit normalization."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Iterator, List, Optional, Tuple

import numpy as np

from .errors import DegenerateInputError, InvalidInputError

logger = logging.getLogger(__name__)


class FeatureVector:
    """
    A point of the input space, stored dense or sparse.

    Dense vectors keep every coordinate; sparse vectors keep explicit
    (index, value) pairs with 1-based, strictly increasing indices, as in
    LIBSVM files. Both share one interface and are immutable.
    """

    __slots__ = ("dimension", "_dense", "_indices", "_values")

    def __init__(
        self,
        dimension: int,
        dense: Optional[np.ndarray] = None,
        indices: Optional[np.ndarray] = None,
        values: Optional[np.ndarray] = None,
    ):
        if int(dimension) != dimension or dimension < 1:
            raise InvalidInputError(f"dimension must be a positive integer, got {dimension}")
        self.dimension = int(dimension)
        self._dense: Optional[np.ndarray] = None
        self._indices: Optional[np.ndarray] = None
        self._values: Optional[np.ndarray] = None

        if dense is not None:
            coords = np.array(dense, dtype=np.float64).reshape(-1)
            if coords.shape[0] != self.dimension:
                raise InvalidInputError(
                    f"dense vector has {coords.shape[0]} coordinates, expected {self.dimension}"
                )
            if not np.all(np.isfinite(coords)):
                raise InvalidInputError("coordinates must be finite")
            coords.flags.writeable = False
            self._dense = coords
            return

        idx = np.array([] if indices is None else indices, dtype=np.int64).reshape(-1)
        vals = np.array([] if values is None else values, dtype=np.float64).reshape(-1)
        if idx.shape != vals.shape:
            raise InvalidInputError("sparse indices and values differ in length")
        if idx.size:
            if idx[0] < 1 or idx[-1] > self.dimension:
                raise InvalidInputError(
                    f"sparse indices must lie in [1, {self.dimension}]"
                )
            if np.any(np.diff(idx) <= 0):
                raise InvalidInputError("sparse indices must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("coordinates must be finite")
        idx.flags.writeable = False
        vals.flags.writeable = False
        self._indices = idx
        self._values = vals

    @classmethod
    def from_dense(cls, coordinates: Iterable[float]) -> "FeatureVector":
        """Build a dense vector; the dimension is the number of coordinates."""
        if not isinstance(coordinates, np.ndarray):
            coordinates = list(coordinates)
        coords = np.asarray(coordinates, dtype=np.float64).reshape(-1)
        return cls(coords.shape[0], dense=coords)

    @classmethod
    def from_sparse(
        cls, pairs: Iterable[Tuple[int, float]], dimension: int
    ) -> "FeatureVector":
        """Build a sparse vector from 1-based (index, value) pairs."""
        pairs = list(pairs)
        indices = [index for index, _ in pairs]
        values = [value for _, value in pairs]
        return cls(dimension, indices=indices, values=values)

    @property
    def is_sparse(self) -> bool:
        return self._dense is None

    @property
    def nnz(self) -> int:
        """Number of stored nonzero coordinates."""
        if self._dense is not None:
            return int(np.count_nonzero(self._dense))
        return int(np.count_nonzero(self._values))

    def to_dense(self) -> np.ndarray:
        """Return the coordinates as a read-only float64 array."""
        if self._dense is not None:
            return self._dense
        coords = np.zeros(self.dimension, dtype=np.float64)
        coords[self._indices - 1] = self._values
        coords.flags.writeable = False
        return coords

    def items(self) -> Iterator[Tuple[int, float]]:
        """Yield (1-based index, value) for every nonzero coordinate."""
        if self._dense is not None:
            for position in np.flatnonzero(self._dense):
                yield int(position) + 1, float(self._dense[position])
        else:
            for index, value in zip(self._indices, self._values):
                if value != 0.0:
                    yield int(index), float(value)

    def norm(self) -> float:
        """Euclidean norm."""
        coords = self._dense if self._dense is not None else self._values
        return float(np.linalg.norm(coords))

    def scaled(self, factor: float) -> "FeatureVector":
        """Return a copy with every coordinate multiplied by factor."""
        if self._dense is not None:
            return FeatureVector(self.dimension, dense=self._dense * factor)
        return FeatureVector(
            self.dimension, indices=self._indices, values=self._values * factor
        )

    def tolist(self) -> List[float]:
        return [float(value) for value in self.to_dense()]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.dimension == other.dimension and np.array_equal(
            self.to_dense(), other.to_dense()
        )

    __hash__ = None

    def __repr__(self) -> str:
        if self._dense is not None:
            return f"FeatureVector(dense={self.tolist()})"
        pairs = {int(i): float(v) for i, v in zip(self._indices, self._values)}
        return f"FeatureVector(dimension={self.dimension}, sparse={pairs})"


def _sparse_parts(v: FeatureVector) -> Tuple[np.ndarray, np.ndarray]:
    return v._indices, v._values


def euclidean(a: FeatureVector, b: FeatureVector) -> float:
    """L2 distance between vectors of any storage combination."""
    if not a.is_sparse and not b.is_sparse:
        diff = a._dense - b._dense
        return math.sqrt(float(diff @ diff))

    if a.is_sparse and b.is_sparse:
        a_idx, a_val = _sparse_parts(a)
        b_idx, b_val = _sparse_parts(b)
        union = np.union1d(a_idx, b_idx)
        diff = np.zeros(union.shape[0], dtype=np.float64)
        diff[np.searchsorted(union, a_idx)] += a_val
        diff[np.searchsorted(union, b_idx)] -= b_val
        return float(np.linalg.norm(diff))

    dense, sparse = (a, b) if b.is_sparse else (b, a)
    diff = np.array(dense._dense, dtype=np.float64)
    s_idx, s_val = _sparse_parts(sparse)
    diff[s_idx - 1] -= s_val
    return float(np.linalg.norm(diff))


class MetricKind(str, Enum):
    EUCLIDEAN = "euclidean"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Metric:
    """
    A distance function over FeatureVectors.

    Euclidean is the only built-in kind. Any callable satisfying the metric
    axioms can be wrapped with Metric.custom().
    """

    kind: MetricKind = MetricKind.EUCLIDEAN
    fn: Optional[Callable[[FeatureVector, FeatureVector], float]] = None
    name: str = "euclidean"

    @classmethod
    def custom(
        cls, fn: Callable[[FeatureVector, FeatureVector], float], name: str = "custom"
    ) -> "Metric":
        return cls(kind=MetricKind.CUSTOM, fn=fn, name=name)

    def __call__(self, a: FeatureVector, b: FeatureVector) -> float:
        if self.kind is MetricKind.EUCLIDEAN:
            return euclidean(a, b)
        return float(self.fn(a, b))


EUCLIDEAN = Metric()


def distance(a: FeatureVector, b: FeatureVector, m: Metric = EUCLIDEAN) -> float:
    """
    Distance rho(a, b) under metric m.

    Args:
        a: First vector
        b: Second vector
        m: Metric to use (Euclidean by default)

    Returns:
        Nonnegative distance

    Raises:
        InvalidInputError: if the vectors have different dimensions
    """
    if a.dimension != b.dimension:
        raise InvalidInputError(
            f"dimension mismatch: {a.dimension} vs {b.dimension}"
        )
    return m(a, b)


def normalize_unit(v: FeatureVector) -> FeatureVector:
    """
    Scale v to unit Euclidean norm.

    Raises:
        DegenerateInputError: if v is the zero vector
    """
    norm = v.norm()
    if norm == 0.0 or not math.isfinite(norm):
        raise DegenerateInputError("cannot normalize a zero vector")
    return v.scaled(1.0 / norm)
