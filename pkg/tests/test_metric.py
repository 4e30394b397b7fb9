"""Tests for feature vectors, distances and normalization."""

import math

import numpy as np
import pytest

from ballstream.errors import DegenerateInputError, InvalidInputError
from ballstream.metric import EUCLIDEAN, FeatureVector, Metric, MetricKind, distance, normalize_unit


def test_distance_examples():
    """Test the closed-form distance examples."""
    assert distance(FeatureVector.from_dense([0, 0]), FeatureVector.from_dense([3, 4])) == 5.0
    x = FeatureVector.from_dense([0.3, -1.2, 7.0])
    assert distance(x, x) == 0.0
    sparse = FeatureVector.from_sparse([(1, 1.0)], 2)
    dense = FeatureVector.from_dense([0.0, 1.0])
    assert distance(sparse, dense) == pytest.approx(math.sqrt(2), rel=1e-12)
    assert distance(dense, sparse) == pytest.approx(math.sqrt(2), rel=1e-12)


def test_sparse_sparse_distance_matches_dense():
    """Test sparse/sparse distances against the dense computation."""
    rng = np.random.default_rng(3)
    for _ in range(200):
        dim = int(rng.integers(1, 12))
        pairs = []
        for _ in range(2):
            idx = sorted(rng.choice(np.arange(1, dim + 1), size=int(rng.integers(0, dim + 1)), replace=False))
            pairs.append([(int(i), float(rng.normal())) for i in idx])
        a = FeatureVector.from_sparse(pairs[0], dim)
        b = FeatureVector.from_sparse(pairs[1], dim)
        expected = float(np.linalg.norm(a.to_dense() - b.to_dense()))
        assert distance(a, b) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_metric_axioms_on_random_points():
    """Test identity, symmetry and non-negativity of the Euclidean metric."""
    rng = np.random.default_rng(0)
    points = [FeatureVector.from_dense(rng.random(4)) for _ in range(30)]
    for a in points:
        assert distance(a, a) == 0.0
        for b in points:
            assert distance(a, b) >= 0.0
            assert distance(a, b) == distance(b, a)


def test_triangle_inequality_on_random_triples():
    """Test d(a, c) <= d(a, b) + d(b, c) on 10^4 random triples, dense and sparse."""
    rng = np.random.default_rng(5)
    for trial in range(10_000):
        dim = int(rng.integers(1, 8))
        triple = []
        for _ in range(3):
            coords = rng.normal(size=dim) * rng.choice([1e-3, 1.0, 1e3])
            if trial % 2:
                coords[rng.random(dim) < 0.5] = 0.0
                pairs = [(i + 1, float(c)) for i, c in enumerate(coords) if c]
                triple.append(FeatureVector.from_sparse(pairs, dim))
            else:
                triple.append(FeatureVector.from_dense(coords))
        a, b, c = triple
        bound = distance(a, b) + distance(b, c)
        assert distance(a, c) <= bound + 1e-12 * max(1.0, bound)


def test_dimension_mismatch():
    """Test that differently sized vectors are rejected."""
    with pytest.raises(InvalidInputError):
        distance(FeatureVector.from_dense([1.0]), FeatureVector.from_dense([1.0, 2.0]))


def test_feature_vector_validation():
    """Test sparse index and finiteness checks."""
    with pytest.raises(InvalidInputError):
        FeatureVector.from_sparse([(2, 1.0), (1, 1.0)], 3)
    with pytest.raises(InvalidInputError):
        FeatureVector.from_sparse([(1, 1.0), (1, 2.0)], 3)
    with pytest.raises(InvalidInputError):
        FeatureVector.from_sparse([(4, 1.0)], 3)
    with pytest.raises(InvalidInputError):
        FeatureVector.from_sparse([(0, 1.0)], 3)
    with pytest.raises(InvalidInputError):
        FeatureVector.from_dense([1.0, float("nan")])
    with pytest.raises(InvalidInputError):
        FeatureVector(0, dense=[])


def test_feature_vector_is_immutable():
    """Test that coordinates cannot be changed in place."""
    x = FeatureVector.from_dense([1.0, 2.0])
    with pytest.raises(ValueError):
        x.to_dense()[0] = 5.0


def test_sparse_items_and_dense_view():
    """Test conversion between sparse and dense views."""
    x = FeatureVector.from_sparse([(1, 0.5), (3, 2.0)], 4)
    assert x.is_sparse
    assert list(x.items()) == [(1, 0.5), (3, 2.0)]
    assert x.tolist() == [0.5, 0.0, 2.0, 0.0]
    assert x == FeatureVector.from_dense([0.5, 0.0, 2.0, 0.0])


def test_normalize_unit():
    """Test unit normalization."""
    assert normalize_unit(FeatureVector.from_dense([3.0, 4.0])).tolist() == pytest.approx([0.6, 0.8])
    sparse = normalize_unit(FeatureVector.from_sparse([(2, 3.0), (5, 4.0)], 5))
    assert sparse.is_sparse
    assert sparse.norm() == pytest.approx(1.0)
    with pytest.raises(DegenerateInputError):
        normalize_unit(FeatureVector.from_dense([0.0, 0.0]))
    with pytest.raises(DegenerateInputError):
        normalize_unit(FeatureVector.from_sparse([], 3))


def test_normalize_unit_is_idempotent():
    """Test that normalizing twice changes nothing beyond rounding and that unit vectors stay put."""
    rng = np.random.default_rng(9)
    for _ in range(500):
        dim = int(rng.integers(1, 10))
        x = FeatureVector.from_dense(rng.normal(size=dim) * 10.0 ** rng.integers(-3, 4))
        if x.norm() == 0.0:
            continue
        once = normalize_unit(x)
        twice = normalize_unit(once)
        assert np.max(np.abs(once.to_dense() - twice.to_dense())) <= 1e-12
        assert abs(once.norm() - 1.0) <= 1e-12
    for u in ([1.0, 0.0, 0.0], [0.6, 0.8], [0.0, -1.0]):
        assert normalize_unit(FeatureVector.from_dense(u)).tolist() == pytest.approx(u, abs=1e-12)
    unit_sparse = FeatureVector.from_sparse([(2, 0.6), (4, -0.8)], 4)
    assert normalize_unit(unit_sparse).tolist() == pytest.approx(unit_sparse.tolist(), abs=1e-12)


def test_custom_metric():
    """Test that a custom metric is used by distance()."""
    manhattan = Metric.custom(lambda a, b: float(np.abs(a.to_dense() - b.to_dense()).sum()), "l1")
    assert manhattan.kind is MetricKind.CUSTOM
    a, b = FeatureVector.from_dense([0, 0]), FeatureVector.from_dense([3, 4])
    assert distance(a, b, manhattan) == 7.0
    assert EUCLIDEAN.kind is MetricKind.EUCLIDEAN
