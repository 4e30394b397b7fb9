"""Tests for mistake-driven ball eviction."""

import functools

import numpy as np
import pytest
from scipy.stats import chisquare

from ballstream.auto import AutoLearner
from ballstream.ball import Ball, BallModel, register_label
from ballstream.budget import BudgetPolicy, draw_victim, eviction_distribution
from ballstream.errors import InvalidInputError
from ballstream.evaluate import BudgetSpec, LearnerSpec, RunConfig, run_prequential
from ballstream.learner import Variant
from ballstream.metric import FeatureVector
from ballstream.synth import GeneratorKind, GeneratorSpec, generate


def _balls(*mistakes):
    balls = []
    for ball_id, m in enumerate(mistakes):
        ball = Ball(
            ball_id=ball_id,
            center=FeatureVector.from_dense([float(ball_id)]),
            radius=1.0,
            init_radius=1.0,
            birth_index=ball_id,
        )
        ball.mistake_count = m
        balls.append(ball)
    return balls


def test_eviction_distribution_examples():
    """Test the Laplace-corrected eviction probabilities."""
    assert eviction_distribution(_balls(0, 0, 0)) == pytest.approx([1 / 3] * 3, rel=1e-12)
    p = eviction_distribution(_balls(3, 1, 0))
    assert p == pytest.approx([4 / 7, 2 / 7, 1 / 7], rel=1e-12)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert eviction_distribution(_balls(11)).tolist() == [1.0]


def test_eviction_distribution_needs_balls():
    """Test that an empty candidate set is rejected."""
    with pytest.raises(InvalidInputError):
        eviction_distribution([])


def test_draw_frequencies_match_distribution():
    """Test 10^5 draws against the eviction probabilities."""
    rng = np.random.default_rng(123)
    balls = _balls(3, 1, 0)
    draws = 100_000
    counts = np.zeros(3)
    for _ in range(draws):
        counts[draw_victim(rng, balls).ball_id] += 1
    expected = np.array([4 / 7, 2 / 7, 1 / 7])
    assert np.all(np.abs(counts / draws - expected) <= 0.01)
    assert chisquare(counts, expected * draws).pvalue > 0.01


def test_maybe_evict_at_and_over_budget():
    """Test that eviction fires only above the budget and spares the newcomer."""
    model = BallModel()
    register_label(model, 0)
    policy = BudgetPolicy(2, np.random.default_rng(0))
    for i in range(2):
        model.add_ball(FeatureVector.from_dense([float(i)]), 0, radius=0.1, birth_index=i)
    assert policy.maybe_evict(model, exempt=1) is None

    for i in range(2, 50):
        newcomer = model.add_ball(FeatureVector.from_dense([float(i)]), 0, radius=0.1, birth_index=i)
        evicted = policy.maybe_evict(model, exempt=newcomer.ball_id)
        assert evicted is not None and evicted != newcomer.ball_id
        assert newcomer.ball_id in model
        assert len(model) == 2


def test_budget_policy_validation():
    """Test that a budget below one ball is rejected."""
    with pytest.raises(InvalidInputError):
        BudgetPolicy(0, np.random.default_rng(0))


@pytest.mark.parametrize("max_balls", [25, 100])
def test_budget_is_a_hard_bound(max_balls):
    """Test that the model never exceeds a budget it actually reaches on a drifting stream."""
    learner = AutoLearner(adjust_centers=True, budget=BudgetPolicy(max_balls, np.random.default_rng(4)))
    spec = GeneratorSpec(kind=GeneratorKind.ROTATING_HYPERPLANE, seed=4, noise=0.05, dimension=2)
    peak = 0
    for x, y in generate(spec, 10_000):
        learner.predict(x)
        learner.update(x, y)
        peak = max(peak, learner.model_size())
        assert learner.model_size() <= max_balls
    assert peak == max_balls
    assert learner.evictions > 0


def _final(seed, n, rate=1.0, max_balls=None):
    spec = GeneratorSpec(kind=GeneratorKind.ROTATING_HYPERPLANE, seed=seed, noise=0.05, dimension=2)
    cfg = RunConfig(
        seed=seed,
        rate=rate,
        learner=LearnerSpec(variant=Variant.AUTO_ADJ),
        budget=BudgetSpec(max_balls=max_balls) if max_balls else None,
    )
    return run_prequential(cfg, generate(spec, n))


_CALIBRATION_RATE = 0.02


@functools.lru_cache(maxsize=None)
def _sampled_size(n):
    """Model size (seed 0) at a low sub-sampling rate, where size grows linearly with the rate."""
    return _final(0, n, rate=_CALIBRATION_RATE).final_model_size


def _rate_for_size(target, n):
    return min(1.0, _CALIBRATION_RATE * target / _sampled_size(n))


@pytest.mark.slow
@pytest.mark.parametrize("max_balls", [50, 200])
def test_budget_beats_subsampling_at_equal_size(max_balls):
    """Test that a ball budget is more accurate than sub-sampling to the same size."""
    n = 100_000
    rate = _rate_for_size(max_balls, n)
    fixed = [_final(seed, n, max_balls=max_balls) for seed in range(3)]
    sampled = [_final(seed, n, rate=rate) for seed in range(3)]
    assert all(report.max_model_size <= max_balls for report in fixed)
    assert all(report.evictions > 0 for report in fixed)
    gain = np.mean([r.final_accuracy for r in fixed]) - np.mean([r.final_accuracy for r in sampled])
    assert gain >= 0.02
