"""Prequential (test-then-train) evaluation with random label sub-sampling."""

import logging
import math
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .auto import AutoLearner
from .base import BaseLearner, BaseMode
from .budget import BudgetPolicy
from .config import config
from .errors import DataError, InvalidInputError, InvalidStateError, SpecError
from .ingest import Example, SkipKind, SkippedRecord
from .learner import BallLearner, Variant

logger = logging.getLogger(__name__)

SCORING_NOTE = (
    "every prediction is scored, including those made before the first ball "
    "exists and during the AUTO bootstrap"
)

# Spawn keys of the per-run random streams derived from the run seed.
_MASK_KEY, _LEARNER_KEY, _BUDGET_KEY = 0, 1, 2
_RECURSION_TOLERANCE = 1e-9


class LearnerSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variant: Variant = Variant(config.default_variant)
    c_hat: float = Field(config.default_c_hat, gt=0)
    d_hat: float = Field(config.default_d_hat, gt=0)
    binary: bool = False

    @model_validator(mode="after")
    def _check_binary(self):
        if self.binary and self.variant is not Variant.BASE:
            raise ValueError("binary randomized mode exists only for base")
        return self


class BudgetSpec(BaseModel):
    """A ball budget, absolute or as a fraction of the declared stream length."""

    model_config = ConfigDict(extra="forbid")

    max_balls: Optional[int] = Field(None, ge=1)
    fraction: Optional[float] = Field(None, gt=0, le=1)

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.max_balls is None) == (self.fraction is None):
            raise ValueError("give exactly one of max_balls and fraction")
        return self

    def resolve(self, stream_length: Optional[int]) -> int:
        if self.max_balls is not None:
            return self.max_balls
        if stream_length is None:
            raise SpecError("a fractional budget needs a declared stream length")
        return max(1, int(self.fraction * stream_length))


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset: str = ""
    rate: float = Field(config.default_rate, gt=0, le=1)
    seed: int = config.default_seed
    normalize: bool = False
    learner: LearnerSpec = Field(default_factory=LearnerSpec)
    budget: Optional[BudgetSpec] = None
    stream_length: Optional[int] = Field(None, ge=1)
    # 0 shares the sub-sampling mask across every run with the same seed.
    mask_stream: int = Field(0, ge=0)


class TracePoint(BaseModel):
    step: int
    accuracy: float
    model_size: int


class RunReport(BaseModel):
    dataset: str
    variant: Variant
    rate: float
    budget: Optional[int]
    seed: int
    final_accuracy: float
    final_model_size: int
    model_size_fraction: float
    steps: int
    updates: int
    skipped: int
    dropped: int
    max_model_size: int
    evictions: int
    labels: int
    trace: List[TracePoint] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)


class SummaryRow(BaseModel):
    dataset: str
    variant: Variant
    rate: float
    budget: Optional[int]
    runs: int
    mean_accuracy: float
    mean_model_size: float
    mean_model_size_fraction: float
    normalized_accuracy: float


@dataclass
class PrequentialTracker:
    """
    Online accuracy M_t, reported as correct / t.

    The recursion M_t = (1 - 1/t) M_{t-1} + (1/t) 1{correct} is carried
    alongside and must agree with the exact ratio.
    """

    trace_every: int = 1
    step: int = 0
    correct: int = 0
    recursive_accuracy: float = 0.0
    trace: List[TracePoint] = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return self.correct / self.step if self.step else 0.0

    def record(self, correct: bool, model_size: int) -> None:
        """
        Score one prediction.

        Raises:
            InvalidStateError: if the recursion drifted from correct / t
        """
        self.step += 1
        t = self.step
        self.correct += int(correct)
        self.recursive_accuracy = (1.0 - 1.0 / t) * self.recursive_accuracy + (1.0 / t) * (1.0 if correct else 0.0)
        if abs(self.recursive_accuracy - self.accuracy) > _RECURSION_TOLERANCE:
            raise InvalidStateError(
                f"accuracy recursion {self.recursive_accuracy!r} disagrees with {self.correct}/{t}"
            )
        if t % self.trace_every == 0:
            self.trace.append(TracePoint(step=t, accuracy=self.accuracy, model_size=model_size))

    def close(self, model_size: int) -> None:
        """Make sure the last step is in the trace."""
        if self.step and (not self.trace or self.trace[-1].step != self.step):
            self.trace.append(TracePoint(step=self.step, accuracy=self.accuracy, model_size=model_size))


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def subsample_rng(seed: int, mask_stream: int = 0) -> np.random.Generator:
    """Generator behind the update mask; independent of the learner's randomness."""
    if mask_stream == 0:
        return _rng(seed, _MASK_KEY)
    return _rng(seed, _MASK_KEY, mask_stream)


def subsample_mask(seed: int, n: int, rate: float, mask_stream: int = 0) -> List[bool]:
    """The update decisions run_prequential makes for the first n examples."""
    rng = subsample_rng(seed, mask_stream)
    return [rng.random() < rate for _ in range(n)]


def trace_interval(stream_length: Optional[int]) -> int:
    if not stream_length:
        return 1
    return max(1, math.ceil(stream_length / config.trace_points))


def build_learner(spec: LearnerSpec, seed: int, max_balls: Optional[int] = None) -> BallLearner:
    """Instantiate the learner a spec describes, with its budget policy if any."""
    budget = None
    if max_balls is not None:
        if spec.variant is not Variant.AUTO_ADJ:
            logger.warning(f"Budget applied to {spec.variant.value}; it is calibrated for auto-adj")
        budget = BudgetPolicy(max_balls, _rng(seed, _BUDGET_KEY))

    adjust = spec.variant in (Variant.BASE_ADJ, Variant.AUTO_ADJ)
    if spec.variant in (Variant.BASE, Variant.BASE_ADJ):
        mode = BaseMode.BINARY_RANDOMIZED if spec.binary else BaseMode.MULTICLASS_MAJORITY
        return BaseLearner(
            c_hat=spec.c_hat,
            mode=mode,
            adjust_centers=adjust,
            rng=_rng(seed, _LEARNER_KEY),
            budget=budget,
        )
    return AutoLearner(d_hat=spec.d_hat, adjust_centers=adjust, budget=budget)


StreamInput = Iterable[Union[Example, SkippedRecord, Tuple]]


def _check_skip_rate(skipped: int, seen: int, position: int, final: bool = False) -> None:
    if not final and seen < config.skip_check_after:
        return
    if seen and skipped / seen > config.max_skip_fraction:
        raise DataError(
            f"{skipped} of {seen} records malformed, above the "
            f"{config.max_skip_fraction:.0%} limit",
            position,
        )


def run_prequential(
    cfg: RunConfig, stream: StreamInput, learner: Optional[BallLearner] = None
) -> RunReport:
    """
    Test-then-train over the stream.

    Each example is first predicted by the current model and scored; it is
    then used for an update only if a uniform draw from the run's mask
    generator falls below cfg.rate.

    Raises:
        DataError: on an empty stream, too many malformed records, or an
            example the learner rejects
        InvalidStateError: on a violated learner invariant
    """
    length = cfg.stream_length
    if length is None and isinstance(stream, Sequence):
        length = len(stream)
    max_balls = cfg.budget.resolve(length) if cfg.budget is not None else None
    if learner is None:
        learner = build_learner(cfg.learner, cfg.seed, max_balls)

    mask = subsample_rng(cfg.seed, cfg.mask_stream)
    tracker = PrequentialTracker(trace_every=trace_interval(length))
    seen = skipped = dropped = updates = peak = 0
    position = 0

    logger.info(
        f"Run start: dataset={cfg.dataset or '-'} variant={cfg.learner.variant.value} "
        f"rate={cfg.rate} budget={max_balls} seed={cfg.seed}"
    )
    for item in stream:
        seen += 1
        if isinstance(item, SkippedRecord):
            position = item.position
            if item.kind is SkipKind.DEGENERATE:
                dropped += 1
                continue
            skipped += 1
            logger.warning(f"Skipping record {item.position}: {item.reason}")
            _check_skip_rate(skipped, seen, position)
            continue

        if isinstance(item, Example):
            x, y, position = item
        else:
            x, y = item
            position = seen

        try:
            predicted = learner.predict(x)
            if mask.random() < cfg.rate:
                learner.update(x, y)
                updates += 1
        except InvalidStateError as e:
            raise InvalidStateError(f"{e} (at stream position {position})") from e
        except InvalidInputError as e:
            raise DataError(str(e), position) from e

        size = learner.model_size()
        peak = max(peak, size)
        tracker.record(predicted == y, size)

    _check_skip_rate(skipped, seen, position, final=True)
    if tracker.step == 0:
        raise DataError("stream has no usable examples", position or None)

    size = learner.model_size()
    tracker.close(size)
    report = RunReport(
        dataset=cfg.dataset,
        variant=cfg.learner.variant,
        rate=cfg.rate,
        budget=max_balls,
        seed=cfg.seed,
        final_accuracy=tracker.accuracy,
        final_model_size=size,
        model_size_fraction=size / tracker.step,
        steps=tracker.step,
        updates=updates,
        skipped=skipped,
        dropped=dropped,
        max_model_size=peak,
        evictions=learner.evictions,
        labels=len(learner.labels),
        trace=tracker.trace,
        notes=[SCORING_NOTE],
    )
    logger.info(
        f"Run end: {report.steps} examples, accuracy {report.final_accuracy:.4f}, "
        f"{report.final_model_size} balls ({report.updates} updates)"
    )
    return report


def sweep(
    cfgs: List[RunConfig],
    streams: Mapping[str, Callable[[], StreamInput]],
    workers: int = 1,
) -> List[RunReport]:
    """
    Run every configuration on every stream.

    streams maps a dataset name to a factory returning a fresh iterator.
    Reports come back dataset-major, in input order, whatever the number
    of worker threads.
    """
    jobs = [
        (cfg.model_copy(update={"dataset": name}), factory)
        for name, factory in streams.items()
        for cfg in cfgs
    ]
    if not jobs:
        return []

    def _run(job):
        cfg, factory = job
        return run_prequential(cfg, factory())

    logger.info(f"Sweep: {len(jobs)} runs on {max(1, workers)} worker(s)")
    if workers <= 1:
        return [_run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run, jobs))


def summarize(reports: Iterable[RunReport]) -> List[SummaryRow]:
    """
    Average reports over seeds per (dataset, variant, rate, budget).

    normalized_accuracy divides each row's mean accuracy by the best mean
    accuracy on the same dataset.
    """
    groups: "OrderedDict[tuple, List[RunReport]]" = OrderedDict()
    for report in reports:
        key = (report.dataset, report.variant, report.rate, report.budget)
        groups.setdefault(key, []).append(report)

    means = {
        key: (
            float(np.mean([r.final_accuracy for r in runs])),
            float(np.mean([r.final_model_size for r in runs])),
            float(np.mean([r.model_size_fraction for r in runs])),
        )
        for key, runs in groups.items()
    }
    best = {}
    for (dataset, *_), (accuracy, _, _) in means.items():
        best[dataset] = max(best.get(dataset, 0.0), accuracy)

    rows = []
    for key, runs in groups.items():
        dataset, variant, rate, budget = key
        accuracy, model_size, fraction = means[key]
        rows.append(SummaryRow(
            dataset=dataset,
            variant=variant,
            rate=rate,
            budget=budget,
            runs=len(runs),
            mean_accuracy=accuracy,
            mean_model_size=model_size,
            mean_model_size_fraction=fraction,
            normalized_accuracy=accuracy / best[dataset] if best[dataset] > 0 else 0.0,
        ))
    return rows
