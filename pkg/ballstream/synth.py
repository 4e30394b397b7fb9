"""Seeded synthetic streams: threshold, two moons, rotating hyperplane and sequential blobs."""

import logging
import math
from abc import ABC, abstractmethod
from enum import Enum
from typing import Iterator, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import InvalidInputError, SpecError
from .metric import FeatureVector

logger = logging.getLogger(__name__)

SYNTH_PREFIX = "synth:"


class GeneratorKind(str, Enum):
    UNIFORM_THRESHOLD = "uniform_threshold"
    TWO_MOONS_LIKE = "two_moons_like"
    ROTATING_HYPERPLANE = "rotating_hyperplane"
    MULTICLASS_BLOBS = "multiclass_blobs"


class GeneratorSpec(BaseModel):
    """A synthetic stream. Same spec, same stream."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: GeneratorKind
    seed: int = 0
    noise: float = Field(0.0, ge=0.0, lt=0.5)
    dimension: int = Field(2, ge=1)
    classes: int = Field(5, ge=1)
    spread: float = Field(0.04, gt=0.0)
    drift: float = Field(1e-4, ge=0.0)
    band: float = Field(0.0, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_dimension(self):
        if self.kind is GeneratorKind.ROTATING_HYPERPLANE and self.dimension < 2:
            raise ValueError("rotating_hyperplane needs dimension >= 2")
        return self

    @property
    def point_dimension(self) -> int:
        if self.kind is GeneratorKind.UNIFORM_THRESHOLD:
            return 1
        if self.kind is GeneratorKind.TWO_MOONS_LIKE:
            return 2
        return self.dimension

    def describe(self) -> str:
        """Canonical data spec string, e.g. 'synth:uniform_threshold:noise=0.1,seed=3'."""
        defaults = GeneratorSpec(kind=self.kind).model_dump()
        params = [
            f"{key}={value}"
            for key, value in sorted(self.model_dump(mode="json").items())
            if key != "kind" and value != defaults[key]
        ]
        text = f"{SYNTH_PREFIX}{self.kind.value}"
        return f"{text}:{','.join(params)}" if params else text


class StreamGenerator(ABC):
    """Draws the example at step t (0-based) from a shared generator."""

    def __init__(self, spec: GeneratorSpec, n: int):
        self.spec = spec
        self.n = n

    @abstractmethod
    def draw(self, rng: np.random.Generator, t: int) -> Tuple[np.ndarray, int]:
        ...

    def flip(self, rng: np.random.Generator, label: int) -> int:
        """Binary label noise: one uniform draw per step."""
        return 1 - label if rng.random() < self.spec.noise else label


class UniformThreshold(StreamGenerator):
    """x ~ U[0,1], label 1{x > 0.5}."""

    def draw(self, rng: np.random.Generator, t: int) -> Tuple[np.ndarray, int]:
        x = rng.random(1)
        return x, self.flip(rng, int(x[0] > 0.5))


class TwoMoonsLike(StreamGenerator):
    """
    Two interleaved half circles squeezed into the unit square.

    With band = 0 the arcs get Gaussian jitter. With band > 0 each point sits
    at a uniform radius in [1 - band, 1 + band], which gives banana-shaped
    classes with hard edges.
    """

    jitter = 0.1

    def draw(self, rng: np.random.Generator, t: int) -> Tuple[np.ndarray, int]:
        label = int(rng.random() < 0.5)
        theta = math.pi * rng.random()
        band = self.spec.band
        r = 1.0 + band * (2.0 * rng.random() - 1.0) if band > 0 else 1.0
        if label == 0:
            point = np.array([r * math.cos(theta), r * math.sin(theta)])
        else:
            point = np.array([1.0 - r * math.cos(theta), 0.5 - r * math.sin(theta)])
        if band == 0:
            point = point + rng.normal(0.0, self.jitter, size=2)
        # Moons span [-1, 2] x [-0.5, 1]; map with a margin for the jitter.
        scaled = np.clip((point - np.array([-1.3, -0.8])) / np.array([3.6, 2.1]), 0.0, 1.0)
        return scaled, self.flip(rng, label)


class RotatingHyperplane(StreamGenerator):
    """
    Uniform points in [0,1]^d labeled by the side of a hyperplane through the
    cube center. The normal turns in the plane of the first two coordinates
    by `drift` radians per step.
    """

    def __init__(self, spec: GeneratorSpec, n: int):
        super().__init__(spec, n)
        d = spec.dimension
        self._base = np.full(d, 1.0 / math.sqrt(d))

    def normal(self, t: int) -> np.ndarray:
        """Unit normal of the Bayes-optimal boundary at step t."""
        angle = self.spec.drift * t
        c, s = math.cos(angle), math.sin(angle)
        w = self._base.copy()
        w[0], w[1] = c * self._base[0] - s * self._base[1], s * self._base[0] + c * self._base[1]
        return w

    def draw(self, rng: np.random.Generator, t: int) -> Tuple[np.ndarray, int]:
        x = rng.random(self.spec.dimension)
        label = int(float(np.dot(self.normal(t), x - 0.5)) > 0.0)
        return x, self.flip(rng, label)


class MulticlassBlobs(StreamGenerator):
    """
    K Gaussian blobs around a circle in the first two coordinates. Class k
    (1-based) is introduced at 0-based step ceil((k-1) n / K); later steps
    draw uniformly among the classes introduced so far.
    """

    def __init__(self, spec: GeneratorSpec, n: int):
        super().__init__(spec, n)
        k = spec.classes
        self.arrivals = [math.ceil(j * n / k) for j in range(k)]
        self.centers = np.full((k, spec.dimension), 0.5)
        for j in range(k):
            angle = 2.0 * math.pi * j / k
            self.centers[j, 0] = 0.5 + 0.35 * math.cos(angle)
            if spec.dimension > 1:
                self.centers[j, 1] = 0.5 + 0.35 * math.sin(angle)

    def available(self, t: int) -> int:
        """Number of classes introduced by step t."""
        return sum(1 for start in self.arrivals if start <= t)

    def draw(self, rng: np.random.Generator, t: int) -> Tuple[np.ndarray, int]:
        live = self.available(t)
        flip_draw, pick_draw = rng.random(), rng.random()
        if t in self.arrivals:
            label = self.arrivals.index(t)
        else:
            label = min(int(pick_draw * live), live - 1)
            if live > 1 and flip_draw < self.spec.noise:
                other = int(rng.integers(live - 1))
                label = other if other < label else other + 1
        noise = rng.normal(0.0, self.spec.spread, size=self.spec.dimension)
        return np.clip(self.centers[label] + noise, 0.0, 1.0), label


_GENERATORS = {
    GeneratorKind.UNIFORM_THRESHOLD: UniformThreshold,
    GeneratorKind.TWO_MOONS_LIKE: TwoMoonsLike,
    GeneratorKind.ROTATING_HYPERPLANE: RotatingHyperplane,
    GeneratorKind.MULTICLASS_BLOBS: MulticlassBlobs,
}


def make_generator(g: GeneratorSpec, n: int) -> StreamGenerator:
    return _GENERATORS[g.kind](g, n)


def generate(g: GeneratorSpec, n: int) -> Iterator[Tuple[FeatureVector, int]]:
    """
    Yield n examples of the synthetic stream g, lazily.

    Raises:
        InvalidInputError: if n < 1
    """
    if n < 1:
        raise InvalidInputError(f"stream length must be at least 1, got {n}")
    source = make_generator(g, n)
    rng = np.random.default_rng(g.seed)
    logger.debug(f"Generating {n} examples of {g.describe()}")
    for t in range(n):
        coords, label = source.draw(rng, t)
        yield FeatureVector.from_dense(coords), label


def is_synthetic(data: str) -> bool:
    return data.startswith(SYNTH_PREFIX)


def parse_data_spec(data: str) -> GeneratorSpec:
    """
    Parse 'synth:<kind>[:key=value,...]'.

    Raises:
        SpecError: on an unknown kind, key or value
    """
    if not is_synthetic(data):
        raise SpecError(f"not a synthetic data spec: {data!r}")
    kind, _, params = data[len(SYNTH_PREFIX):].partition(":")
    fields = {"kind": kind}
    for item in filter(None, (part.strip() for part in params.split(","))):
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise SpecError(f"expected key=value in data spec, got {item!r}")
        fields[key.strip()] = value.strip()
    try:
        return GeneratorSpec.model_validate(fields)
    except ValidationError as e:
        raise SpecError(f"invalid data spec {data!r}: {e}") from e
