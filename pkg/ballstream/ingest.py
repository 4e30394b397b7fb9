"""Stream loading: CSV with categorical binarization, sparse LIBSVM files and synthetic streams."""

import csv
import json
import logging
import math
from enum import Enum
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .ball import Label
from .errors import DataError, DegenerateInputError, RecordError, SpecError
from .metric import FeatureVector, normalize_unit
from .synth import GeneratorSpec, generate

logger = logging.getLogger(__name__)

ColumnKey = Union[int, str]


class StreamFormat(str, Enum):
    CSV = "csv"
    LIBSVM = "libsvm"
    SYNTHETIC = "synthetic"


class SkipKind(str, Enum):
    MALFORMED = "malformed"
    DEGENERATE = "degenerate"


class Example(NamedTuple):
    x: FeatureVector
    y: Label
    position: int


class SkippedRecord(NamedTuple):
    """A record the stream could not turn into an example."""

    position: int
    reason: str
    kind: SkipKind


StreamItem = Union[Example, SkippedRecord]


class StreamSchema(BaseModel):
    """
    CSV schema file contents.

    Columns are named by header text or by 1-based position.
    """

    model_config = ConfigDict(extra="forbid")

    label_column: ColumnKey = 1
    categorical: Dict[str, List[str]] = Field(default_factory=dict)


class StreamSource(BaseModel):
    """Where a stream comes from and how its records become feature vectors."""

    model_config = ConfigDict(extra="forbid")

    format: StreamFormat
    path: Optional[str] = None
    generator: Optional[GeneratorSpec] = None
    n: Optional[int] = Field(None, ge=1)
    label_column: ColumnKey = 1
    categorical_columns: Dict[str, List[str]] = Field(default_factory=dict)
    dimension: Optional[int] = Field(None, ge=1)
    normalize: bool = False

    @model_validator(mode="after")
    def _check_source(self):
        if self.format is StreamFormat.SYNTHETIC:
            if self.generator is None or self.n is None:
                raise ValueError("synthetic sources need a generator and a length n")
        elif not self.path:
            raise ValueError(f"{self.format.value} sources need a path")
        return self


def parse_label(token: str) -> Label:
    """Integer labels become ints ('+1', '2.0' included); anything else stays a string."""
    try:
        return int(token)
    except ValueError:
        pass
    try:
        value = float(token)
    except ValueError:
        return token
    if value.is_integer():
        return int(value)
    return token


def parse_libsvm_line(
    line: str, dimension: Optional[int] = None, position: Optional[int] = None
) -> Tuple[FeatureVector, Label]:
    """
    Parse '<label> <index>:<value> ...' into a sparse vector and a label.

    Text after '#' is ignored. Without a declared dimension, the vector's
    dimension is its largest index (1 for a record without features).

    Raises:
        RecordError: on a malformed token, a non-increasing or out-of-range
            index, or a non-finite value
    """
    tokens = line.split("#", 1)[0].split()
    if not tokens:
        raise RecordError("empty record", position)

    label = parse_label(tokens[0])
    pairs: List[Tuple[int, float]] = []
    for token in tokens[1:]:
        index_text, sep, value_text = token.partition(":")
        if not sep:
            raise RecordError(f"malformed feature token {token!r}", position)
        try:
            index, value = int(index_text), float(value_text)
        except ValueError:
            raise RecordError(f"malformed feature token {token!r}", position) from None
        if index < 1:
            raise RecordError(f"feature index {index} is below 1", position)
        if pairs and index <= pairs[-1][0]:
            raise RecordError(f"feature index {index} does not increase", position)
        if not math.isfinite(value):
            raise RecordError(f"feature {index} is not finite", position)
        pairs.append((index, value))

    if dimension is None:
        dimension = pairs[-1][0] if pairs else 1
    elif pairs and pairs[-1][0] > dimension:
        raise RecordError(f"feature index {pairs[-1][0]} exceeds dimension {dimension}", position)
    return FeatureVector.from_sparse(pairs, dimension), label


def format_libsvm_line(x: FeatureVector, y: Label) -> str:
    """One LIBSVM record; values use repr so parsing gives back the same floats."""
    features = " ".join(f"{index}:{value!r}" for index, value in x.items())
    return f"{y} {features}" if features else f"{y}"


# Undecodable bytes decode to lone surrogates; records holding them are skipped.
_TEXT = {"encoding": "utf-8", "errors": "surrogateescape"}


def _undecodable(text: str) -> bool:
    """True if text carries bytes that were not valid UTF-8."""
    try:
        text.encode("utf-8")
    except UnicodeEncodeError:
        return True
    return False


def _data_lines(path: str) -> Iterator[Tuple[int, str]]:
    """Numbered non-blank, non-comment lines of a text file."""
    position = 0
    with open(path, "r", **_TEXT) as f:
        for line in f:
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            position += 1
            yield position, line


def scan_libsvm_dimension(path: str) -> int:
    """Largest feature index in a LIBSVM file (pre-pass when no dimension is declared)."""
    dimension = 1
    for _, line in _data_lines(path):
        for token in line.split("#", 1)[0].split()[1:]:
            index_text, sep, _ = token.partition(":")
            if sep and index_text.isdigit():
                dimension = max(dimension, int(index_text))
    return dimension


def count_records(path: str, fmt: StreamFormat = StreamFormat.LIBSVM) -> int:
    """Number of records in a file, for declaring the stream length."""
    if fmt is StreamFormat.CSV:
        with open(path, "r", newline="", **_TEXT) as f:
            rows = sum(1 for row in csv.reader(f) if row)
        return max(rows - 1, 0)
    return sum(1 for _ in _data_lines(path))


def load_schema(path: str) -> StreamSchema:
    """
    Read a JSON schema file.

    Raises:
        SpecError: if the file is unreadable or does not match the schema
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            return StreamSchema.model_validate(json.load(f))
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise SpecError(f"cannot load schema {path}: {e}") from e


def _resolve_column(header: List[str], key: ColumnKey) -> int:
    """0-based column of a header name or a 1-based position."""
    if isinstance(key, str) and key in header:
        return header.index(key)
    try:
        position = int(key)
    except (TypeError, ValueError):
        raise SpecError(f"unknown column {key!r}; header is {header}") from None
    if not 1 <= position <= len(header):
        raise SpecError(f"column position {position} outside 1..{len(header)}")
    return position - 1


def discover_categories(
    path: str, columns: Iterable[ColumnKey]
) -> Dict[str, List[str]]:
    """
    Pre-pass over a CSV file collecting each categorical column's values.

    Returns:
        Column key (as given) -> categories in order of first appearance
    """
    columns = list(columns)
    found: Dict[str, Dict[str, None]] = {str(key): {} for key in columns}
    with open(path, "r", newline="", **_TEXT) as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path} is empty")
        resolved = [(str(key), _resolve_column(header, key)) for key in columns]
        for row in reader:
            if len(row) != len(header) or any(_undecodable(field) for field in row):
                continue
            for key, column in resolved:
                found[key].setdefault(row[column].strip(), None)
    categories = {key: list(values) for key, values in found.items()}
    logger.info(
        f"Discovered categories in {path}: "
        + ", ".join(f"{key}={len(values)}" for key, values in categories.items())
    )
    return categories


def _csv_examples(src: StreamSource) -> Iterator[StreamItem]:
    with open(src.path, "r", newline="", **_TEXT) as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{src.path} is empty")
        label_column = _resolve_column(header, src.label_column)
        one_hot = {
            _resolve_column(header, key): {value: i for i, value in enumerate(values)}
            for key, values in src.categorical_columns.items()
        }
        if label_column in one_hot:
            raise SpecError("the label column cannot be categorical")

        position = 0
        for row in reader:
            if not row:
                continue
            position += 1
            try:
                yield Example(*_csv_record(row, header, label_column, one_hot, position), position)
            except RecordError as e:
                yield SkippedRecord(position, str(e), SkipKind.MALFORMED)


def _csv_record(
    row: List[str],
    header: List[str],
    label_column: int,
    one_hot: Dict[int, Dict[str, int]],
    position: int,
) -> Tuple[FeatureVector, Label]:
    if len(row) != len(header):
        raise RecordError(f"expected {len(header)} fields, got {len(row)}", position)
    if any(_undecodable(field) for field in row):
        raise RecordError("record is not valid UTF-8", position)
    coords: List[float] = []
    for column, text in enumerate(row):
        if column == label_column:
            continue
        text = text.strip()
        if column in one_hot:
            categories = one_hot[column]
            if text not in categories:
                raise RecordError(f"unknown category {text!r} in column {header[column]!r}", position)
            block = [0.0] * len(categories)
            block[categories[text]] = 1.0
            coords.extend(block)
            continue
        try:
            value = float(text)
        except ValueError:
            raise RecordError(f"non-numeric value {text!r} in column {header[column]!r}", position) from None
        if not math.isfinite(value):
            raise RecordError(f"non-finite value in column {header[column]!r}", position)
        coords.append(value)
    if not coords:
        raise RecordError("record has no features", position)
    return FeatureVector.from_dense(coords), parse_label(row[label_column].strip())


def _libsvm_examples(src: StreamSource) -> Iterator[StreamItem]:
    dimension = src.dimension or scan_libsvm_dimension(src.path)
    for position, line in _data_lines(src.path):
        try:
            if _undecodable(line):
                raise RecordError("record is not valid UTF-8", position)
            x, y = parse_libsvm_line(line, dimension, position)
        except RecordError as e:
            yield SkippedRecord(position, str(e), SkipKind.MALFORMED)
            continue
        yield Example(x, y, position)


def _synthetic_examples(src: StreamSource) -> Iterator[StreamItem]:
    for position, (x, y) in enumerate(generate(src.generator, src.n), start=1):
        yield Example(x, y, position)


_READERS = {
    StreamFormat.CSV: _csv_examples,
    StreamFormat.LIBSVM: _libsvm_examples,
    StreamFormat.SYNTHETIC: _synthetic_examples,
}


def load_stream(src: StreamSource) -> Iterator[StreamItem]:
    """
    Yield the stream's examples in file order, one record at a time.

    Binarization happens while parsing; unit normalization, when enabled,
    follows it. Records that cannot be used are yielded as SkippedRecord
    (malformed, or a zero vector under normalization) so the caller can
    apply its skip policy.

    Raises:
        DataError: if the source cannot be read
    """
    position = 0
    try:
        for item in _READERS[src.format](src):
            position = item.position
            if isinstance(item, SkippedRecord) or not src.normalize:
                yield item
                continue
            try:
                yield item._replace(x=normalize_unit(item.x))
            except DegenerateInputError:
                logger.warning(f"Dropping zero vector at record {item.position}")
                yield SkippedRecord(item.position, "zero vector cannot be normalized", SkipKind.DEGENERATE)
    except OSError as e:
        raise DataError(f"cannot read {src.path}: {e}", position) from e


def check_readable(path: str) -> None:
    """
    Raises:
        SpecError: if path is not a readable file
    """
    try:
        with open(path, "rb"):
            pass
    except OSError as e:
        raise SpecError(f"cannot open data file {path}: {e}") from e
