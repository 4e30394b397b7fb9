"""Result CSV/JSON, ball dumps and LIBSVM export, all byte-deterministic."""

import csv
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Optional, Tuple

from . import __version__
from .ball import Label
from .config import config
from .errors import SpecError
from .evaluate import SCORING_NOTE, RunReport, SummaryRow
from .ingest import format_libsvm_line
from .metric import FeatureVector

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "dataset",
    "variant",
    "rate",
    "budget",
    "seed",
    "final_accuracy",
    "final_model_size",
    "model_size_fraction",
]

SUMMARY_COLUMNS = [
    "dataset",
    "variant",
    "rate",
    "budget",
    "runs",
    "mean_accuracy",
    "mean_model_size",
    "mean_model_size_fraction",
    "normalized_accuracy",
]

SPEC_PREFIX = "# spec: "


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if hasattr(value, "value"):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _spec_line(spec: Dict[str, Any]) -> str:
    return SPEC_PREFIX + json.dumps(spec, sort_keys=True, separators=(",", ":"))


def _header_lines(spec: Dict[str, Any]) -> List[str]:
    return [f"# ballstream {__version__}", _spec_line(spec), f"# note: {SCORING_NOTE}"]


class ResultWriter:
    """Writes one experiment's files into an output directory."""

    def __init__(self, out_dir: str, spec: Dict[str, Any], stem: str = "results"):
        self.out_dir = out_dir
        self.spec = spec
        self.stem = stem
        os.makedirs(out_dir, exist_ok=True)

    @property
    def csv_path(self) -> str:
        return config.results_csv(self.out_dir, self.stem)

    @property
    def json_path(self) -> str:
        return config.results_json(self.out_dir, self.stem)

    @property
    def summary_path(self) -> str:
        return config.summary_csv(self.out_dir)

    def _write_table(self, path: str, columns: List[str], rows: Iterable[Dict[str, Any]]) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            for line in _header_lines(self.spec):
                f.write(line + "\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(row[column]) for column in columns])
        logger.info(f"Wrote {path}")

    def write_results_csv(self, reports: List[RunReport]) -> str:
        rows = [dict(report) for report in reports]
        self._write_table(self.csv_path, RESULT_COLUMNS, rows)
        return self.csv_path

    def write_summary_csv(self, rows: List[SummaryRow]) -> str:
        self._write_table(self.summary_path, SUMMARY_COLUMNS, [dict(row) for row in rows])
        return self.summary_path

    def write_results_json(self, reports: List[RunReport]) -> str:
        """Spec, version and every report with its full trace."""
        document = {
            "version": __version__,
            "spec": self.spec,
            "notes": [SCORING_NOTE],
            "runs": [report.model_dump(mode="json") for report in reports],
        }
        with open(self.json_path, "w", encoding="utf-8") as f:
            f.write(json.dumps(document, sort_keys=True, indent=2) + "\n")
        logger.info(f"Wrote {self.json_path}")
        return self.json_path

    def write_model_dump(self, path: str, records: List[Dict[str, Any]]) -> str:
        """Line-delimited JSON: a header line with the spec, then one line per ball."""
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            header = {"kind": "header", "spec": self.spec, "version": __version__}
            f.write(json.dumps(header, sort_keys=True) + "\n")
            for record in records:
                f.write(json.dumps({"kind": "ball", **record}, sort_keys=True) + "\n")
        logger.info(f"Wrote {len(records)} balls to {path}")
        return path


def write_libsvm(
    path: str, examples: Iterable[Tuple[FeatureVector, Label]], spec: Optional[Dict[str, Any]] = None
) -> int:
    """
    Write examples as LIBSVM records, streaming.

    Returns:
        Number of records written
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        if spec is not None:
            f.write(_spec_line(spec) + "\n")
        for x, y in examples:
            f.write(format_libsvm_line(x, y) + "\n")
            count += 1
    logger.info(f"Wrote {count} records to {path}")
    return count


def read_provenance(path: str) -> Dict[str, Any]:
    """
    Recover the spec embedded in a results CSV, results JSON or LIBSVM export.

    Raises:
        SpecError: if the file has no embedded spec
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            if path.endswith(".json"):
                return json.load(f)["spec"]
            for line in f:
                if line.startswith(SPEC_PREFIX):
                    return json.loads(line[len(SPEC_PREFIX):])
                if not line.startswith("#"):
                    break
    except (OSError, KeyError, json.JSONDecodeError) as e:
        raise SpecError(f"cannot read provenance from {path}: {e}") from e
    raise SpecError(f"{path} has no embedded spec")
