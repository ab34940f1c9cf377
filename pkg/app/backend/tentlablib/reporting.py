"""
Run reports and grid CSV files.

Reports are serialized with sorted keys so that the same config and seed give byte-identical files apart from the
wall_clock field.
"""

import csv
import io
import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt, wait_fixed

from .errors import ContractViolation
from .estimate import IntegralEstimate
from .strategy import VERSION

logger = logging.getLogger("tentlab")

CSV_HEADER = ("param1", "param2", "verdict", "statistic", "strict")
WRITE_ATTEMPTS = 3


@dataclass
class RunReport:
    """
    Class representing the JSON artifact of one run.
    Attributes:
        config (dict): Echo of the validated experiment config
        results (dict): Per-operation results
        wall_clock (float): Seconds spent in setup and run
        version (str): Library version
    """

    config: Dict[str, Any]
    results: Dict[str, Any] = field(default_factory=dict)
    wall_clock: float = 0.0
    version: str = VERSION

    def to_json(self) -> Dict[str, Any]:
        return {"config": self.config, "results": self.results, "wall_clock": self.wall_clock, "version": self.version}


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars and arrays, complex numbers, enums and estimates to plain JSON values."""
    if isinstance(value, IntegralEstimate):
        return to_jsonable(value.to_json())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.floating):
        return float(value)
    if hasattr(value, "to_json"):
        return to_jsonable(value.to_json())
    return value


def dumps_report(report: RunReport) -> str:
    return json.dumps(to_jsonable(report.to_json()), sort_keys=True, indent=2) + "\n"


def _before_retry_sleep(retry_state):
    logger.info("Write failed (%s), retrying...", retry_state.outcome.exception())


def _write_text(path: str, text: str) -> None:
    for attempt in Retrying(
        retry=retry_if_exception_type(OSError),
        wait=wait_fixed(0.5),
        stop=stop_after_attempt(WRITE_ATTEMPTS),
        before_sleep=_before_retry_sleep,
        reraise=True,
    ):
        with attempt:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)


def csv_path_for(report_path: str) -> str:
    """The grid CSV sits next to the report: out/run.json -> out/run.csv."""
    root, _ = os.path.splitext(report_path)
    return root + ".csv"


def write_report(report: RunReport, path: str) -> None:
    logger.info("Writing run report to %s", path)
    _write_text(path, dumps_report(report))


GridRow = Tuple[float, float, Any, float, bool]


def _format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def phase_csv_text(rows: Sequence[GridRow]) -> str:
    if not rows:
        raise ContractViolation("Cannot write an empty parameter grid")
    lines: List[List[str]] = [list(CSV_HEADER)]
    for row in rows:
        if len(row) != len(CSV_HEADER):
            raise ContractViolation(f"Grid rows need {len(CSV_HEADER)} fields, got {len(row)}")
        lines.append([_format_cell(cell) for cell in row])
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerows(lines)
    return buffer.getvalue()


def emit_phase_csv(rows: Sequence[GridRow], path: str) -> int:
    """Write (param1, param2, verdict, statistic, strict) rows with a header; returns the number of lines."""
    text = phase_csv_text(rows)
    logger.info("Writing %d grid rows to %s", len(rows), path)
    _write_text(path, text)
    return len(rows) + 1
