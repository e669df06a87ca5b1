"""
JSON and CSV writers shared by the library and the command line.

Reports are plain dicts; floats keep full precision (repr) and non-finite
values become the strings "inf", "-inf" and "nan" so that the files stay
valid JSON.
"""

import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

from .errors import ConfigError

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def from_json_float(value: Any) -> float:
    """Inverse of the non-finite float encoding; float("inf") reads the strings too."""
    return float(value)


def dumps_report(report: dict) -> str:
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json_report(report: dict, path: Optional[str] = None) -> None:
    """Write a report to path, or to standard output when path is None."""
    text = dumps_report(report)
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    if target.parent and not target.parent.exists():
        target.parent.mkdir(parents=True, exist_ok=True)
    # newline="\n" keeps files identical across platforms
    with open(target, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.debug("wrote report %s", target)


def read_json_report(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        try:
            report = json.load(f)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ConfigError(f"{path} is not a JSON report: {e}")
    if not isinstance(report, dict):
        raise ConfigError(f"{path} holds {type(report).__name__}, expected a JSON object")
    return report


def format_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_rows_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: str) -> int:
    """Write a CSV table; floats use repr so '.' is always the decimal separator."""
    target = Path(path)
    if target.parent and not target.parent.exists():
        target.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(target, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
            count += 1
    logger.debug("wrote %d rows to %s", count, target)
    return count


def read_rows_csv(path: str) -> List[List[str]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return [row for row in csv.reader(f)]


def merge_reports(paths: Sequence[str]) -> dict:
    """Bundle several JSON reports; the bundle passes when every member passes."""
    reports = [read_json_report(p) for p in paths]
    return {
        "kind": "merged",
        "sources": [str(p) for p in paths],
        "reports": reports,
        "pass": all(bool(r.get("pass", False)) for r in reports),
    }
