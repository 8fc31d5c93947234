"""Function files, JSON reports, CSV tables and transfer plans on disk."""

import csv
import dataclasses
import json
import logging
import math
import os
from fractions import Fraction
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .config import get_settings
from .cyclic import CyclicFunction
from .errors import InputFormatError, InvalidArgumentError
from .transfer import TransferPlan

logger = logging.getLogger(__name__)


def resolve_output(path: str) -> str:
    """Expand ~ and anchor relative paths at ADDITIVE_OUTPUT_DIR."""
    path = os.path.expanduser(path)
    if not os.path.isabs(path):
        path = os.path.join(get_settings().output_dir, path)
    os.makedirs(os.path.dirname(os.path.abspath(path)) or ".", exist_ok=True)
    return path


def _number(raw: Any, path: str, line: Optional[int], field: str) -> float:
    if isinstance(raw, bool):
        raise InputFormatError("expected a number, got a boolean", path, line, field)
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise InputFormatError(f"expected a number, got {raw!r}", path, line, field)
    if not math.isfinite(value):
        raise InputFormatError(f"value is not finite: {raw!r}", path, line, field)
    tol = get_settings().density_tol
    if value < -tol or value > 1 + tol:
        raise InputFormatError(f"value {value!r} is outside [0, 1]", path, line, field)
    return value


def _load_json_function(path: str, text: str) -> CyclicFunction:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputFormatError(e.msg, path, e.lineno)
    if not isinstance(data, dict):
        raise InputFormatError("expected an object with 'modulus' and 'values'", path)
    for name in ("modulus", "values"):
        if name not in data:
            raise InputFormatError("missing field", path, field=name)
    modulus = data["modulus"]
    if isinstance(modulus, bool) or not isinstance(modulus, int) or modulus < 2:
        raise InputFormatError(f"modulus must be an integer >= 2, got {modulus!r}", path, field="modulus")
    values = data["values"]
    if not isinstance(values, list):
        raise InputFormatError("values must be an array", path, field="values")
    if len(values) != modulus:
        raise InputFormatError(f"expected {modulus} values, got {len(values)}", path, field="values")
    parsed = [_number(v, path, None, f"values[{i}]") for i, v in enumerate(values)]
    return CyclicFunction(modulus, np.clip(np.array(parsed), 0.0, 1.0), density=True)


def _load_csv_function(path: str, text: str) -> CyclicFunction:
    values = []
    reader = csv.reader(text.splitlines())
    for line, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if line == 1 and row[0].strip().lower() == "index":
            continue
        if len(row) != 2:
            raise InputFormatError(f"expected 2 columns (index,value), got {len(row)}", path, line)
        try:
            index = int(row[0])
        except ValueError:
            raise InputFormatError(f"index is not an integer: {row[0]!r}", path, line, "index")
        if index != len(values):
            raise InputFormatError(f"expected index {len(values)}, got {index}", path, line, "index")
        values.append(_number(row[1], path, line, "value"))
    if len(values) < 2:
        raise InputFormatError("a function file needs at least 2 rows", path)
    return CyclicFunction(len(values), np.clip(np.array(values), 0.0, 1.0), density=True)


def load_function(path: str) -> CyclicFunction:
    """Read a density from JSON ({"modulus", "values"}) or CSV (index,value)."""
    path = os.path.expanduser(path)
    if not os.path.isfile(path):
        raise InputFormatError("file does not exist", path)
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.lower().endswith(".csv") or not text.lstrip().startswith("{"):
        return _load_csv_function(path, text)
    return _load_json_function(path, text)


def to_jsonable(obj: Any) -> Any:
    """Convert numpy values, dataclasses and complex numbers; non-finite floats become None."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        obj = float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def save_function(f: CyclicFunction, path: str) -> str:
    path = resolve_output(path)
    values = np.asarray(f.values, dtype=np.float64).tolist()
    if path.lower().endswith(".csv"):
        write_csv(path, ("index", "value"), ((i, repr(v)) for i, v in enumerate(values)))
    else:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"modulus": f.modulus, "values": values}, fh)
            fh.write("\n")
    logger.debug("wrote function N=%d to %s", f.modulus, path)
    return path


def write_report(report: dict, path: str) -> str:
    path = resolve_output(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_jsonable(report), fh, indent=2)
        fh.write("\n")
    return path


def load_report(path: str) -> dict:
    path = os.path.expanduser(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise InputFormatError(str(e), path)
    except json.JSONDecodeError as e:
        raise InputFormatError(e.msg, path, e.lineno)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    path = resolve_output(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return path


def save_plan(plan: TransferPlan, path: str) -> str:
    return write_report(plan.to_dict(), path)


def load_plan(path: str) -> TransferPlan:
    data = load_report(path)
    if isinstance(data, dict) and "plan" in data and "N" not in data:
        data = data["plan"]
    if not isinstance(data, dict):
        raise InputFormatError("expected a plan object", path)
    try:
        return TransferPlan.from_dict(data)
    except InvalidArgumentError as e:
        raise InputFormatError(str(e), path)


__all__ = [
    "resolve_output",
    "load_function",
    "save_function",
    "to_jsonable",
    "write_report",
    "load_report",
    "write_csv",
    "save_plan",
    "load_plan",
]
