import csv
import io
import json
from decimal import Decimal, ROUND_HALF_EVEN
from typing import Any, Dict, Iterable, List, Sequence
import numpy as np
from app.models.results import BdmResult
from app.utils.logger import get_logger

logger = get_logger("formatters")

BDM_CSV_HEADER = ["method", "theta0", "delta", "tail_low", "clamped", "diagnostics"]


def format_float(value: float) -> str:
    """Shortest round-trip representation of a float"""
    return repr(float(value))


def round_half_even(value: float, places: int = 2) -> str:
    """
    Round to a fixed number of decimals with ties to even

    The sign of a negative value that rounds to zero is kept ("-0.00").
    """
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_EVEN))


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def to_json(document: Dict[str, Any]) -> str:
    """Serialize a document with stable key order"""
    return json.dumps(_jsonable(document), sort_keys=True)


def format_result_json(result: BdmResult) -> str:
    """One-line JSON document of a discrepancy measure"""
    return to_json(result.to_dict())


def format_result_row(result: BdmResult) -> List[str]:
    """CSV cells of a discrepancy measure, in BDM_CSV_HEADER order"""
    document = result.to_dict()
    return [
        document["method"],
        ";".join(format_float(v) for v in document["theta0"]),
        format_float(document["delta"]),
        "" if document["tail_low"] is None else format_float(document["tail_low"]),
        "true" if document["clamped"] else "false",
        to_json(document["diagnostics"]),
    ]


def parse_result_row(row: Sequence[str]) -> Dict[str, Any]:
    """Inverse of format_result_row"""
    if len(row) != len(BDM_CSV_HEADER):
        raise ValueError(f"expected {len(BDM_CSV_HEADER)} cells, got {len(row)}")
    method, theta0, delta, tail_low, clamped, diagnostics = row
    return {
        "method": method,
        "theta0": [float(v) for v in theta0.split(";")],
        "delta": float(delta),
        "tail_low": None if tail_low == "" else float(tail_low),
        "clamped": clamped == "true",
        "diagnostics": json.loads(diagnostics),
    }


def format_result_csv(result: BdmResult) -> str:
    """Header plus one row"""
    return write_csv(BDM_CSV_HEADER, [format_result_row(result)])


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Render rows as CSV text with Unix line endings"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def read_csv(text: str) -> List[List[str]]:
    """Parse CSV text into rows, header included"""
    return list(csv.reader(io.StringIO(text)))
