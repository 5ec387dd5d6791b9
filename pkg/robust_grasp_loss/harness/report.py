"""
Sweep reports.

Columns are the sweep parameters in name order, then ``METRIC_COLUMNS``.
Floats are written with 6 significant digits; the JSON report is a list of
records with the same columns and values as the CSV.
"""

import io
import json
from pathlib import Path
from typing import Literal, Sequence

import pandas as pd

from .experiment import ResultRow

ReportFormat = Literal["csv", "json"]
METRIC_COLUMNS = ["mean_acc_baseline", "mean_acc_robust", "std_baseline", "std_robust", "seconds"]
FLOAT_FORMAT = "%.6g"


class EmptyReportError(ValueError):
    pass


def _rounded(value: float) -> float:
    return float(FLOAT_FORMAT % value)


def rows_to_frame(rows: Sequence[ResultRow]) -> pd.DataFrame:
    if not rows:
        raise EmptyReportError("Cannot build a report without result rows.")
    parameter_columns = sorted({name for row in rows for name in row.params})
    records = []
    for row in rows:
        record = {name: float(row.params[name]) for name in parameter_columns}
        record.update(
            {
                "mean_acc_baseline": row.mean_acc_baseline,
                "mean_acc_robust": row.mean_acc_robust,
                "std_baseline": row.std_baseline,
                "std_robust": row.std_robust,
                "seconds": float(row.seconds),
            }
        )
        records.append(record)
    return pd.DataFrame.from_records(records, columns=parameter_columns + METRIC_COLUMNS)


def format_frame(frame: pd.DataFrame, format: ReportFormat) -> str:
    """Render a report table as CSV or JSON text."""
    if frame.empty:
        raise EmptyReportError("Cannot emit an empty report.")
    if format == "csv":
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return buffer.getvalue()
    if format == "json":
        records = [
            {column: _rounded(value) for column, value in record.items()}
            for record in frame.to_dict(orient="records")
        ]
        return json.dumps(records, indent=2) + "\n"
    raise ValueError(f"Unsupported report format '{format}'.")


def emit_report(rows: Sequence[ResultRow], format: ReportFormat = "csv") -> str:
    """
    Render result rows as a CSV or JSON document.

    Raises:
        EmptyReportError: If ``rows`` is empty.
    """
    return format_frame(rows_to_frame(rows), format)


def read_report(path: str | Path) -> pd.DataFrame:
    """Load a CSV or JSON report; the format follows the file suffix."""
    path = Path(path)
    if path.suffix == ".json":
        records = json.loads(path.read_text(encoding="utf-8"))
        if not records:
            raise EmptyReportError(f"Report '{path}' has no rows.")
        return pd.DataFrame.from_records(records, columns=list(records[0]))
    return pd.read_csv(path, float_precision="round_trip")


def convert_report(source: str | Path, format: ReportFormat) -> str:
    return format_frame(read_report(source), format)
