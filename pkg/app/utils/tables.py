import csv
import io
from typing import Any, Dict, Iterable, Optional

from app.schemas.certify import ScanReport, ScanRow


SCAN_HEADER = ("theta", "lambda_sdp", "r_hull")


def _cell(value: Optional[float]) -> str:
    if value is None or value != value:
        return ""
    return repr(float(value))


def scan_csv(rows: Iterable[ScanRow]) -> str:
    """Scan rows as CSV: the header, then one row per ray; LF endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SCAN_HEADER)
    for row in rows:
        writer.writerow([_cell(row.theta), _cell(row.lambda_sdp), _cell(row.r_hull)])
    return buffer.getvalue()


def scan_metadata(report: ScanReport) -> Dict[str, Any]:
    """Everything in a scan report except its rows; travels beside the CSV."""
    return report.model_dump(exclude={"rows"})
