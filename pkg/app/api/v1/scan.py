from typing import Any, Optional

from fastapi import APIRouter, Body, Query
from fastapi.responses import PlainTextResponse
from starlette.concurrency import run_in_threadpool

from app.schemas.certify import ScanRequest
from app.services import certification
from app.utils.response import wrap_response
from app.utils.tables import scan_csv


router = APIRouter()


@router.post("")
async def scan(
    data: dict = Body(...),
    threads: Optional[int] = Query(None, ge=0),
    format: str = Query("json", pattern="^(json|csv)$"),
) -> Any:
    """
    Scan the relaxation boundary along uniformly spaced rays of a plane.

    Each row holds the ray angle, lambda_max of the relaxation and, when the
    vertex budget allows, the polytope radius along the same ray.
    """
    request = ScanRequest(**data.get("data", {}))
    report = await run_in_threadpool(certification.scan, request, threads)
    if format == "csv":
        headers = {"X-Format-Version": report.format_version}
        return PlainTextResponse(scan_csv(report.rows), media_type="text/csv", headers=headers)
    return wrap_response(report.model_dump())
