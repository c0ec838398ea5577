from typing import Any, Optional

from fastapi import APIRouter, Body, Query
from starlette.concurrency import run_in_threadpool

from app.schemas.certify import CertifyRequest
from app.services import certification
from app.utils.response import wrap_response


router = APIRouter()


@router.post("")
async def certify(
    data: dict = Body(...),
    tol: Optional[float] = Query(None, gt=0, description="Nonlocality tolerance on lambda_max"),
    threads: Optional[int] = Query(None, ge=0, description="Worker threads, 0 for machine parallelism"),
) -> Any:
    """
    Certify observed correlators at hierarchy level mu.

    The verdict is "nonlocal" together with a validated Bell inequality, or
    "no-violation-at-this-level", or "inconclusive" when the solver could not
    decide within tolerance.
    """
    request = CertifyRequest(**data.get("data", {}))
    report = await run_in_threadpool(certification.certify, request, tol, threads)
    return wrap_response(report.model_dump())
