from typing import Any, Optional

from fastapi import APIRouter, Body, Query
from starlette.concurrency import run_in_threadpool

from app.schemas.certify import BoundRequest
from app.services import certification
from app.utils.response import wrap_response


router = APIRouter()


@router.post("")
async def classical_bound(
    data: dict = Body(...),
    threads: Optional[int] = Query(None, ge=0),
) -> Any:
    """Exact minimum of alpha . S + betaC over the local deterministic vertices."""
    request = BoundRequest(**data.get("data", {}))
    report = await run_in_threadpool(certification.bound, request, threads)
    return wrap_response(report.model_dump())
