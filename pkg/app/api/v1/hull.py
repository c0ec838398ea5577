from typing import Any, Optional

from fastapi import APIRouter, Body, Query
from starlette.concurrency import run_in_threadpool

from app.schemas.certify import HullRequest
from app.services import certification
from app.utils.response import wrap_response


router = APIRouter()


@router.post("")
async def hull(
    data: dict = Body(...),
    threads: Optional[int] = Query(None, ge=0),
) -> Any:
    """
    Polygon of the local polytope in a plane.

    Projections are exact convex hulls of the projected vertices. Slices are
    traced with one membership LP per ray.
    """
    request = HullRequest(**data.get("data", {}))
    report = await run_in_threadpool(certification.hull, request, threads)
    return wrap_response(report.model_dump())
