from typing import Any

from fastapi import APIRouter, Body
from fastapi.responses import PlainTextResponse
from starlette.concurrency import run_in_threadpool

from app.schemas.certify import ExportRequest
from app.services import certification


router = APIRouter()


@router.post("", response_class=PlainTextResponse)
async def export_sdpa(data: dict = Body(...)) -> Any:
    """Assembled SDP in sparse SDPA format, ready for an external solver."""
    request = ExportRequest(**data.get("data", {}))
    text = await run_in_threadpool(certification.export, request)
    return PlainTextResponse(text, media_type="text/plain")
