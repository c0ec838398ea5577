from fastapi import APIRouter

from app.api.v1 import (
    certify,
    bound,
    hull,
    scan,
    export,
)

router = APIRouter()

# Certification
router.include_router(certify.router, prefix="/certify", tags=["Certify"])
router.include_router(scan.router, prefix="/scan", tags=["Scan"])

# Local polytope
router.include_router(hull.router, prefix="/hull", tags=["Hull"])
router.include_router(bound.router, prefix="/bound", tags=["Bound"])

# Solver interchange
router.include_router(export.router, prefix="/export", tags=["Export"])
