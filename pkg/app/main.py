from contextlib import asynccontextmanager
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.exceptions import RequestValidationError
from pydantic import ValidationError as PydanticValidationError
import logging
import time

from app.config import settings
from app.core.exceptions import CertifierException
from app.core.logging import configure_logging
from app.api.v1 import router as api_v1_router
from app.utils.response import error_response


logger = logging.getLogger(__name__)

INVALID_REQUEST_HELP = "Check the request against the documented JSON schemas and try again."


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan events."""
    configure_logging(settings)
    logger.info("%s ready, format_version %s", settings.PROJECT_NAME, settings.FORMAT_VERSION)
    yield


app = FastAPI(
    title=settings.PROJECT_NAME,
    description="Certifies nonlocality of permutationally invariant two-body Bell correlations",
    version=settings.FORMAT_VERSION,
    lifespan=lifespan,
    docs_url="/docs",
    redoc_url="/redoc",
)

# CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.middleware("http")
async def add_process_time_header(request: Request, call_next):
    """Add X-Process-Time header to responses."""
    start_time = time.time()
    response = await call_next(request)
    process_time = time.time() - start_time
    response.headers["X-Process-Time"] = str(process_time)
    return response


@app.exception_handler(CertifierException)
async def certifier_exception_handler(request: Request, exc: CertifierException):
    """Render certifier errors with their own status code."""
    return JSONResponse(
        status_code=exc.status_code,
        content=error_response(exc.message, exc.help_text, exc.phrase),
    )


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    """Handle FastAPI request validation errors."""
    error_messages = []
    for error in exc.errors():
        loc = error.get("loc", [])
        msg = error.get("msg", "Validation error")
        field = ".".join(str(l) for l in loc if l != "body")
        error_messages.append(f"{field}: {msg}" if field else msg)

    return JSONResponse(
        status_code=400,
        content=error_response(
            "; ".join(error_messages) if error_messages else "Invalid request",
            INVALID_REQUEST_HELP,
            "invalid_request",
        ),
    )


@app.exception_handler(PydanticValidationError)
async def pydantic_validation_exception_handler(request: Request, exc: PydanticValidationError):
    """Handle validation errors raised while parsing request documents."""
    error_messages = []
    for error in exc.errors():
        msg = error.get("msg", "Validation error")
        # Clean up the message - remove "Value error, " prefix if present
        if msg.startswith("Value error, "):
            msg = msg[13:]
        loc = ".".join(str(l) for l in error.get("loc", ()))
        error_messages.append(f"{loc}: {msg}" if loc else msg)

    return JSONResponse(
        status_code=400,
        content=error_response(
            "; ".join(error_messages) if error_messages else "Invalid request",
            INVALID_REQUEST_HELP,
            "invalid_request",
        ),
    )


@app.exception_handler(Exception)
async def general_exception_handler(request: Request, exc: Exception):
    """Handle general exceptions."""
    logger.exception("unhandled error on %s", request.url.path)
    return JSONResponse(
        status_code=500,
        content=error_response(
            "Server Error",
            "An unexpected error occurred. The request was not certified.",
            "server_error",
        ),
    )


# Include API routers
app.include_router(api_v1_router, prefix=settings.API_V1_PREFIX)


@app.get("/")
async def root():
    """Root endpoint."""
    return {
        "message": f"Welcome to the {settings.PROJECT_NAME} API",
        "docs": "/docs",
        "format_version": settings.FORMAT_VERSION,
    }


@app.get("/health")
async def health_check():
    """Health check endpoint."""
    return {"status": "healthy"}
