from typing import Any, Dict, List, Optional

from pydantic import BaseModel


class DataResponse(BaseModel):
    """Standard response wrapper."""
    data: Any


class ErrorDetail(BaseModel):
    """Detail of one error."""
    message: str
    help: Optional[str] = None
    phrase: Optional[str] = None


class ErrorResponse(BaseModel):
    errors: List[ErrorDetail]


def wrap_response(data: Any) -> Dict[str, Any]:
    """Wrap data in the standard response format."""
    return {"data": data}


def error_response(
    message: str,
    help_text: Optional[str] = None,
    phrase: Optional[str] = None,
) -> Dict[str, Any]:
    """Create an error response body."""
    return {
        "errors": [
            {
                "message": message,
                "help": help_text or "Check the request against the documented JSON schemas and try again.",
                "phrase": phrase or "error",
            }
        ]
    }
