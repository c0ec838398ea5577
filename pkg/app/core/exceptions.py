"""
Certifier exception classes.

Every error carries an HTTP-style status code so the API can render it
directly, and the CLI maps any of them to exit code 1.
"""
from typing import Optional


class CertifierException(Exception):
    """Base exception for certifier errors.

    Standard error response format:
    {
        "errors": [
            {
                "message": "...",
                "help": "...",
                "phrase": "..."
            }
        ]
    }
    """

    def __init__(
        self,
        message: str,
        status_code: int = 400,
        help_text: Optional[str] = None,
        phrase: Optional[str] = None,
    ):
        self.message = message
        self.status_code = status_code
        self.help_text = help_text or "Check the request against the documented JSON schemas and try again."
        self.phrase = phrase
        super().__init__(self.message)


class ValidationError(CertifierException):
    """400 - Malformed input."""

    def __init__(self, message: str):
        super().__init__(
            message=message,
            status_code=400,
            help_text="This usually occurs because of a missing or malformed parameter, an unknown correlator name, or strategy counts that do not sum to N.",
            phrase="invalid_request",
        )


class UnsupportedScenarioError(CertifierException):
    """400 - Scenario or hierarchy level outside the supported range."""

    def __init__(self, message: str):
        super().__init__(
            message=message,
            status_code=400,
            help_text="Only two dichotomic settings per party, correlators up to two-body, and hierarchy levels 1 and 2 are supported.",
            phrase="unsupported_scenario",
        )


class InconsistentConstraintsError(CertifierException):
    """400 - Constraints fix the same functional to different values."""

    def __init__(self, message: str = "Constraints are inconsistent"):
        super().__init__(
            message=message,
            status_code=400,
            help_text="Two or more constraints contradict each other. Remove duplicated functionals or make their values agree.",
            phrase="inconsistent_constraints",
        )


class BudgetExceededError(CertifierException):
    """413 - Vertex enumeration would exceed the configured budget."""

    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(
            message=f"Vertex enumeration needs {count} vertices, budget is {budget}",
            status_code=413,
            help_text="Lower N or raise VERTEX_BUDGET. The relaxation itself does not depend on N and remains available.",
            phrase="budget_exceeded",
        )


class NumericalFailureError(CertifierException):
    """500 - A solver could not reach its residual targets."""

    def __init__(self, message: str = "Numerical failure", phrase: Optional[str] = None):
        super().__init__(
            message=message,
            status_code=500,
            help_text="The solver stalled before reaching its tolerances. The result is neither a certificate of membership nor of nonlocality.",
            phrase=phrase or "numerical_failure",
        )
