from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from app.config import settings
from app.schemas.correlators import CORRELATOR_NAMES, BellInequality, LinearFunctional, PointConstraint


Coefficient = Union[int, float, str]


def _format_version() -> str:
    return settings.FORMAT_VERSION


class ConstraintSpec(BaseModel):
    """A functional of the correlators, named by coefficient, fixed to a value."""
    coefficients: Dict[str, Coefficient] = Field(..., min_length=1)
    value: float

    @field_validator("coefficients")
    @classmethod
    def known_names(cls, value: Dict[str, Coefficient]) -> Dict[str, Coefficient]:
        unknown = [k for k in value if k not in CORRELATOR_NAMES]
        if unknown:
            raise ValueError(f"unknown correlator name(s) {unknown}")
        return value

    def to_point_constraint(self) -> PointConstraint:
        return PointConstraint.of(self.coefficients, self.value)


class CertifyRequest(BaseModel):
    """Observed statistics to certify."""
    format_version: str = Field(default_factory=_format_version)
    N: int = Field(..., ge=2)
    mu: int = 1
    constraints: List[ConstraintSpec] = Field(..., min_length=1)
    mode: str = Field(default="lambda", pattern="^(feasibility|lambda)$")
    shared: bool = False

    def point_constraints(self) -> List[PointConstraint]:
        return [c.to_point_constraint() for c in self.constraints]


class CertifyReport(BaseModel):
    """Verdict with the certifying inequality when nonlocal."""
    format_version: str = Field(default_factory=_format_version)
    verdict: str = Field(..., pattern="^(nonlocal|no-violation-at-this-level|inconclusive)$")
    N: int
    mu: int
    mode: str
    method: str
    tolerance: float
    lambda_max: Optional[float] = None
    margin: Optional[float] = None
    inequality: Optional[Dict[str, object]] = None
    certificate: Optional[Dict[str, object]] = None
    classical_check: Optional[Dict[str, object]] = None
    solver: Dict[str, object] = Field(default_factory=dict)
    message: Optional[str] = None

    @property
    def decided(self) -> bool:
        return self.verdict == "nonlocal"


class PlaneSpec(BaseModel):
    """
    A plane in correlator space.

    projection: `axes` are two functionals f1, f2 and a plane point (a, b)
    fixes only f1 = a and f2 = b.
    slice: `axes` are two direction vectors u, v and a plane point (a, b)
    fixes every correlator to a*u + b*v.
    """
    kind: str = Field(default="projection", pattern="^(projection|slice)$")
    axes: List[Dict[str, Coefficient]] = Field(..., min_length=2, max_length=2)

    @field_validator("axes")
    @classmethod
    def known_names(cls, value: List[Dict[str, Coefficient]]) -> List[Dict[str, Coefficient]]:
        for axis in value:
            unknown = [k for k in axis if k not in CORRELATOR_NAMES]
            if unknown:
                raise ValueError(f"unknown correlator name(s) {unknown}")
        return value

    def functionals(self) -> Tuple[LinearFunctional, LinearFunctional]:
        first, second = (LinearFunctional(coefficients=axis) for axis in self.axes)
        return first, second

    def vectors(self) -> Tuple[np.ndarray, np.ndarray]:
        first, second = self.functionals()
        return first.as_array(), second.as_array()


class HullRequest(BaseModel):
    format_version: str = Field(default_factory=_format_version)
    N: int = Field(..., ge=2)
    plane: PlaneSpec
    rays: Optional[int] = Field(default=None, ge=3)


class HullReport(BaseModel):
    format_version: str = Field(default_factory=_format_version)
    N: int
    kind: str
    vertices: List[Tuple[float, float]]


class ScanRequest(BaseModel):
    format_version: str = Field(default_factory=_format_version)
    N: int = Field(..., ge=2)
    mu: int = 1
    plane: PlaneSpec
    rays: Optional[int] = Field(default=None, ge=1)
    shared: bool = False


class ScanRow(BaseModel):
    theta: float
    lambda_sdp: Optional[float] = None
    r_hull: Optional[float] = None


class ScanReport(BaseModel):
    format_version: str = Field(default_factory=_format_version)
    N: int
    mu: int
    kind: str
    rows: List[ScanRow]
    warnings: List[str] = Field(default_factory=list)


class BoundRequest(BaseModel):
    format_version: str = Field(default_factory=_format_version)
    N: int = Field(..., ge=2)
    inequality: BellInequality

    @model_validator(mode="before")
    @classmethod
    def accept_flat_inequality(cls, data: object) -> object:
        # {"N": .., "alpha": {...}, "betaC": ..} is accepted as well as a nested "inequality"
        if isinstance(data, dict) and "inequality" not in data and "alpha" in data:
            data = dict(data)
            data["inequality"] = {"alpha": data.pop("alpha"), "betaC": data.pop("betaC", 0)}
        return data


class BoundReport(BaseModel):
    format_version: str = Field(default_factory=_format_version)
    N: int
    minimum: float
    exact_minimum: Optional[str] = None
    tight: bool
    argmin: Tuple[int, int, int, int]


class ExportRequest(BaseModel):
    format_version: str = Field(default_factory=_format_version)
    N: int = Field(..., ge=2)
    mu: int = 1
    constraints: List[ConstraintSpec] = Field(default_factory=list)
    mode: str = Field(default="feasibility", pattern="^(feasibility|lambda)$")
    shared: bool = False

    def point_constraints(self) -> List[PointConstraint]:
        return [c.to_point_constraint() for c in self.constraints]
