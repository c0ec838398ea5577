from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


# Order of the correlator coordinates everywhere a positional form is needed internally.
CORRELATOR_NAMES: Tuple[str, ...] = ("S0", "S1", "S00", "S01", "S11")

Number = Union[int, Fraction, float]


def to_rational(value: object) -> Union[int, Fraction, float]:
    """
    Parse a user-supplied coefficient into an exact number where possible.

    Integers stay integers, strings such as "1/2" or "0.25" and JSON floats
    become Fractions of their decimal literal, so 0.5 parses as exactly 1/2.
    Non-finite floats are rejected.
    """
    if isinstance(value, bool):
        raise ValueError("boolean is not a coefficient")
    if isinstance(value, (int, Fraction)):
        return value
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ValueError(f"non-finite coefficient {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse coefficient {value!r}") from exc
    raise ValueError(f"unsupported coefficient type {type(value).__name__}")


def _check_names(keys: Sequence[str]) -> None:
    unknown = [k for k in keys if k not in CORRELATOR_NAMES]
    if unknown:
        raise ValueError(f"unknown correlator name(s) {unknown}; expected a subset of {list(CORRELATOR_NAMES)}")


class CorrelatorVector(BaseModel):
    """The five symmetric correlators (S0, S1, S00, S01, S11) of the two-setting scenario."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    S0: Number
    S1: Number
    S00: Number
    S01: Number
    S11: Number

    @classmethod
    def from_sequence(cls, values: Sequence[Number]) -> "CorrelatorVector":
        if len(values) != len(CORRELATOR_NAMES):
            raise ValueError(f"expected {len(CORRELATOR_NAMES)} correlator values, got {len(values)}")
        return cls(**dict(zip(CORRELATOR_NAMES, values)))

    def as_tuple(self) -> Tuple[Number, ...]:
        return tuple(getattr(self, name) for name in CORRELATOR_NAMES)

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.as_tuple()], dtype=float)

    def to_response(self) -> Dict[str, float]:
        return {name: float(v) for name, v in zip(CORRELATOR_NAMES, self.as_tuple())}


class StrategyCounts(BaseModel):
    """How many of the N parties follow each of the four deterministic strategies."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    x: Tuple[Number, Number, Number, Number]

    @property
    def total(self) -> Number:
        return sum(self.x)

    def is_integral(self) -> bool:
        return all(isinstance(v, int) or (isinstance(v, Fraction) and v.denominator == 1) for v in self.x)


class LinearFunctional(BaseModel):
    """A linear map on correlator space given by named coefficients; missing names are zero."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coefficients: Dict[str, Number]

    @field_validator("coefficients", mode="before")
    @classmethod
    def parse_coefficients(cls, value: object) -> Dict[str, Number]:
        if not isinstance(value, dict):
            raise ValueError("coefficients must be an object keyed by correlator name")
        _check_names(list(value))
        return {k: to_rational(v) for k, v in value.items()}

    @classmethod
    def from_vector(cls, vector: Sequence[Number]) -> "LinearFunctional":
        return cls(coefficients={n: v for n, v in zip(CORRELATOR_NAMES, vector) if v != 0})

    def vector(self) -> Tuple[Number, ...]:
        return tuple(self.coefficients.get(name, 0) for name in CORRELATOR_NAMES)

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.vector()], dtype=float)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.vector())

    def apply(self, point: CorrelatorVector) -> Number:
        return sum(c * v for c, v in zip(self.vector(), point.as_tuple()))


class PointConstraint(BaseModel):
    """Fixes a functional of the observed correlators to a value."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    functional: LinearFunctional
    value: float

    @classmethod
    def of(cls, coefficients: Dict[str, object], value: float) -> "PointConstraint":
        return cls(functional=LinearFunctional(coefficients=coefficients), value=value)


class BellInequality(BaseModel):
    """
    alpha . S + betaC >= 0 on every local point.

    `alpha` always carries all five correlator names. `verified` is set only
    after the classical bound has been checked against the polytope vertices.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    alpha: Dict[str, Number]
    betaC: Number = 0
    verified: bool = False
    note: Optional[str] = None
    # Factor applied to the dual blocks so that they recompose this inequality.
    dual_scale: float = 1.0

    @field_validator("alpha", mode="before")
    @classmethod
    def complete_alpha(cls, value: object) -> Dict[str, Number]:
        if isinstance(value, (list, tuple)):
            value = dict(zip(CORRELATOR_NAMES, value))
        if not isinstance(value, dict):
            raise ValueError("alpha must be an object keyed by correlator name")
        _check_names(list(value))
        parsed = {k: to_rational(v) for k, v in value.items()}
        return {name: parsed.get(name, 0) for name in CORRELATOR_NAMES}

    @field_validator("betaC", mode="before")
    @classmethod
    def parse_bound(cls, value: object) -> Number:
        return to_rational(value)

    def alpha_vector(self) -> Tuple[Number, ...]:
        return tuple(self.alpha[name] for name in CORRELATOR_NAMES)

    def evaluate(self, point: CorrelatorVector) -> Number:
        return sum(a * s for a, s in zip(self.alpha_vector(), point.as_tuple())) + self.betaC

    def to_response(self) -> Dict[str, object]:
        return {
            "alpha": {name: float(self.alpha[name]) for name in CORRELATOR_NAMES},
            "betaC": float(self.betaC),
            "verified": self.verified,
            "note": self.note,
        }


class MembershipVerdict(BaseModel):
    """LP verdict on polytope membership; weights when inside, separator when outside."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    status: str = Field(..., pattern="^(inside|outside)$")
    weights: Optional[List[Tuple[Tuple[int, int, int, int], float]]] = None
    separator: Optional[BellInequality] = None
    residual: float = 0.0

    @property
    def inside(self) -> bool:
        return self.status == "inside"
