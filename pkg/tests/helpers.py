from typing import List, Sequence

from app.schemas.correlators import CORRELATOR_NAMES, PointConstraint


EXPERIMENT_N = 476
EXPERIMENT_VALUES = (367.6, -525.4)
# -2 S0 + (S00 + 2 S01 + S11) / 2 + 2N >= 0
TIGHT_ALPHA = {"S0": -2, "S1": 0, "S00": "1/2", "S01": 1, "S11": "1/2"}

# unit directions (1, -1, 0, -1, 1)/2 and (0, -1, -1, 1, 0)/sqrt(3)
SECTION_AXES = [
    {"S0": 0.5, "S1": -0.5, "S01": -0.5, "S11": 0.5},
    {"S1": -0.5773502691896258, "S00": -0.5773502691896258, "S01": 0.5773502691896258},
]


def experiment_constraints(values: Sequence[float] = EXPERIMENT_VALUES) -> List[PointConstraint]:
    return [
        PointConstraint.of({"S0": 1}, values[0]),
        PointConstraint.of({"S00": 1, "S01": 2, "S11": 1}, values[1]),
    ]


def fixing_constraints(point: Sequence[float]) -> List[PointConstraint]:
    """One constraint per correlator, fixing all five."""
    return [PointConstraint.of({name: 1}, float(value)) for name, value in zip(CORRELATOR_NAMES, point)]


def fixing_specs(point: Sequence[float]) -> List[dict]:
    """The same constraints as request JSON."""
    return [{"coefficients": {name: 1}, "value": float(value)} for name, value in zip(CORRELATOR_NAMES, point)]
