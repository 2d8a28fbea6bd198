"""Deduction rubric mapping frame-quality criteria to a traffic-light category.

Point values use exact binary-representable halves so all comparisons are
exact; no float tolerance is required anywhere in this module.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable


class RubricCriterion(enum.Enum):
    """Frame-quality deductions, each applied at most once per frame."""

    LV_FREE_WALL_NOT_VISIBLE = "LV_FREE_WALL_NOT_VISIBLE"
    RV_FREE_WALL_NOT_VISIBLE = "RV_FREE_WALL_NOT_VISIBLE"
    LA_ENTIRELY_OUT = "LA_ENTIRELY_OUT"
    LA_PARTIALLY_OUT = "LA_PARTIALLY_OUT"
    RA_NOT_VISIBLE = "RA_NOT_VISIBLE"
    AORTA_VISIBLE_5CH = "AORTA_VISIBLE_5CH"
    OTHER_SIGNAL_DROPOUT = "OTHER_SIGNAL_DROPOUT"


DEDUCTIONS: dict[RubricCriterion, float] = {
    RubricCriterion.LV_FREE_WALL_NOT_VISIBLE: 1.0,
    RubricCriterion.RV_FREE_WALL_NOT_VISIBLE: 0.5,
    RubricCriterion.LA_ENTIRELY_OUT: 2.0,
    RubricCriterion.LA_PARTIALLY_OUT: 1.0,
    RubricCriterion.RA_NOT_VISIBLE: 0.5,
    RubricCriterion.AORTA_VISIBLE_5CH: 1.0,
    RubricCriterion.OTHER_SIGNAL_DROPOUT: 0.5,
}

RED_THRESHOLD = 2.0
YELLOW_THRESHOLD = 1.0


class PoseCategory(enum.Enum):
    GREEN = "green"
    YELLOW = "yellow"
    RED = "red"

    @property
    def rank(self) -> int:
        """Total order red < yellow < green."""
        return {"red": 0, "yellow": 1, "green": 2}[self.value]

    def __lt__(self, other: "PoseCategory") -> bool:
        return self.rank < other.rank


class InvalidCriteriaError(ValueError):
    pass


def parse_criterion(token: str) -> RubricCriterion:
    try:
        return RubricCriterion(token)
    except ValueError:
        raise InvalidCriteriaError(f"unknown rubric criterion: {token!r}") from None


def total_deduction(criteria: Iterable[RubricCriterion]) -> float:
    """Sum the deduction points over a set of criteria.

    The two LA criteria are mutually exclusive (a frame cannot have the LA
    both entirely and partially out of view).
    """
    unique = set(criteria)
    if (
        RubricCriterion.LA_ENTIRELY_OUT in unique
        and RubricCriterion.LA_PARTIALLY_OUT in unique
    ):
        raise InvalidCriteriaError(
            "LA_ENTIRELY_OUT and LA_PARTIALLY_OUT are mutually exclusive"
        )
    return sum(DEDUCTIONS[c] for c in unique)


def categorize(deduction: float) -> PoseCategory:
    """Red if total deduction >= 2, else yellow if >= 1, else green."""
    if deduction < 0:
        raise ValueError(f"deduction must be non-negative, got {deduction}")
    if deduction >= RED_THRESHOLD:
        return PoseCategory.RED
    if deduction >= YELLOW_THRESHOLD:
        return PoseCategory.YELLOW
    return PoseCategory.GREEN


def categorize_criteria(criteria: Iterable[RubricCriterion]) -> PoseCategory:
    return categorize(total_deduction(criteria))
