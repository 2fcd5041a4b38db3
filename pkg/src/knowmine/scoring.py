"""Derived per-registration measures.

Letter grades map to points (EX 10, A 9, B 8, C 7, D 6, P 5, F 0). The
preceding CGPA places a student in one of five quality bands. The knowledge
index of a registration is the floored maximum, over the student's earlier
graded courses, of ``similarity * grade_points / semester_gap``; dividing by
the gap makes knowledge fade the longer ago the similar course was taken.
Gaps count whole semesters and are always at least 1: courses taken in the
same semester never contribute to each other. The improvement factor is the
grade minus the expected grade, where the expectation is the preceding CGPA
rounded to the nearest integer.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ConfigError, DataValidationError, InternalError, InvalidGradeError, ValueRangeError
from .records import RegistrationRecord
from .simmatrix import SimilarityMatrix

GRADE_POINTS: Mapping[str, int] = {
    "EX": 10,
    "A": 9,
    "B": 8,
    "C": 7,
    "D": 6,
    "P": 5,
    "F": 0,
}

POINTS_TO_GRADE: Mapping[int, str] = {v: k for k, v in GRADE_POINTS.items()}

INDEX_ROUNDING_MODES = ("floor", "nearest")
EXPECTED_ROUNDING_MODES = ("half_away_from_zero", "half_to_even")


class Quality(str, Enum):
    """Student quality from preceding CGPA."""

    EP = "EP"
    PR = "PR"
    MD = "MD"
    GD = "GD"
    VG = "VG"


QUALITY_LABELS: Mapping[Quality, str] = {
    Quality.EP: "Ext. poor",
    Quality.PR: "Poor",
    Quality.MD: "Medium",
    Quality.GD: "Good",
    Quality.VG: "Very good",
}


class Knowledge(str, Enum):
    """Domain knowledge band from the knowledge index."""

    NG = "NG"
    LT = "LT"
    RS = "RS"
    SF = "SF"
    MX = "MX"


KNOWLEDGE_LABELS: Mapping[Knowledge, str] = {
    Knowledge.NG: "Negligible",
    Knowledge.LT: "Little",
    Knowledge.RS: "Reasonable",
    Knowledge.SF: "Sufficient",
    Knowledge.MX: "Maximum",
}


@dataclass(frozen=True)
class Improvement:
    """Grade delta against expectation with its two binary readings."""

    delta: int
    i1_nonnegative: bool
    i2_positive: bool

    def __post_init__(self):
        if self.i1_nonnegative != (self.delta >= 0) or self.i2_positive != (self.delta > 0):
            raise InternalError(f"inconsistent improvement flags for delta {self.delta}")


@dataclass(frozen=True)
class ScoredRecord:
    """A filtered registration with every derived attribute attached."""

    registration: RegistrationRecord
    numeric_grade: int
    quality: Quality
    knowledge_index: int
    knowledge: Knowledge
    improvement: Improvement

    @property
    def student_code(self) -> str:
        return self.registration.student_code

    @property
    def semester(self) -> int:
        return self.registration.semester

    @property
    def course_number(self) -> str:
        return self.registration.course_number

    @property
    def preceding_cgpa(self) -> float:
        return self.registration.preceding_cgpa


def grade_to_numeric(letter: str) -> int:
    try:
        return GRADE_POINTS[letter]
    except KeyError:
        raise InvalidGradeError(
            f"unknown grade {letter!r}; expected one of {', '.join(GRADE_POINTS)}"
        ) from None


def quality_of(cgpa: float) -> Quality:
    if not 0.0 <= cgpa <= 10.0:
        raise ValueRangeError(f"CGPA {cgpa!r} outside [0, 10]")
    if cgpa < 6.0:
        return Quality.EP
    if cgpa < 7.0:
        return Quality.PR
    if cgpa < 8.0:
        return Quality.MD
    if cgpa < 9.0:
        return Quality.GD
    return Quality.VG


def knowledge_band(index: int) -> Knowledge:
    if not 0 <= index <= 10:
        raise ValueRangeError(f"knowledge index {index!r} outside 0..10")
    if index <= 2:
        return Knowledge.NG
    if index <= 4:
        return Knowledge.LT
    if index <= 6:
        return Knowledge.RS
    if index <= 8:
        return Knowledge.SF
    return Knowledge.MX


def round_half_away_from_zero(x: float) -> int:
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


def index_from_factors(factors: Iterable[float], rounding: str = "floor") -> int:
    """Collapse knowledge factors to an index in 0..10.

    The default takes the floor of the strongest factor; "nearest" rounds
    half away from zero instead. No factors at all means no evidence of
    prior knowledge, index 0.
    """
    if rounding not in INDEX_ROUNDING_MODES:
        raise ConfigError(f"unknown index rounding {rounding!r}")
    best = 0.0
    for factor in factors:
        if factor > best:
            best = factor
    if rounding == "floor":
        index = int(math.floor(best))
    else:
        index = round_half_away_from_zero(best)
    return max(0, min(10, index))


def knowledge_index(
    current: RegistrationRecord,
    history: Sequence[RegistrationRecord],
    matrix: SimilarityMatrix,
    rounding: str = "floor",
) -> int:
    """Knowledge index of ``current`` given the student's earlier records.

    Every history record must belong to the same student, carry a grade,
    sit in a strictly earlier semester and resolve in the matrix; breaking
    any of these is a caller bug.
    """
    try:
        current_idx = matrix.index[current.course_number]
    except KeyError:
        raise InternalError(
            f"current course {current.course_number!r} missing from matrix"
        ) from None

    factors = []
    for past in history:
        if past.student_code != current.student_code:
            raise InternalError(
                f"history record of student {past.student_code!r} offered for "
                f"{current.student_code!r}"
            )
        if past.semester >= current.semester:
            raise InternalError(
                f"history record in semester {past.semester} is not strictly "
                f"before semester {current.semester}"
            )
        if past.grade is None:
            raise InternalError("ungraded record offered as history")
        try:
            past_idx = matrix.index[past.course_number]
        except KeyError:
            raise InternalError(
                f"history course {past.course_number!r} missing from matrix"
            ) from None
        similarity = matrix.value_at(current_idx, past_idx)
        gap = current.semester - past.semester
        factors.append((similarity * grade_to_numeric(past.grade)) / gap)
    return index_from_factors(factors, rounding)


def improvement(
    numeric_grade: int, cgpa: float, expected_rounding: str = "half_away_from_zero"
) -> Improvement:
    """Grade delta against the expected grade (the rounded preceding CGPA)."""
    if expected_rounding not in EXPECTED_ROUNDING_MODES:
        raise ConfigError(f"unknown expected-grade rounding {expected_rounding!r}")
    if not 0.0 <= cgpa <= 10.0:
        raise ValueRangeError(f"CGPA {cgpa!r} outside [0, 10]")
    if expected_rounding == "half_away_from_zero":
        expected = round_half_away_from_zero(cgpa)
    else:
        expected = round(cgpa)
    delta = numeric_grade - expected
    return Improvement(delta=delta, i1_nonnegative=delta >= 0, i2_positive=delta > 0)


def score_dataset(
    regs: Sequence[RegistrationRecord],
    matrix: SimilarityMatrix,
    history: Optional[Sequence[RegistrationRecord]] = None,
    rounding: str = "floor",
    expected_rounding: str = "half_away_from_zero",
) -> list[ScoredRecord]:
    """Score every filtered registration, preserving input order.

    ``history`` is the pool that knowledge indices draw on; it defaults to
    ``regs`` but may be wider, since a record only needs a grade and a
    resolvable course to serve as history (its own CGPA is irrelevant).
    Students never share history, so permuting whole student blocks leaves
    every output record unchanged.
    """
    pool = regs if history is None else history
    by_student: dict[str, list[RegistrationRecord]] = {}
    for record in pool:
        if record.grade is None or record.course_number not in matrix.index:
            continue
        by_student.setdefault(record.student_code, []).append(record)
    for entries in by_student.values():
        entries.sort(key=lambda r: r.semester)

    scored: list[ScoredRecord] = []
    for reg in regs:
        if reg.grade is None or reg.preceding_cgpa is None:
            raise DataValidationError(
                f"record of student {reg.student_code!r} in semester "
                f"{reg.semester} has not been filtered (missing grade or CGPA)"
            )
        entries = by_student.get(reg.student_code, [])
        cut = bisect_left(entries, reg.semester, key=lambda r: r.semester)
        index = knowledge_index(reg, entries[:cut], matrix, rounding)
        numeric = grade_to_numeric(reg.grade)
        scored.append(
            ScoredRecord(
                registration=reg,
                numeric_grade=numeric,
                quality=quality_of(reg.preceding_cgpa),
                knowledge_index=index,
                knowledge=knowledge_band(index),
                improvement=improvement(numeric, reg.preceding_cgpa, expected_rounding),
            )
        )
    return scored
