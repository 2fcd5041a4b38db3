"""Input record types, CSV ingestion and the record filter.

Two CSV files feed the pipeline: a course catalog (course number, name,
syllabus text) and a performance table with one row per course registration
(student, semester, preceding CGPA, course, registration type, letter
grade). Both are UTF-8, comma separated, RFC 4180 quoted, with a header
row. Column headers are remappable so exports from different information
systems can be ingested without editing the files.

Records are immutable after parsing and safe to share across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    DuplicateCourseError,
    InternalError,
    InvalidGradeError,
    ParseError,
    ValueRangeError,
)

VALID_GRADES: tuple[str, ...] = ("EX", "A", "B", "C", "D", "P", "F")

DEFAULT_CATALOG_COLUMNS: Mapping[str, str] = {
    "course_number": "course_number",
    "course_name": "course_name",
    "syllabus": "syllabus",
}

DEFAULT_PERFORMANCE_COLUMNS: Mapping[str, str] = {
    "student_code": "student_code",
    "semester": "semester",
    "preceding_cgpa": "preceding_cgpa",
    "course_number": "course_number",
    "registration_type": "registration_type",
    "grade": "grade",
}


@dataclass(frozen=True)
class CourseRecord:
    """One catalog entry. The syllabus text is kept verbatim."""

    course_number: str
    course_name: str
    syllabus: str


@dataclass(frozen=True)
class RegistrationRecord:
    """One student-course-semester transaction.

    ``preceding_cgpa`` and ``grade`` are None when the source cell was
    blank; ``registration_type`` is carried through but never used by the
    analysis.
    """

    student_code: str
    semester: int
    preceding_cgpa: Optional[float]
    course_number: str
    registration_type: str
    grade: Optional[str]


@dataclass(frozen=True)
class FilterStats:
    """Audit counters for the record filter. Drops plus retained equal
    the number of rows read."""

    total_read: int
    dropped_missing_grade: int
    dropped_missing_cgpa: int
    dropped_unknown_course: int
    retained: int

    def __post_init__(self):
        drops = (
            self.dropped_missing_grade
            + self.dropped_missing_cgpa
            + self.dropped_unknown_course
        )
        if self.retained + drops != self.total_read:
            raise InternalError(
                f"filter stats do not balance: {self.retained} retained + "
                f"{drops} dropped != {self.total_read} read"
            )


def _open_reader(path, columns, logical_names):
    """Yield (line_number, row) after resolving the header.

    Returns the column-index map first. Header matching is case-insensitive
    and ignores surrounding whitespace.
    """
    handle = open(path, "r", encoding="utf-8-sig", newline="")
    reader = csv.reader(handle)
    try:
        header = next(reader)
    except StopIteration:
        handle.close()
        raise ParseError("empty file, header row required", path=path, line=1) from None
    except csv.Error as exc:
        handle.close()
        raise ParseError(f"malformed CSV header: {exc}", path=path, line=1) from None

    normalized = {}
    for pos, name in enumerate(header):
        key = name.strip().casefold()
        if key in normalized:
            normalized[key] = None  # ambiguous, only an error if actually needed
        else:
            normalized[key] = pos

    index = {}
    for logical in logical_names:
        header_name = columns[logical].strip().casefold()
        pos = normalized.get(header_name, "missing")
        if pos == "missing":
            handle.close()
            raise ParseError(
                f"missing column {columns[logical]!r} for field {logical!r}",
                path=path,
                line=1,
            )
        if pos is None:
            handle.close()
            raise ParseError(
                f"column {columns[logical]!r} appears more than once in the header",
                path=path,
                line=1,
            )
        index[logical] = pos

    def rows():
        with handle:
            width = len(header)
            while True:
                try:
                    row = next(reader)
                except StopIteration:
                    return
                except csv.Error as exc:
                    raise ParseError(
                        f"malformed CSV: {exc}", path=path, line=reader.line_num
                    ) from None
                if len(row) != width:
                    raise ParseError(
                        f"expected {width} fields, found {len(row)}",
                        path=path,
                        line=reader.line_num,
                    )
                yield reader.line_num, row

    return index, rows()


def parse_course_csv(
    path, columns: Mapping[str, str] | None = None
) -> list[CourseRecord]:
    """Parse a course catalog CSV into records.

    Course numbers must be unique and non-empty; the syllabus cell may be
    empty (such courses are later excluded from the similarity matrix).
    """
    cols = dict(DEFAULT_CATALOG_COLUMNS)
    if columns:
        cols.update(columns)
    index, rows = _open_reader(path, cols, DEFAULT_CATALOG_COLUMNS.keys())

    records: list[CourseRecord] = []
    seen: dict[str, int] = {}
    for line, row in rows:
        number = row[index["course_number"]].strip()
        if not number:
            raise ParseError("blank course number", path=path, line=line)
        if number in seen:
            raise DuplicateCourseError(
                f"course {number!r} already defined on line {seen[number]}",
                path=path,
                line=line,
            )
        seen[number] = line
        records.append(
            CourseRecord(
                course_number=number,
                course_name=row[index["course_name"]],
                syllabus=row[index["syllabus"]],
            )
        )
    return records


def _parse_semester(cell, path, line) -> int:
    try:
        semester = int(cell.strip())
    except ValueError:
        raise ParseError(f"semester {cell!r} is not an integer", path=path, line=line) from None
    if semester < 1:
        raise ValueRangeError(f"semester {semester} must be >= 1", path=path, line=line)
    return semester


def _parse_cgpa(cell, path, line) -> Optional[float]:
    text = cell.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"CGPA {cell!r} is not a number", path=path, line=line) from None
    if not 0.0 <= value <= 10.0:
        raise ValueRangeError(f"CGPA {value} outside [0, 10]", path=path, line=line)
    return value


def _parse_grade(cell, path, line) -> Optional[str]:
    grade = cell.strip()
    if not grade:
        return None
    if grade not in VALID_GRADES:
        raise InvalidGradeError(
            f"grade {grade!r} not in {{{', '.join(VALID_GRADES)}}}", path=path, line=line
        )
    return grade


def parse_performance_csv(
    path, columns: Mapping[str, str] | None = None
) -> list[RegistrationRecord]:
    """Parse a performance CSV into registration records.

    Blank grade or CGPA cells become None rather than errors; values that
    are present must be valid (grade in the letter set, CGPA in [0, 10]).
    """
    cols = dict(DEFAULT_PERFORMANCE_COLUMNS)
    if columns:
        cols.update(columns)
    index, rows = _open_reader(path, cols, DEFAULT_PERFORMANCE_COLUMNS.keys())

    records: list[RegistrationRecord] = []
    for line, row in rows:
        student = row[index["student_code"]].strip()
        if not student:
            raise ParseError("blank student code", path=path, line=line)
        course = row[index["course_number"]].strip()
        if not course:
            raise ParseError("blank course number", path=path, line=line)
        records.append(
            RegistrationRecord(
                student_code=student,
                semester=_parse_semester(row[index["semester"]], path, line),
                preceding_cgpa=_parse_cgpa(row[index["preceding_cgpa"]], path, line),
                course_number=course,
                registration_type=row[index["registration_type"]],
                grade=_parse_grade(row[index["grade"]], path, line),
            )
        )
    return records


def syllabus_bearing_courses(catalog: Iterable[CourseRecord]) -> frozenset[str]:
    """Course numbers whose syllabus is non-blank (whitespace counts as blank)."""
    return frozenset(c.course_number for c in catalog if c.syllabus.strip())


def filter_records(
    regs: Sequence[RegistrationRecord], catalog: Sequence[CourseRecord]
) -> tuple[list[RegistrationRecord], FilterStats]:
    """Keep records usable for scoring: grade present, preceding CGPA
    present, and the course resolvable to a syllabus-bearing catalog entry.

    Each dropped record is counted once, in that precedence order.
    """
    known = syllabus_bearing_courses(catalog)
    kept: list[RegistrationRecord] = []
    missing_grade = missing_cgpa = unknown_course = 0
    for reg in regs:
        if reg.grade is None:
            missing_grade += 1
        elif reg.preceding_cgpa is None:
            missing_cgpa += 1
        elif reg.course_number not in known:
            unknown_course += 1
        else:
            kept.append(reg)
    stats = FilterStats(
        total_read=len(regs),
        dropped_missing_grade=missing_grade,
        dropped_missing_cgpa=missing_cgpa,
        dropped_unknown_course=unknown_course,
        retained=len(kept),
    )
    return kept, stats


def history_pool(
    regs: Sequence[RegistrationRecord], catalog: Sequence[CourseRecord]
) -> list[RegistrationRecord]:
    """Records usable as knowledge history: graded, with a syllabus-bearing
    course. CGPA is irrelevant here, so first-semester records qualify even
    though they are dropped from the scored set."""
    known = syllabus_bearing_courses(catalog)
    return [r for r in regs if r.grade is not None and r.course_number in known]
