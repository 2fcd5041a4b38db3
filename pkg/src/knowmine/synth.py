"""Deterministic synthetic datasets with a planted knowledge-improvement link.

Real institutional data cannot ship with the code, so end-to-end validation
uses generated data where the association strength is known. Courses are
grouped into topics with disjoint vocabularies; same-topic courses share
words and synonym-linked aliases, so their syllabi come out similar while
cross-topic pairs do not. Students follow a per-student CGPA track and take
a few courses per semester.

The planted signal works by construction rather than approximation: before
a grade is drawn, the record's knowledge band is computed with the same
similarity matrix and the same arithmetic the scoring stage will apply to
the emitted CSVs. A record whose band is b then gets a grade above the
expected grade with probability ``coupling[b]`` and below it otherwise, so
the conditional frequency of both non-negative and positive improvement per
band equals the coupling, up to sampling noise. Course picks are steered
towards under-represented (quality, knowledge) cells to keep every rule
cell populated.

All randomness flows through ``random.Random(seed).random()`` (the Mersenne
Twister float stream, which CPython keeps stable across versions), so a
config generates byte-identical files anywhere.
"""

from __future__ import annotations

import json
import platform
import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, InternalError
from .records import CourseRecord, RegistrationRecord
from .scoring import POINTS_TO_GRADE, quality_of, round_half_away_from_zero
from .simmatrix import build_course_matrix
from .textsim import LexicalKB

RNG_DESCRIPTION = "python-random-mt19937 (random.Random float stream)"

_CONSONANTS = "bcdfghjklmnpqrstvwxz"
_GRADE_POINT_CHOICES = (10, 9, 8, 7, 6, 5, 0)
_BAND_EDGES = np.array([3, 5, 7, 9])
# CGPA track ranges per quality band; clamped so the expected grade stays in
# 6..9 and both an above- and a below-expectation grade always exist.
_CGPA_TRACKS = ((5.55, 5.95), (6.05, 6.95), (7.05, 7.95), (8.05, 8.95), (9.05, 9.40))
_CGPA_MIN = 5.5
_CGPA_MAX = 9.49


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    n_courses: int = 100
    n_students: int = 300
    n_semesters: int = 8
    topic_count: int = 10
    courses_per_semester: int = 5
    topic_vocab_size: int = 40
    topic_vocab_sizes: tuple[int, ...] = ()
    syllabus_words: int = 30
    coupling: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    candidate_pool: int = 25
    lsa_rank: Optional[int] = None

    def validate(self) -> None:
        if len(self.coupling) != 5:
            raise ConfigError(
                f"coupling needs one probability per knowledge band (5), "
                f"got {len(self.coupling)}"
            )
        if any(not 0.0 <= p <= 1.0 for p in self.coupling):
            raise ConfigError("coupling probabilities must lie in [0, 1]")
        if self.topic_count < 1 or self.topic_count > 399:
            raise ConfigError("topic_count must be in 1..399")
        if self.n_courses < self.topic_count:
            raise ConfigError("need at least one course per topic")
        if min(self.n_students, self.n_semesters, self.courses_per_semester) < 1:
            raise ConfigError("students, semesters and courses per semester must be >= 1")
        if self.courses_per_semester * self.n_semesters > self.n_courses:
            raise ConfigError(
                f"{self.n_semesters} semesters x {self.courses_per_semester} courses "
                f"exceed the {self.n_courses}-course catalog (no retakes)"
            )
        if self.candidate_pool < self.courses_per_semester:
            raise ConfigError("candidate_pool must cover one semester of picks")
        if self.syllabus_words < 1:
            raise ConfigError("syllabus_words must be >= 1")
        sizes = self.vocab_sizes()
        if len(sizes) != self.topic_count:
            raise ConfigError(
                f"got {len(self.topic_vocab_sizes)} per-topic vocabulary sizes "
                f"for {self.topic_count} topics"
            )
        if any(size < 2 for size in sizes):
            raise ConfigError("topic vocabularies need at least 2 words")

    def vocab_sizes(self) -> tuple[int, ...]:
        if self.topic_vocab_sizes:
            return tuple(self.topic_vocab_sizes)
        return (self.topic_vocab_size,) * self.topic_count


@dataclass
class SynthDataset:
    config: SynthConfig
    courses: list[CourseRecord]
    registrations: list[RegistrationRecord]
    kb_lines: list[str]


def _rand_index(rng: random.Random, n: int) -> int:
    return min(int(rng.random() * n), n - 1)


def _sample(rng: random.Random, population: Sequence, k: int) -> list:
    """Partial Fisher-Yates draw of k items, using only rng.random()."""
    pool = list(population)
    for i in range(k):
        j = i + _rand_index(rng, len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


def _encode(value: int, length: int = 3) -> str:
    digits = []
    for _ in range(length):
        digits.append(_CONSONANTS[value % len(_CONSONANTS)])
        value //= len(_CONSONANTS)
    return "".join(reversed(digits))


def _topic_word(topic: int, i: int) -> str:
    # All-consonant words of length >= 5: never stopwords, never split by
    # the tokenizer, distinct across topics. "zz" is reserved for generic
    # filler words shared between topics.
    prefix = _CONSONANTS[topic // 20] + _CONSONANTS[topic % 20]
    return prefix + _encode(i)


def _generic_word(i: int) -> str:
    return "zz" + _encode(i)


def _build_vocabularies(cfg: SynthConfig) -> tuple[list[list[str]], list[str]]:
    """Per-topic word pools (base words plus synonym aliases) and KB lines."""
    pools: list[list[str]] = []
    kb_lines: list[str] = []
    for topic, size in enumerate(cfg.vocab_sizes()):
        base = [_topic_word(topic, i) for i in range(size)]
        aliases = []
        for word in base[: size // 5]:
            alias = word + "y"
            aliases.append(alias)
            kb_lines.append(f"syn: {word} {alias}")
        if len(aliases) >= 2:
            kb_lines.append(f"hyp: {aliases[0]} {aliases[1]}")
        pools.append(base + aliases)
    return pools, kb_lines


def _make_courses(cfg: SynthConfig, rng: random.Random, pools) -> list[CourseRecord]:
    generic = [_generic_word(i) for i in range(8)]
    courses = []
    for idx in range(cfg.n_courses):
        topic = idx % cfg.topic_count
        pool = pools[topic]
        words = [pool[_rand_index(rng, len(pool))] for _ in range(cfg.syllabus_words)]
        # Generic filler appears in most syllabi, giving every course pair a
        # small baseline similarity for normalisation to strip out.
        if rng.random() < 0.9:
            words += [generic[_rand_index(rng, len(generic))] for _ in range(4)]
        courses.append(
            CourseRecord(
                course_number=f"C{idx:04d}",
                course_name=f"Course {idx:04d}",
                syllabus=" ".join(words),
            )
        )
    return courses


def _track_cgpa(rng: random.Random, base: float) -> float:
    value = base + (rng.random() - 0.5) * 0.3
    value = min(_CGPA_MAX, max(_CGPA_MIN, value))
    return float(f"{value:.2f}")


def generate(cfg: SynthConfig) -> SynthDataset:
    """Generate a catalog, a registration table and the lexical KB lines."""
    cfg.validate()
    rng = random.Random(cfg.seed)

    pools, kb_lines = _build_vocabularies(cfg)
    courses = _make_courses(cfg, rng, pools)
    kb = LexicalKB.from_lines(kb_lines)
    matrix, _ = build_course_matrix(courses, kb, rank=cfg.lsa_rank)
    for idx, course in enumerate(courses):
        if matrix.index[course.course_number] != idx:
            raise InternalError("matrix row order diverged from catalog order")
    dense = matrix.to_dense()

    cell_counts: dict[tuple, int] = {}
    registrations: list[RegistrationRecord] = []

    for student_idx in range(cfg.n_students):
        student = f"S{student_idx:05d}"
        lo, hi = _CGPA_TRACKS[student_idx % len(_CGPA_TRACKS)]
        base = lo + rng.random() * (hi - lo)

        taken: set[int] = set()
        hist_sem: list[int] = []
        hist_course: list[int] = []
        hist_points: list[int] = []

        for semester in range(1, cfg.n_semesters + 1):
            available = [c for c in range(cfg.n_courses) if c not in taken]
            if semester == 1:
                picks = _sample(rng, available, cfg.courses_per_semester)
                for course_idx in picks:
                    points = _GRADE_POINT_CHOICES[_rand_index(rng, len(_GRADE_POINT_CHOICES))]
                    registrations.append(
                        RegistrationRecord(
                            student_code=student,
                            semester=semester,
                            preceding_cgpa=None,
                            course_number=courses[course_idx].course_number,
                            registration_type="regular",
                            grade=POINTS_TO_GRADE[points],
                        )
                    )
                    taken.add(course_idx)
                    hist_sem.append(semester)
                    hist_course.append(course_idx)
                    hist_points.append(points)
                continue

            cgpa = _track_cgpa(rng, base)
            quality = quality_of(cgpa)
            expected = round_half_away_from_zero(cgpa)
            above = [g for g in _GRADE_POINT_CHOICES if g > expected]
            below = [g for g in _GRADE_POINT_CHOICES if g < expected]
            if not above or not below:
                raise InternalError(f"no grade on both sides of expectation {expected}")

            pool_size = min(cfg.candidate_pool, len(available))
            candidates = _sample(rng, available, pool_size)
            # Band each candidate exactly as the scoring stage will: the
            # multiply/divide order below mirrors the per-record arithmetic.
            if hist_course:
                sub = dense[np.ix_(np.asarray(candidates), np.asarray(hist_course))]
                factors = (sub * np.asarray(hist_points, dtype=np.float64)) / (
                    semester - np.asarray(hist_sem)
                )
                theta = np.clip(np.floor(factors.max(axis=1)), 0, 10).astype(int)
            else:
                theta = np.zeros(len(candidates), dtype=int)
            bands = np.searchsorted(_BAND_EDGES, theta, side="right")

            open_slots = list(zip(candidates, bands.tolist()))
            for _ in range(cfg.courses_per_semester):
                lowest = min(cell_counts.get((quality, b), 0) for _, b in open_slots)
                tied = [
                    pos
                    for pos, (_, b) in enumerate(open_slots)
                    if cell_counts.get((quality, b), 0) == lowest
                ]
                pos = tied[_rand_index(rng, len(tied))]
                course_idx, band = open_slots.pop(pos)

                wants_gain = rng.random() < cfg.coupling[band]
                choices = above if wants_gain else below
                points = choices[_rand_index(rng, len(choices))]

                registrations.append(
                    RegistrationRecord(
                        student_code=student,
                        semester=semester,
                        preceding_cgpa=cgpa,
                        course_number=courses[course_idx].course_number,
                        registration_type="regular",
                        grade=POINTS_TO_GRADE[points],
                    )
                )
                cell_counts[(quality, band)] = cell_counts.get((quality, band), 0) + 1
                taken.add(course_idx)
                hist_sem.append(semester)
                hist_course.append(course_idx)
                hist_points.append(points)

    return SynthDataset(cfg, courses, registrations, kb_lines)


def write_dataset(cfg: SynthConfig, out_dir) -> dict[str, Path]:
    """Generate and write courses.csv, performance.csv, kb.txt and a sidecar
    recording the config, the coupling and the RNG used."""
    dataset = generate(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    course_path = out / "courses.csv"
    with open(course_path, "w", encoding="utf-8", newline="") as handle:
        handle.write("course_number,course_name,syllabus\n")
        for course in dataset.courses:
            handle.write(f"{course.course_number},{course.course_name},{course.syllabus}\n")

    perf_path = out / "performance.csv"
    with open(perf_path, "w", encoding="utf-8", newline="") as handle:
        handle.write(
            "student_code,semester,preceding_cgpa,course_number,registration_type,grade\n"
        )
        for reg in dataset.registrations:
            cgpa = "" if reg.preceding_cgpa is None else f"{reg.preceding_cgpa:.2f}"
            handle.write(
                f"{reg.student_code},{reg.semester},{cgpa},{reg.course_number},"
                f"{reg.registration_type},{reg.grade}\n"
            )

    kb_path = out / "kb.txt"
    kb_path.write_text("\n".join(dataset.kb_lines) + "\n", encoding="utf-8")

    sidecar_path = out / "synth_config.json"
    sidecar = {
        "schema": "knowmine.synth/1",
        "config": asdict(cfg),
        "planted_coupling": list(cfg.coupling),
        "rng": RNG_DESCRIPTION,
        "python": platform.python_version(),
        "files": {
            "courses": course_path.name,
            "performance": perf_path.name,
            "lexical_kb": kb_path.name,
        },
        "counts": {
            "courses": len(dataset.courses),
            "registrations": len(dataset.registrations),
        },
    }
    sidecar_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    return {
        "courses": course_path,
        "performance": perf_path,
        "lexical_kb": kb_path,
        "sidecar": sidecar_path,
    }
