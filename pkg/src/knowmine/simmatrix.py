"""The pairwise course similarity matrix: build, normalise, persist, query.

Similarities are computed once per unordered course pair and mirrored, so
the matrix is symmetric by construction with an exact unit diagonal. Because
every syllabus shares some generic vocabulary, raw scores carry a uniform
baseline; min-max rescaling over the off-diagonal entries removes it while
keeping values in [0, 1].

Matrices persist in a compact binary file (magic bytes, format version,
course-id table, little-endian float64 upper triangle, trailing CRC32) so
the quadratic build cost is paid once per catalog.
"""

from __future__ import annotations

import struct
import warnings
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CourseLookupError,
    DataValidationError,
    InternalError,
    MatrixFormatError,
)
from .records import CourseRecord
from .textsim import (
    LexicalKB,
    LsaModel,
    TextProfile,
    build_lsa,
    default_rank,
    preprocess,
    profile,
    profile_similarity,
)

_MAGIC = b"KMSM"
_FORMAT_VERSION = 1


@dataclass
class RawMatrix:
    """Pre-normalisation similarities: dense, symmetric, unit diagonal."""

    index: dict[str, int]
    values: np.ndarray

    @property
    def n_c(self) -> int:
        return len(self.index)

    def offdiagonal(self) -> np.ndarray:
        n = self.values.shape[0]
        return self.values[~np.eye(n, dtype=bool)]


@dataclass(frozen=True)
class BuildInfo:
    """Summary of a matrix build, for console reporting."""

    n_courses: int
    lsa_rank: int
    vocabulary_size: int
    raw_min: Optional[float]
    raw_max: Optional[float]


def _tri_size(n: int) -> int:
    return n * (n + 1) // 2


def _tri_offset(i: int, j: int, n: int) -> int:
    """Flat index of (i, j) with i <= j in a row-major upper triangle."""
    return i * n - i * (i - 1) // 2 + (j - i)


class SimilarityMatrix:
    """Symmetric course similarity matrix stored as an upper triangle.

    Immutable after construction; queries are safe from many threads.
    """

    def __init__(self, index: dict[str, int], triangle: np.ndarray):
        n = len(index)
        if triangle.shape != (_tri_size(n),):
            raise InternalError(
                f"triangle length {triangle.shape} does not fit {n} courses"
            )
        if sorted(index.values()) != list(range(n)):
            raise InternalError("course index is not a bijection onto 0..n-1")
        self.index = dict(index)
        self._triangle = np.ascontiguousarray(triangle, dtype=np.float64)
        self._triangle.setflags(write=False)
        self._courses = [None] * n
        for course, i in self.index.items():
            self._courses[i] = course

    @classmethod
    def from_dense(cls, index: dict[str, int], dense: np.ndarray) -> "SimilarityMatrix":
        n = len(index)
        if dense.shape != (n, n):
            raise DataValidationError(f"matrix shape {dense.shape} does not fit {n} courses")
        if not np.array_equal(dense, dense.T):
            raise DataValidationError("matrix is not symmetric")
        if not np.all(np.diag(dense) == 1.0):
            raise DataValidationError("matrix diagonal must be exactly 1")
        if dense.min() < 0.0 or dense.max() > 1.0:
            raise DataValidationError("matrix entries must lie in [0, 1]")
        rows, cols = np.triu_indices(n)
        return cls(index, dense[rows, cols])

    @property
    def n_c(self) -> int:
        return len(self.index)

    @property
    def courses(self) -> list[str]:
        """Course numbers in row order."""
        return list(self._courses)

    def value_at(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        return float(self._triangle[_tri_offset(i, j, self.n_c)])

    def similarity(self, c1: str, c2: str) -> float:
        try:
            i = self.index[c1]
        except KeyError:
            raise CourseLookupError(f"course {c1!r} not in similarity matrix") from None
        try:
            j = self.index[c2]
        except KeyError:
            raise CourseLookupError(f"course {c2!r} not in similarity matrix") from None
        return self.value_at(i, j)

    def to_dense(self) -> np.ndarray:
        n = self.n_c
        dense = np.zeros((n, n))
        rows, cols = np.triu_indices(n)
        dense[rows, cols] = self._triangle
        dense[cols, rows] = self._triangle
        return dense

    def save(self, path) -> None:
        """Write the binary matrix file (see module docstring for layout)."""
        parts = [_MAGIC, struct.pack("<B", _FORMAT_VERSION), struct.pack("<I", self.n_c)]
        for course in self._courses:
            encoded = course.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise DataValidationError(f"course id too long to serialise: {course!r}")
            parts.append(struct.pack("<H", len(encoded)))
            parts.append(encoded)
        parts.append(self._triangle.astype("<f8").tobytes())
        body = b"".join(parts)
        Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))

    @classmethod
    def load(cls, path) -> "SimilarityMatrix":
        blob = Path(path).read_bytes()
        if len(blob) < 13:
            raise MatrixFormatError(f"{path}: file too short to be a matrix file")
        if blob[:4] != _MAGIC:
            raise MatrixFormatError(f"{path}: bad magic bytes")
        version = blob[4]
        if version != _FORMAT_VERSION:
            raise MatrixFormatError(f"{path}: unsupported format version {version}")
        body, checksum = blob[:-4], struct.unpack("<I", blob[-4:])[0]
        if zlib.crc32(body) != checksum:
            raise MatrixFormatError(f"{path}: checksum mismatch, file corrupt")

        n = struct.unpack("<I", blob[5:9])[0]
        offset = 9
        index: dict[str, int] = {}
        for i in range(n):
            if offset + 2 > len(body):
                raise MatrixFormatError(f"{path}: truncated course table")
            (length,) = struct.unpack("<H", body[offset : offset + 2])
            offset += 2
            if offset + length > len(body):
                raise MatrixFormatError(f"{path}: truncated course table")
            course = body[offset : offset + length].decode("utf-8")
            if course in index:
                raise MatrixFormatError(f"{path}: duplicate course id {course!r}")
            index[course] = i
            offset += length
        expected = _tri_size(n) * 8
        if len(body) - offset != expected:
            raise MatrixFormatError(
                f"{path}: value block is {len(body) - offset} bytes, expected {expected}"
            )
        triangle = np.frombuffer(body[offset:], dtype="<f8").astype(np.float64)
        return cls(index, triangle)

    def export_csv(self, path) -> None:
        """Dense CSV rendering for inspection; floats round-trip exactly."""
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write("course_number," + ",".join(self._courses) + "\n")
            n = self.n_c
            for i in range(n):
                cells = [repr(self.value_at(i, j)) for j in range(n)]
                handle.write(self._courses[i] + "," + ",".join(cells) + "\n")


def _fill_rows(values, profiles: Sequence[TextProfile], rows) -> None:
    n = len(profiles)
    for i in rows:
        left = profiles[i]
        for j in range(i + 1, n):
            s = profile_similarity(left, profiles[j])
            values[i, j] = s
            values[j, i] = s


def build_raw_matrix(
    catalog: Sequence[CourseRecord],
    model: LsaModel,
    kb: Optional[LexicalKB] = None,
    extra_stopwords: frozenset[str] = frozenset(),
    threads: int = 1,
) -> RawMatrix:
    """Pairwise similarities for every catalog course, diagonal pinned to 1.

    Pairs may be evaluated by several threads; each result lands in its own
    slot, so the output is identical regardless of thread count.
    """
    if not catalog:
        raise DataValidationError("cannot build a similarity matrix from an empty catalog")
    index: dict[str, int] = {}
    for pos, course in enumerate(catalog):
        if not course.syllabus.strip():
            raise DataValidationError(
                f"course {course.course_number!r} has a blank syllabus; "
                "filter the catalog before building the matrix"
            )
        if course.course_number in index:
            raise DataValidationError(f"duplicate course {course.course_number!r}")
        index[course.course_number] = pos

    profiles = [
        profile(model, kb, preprocess(c.syllabus, extra_stopwords)) for c in catalog
    ]
    n = len(catalog)
    values = np.ones((n, n))
    if threads > 1 and n > 2:
        workers = min(threads, n)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_fill_rows, values, profiles, range(w, n, workers))
                for w in range(workers)
            ]
            for future in futures:
                future.result()
    else:
        _fill_rows(values, profiles, range(n))
    return RawMatrix(index=index, values=values)


def normalize(raw: RawMatrix) -> SimilarityMatrix:
    """Min-max rescale the off-diagonal entries to span [0, 1].

    With fewer than two courses there is nothing to rescale: the matrix is
    returned unchanged with a warning. If every off-diagonal value is equal
    the information content is nil and they all become 0.
    """
    n = raw.n_c
    if n < 2:
        warnings.warn("similarity normalisation skipped: fewer than 2 courses")
        return SimilarityMatrix.from_dense(raw.index, raw.values.copy())

    off_mask = ~np.eye(n, dtype=bool)
    off_values = raw.values[off_mask]
    low, high = off_values.min(), off_values.max()
    scaled = raw.values.copy()
    if high == low:
        scaled[off_mask] = 0.0
    else:
        scaled[off_mask] = (raw.values[off_mask] - low) / (high - low)
        np.clip(scaled, 0.0, 1.0, out=scaled)
    np.fill_diagonal(scaled, 1.0)
    return SimilarityMatrix.from_dense(raw.index, scaled)


def build_course_matrix(
    catalog: Sequence[CourseRecord],
    kb: Optional[LexicalKB] = None,
    rank: Optional[int] = None,
    extra_stopwords: frozenset[str] = frozenset(),
    threads: int = 1,
) -> tuple[SimilarityMatrix, BuildInfo]:
    """End-to-end build: tokenize syllabi, fit the latent model, score all
    pairs, normalise. Returns the matrix plus build statistics."""
    corpus = [preprocess(c.syllabus, extra_stopwords) for c in catalog]
    vocab_size = len({w for doc in corpus for w in doc})
    if rank is None:
        rank = default_rank(len(corpus), vocab_size)
    model = build_lsa(corpus, rank)
    raw = build_raw_matrix(catalog, model, kb, extra_stopwords, threads)
    if raw.n_c >= 2:
        off = raw.offdiagonal()
        info = BuildInfo(raw.n_c, rank, vocab_size, float(off.min()), float(off.max()))
    else:
        info = BuildInfo(raw.n_c, rank, vocab_size, None, None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        matrix = normalize(raw)
    return matrix, info
