"""Quantify a student's prior topic knowledge from syllabus similarity and
past grades, then mine how that knowledge associates with grade improvement.

The pipeline: parse a course catalog and a registration table, build a
normalised course-by-course semantic similarity matrix, derive per-record
quality bands, knowledge indices and improvement factors, and count exact
support/confidence for the knowledge-implies-improvement rule grid.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    CorpusError,
    CourseLookupError,
    DataValidationError,
    DuplicateCourseError,
    InternalError,
    InvalidGradeError,
    KBFormatError,
    KnowmineError,
    MatrixFormatError,
    ParseError,
    RankError,
    ValueRangeError,
)
from .records import (
    CourseRecord,
    FilterStats,
    RegistrationRecord,
    VALID_GRADES,
    filter_records,
    history_pool,
    parse_course_csv,
    parse_performance_csv,
)
from .textsim import (
    LexicalKB,
    LsaModel,
    build_lsa,
    default_rank,
    doc_similarity,
    preprocess,
    term_similarity,
)
from .simmatrix import (
    BuildInfo,
    RawMatrix,
    SimilarityMatrix,
    build_course_matrix,
    build_raw_matrix,
    normalize,
)
from .scoring import (
    GRADE_POINTS,
    Improvement,
    Knowledge,
    Quality,
    ScoredRecord,
    grade_to_numeric,
    improvement,
    index_from_factors,
    knowledge_band,
    knowledge_index,
    quality_of,
    score_dataset,
)
from .mining import (
    Consequent,
    RuleMetrics,
    emit_confidence_charts,
    emit_metrics_json,
    emit_support_table,
    mine_all,
    partition_by_quality,
    rule_metrics,
)
from .synth import SynthConfig, SynthDataset, generate, write_dataset
