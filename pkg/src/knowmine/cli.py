"""Command-line front end.

Subcommands cover the pipeline stages separately, because the pairwise
similarity build is quadratic in the catalog and worth caching:

    knowmine build-matrix  --catalog courses.csv --matrix matrix.bin
    knowmine analyze       --catalog ... --performance ... --matrix ... --out out/
    knowmine synth         --out data/ --seed 42
    knowmine export-matrix --matrix matrix.bin --out matrix.csv

Exit codes: 0 success, 1 usage or configuration error, 2 IO error, 3 data
validation error, 4 internal invariant violation. Report files are
deterministic byte for byte for identical inputs; an optional timestamp in
the manifest is opt-in via --timestamp.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import ENV_CONFIG_VAR, PipelineConfig, load_config
from .errors import ConfigError, DataValidationError, InternalError, KnowmineError
from .mining import (
    emit_confidence_charts,
    emit_metrics_json,
    emit_support_table,
    mine_all,
    partition_by_quality,
)
from .records import (
    filter_records,
    history_pool,
    parse_course_csv,
    parse_performance_csv,
)
from .scoring import QUALITY_LABELS, Quality, score_dataset
from .simmatrix import SimilarityMatrix, build_course_matrix
from .stoplist import load_stoplist
from .synth import SynthConfig, write_dataset
from .textsim import LexicalKB


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="knowmine", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"knowmine {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, help="TOML config file")
        p.add_argument("--threads", type=int, help="worker thread ceiling")

    build = sub.add_parser("build-matrix", help="build and cache the similarity matrix")
    add_common(build)
    build.add_argument("--catalog", type=Path, help="course catalog CSV")
    build.add_argument("--kb", type=Path, help="lexical knowledge base file")
    build.add_argument("--stoplist", type=Path, help="extra stopword file")
    build.add_argument("--rank", type=int, help="latent space rank")
    build.add_argument("--matrix", type=Path, help="output matrix file")

    analyze = sub.add_parser("analyze", help="run the full analysis to report files")
    add_common(analyze)
    analyze.add_argument("--catalog", type=Path)
    analyze.add_argument("--performance", type=Path)
    analyze.add_argument("--kb", type=Path)
    analyze.add_argument("--stoplist", type=Path)
    analyze.add_argument("--rank", type=int)
    analyze.add_argument("--matrix", type=Path, help="matrix cache file")
    analyze.add_argument(
        "--build", action="store_true", help="(re)build the matrix before analysing"
    )
    analyze.add_argument("--out", type=Path, help="report directory")
    analyze.add_argument(
        "--dump-scored", action="store_true", help="also write scored_records.csv"
    )
    analyze.add_argument(
        "--timestamp", action="store_true", help="record a timestamp in the manifest"
    )
    analyze.add_argument("--index-rounding", choices=("floor", "nearest"))
    analyze.add_argument(
        "--expected-rounding", choices=("half_away_from_zero", "half_to_even")
    )

    synth = sub.add_parser("synth", help="write a deterministic synthetic dataset")
    synth.add_argument("--out", type=Path, required=True, help="output directory")
    synth.add_argument("--seed", type=int, default=42)
    synth.add_argument("--courses", type=int, default=100)
    synth.add_argument("--students", type=int, default=300)
    synth.add_argument("--semesters", type=int, default=8)
    synth.add_argument("--topics", type=int, default=10)
    synth.add_argument("--courses-per-semester", type=int, default=5)
    synth.add_argument("--topic-vocab", type=int, default=40)
    synth.add_argument("--syllabus-words", type=int, default=30)
    synth.add_argument("--candidate-pool", type=int, default=25)
    synth.add_argument("--lsa-rank", type=int)
    synth.add_argument(
        "--coupling",
        type=str,
        default="0.1,0.3,0.5,0.7,0.9",
        help="five comma-separated P(improvement) values, one per knowledge band",
    )

    export = sub.add_parser("export-matrix", help="dump a matrix file as dense CSV")
    export.add_argument("--matrix", type=Path, required=True)
    export.add_argument("--out", type=Path, required=True)

    return parser


def _resolve_config(args) -> PipelineConfig:
    config_path = getattr(args, "config", None)
    if config_path is None and os.environ.get(ENV_CONFIG_VAR):
        config_path = Path(os.environ[ENV_CONFIG_VAR])
    cfg = load_config(config_path) if config_path else PipelineConfig()

    overrides = {
        "catalog": "catalog_csv",
        "performance": "performance_csv",
        "kb": "lexical_kb",
        "stoplist": "stoplist",
        "rank": "lsa_rank",
        "matrix": "matrix_path",
        "out": "out_dir",
        "threads": "threads",
        "index_rounding": "index_rounding",
        "expected_rounding": "expected_rounding",
    }
    for flag, attr in overrides.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    cfg.validate()
    return cfg


def _require(path, what) -> Path:
    if path is None:
        raise ConfigError(f"no {what} given (flag or config file)")
    if not Path(path).is_file():
        raise FileNotFoundError(f"{what} not found: {path}")
    return Path(path)


def _load_inputs(cfg: PipelineConfig):
    kb = LexicalKB.load(_require(cfg.lexical_kb, "lexical KB")) if cfg.lexical_kb else None
    stops = load_stoplist(_require(cfg.stoplist, "stoplist")) if cfg.stoplist else frozenset()
    return kb, stops


def _build_matrix(cfg: PipelineConfig, catalog):
    kb, stops = _load_inputs(cfg)
    usable = [c for c in catalog if c.syllabus.strip()]
    skipped = len(catalog) - len(usable)
    if skipped:
        print(f"skipping {skipped} course(s) without syllabus", file=sys.stderr)
    threads = cfg.threads if cfg.threads is not None else (os.cpu_count() or 1)
    started = time.perf_counter()
    matrix, info = build_course_matrix(
        usable, kb, rank=cfg.lsa_rank, extra_stopwords=stops, threads=threads
    )
    elapsed = time.perf_counter() - started
    return matrix, info, elapsed


def cmd_build_matrix(args) -> int:
    cfg = _resolve_config(args)
    catalog = parse_course_csv(_require(cfg.catalog_csv, "catalog CSV"), cfg.catalog_columns)
    matrix, info, elapsed = _build_matrix(cfg, catalog)
    cfg.matrix_path.parent.mkdir(parents=True, exist_ok=True)
    matrix.save(cfg.matrix_path)
    print(
        f"built similarity matrix for {info.n_courses} courses "
        f"(rank {info.lsa_rank}, vocabulary {info.vocabulary_size})"
    )
    if info.raw_min is not None:
        print(f"raw off-diagonal similarity range: {info.raw_min:.6f} .. {info.raw_max:.6f}")
    print(f"saved {cfg.matrix_path} ({cfg.matrix_path.stat().st_size} bytes) in {elapsed:.1f}s")
    return 0


def _write_scored_csv(scored, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            [
                "student_code",
                "semester",
                "preceding_cgpa",
                "course_number",
                "registration_type",
                "grade",
                "numeric_grade",
                "quality",
                "knowledge_index",
                "knowledge",
                "delta",
                "i1",
                "i2",
            ]
        )
        for record in scored:
            reg = record.registration
            writer.writerow(
                [
                    reg.student_code,
                    reg.semester,
                    repr(reg.preceding_cgpa),
                    reg.course_number,
                    reg.registration_type,
                    reg.grade,
                    record.numeric_grade,
                    record.quality.value,
                    record.knowledge_index,
                    record.knowledge.value,
                    record.improvement.delta,
                    "non_negative" if record.improvement.i1_nonnegative else "negative",
                    "positive" if record.improvement.i2_positive else "non_positive",
                ]
            )


def _write_manifest(out_dir: Path, files, timestamp: bool) -> Path:
    artifacts = []
    for path in sorted(files, key=lambda p: p.name):
        blob = path.read_bytes()
        artifacts.append(
            {
                "name": path.name,
                "bytes": len(blob),
                "sha256": hashlib.sha256(blob).hexdigest(),
            }
        )
    payload = {"schema": "knowmine.manifest/1", "artifacts": artifacts}
    if timestamp:
        payload["generated_at"] = datetime.now(timezone.utc).isoformat()
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def cmd_analyze(args, stage) -> int:
    cfg = _resolve_config(args)

    stage("read-catalog")
    catalog = parse_course_csv(_require(cfg.catalog_csv, "catalog CSV"), cfg.catalog_columns)
    stage("read-performance")
    regs = parse_performance_csv(
        _require(cfg.performance_csv, "performance CSV"), cfg.performance_columns
    )

    if args.build:
        stage("build-matrix")
        matrix, _, _ = _build_matrix(cfg, catalog)
        cfg.matrix_path.parent.mkdir(parents=True, exist_ok=True)
        matrix.save(cfg.matrix_path)
    else:
        stage("load-matrix")
        matrix = SimilarityMatrix.load(_require(cfg.matrix_path, "matrix file"))

    stage("filter")
    kept, stats = filter_records(regs, catalog)
    pool = history_pool(regs, catalog)
    # Records may reference courses the cached matrix does not know (e.g. a
    # stale cache); treat that as a data error rather than a crash later.
    unknown = {r.course_number for r in kept if r.course_number not in matrix.index}
    if unknown:
        sample = ", ".join(sorted(unknown)[:5])
        raise DataValidationError(
            f"{len(unknown)} course(s) missing from the matrix (e.g. {sample}); "
            "rebuild it with --build"
        )

    stage("score")
    scored = score_dataset(
        kept,
        matrix,
        history=[r for r in pool if r.course_number in matrix.index],
        rounding=cfg.index_rounding,
        expected_rounding=cfg.expected_rounding,
    )

    stage("mine")
    partitions = partition_by_quality(scored)
    sizes = {q: len(rs) for q, rs in partitions.items()}
    metrics = mine_all(partitions)

    stage("report")
    out_dir = cfg.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    stats_path = out_dir / "filter_stats.json"
    stats_path.write_text(
        json.dumps(
            {
                "total_read": stats.total_read,
                "dropped_missing_grade": stats.dropped_missing_grade,
                "dropped_missing_cgpa": stats.dropped_missing_cgpa,
                "dropped_unknown_course": stats.dropped_unknown_course,
                "retained": stats.retained,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    written.append(stats_path)
    written += emit_support_table(metrics, out_dir, sizes)
    written += emit_confidence_charts(metrics, out_dir)
    written.append(emit_metrics_json(metrics, sizes, out_dir))
    if args.dump_scored:
        scored_path = out_dir / "scored_records.csv"
        _write_scored_csv(scored, scored_path)
        written.append(scored_path)
    _write_manifest(out_dir, written, args.timestamp)

    print(f"read {len(catalog)} courses, {stats.total_read} registrations")
    print(
        f"filter: retained {stats.retained} "
        f"(missing grade {stats.dropped_missing_grade}, "
        f"missing CGPA {stats.dropped_missing_cgpa}, "
        f"unknown course {stats.dropped_unknown_course})"
    )
    print(
        "partitions: "
        + "  ".join(f"{QUALITY_LABELS[q]}={sizes[q]}" for q in Quality)
    )
    print(f"wrote {len(written) + 1} report files to {out_dir}")
    if not scored:
        print("warning: no records retained after filtering; reports are empty", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    try:
        coupling = tuple(float(x) for x in args.coupling.split(","))
    except ValueError:
        raise ConfigError(f"coupling must be comma-separated numbers, got {args.coupling!r}")
    cfg = SynthConfig(
        seed=args.seed,
        n_courses=args.courses,
        n_students=args.students,
        n_semesters=args.semesters,
        topic_count=args.topics,
        courses_per_semester=args.courses_per_semester,
        topic_vocab_size=args.topic_vocab,
        syllabus_words=args.syllabus_words,
        coupling=coupling,
        candidate_pool=args.candidate_pool,
        lsa_rank=args.lsa_rank,
    )
    paths = write_dataset(cfg, args.out)
    print(f"planted coupling: {', '.join(f'{p:g}' for p in coupling)}")
    for name, path in paths.items():
        print(f"wrote {name}: {path}")
    return 0


def cmd_export_matrix(args) -> int:
    matrix = SimilarityMatrix.load(_require(args.matrix, "matrix file"))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    matrix.export_csv(args.out)
    print(f"exported {matrix.n_c}x{matrix.n_c} matrix to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    stage_holder = ["startup"]

    def stage(name: str) -> None:
        stage_holder[0] = name

    try:
        args = parser.parse_args(argv)
        stage(args.command)
        if args.command == "build-matrix":
            return cmd_build_matrix(args)
        if args.command == "analyze":
            return cmd_analyze(args, stage)
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "export-matrix":
            return cmd_export_matrix(args)
        raise InternalError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error in {stage_holder[0]} stage: {exc}", file=sys.stderr)
        return 2
    except DataValidationError as exc:
        print(f"data error in {stage_holder[0]} stage: {exc}", file=sys.stderr)
        return 3
    except KnowmineError as exc:
        print(f"internal error in {stage_holder[0]} stage: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
