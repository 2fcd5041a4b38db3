"""Association metrics between knowledge bands and improvement outcomes.

Scored records are split into the five quality partitions and, within each
partition, two rule families are counted: knowledge band implying a
non-negative improvement, and knowledge band implying a strictly positive
one. The antecedent/consequent grid is fixed (5 qualities x 5 knowledge
bands x 2 consequents = 50 cells), so counting is exact and exhaustive; no
frequent-itemset machinery is involved. Supports use the partition size as
denominator. A confidence is undefined (not zero) when a partition has no
transaction in the antecedent band, and downstream charts drop that bar.

Emitters render a two-block support table, per-partition confidence bar
charts as static SVG with CSV companions, and a structured JSON dump. All
output is deterministic byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .errors import InternalError
from .scoring import (
    KNOWLEDGE_LABELS,
    QUALITY_LABELS,
    Knowledge,
    Quality,
    ScoredRecord,
)
from enum import Enum


class Consequent(str, Enum):
    I1_NONNEGATIVE = "i1_nonnegative"
    I2_POSITIVE = "i2_positive"


CONSEQUENT_LABELS: Mapping[Consequent, str] = {
    Consequent.I1_NONNEGATIVE: "Non-negative",
    Consequent.I2_POSITIVE: "Positive",
}


def consequent_holds(record: ScoredRecord, consequent: Consequent) -> bool:
    if consequent is Consequent.I1_NONNEGATIVE:
        return record.improvement.i1_nonnegative
    return record.improvement.i2_positive


@dataclass(frozen=True)
class RuleMetrics:
    """Exact counts for one (quality, knowledge, consequent) cell.

    Support and confidence are exposed as exact fractions; ``None`` marks
    an undefined value (empty partition, or empty antecedent)."""

    quality: Quality
    knowledge: Knowledge
    consequent: Consequent
    joint_count: int
    antecedent_count: int
    total: int

    def __post_init__(self):
        if not 0 <= self.joint_count <= self.antecedent_count <= self.total:
            raise InternalError(
                f"impossible counts: joint={self.joint_count} "
                f"antecedent={self.antecedent_count} total={self.total}"
            )

    @property
    def empty_partition(self) -> bool:
        return self.total == 0

    @property
    def support(self) -> Optional[Fraction]:
        if self.total == 0:
            return None
        return Fraction(self.joint_count, self.total)

    @property
    def confidence(self) -> Optional[Fraction]:
        if self.antecedent_count == 0:
            return None
        return Fraction(self.joint_count, self.antecedent_count)


def partition_by_quality(
    scored: Sequence[ScoredRecord],
) -> dict[Quality, list[ScoredRecord]]:
    """Split records into the five quality partitions (all keys present)."""
    partitions: dict[Quality, list[ScoredRecord]] = {q: [] for q in Quality}
    for record in scored:
        partitions[record.quality].append(record)
    return partitions


def rule_metrics(
    quality: Quality,
    records: Sequence[ScoredRecord],
    knowledge: Knowledge,
    consequent: Consequent,
) -> RuleMetrics:
    """Count one rule cell directly over a quality partition."""
    antecedent = 0
    joint = 0
    for record in records:
        if record.knowledge is knowledge:
            antecedent += 1
            if consequent_holds(record, consequent):
                joint += 1
    return RuleMetrics(quality, knowledge, consequent, joint, antecedent, len(records))


def mine_all(partitions: Mapping[Quality, Sequence[ScoredRecord]]) -> list[RuleMetrics]:
    """All 50 rule cells, one pass per partition.

    Cell order: quality, then consequent, then knowledge band."""
    out: list[RuleMetrics] = []
    for quality in Quality:
        records = partitions.get(quality, [])
        total = len(records)
        antecedent: dict[Knowledge, int] = {k: 0 for k in Knowledge}
        joint: dict[tuple[Knowledge, Consequent], int] = {
            (k, c): 0 for k in Knowledge for c in Consequent
        }
        for record in records:
            band = record.knowledge
            antecedent[band] += 1
            if record.improvement.i1_nonnegative:
                joint[(band, Consequent.I1_NONNEGATIVE)] += 1
            if record.improvement.i2_positive:
                joint[(band, Consequent.I2_POSITIVE)] += 1
        for consequent in Consequent:
            for band in Knowledge:
                out.append(
                    RuleMetrics(
                        quality,
                        band,
                        consequent,
                        joint[(band, consequent)],
                        antecedent[band],
                        total,
                    )
                )
    return out


def _by_cell(metrics: Sequence[RuleMetrics]) -> dict[tuple, RuleMetrics]:
    return {(m.quality, m.consequent, m.knowledge): m for m in metrics}


def _format_support(metric: RuleMetrics) -> str:
    support = metric.support
    return "n/a" if support is None else f"{float(support):.4f}"


def render_support_csv(metrics: Sequence[RuleMetrics]) -> str:
    cells = _by_cell(metrics)
    lines = ["improvement,student_quality," + ",".join(k.value for k in Knowledge)]
    for consequent in Consequent:
        tag = "non_negative" if consequent is Consequent.I1_NONNEGATIVE else "positive"
        for quality in Quality:
            row = [tag, QUALITY_LABELS[quality]]
            row += [_format_support(cells[(quality, consequent, k)]) for k in Knowledge]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def render_support_text(
    metrics: Sequence[RuleMetrics],
    partition_sizes: Optional[Mapping[Quality, int]] = None,
) -> str:
    cells = _by_cell(metrics)
    label_width = max(len("Student quality"), max(len(v) for v in QUALITY_LABELS.values()))
    lines = ["Support of non-negative and positive improvements", ""]
    if partition_sizes is not None:
        sizes = "  ".join(
            f"{QUALITY_LABELS[q]}={partition_sizes.get(q, 0)}" for q in Quality
        )
        total = sum(partition_sizes.get(q, 0) for q in Quality)
        lines.append(f"Partition sizes: {sizes}  (total={total})")
        lines.append("")
    header = "Student quality".ljust(label_width) + "".join(
        f"{k.value:>8}" for k in Knowledge
    )
    lines.append(header)
    for consequent in Consequent:
        lines.append(f"Improvement: {CONSEQUENT_LABELS[consequent]}")
        for quality in Quality:
            row = QUALITY_LABELS[quality].ljust(label_width)
            for band in Knowledge:
                row += f"{_format_support(cells[(quality, consequent, band)]):>8}"
            lines.append(row)
    return "\n".join(lines) + "\n"


def emit_support_table(
    metrics: Sequence[RuleMetrics],
    out_dir,
    partition_sizes: Optional[Mapping[Quality, int]] = None,
) -> list[Path]:
    out = Path(out_dir)
    csv_path = out / "support_table.csv"
    txt_path = out / "support_table.txt"
    csv_path.write_text(render_support_csv(metrics), encoding="utf-8")
    txt_path.write_text(render_support_text(metrics, partition_sizes), encoding="utf-8")
    return [csv_path, txt_path]


_SVG_WIDTH = 480
_SVG_HEIGHT = 320
_MARGIN_LEFT = 56
_MARGIN_RIGHT = 16
_MARGIN_TOP = 44
_MARGIN_BOTTOM = 44


def render_confidence_svg(
    quality: Quality,
    consequent: Consequent,
    confidences: Mapping[Knowledge, Optional[Fraction]],
) -> str:
    """A fixed-geometry bar chart; bands without a confidence get no bar."""
    plot_w = _SVG_WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _SVG_HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM
    base_y = _MARGIN_TOP + plot_h
    slot_w = plot_w / len(Knowledge)
    bar_w = slot_w * 0.6

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_WIDTH}" '
        f'height="{_SVG_HEIGHT}" viewBox="0 0 {_SVG_WIDTH} {_SVG_HEIGHT}">',
        f"<title>Confidence of {CONSEQUENT_LABELS[consequent].lower()} improvement "
        f"({QUALITY_LABELS[quality]} students)</title>",
        f'<rect x="0" y="0" width="{_SVG_WIDTH}" height="{_SVG_HEIGHT}" fill="white"/>',
        f'<text x="{_SVG_WIDTH / 2:.2f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">'
        f"Confidence of {CONSEQUENT_LABELS[consequent].lower()} improvement "
        f"({QUALITY_LABELS[quality]})</text>",
    ]
    for tick in range(5):
        value = tick / 4
        y = base_y - value * plot_h
        parts.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{y:.2f}" '
            f'x2="{_MARGIN_LEFT + plot_w}" y2="{y:.2f}" '
            f'stroke="#cccccc" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_LEFT - 6}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{value:.2f}</text>'
        )
    for slot, band in enumerate(Knowledge):
        center = _MARGIN_LEFT + slot * slot_w + slot_w / 2
        parts.append(
            f'<text x="{center:.2f}" y="{base_y + 18:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{band.value}</text>'
        )
        confidence = confidences.get(band)
        if confidence is None:
            continue
        height = float(confidence) * plot_h
        x = center - bar_w / 2
        y = base_y - height
        parts.append(
            f'<rect class="bar" x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
            f'height="{height:.2f}" fill="#4878a8"/>'
        )
        parts.append(
            f'<text x="{center:.2f}" y="{y - 5:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{float(confidence):.4f}</text>'
        )
    parts.append(
        f'<line x1="{_MARGIN_LEFT}" y1="{base_y:.2f}" '
        f'x2="{_MARGIN_LEFT + plot_w}" y2="{base_y:.2f}" '
        f'stroke="#000000" stroke-width="1"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_confidence_csv(
    metrics_for_group: Mapping[Knowledge, RuleMetrics],
) -> str:
    """Lossless CSV companion: counts plus the confidence as a repr float."""
    lines = ["knowledge,confidence,joint_count,antecedent_count"]
    for band in Knowledge:
        metric = metrics_for_group[band]
        confidence = metric.confidence
        text = "" if confidence is None else repr(float(confidence))
        lines.append(
            f"{band.value},{text},{metric.joint_count},{metric.antecedent_count}"
        )
    return "\n".join(lines) + "\n"


def emit_confidence_charts(metrics: Sequence[RuleMetrics], out_dir) -> list[Path]:
    """One SVG and one CSV per (quality, consequent) group: 20 files."""
    out = Path(out_dir)
    cells = _by_cell(metrics)
    written: list[Path] = []
    for quality in Quality:
        for consequent in Consequent:
            group = {k: cells[(quality, consequent, k)] for k in Knowledge}
            confidences = {k: m.confidence for k, m in group.items()}
            stem = f"confidence_{quality.value}_{consequent.value}"
            svg_path = out / f"{stem}.svg"
            csv_path = out / f"{stem}.csv"
            svg_path.write_text(
                render_confidence_svg(quality, consequent, confidences), encoding="utf-8"
            )
            csv_path.write_text(render_confidence_csv(group), encoding="utf-8")
            written += [svg_path, csv_path]
    return written


def metrics_payload(
    metrics: Sequence[RuleMetrics],
    partition_sizes: Mapping[Quality, int],
) -> dict:
    """JSON-ready structure with exact counts and float ratios."""
    cells = []
    for m in metrics:
        cells.append(
            {
                "quality": m.quality.value,
                "knowledge": m.knowledge.value,
                "consequent": m.consequent.value,
                "joint_count": m.joint_count,
                "antecedent_count": m.antecedent_count,
                "total": m.total,
                "support": None if m.support is None else float(m.support),
                "confidence": None if m.confidence is None else float(m.confidence),
            }
        )
    return {
        "schema": "knowmine.metrics/1",
        "total_records": sum(partition_sizes.get(q, 0) for q in Quality),
        "partition_sizes": {q.value: partition_sizes.get(q, 0) for q in Quality},
        "cells": cells,
    }


def emit_metrics_json(
    metrics: Sequence[RuleMetrics],
    partition_sizes: Mapping[Quality, int],
    out_dir,
) -> Path:
    path = Path(out_dir) / "metrics.json"
    payload = metrics_payload(metrics, partition_sizes)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
