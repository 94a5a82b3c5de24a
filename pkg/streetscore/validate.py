"""Validation of predictions against human annotations

Predictions are sampled per predicted class, then compared with the annotator's labels.
NA labels are left out of every precision and accuracy figure but still count towards the
sample size.
"""
import csv
import io
import logging
import random
import re
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from pydantic import ValidationError

from streetscore.common import AnnotationError, DataIntegrityError
from streetscore.models import (
    AnnotationRow,
    ClassPrecision,
    PrecisionReport,
    ScoreRecord,
    ScoreStatus,
    TaskSpec,
)
from streetscore.utils import atomic_write_text, format_number


__all__ = (
    "ANNOTATION_HEADER",
    "NA",
    "ABSENT_CELL",
    "stratified_sample",
    "write_annotation_template",
    "load_annotations",
    "compute_report",
    "combine_reports",
    "render_report",
    "parse_report_csv",
)

LOGGER = logging.getLogger(__name__)

ANNOTATION_HEADER = ("point_id", "heading_deg", "task_id", "predicted", "human")
NA = "NA"
ABSENT_CELL = "—"
CELL_PATTERN = re.compile(r"^\s*[\d.]+% \((\d+)/(\d+)\)\s*$")
PRECISION_PREFIX = "Precision "


def stratified_sample(
    records: Iterable[ScoreRecord], task: TaskSpec, per_class_n: int, seed: int
) -> List[ScoreRecord]:
    """Up to `per_class_n` scored records per predicted class, drawn reproducibly from `seed`"""
    if per_class_n < 1:
        raise ValueError("per_class_n must be >= 1")
    pools = defaultdict(list)
    for record in records:
        if record.task_id == task.task_id and record.status == ScoreStatus.SCORED:
            pools[task.stratum_of(record.score)].append(record)
    if not pools:
        raise DataIntegrityError(f"No scored {task.task_id} records to sample from")

    rng = random.Random(seed)
    sample = []
    for stratum in task.strata():
        pool = sorted(pools.get(stratum, []), key=lambda record: record.key)
        if len(pool) <= per_class_n:
            if len(pool) < per_class_n:
                LOGGER.warning(
                    "Task %s, class %s: only %d of %d requested record(s) available",
                    task.task_id,
                    _class_label(stratum),
                    len(pool),
                    per_class_n,
                )
            sample.extend(pool)
        else:
            sample.extend(rng.sample(pool, per_class_n))
    return sample


def write_annotation_template(sample: Iterable[ScoreRecord], path: Union[str, Path]) -> Path:
    """Annotation sheet with an empty `human` column, to fill with a domain value or NA"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(ANNOTATION_HEADER)
    for record in sample:
        writer.writerow(
            (
                record.point_id,
                format_number(record.heading_deg),
                record.task_id,
                format_number(record.score),
                "",
            )
        )
    atomic_write_text(path, buffer.getvalue())
    return Path(path)


def _parse_human(value: str) -> Optional[float]:
    value = value.strip()
    if not value or value.upper() == NA:
        return None
    return float(value)


def load_annotations(path: Union[str, Path], task: TaskSpec) -> List[AnnotationRow]:
    """Rows of an annotation sheet for `task`; an empty or "NA" human label is an NA case"""
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise AnnotationError(f"Cannot read annotations {path}: {exc}") from exc
    rows = []
    with handle:
        reader = csv.DictReader(handle, strict=True)
        missing = set(ANNOTATION_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise AnnotationError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        for line in reader:
            if line["task_id"] != task.task_id:
                continue
            try:
                row = AnnotationRow(
                    point_id=line["point_id"],
                    heading_deg=float(line["heading_deg"]),
                    task_id=line["task_id"],
                    predicted=float(line["predicted"]),
                    human=_parse_human(line["human"] or ""),
                )
            except (TypeError, ValueError, ValidationError) as exc:
                raise AnnotationError(f"{path}, line {reader.line_num}: {exc}") from exc
            rows.append(row)
    return rows


def compute_report(
    rows: Iterable[AnnotationRow], task: TaskSpec, location: str = ""
) -> PrecisionReport:
    """Per-class precision over predicted classes; a row is correct when human equals predicted"""
    correct: Dict = defaultdict(int)
    evaluated: Dict = defaultdict(int)
    na_count = 0
    for row in rows:
        if row.predicted not in task.answer_domain:
            raise AnnotationError(
                f"{row.point_id} @ {format_number(row.heading_deg)}: predicted value "
                f"{format_number(row.predicted)} is outside the answer domain of {task.task_id}"
            )
        if row.is_na:
            na_count += 1
            continue
        if row.human not in task.answer_domain:
            raise AnnotationError(
                f"{row.point_id} @ {format_number(row.heading_deg)}: human label "
                f"{format_number(row.human)} is outside the answer domain of {task.task_id}"
            )
        stratum = task.stratum_of(row.predicted)
        evaluated[stratum] += 1
        if row.human == row.predicted:
            correct[stratum] += 1

    per_class = {
        stratum: ClassPrecision(correct=correct[stratum], total_evaluated=evaluated[stratum])
        for stratum in task.strata()
        if evaluated[stratum]
    }
    return PrecisionReport(
        task_id=task.task_id, location=location, per_class=per_class, na_count=na_count
    )


def combine_reports(reports: Iterable[PrecisionReport], location: str = "Total") -> PrecisionReport:
    """Pool the counts of several reports of one task"""
    reports = list(reports)
    if not reports:
        raise ValueError("No reports to combine")
    task_ids = {report.task_id for report in reports}
    if len(task_ids) > 1:
        raise ValueError(f"Cannot combine reports of different tasks: {sorted(task_ids)}")
    correct: Dict = defaultdict(int)
    evaluated: Dict = defaultdict(int)
    order = []
    for report in reports:
        for stratum, precision in report.per_class.items():
            if stratum not in order:
                order.append(stratum)
            correct[stratum] += precision.correct
            evaluated[stratum] += precision.total_evaluated
    return PrecisionReport(
        task_id=task_ids.pop(),
        location=location,
        per_class={
            stratum: ClassPrecision(correct=correct[stratum], total_evaluated=evaluated[stratum])
            for stratum in order
        },
        na_count=sum(report.na_count for report in reports),
    )


def _class_label(stratum) -> str:
    return stratum if isinstance(stratum, str) else format_number(stratum)


def _cell(correct: int, total: int) -> str:
    if not total:
        return ABSENT_CELL
    return f"{100 * correct / total:.2f}% ({correct}/{total})"


def _report_columns(reports: List[PrecisionReport], task: Optional[TaskSpec]) -> List:
    if task is not None:
        return task.strata()
    classes = []
    for report in reports:
        for stratum in report.per_class:
            if stratum not in classes:
                classes.append(stratum)
    return classes


def render_report(
    reports: Iterable[PrecisionReport], task: Optional[TaskSpec] = None
) -> Tuple[str, str]:
    """Accuracy table as aligned text and as CSV, one row per report

    Cells read "95.83% (23/24)"; classes without evaluated predictions read "—".
    """
    reports = list(reports)
    classes = _report_columns(reports, task)
    header = (
        ["Task", "Location"]
        + [f"{PRECISION_PREFIX}{_class_label(stratum)}" for stratum in classes]
        + ["Overall Accuracy", "NA Cases"]
    )
    table = [header]
    for report in reports:
        cells = []
        for stratum in classes:
            precision = report.per_class.get(stratum)
            cells.append(
                _cell(precision.correct, precision.total_evaluated) if precision else ABSENT_CELL
            )
        table.append(
            [report.task_id, report.location]
            + cells
            + [_cell(report.correct, report.evaluated), str(report.na_count)]
        )

    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerows(table)

    widths = [max(len(row[column]) for row in table) for column in range(len(header))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in table]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines) + "\n", buffer.getvalue()


def _parse_class(label: str):
    return label if label.endswith("+") else float(label)


def parse_report_csv(text: str) -> List[PrecisionReport]:
    """Reports from the CSV written by render_report"""
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    header = next(reader, None)
    if not header or header[:2] != ["Task", "Location"] or header[-2:] != ["Overall Accuracy", "NA Cases"]:
        raise DataIntegrityError(f"Not an accuracy report header: {header}")
    classes = [_parse_class(label[len(PRECISION_PREFIX):]) for label in header[2:-2]]

    reports = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(header):
            raise DataIntegrityError(f"Report line {reader.line_num}: expected {len(header)} cells")
        per_class = {}
        for stratum, cell in zip(classes, row[2:-2]):
            if cell.strip() == ABSENT_CELL:
                continue
            match = CELL_PATTERN.match(cell)
            if match is None:
                raise DataIntegrityError(f"Report line {reader.line_num}: bad cell {cell!r}")
            per_class[stratum] = ClassPrecision(
                correct=int(match.group(1)), total_evaluated=int(match.group(2))
            )
        reports.append(
            PrecisionReport(
                task_id=row[0], location=row[1], per_class=per_class, na_count=int(row[-1])
            )
        )
    return reports
