import random
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import pytest

from streetscore.common import AnnotationError, DataIntegrityError
from streetscore.models import AnnotationRow, ScoreRecord, ScoreStatus
from streetscore.scoring import TaskRegistry
from streetscore.validate import (
    ABSENT_CELL,
    combine_reports,
    compute_report,
    load_annotations,
    parse_report_csv,
    render_report,
    stratified_sample,
    write_annotation_template,
)


REGISTRY = TaskRegistry.with_shipped_tasks()
T1, T2, T3 = (REGISTRY.get(task_id) for task_id in ("T1", "T2", "T3"))


def annotations(task, counts, na=0):
    """Rows where, per predicted value, `correct` of `total` human labels agree"""
    rows = []
    for predicted, (correct, total) in counts.items():
        wrong = next(value for value in (0, 1, 2) if value != predicted)
        for index in range(total):
            rows.append(
                AnnotationRow(
                    point_id=f"{predicted}_{index}",
                    heading_deg=0,
                    task_id=task.task_id,
                    predicted=predicted,
                    human=predicted if index < correct else wrong,
                )
            )
    for index in range(na):
        rows.append(
            AnnotationRow(point_id=f"na_{index}", heading_deg=90, task_id=task.task_id, predicted=0)
        )
    return rows


def scored_records(task_id, values, per_value):
    return [
        ScoreRecord(
            point_id=f"p{value}_{index}",
            heading_deg=0,
            task_id=task_id,
            status=ScoreStatus.SCORED,
            score=value,
        )
        for value in values
        for index in range(per_value)
    ]


class TestReports(unittest.TestCase):
    def test_row_order_does_not_change_the_report(self):
        rows = annotations(T2, {0: (18, 20), 1: (9, 20), 2: (4, 20)}, na=3)
        expected = compute_report(rows, T2, "Vienna")
        rng = random.Random(7)
        for _ in range(5):
            shuffled = list(rows)
            rng.shuffle(shuffled)
            report = compute_report(shuffled, T2, "Vienna")
            assert report.per_class == expected.per_class
            assert list(report.per_class) == list(expected.per_class)
            assert report.na_count == expected.na_count
            assert render_report([report], T2) == render_report([expected], T2)

    def test_binary_cells(self):
        report = compute_report(annotations(T1, {0: (23, 24), 1: (21, 25)}, na=1), T1, "Nice")
        assert report.sample_size == 50
        assert report.na_count == 1
        assert report.correct == 44 and report.evaluated == 49

        text, table = render_report([report], T1)
        assert "95.83% (23/24)" in text
        assert "84.00% (21/25)" in text
        assert table.splitlines() == [
            "Task,Location,Precision 0,Precision 1,Overall Accuracy,NA Cases",
            "T1,Nice,95.83% (23/24),84.00% (21/25),89.80% (44/49),1",
        ]

    def test_counting_overall_accuracy(self):
        report = compute_report(annotations(T2, {0: (20, 20), 1: (9, 20), 2: (4, 20)}), T2, "Vienna")
        _, table = render_report([report], T2)
        assert table.splitlines()[1] == "T2,Vienna,100.00% (20/20),45.00% (9/20),20.00% (4/20),55.00% (33/60),0"

    def test_na_changes_only_the_sample_size(self):
        rows = annotations(T1, {0: (5, 6), 1: (3, 3)})
        without = compute_report(rows, T1)
        with_na = compute_report(rows + annotations(T1, {}, na=1), T1)
        assert with_na.sample_size == without.sample_size + 1
        assert with_na.per_class == without.per_class
        assert with_na.accuracy == without.accuracy

    def test_all_na(self):
        report = compute_report(annotations(T1, {}, na=4), T1)
        assert report.per_class == {}
        assert report.accuracy is None
        assert report.na_count == report.sample_size == 4
        text, _ = render_report([report], T1)
        assert ABSENT_CELL in text

    def test_all_correct(self):
        report = compute_report(annotations(T1, {0: (3, 3), 1: (4, 4)}), T1)
        assert report.accuracy == 1
        assert all(precision.precision == 1 for precision in report.per_class.values())

    def test_overflow_stratum(self):
        rows = [
            AnnotationRow(point_id="a", heading_deg=0, task_id="T3", predicted=2.5, human=2.5),
            AnnotationRow(point_id="b", heading_deg=0, task_id="T3", predicted=3, human=2),
            AnnotationRow(point_id="c", heading_deg=0, task_id="T3", predicted=0.5, human=0.5),
        ]
        report = compute_report(rows, T3)
        assert report.per_class["2+"].correct == 1
        assert report.per_class["2+"].total_evaluated == 2
        _, table = render_report([report], T3)
        assert table.splitlines()[0].split(",")[2:7] == [
            "Precision 0",
            "Precision 0.5",
            "Precision 1",
            "Precision 1.5",
            "Precision 2+",
        ]
        assert table.splitlines()[1].split(",")[2] == ABSENT_CELL

    def test_labels_outside_the_domain(self):
        with pytest.raises(AnnotationError):
            compute_report(
                [AnnotationRow(point_id="a", heading_deg=0, task_id="T1", predicted=3, human=1)], T1
            )
        with pytest.raises(AnnotationError):
            compute_report(
                [AnnotationRow(point_id="a", heading_deg=0, task_id="T1", predicted=1, human=7)], T1
            )

    def test_combine(self):
        nice = compute_report(annotations(T1, {0: (23, 24), 1: (21, 25)}, na=1), T1, "Nice")
        vienna = compute_report(annotations(T1, {0: (20, 21), 1: (24, 26)}, na=3), T1, "Vienna")
        total = combine_reports([nice, vienna])
        assert total.location == "Total"
        assert (total.per_class[0.0].correct, total.per_class[0.0].total_evaluated) == (43, 45)
        assert total.na_count == 4
        with pytest.raises(ValueError):
            combine_reports([nice, compute_report(annotations(T2, {0: (1, 1)}), T2)])

    def test_csv_parses_back(self):
        reports = [
            compute_report(annotations(T2, {0: (20, 20), 1: (9, 20)}), T2, "Vienna"),
            compute_report(annotations(T2, {2: (4, 20)}, na=2), T2, "Nice"),
        ]
        _, table = render_report(reports, T2)
        assert parse_report_csv(table) == reports

    def test_bad_report_csv(self):
        with pytest.raises(DataIntegrityError):
            parse_report_csv("Task,Where\n")
        with pytest.raises(DataIntegrityError):
            parse_report_csv("Task,Location,Precision 0,Overall Accuracy,NA Cases\nT1,Nice,lots,x,0\n")


class TestSampling(unittest.TestCase):
    def test_fixed_quota_per_class(self):
        records = scored_records("T2", (0, 1, 2, 3), 100)
        first = stratified_sample(records, T2, 20, seed=1)
        assert first == stratified_sample(list(reversed(records)), T2, 20, seed=1)
        assert len(first) == 60
        strata = [T2.stratum_of(record.score) for record in first]
        assert strata.count(0.0) == strata.count(1.0) == 20
        assert strata.count("2+") == 20
        assert first != stratified_sample(records, T2, 20, seed=2)

    def test_shortfall(self):
        records = scored_records("T1", (0,), 100) + scored_records("T1", (1,), 5)
        with self.assertLogs("streetscore.validate", level="WARNING") as logs:
            sample = stratified_sample(records, T1, 20, seed=0)
        assert len(sample) == 25
        assert any("only 5 of 20" in message for message in logs.output)

    def test_only_scored_records_of_the_task(self):
        records = scored_records("T1", (1,), 3) + [
            ScoreRecord(point_id="x", heading_deg=0, task_id="T1", status=ScoreStatus.PARSE_ERROR),
            ScoreRecord(point_id="y", heading_deg=0, task_id="T2", status=ScoreStatus.SCORED, score=0),
        ]
        sample = stratified_sample(records, T1, 20, seed=0)
        assert {record.point_id for record in sample} == {"p1_0", "p1_1", "p1_2"}
        with pytest.raises(DataIntegrityError):
            stratified_sample(records[3:], T1, 20, seed=0)

    def test_template_then_annotations(self):
        sample = stratified_sample(scored_records("T1", (0, 1), 3), T1, 2, seed=0)
        with TemporaryDirectory() as tmp:
            path = write_annotation_template(sample, Path(tmp) / "annotations_T1.csv")
            lines = path.read_text().splitlines()
            assert lines[0] == "point_id,heading_deg,task_id,predicted,human"
            assert len(lines) == 5
            assert all(line.endswith(",") for line in lines[1:])

            labels = ["0", "NA", "0", ""]
            filled = [lines[0]] + [line + label for line, label in zip(lines[1:], labels)]
            path.write_text("\n".join(filled) + "\n")
            rows = load_annotations(path, T1)
            assert [row.is_na for row in rows] == [False, True, False, True]
            report = compute_report(rows, T1)
            assert report.na_count == 2
            assert report.sample_size == 4

    def test_malformed_annotations(self):
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "annotations.csv"
            path.write_text("point_id,task_id,predicted\np,T1,1\n")
            with pytest.raises(AnnotationError):
                load_annotations(path, T1)
            path.write_text("point_id,heading_deg,task_id,predicted,human\np,0,T1,one,1\n")
            with pytest.raises(AnnotationError) as exc_info:
                load_annotations(path, T1)
            assert "line 2" in str(exc_info.value)
            with pytest.raises(AnnotationError):
                load_annotations(Path(tmp) / "missing.csv", T1)
