"""Resumable scoring of an image manifest against one task"""
import csv
import io
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, List, Optional, Set, Tuple, Union

from pydantic import ValidationError

from streetscore.common import BackendError, DataIntegrityError, ResultsLogCorruptError
from streetscore.models import ImageRecord, ImageStatus, ScoreRecord, ScoreStatus, TaskSpec
from streetscore.scoring.answers import parse_answer
from streetscore.scoring.backends import ScoringBackend
from streetscore.scoring.tasks import assemble_prompt
from streetscore.utils import format_number


__all__ = ("RESULTS_HEADER", "results_log_name", "ResultsLog", "score_image", "run_task")

LOGGER = logging.getLogger(__name__)

RESULTS_HEADER = ("point_id", "heading_deg", "task_id", "status", "score", "raw_response")
PROGRESS_EVERY = 100


def results_log_name(task_id: str) -> str:
    return f"results_{task_id}.csv"


class ResultsLog:
    """Append-only CSV of ScoreRecords. Unparseable lines abort reading with their line number."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._lock = threading.Lock()

    def exists(self) -> bool:
        return self.path.exists()

    def read(self) -> List[ScoreRecord]:
        if not self.path.exists():
            return []
        text = self.path.read_text(encoding="utf-8")
        if not text:
            return []
        path = str(self.path)
        if not text.endswith("\n"):
            raise ResultsLogCorruptError(path, text.count("\n") + 1, "truncated final line")

        reader = csv.reader(io.StringIO(text, newline=""), strict=True)
        records = []
        try:
            header = next(reader)
            if tuple(header) != RESULTS_HEADER:
                raise ResultsLogCorruptError(
                    path, 1, f"unexpected header, expected {','.join(RESULTS_HEADER)}"
                )
            for row in reader:
                if len(row) != len(RESULTS_HEADER):
                    raise ResultsLogCorruptError(
                        path,
                        reader.line_num,
                        f"expected {len(RESULTS_HEADER)} fields, found {len(row)}",
                    )
                point_id, heading, task_id, status, score, raw = row
                try:
                    records.append(
                        ScoreRecord(
                            point_id=point_id,
                            heading_deg=float(heading),
                            task_id=task_id,
                            status=status,
                            score=float(score) if score else None,
                            raw_response=raw,
                        )
                    )
                except (ValueError, ValidationError) as exc:
                    raise ResultsLogCorruptError(path, reader.line_num, str(exc)) from exc
        except csv.Error as exc:
            raise ResultsLogCorruptError(path, reader.line_num, str(exc)) from exc
        return records

    def keys(self) -> Set[Tuple[str, float, str]]:
        return {record.key for record in self.read()}

    def append(self, records: Iterable[ScoreRecord]) -> int:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        count = 0
        with self._lock:
            if not self.path.exists() or not self.path.stat().st_size:
                writer.writerow(RESULTS_HEADER)
            for record in records:
                writer.writerow(
                    (
                        record.point_id,
                        format_number(record.heading_deg),
                        record.task_id,
                        record.status.value,
                        "" if record.score is None else format_number(record.score),
                        record.raw_response,
                    )
                )
                count += 1
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8", newline="") as handle:
                handle.write(buffer.getvalue())
                handle.flush()
        return count


def score_image(
    image: ImageRecord,
    task: TaskSpec,
    backend: ScoringBackend,
    images_dir: Union[str, Path],
    prompt: Optional[str] = None,
) -> ScoreRecord:
    """Score one manifest row. Unavailable images are recorded without calling the backend."""
    base = {"point_id": image.point_id, "heading_deg": image.heading_deg, "task_id": task.task_id}
    if image.status != ImageStatus.AVAILABLE:
        return ScoreRecord(status=ScoreStatus.UNAVAILABLE, **base)

    prompt = assemble_prompt(task) if prompt is None else prompt
    image_path = Path(images_dir) / image.file_path
    try:
        data = image_path.read_bytes()
    except OSError as exc:
        raise DataIntegrityError(
            f"Image {image_path} of available row {image.point_id} @ "
            f"{format_number(image.heading_deg)} cannot be read: {exc.strerror}"
        ) from exc
    try:
        raw = backend.complete(prompt, data)
    except BackendError as exc:
        LOGGER.warning("Backend failed on %s @ %s: %s", image.point_id, format_number(image.heading_deg), exc)
        return ScoreRecord(status=ScoreStatus.BACKEND_ERROR, raw_response=str(exc), **base)

    score, reason = parse_answer(raw, task)
    if score is None:
        LOGGER.debug("Parse error on %s @ %s (%s): %r", image.point_id, image.heading_deg, reason, raw)
        return ScoreRecord(status=ScoreStatus.PARSE_ERROR, raw_response=raw, **base)
    return ScoreRecord(status=ScoreStatus.SCORED, raw_response=raw, score=score, **base)


def run_task(
    manifest: List[ImageRecord],
    task: TaskSpec,
    backend: ScoringBackend,
    log_path: Union[str, Path],
    images_dir: Union[str, Path],
    concurrency: int = 4,
    limit: Optional[int] = None,
) -> List[ScoreRecord]:
    """Score every manifest row not yet in the results log, appending in manifest order

    `limit` caps the number of rows processed by this call. Returns the full log.
    """
    log = ResultsLog(log_path)
    done = log.keys()
    todo = [
        image
        for image in manifest
        if (image.point_id, image.heading_deg, task.task_id) not in done
    ]
    if limit is not None:
        todo = todo[:limit]
    LOGGER.info(
        "Task %s: %d row(s) to score, %d already in %s",
        task.task_id,
        len(todo),
        len(done),
        log.path.name,
    )

    prompt = assemble_prompt(task)
    if not log.exists():
        log.append([])
    processed = 0
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        results = pool.map(lambda image: score_image(image, task, backend, images_dir, prompt), todo)
        for record in results:
            log.append([record])
            processed += 1
            if processed % PROGRESS_EVERY == 0:
                LOGGER.info("Task %s: scored %d/%d row(s)", task.task_id, processed, len(todo))

    records = log.read()
    tally = {status: 0 for status in ScoreStatus}
    for record in records:
        if record.task_id == task.task_id:
            tally[record.status] += 1
    LOGGER.info(
        "Task %s: %s",
        task.task_id,
        ", ".join(f"{count} {status.value}" for status, count in tally.items()),
    )
    return records
