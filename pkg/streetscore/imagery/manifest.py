import csv
import io
from pathlib import Path
from typing import Iterable, List, Union

from pydantic import ValidationError

from streetscore.common import DataIntegrityError
from streetscore.models import ImageRecord
from streetscore.utils import atomic_write_text, format_number


__all__ = ("MANIFEST_HEADER", "MANIFEST_NAME", "image_path", "write_manifest", "read_manifest")

MANIFEST_HEADER = ("point_id", "heading_deg", "file_path", "status", "sha256")
MANIFEST_NAME = "manifest.csv"


def image_path(point_id: str, heading_deg: float) -> str:
    """Image location relative to the images directory"""
    return f"{point_id}/{format_number(heading_deg)}.jpg"


def write_manifest(path: Union[str, Path], records: Iterable[ImageRecord]) -> None:
    """Rewrite the whole manifest atomically, rows in the given order"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for record in records:
        writer.writerow(
            (
                record.point_id,
                format_number(record.heading_deg),
                record.file_path,
                record.status.value,
                record.bytes_sha256,
            )
        )
    atomic_write_text(path, buffer.getvalue())


def read_manifest(path: Union[str, Path]) -> List[ImageRecord]:
    path = Path(path)
    if not path.exists():
        raise DataIntegrityError(f"Image manifest {path} does not exist")
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle, strict=True)
        try:
            header = next(reader, None)
            if tuple(header or ()) != MANIFEST_HEADER:
                raise DataIntegrityError(
                    f"{path}: unexpected header {header}, expected {','.join(MANIFEST_HEADER)}"
                )
            records = []
            for row in reader:
                if len(row) != len(MANIFEST_HEADER):
                    raise DataIntegrityError(
                        f"{path}, line {reader.line_num}: expected {len(MANIFEST_HEADER)} columns"
                    )
                point_id, heading, file_path, status, sha = row
                try:
                    records.append(
                        ImageRecord(
                            point_id=point_id,
                            heading_deg=float(heading),
                            file_path=file_path,
                            status=status,
                            bytes_sha256=sha,
                        )
                    )
                except (ValueError, ValidationError) as exc:
                    raise DataIntegrityError(f"{path}, line {reader.line_num}: {exc}") from exc
        except csv.Error as exc:
            raise DataIntegrityError(f"{path}, line {reader.line_num}: {exc}") from exc
    return records
