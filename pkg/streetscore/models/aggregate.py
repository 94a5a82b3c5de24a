import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


__all__ = ("SummaryRow", "STATISTICS")

STATISTICS = ("mean", "sum", "min", "max")


class SummaryRow(BaseModel):
    """Statistics of one task for one point or segment. No statistics means the entity is grey."""

    model_config = ConfigDict(frozen=True)

    entity_id: str
    task_id: str
    mean: Optional[float] = None
    sum: Optional[float] = None
    min: Optional[float] = None
    max: Optional[float] = None
    count_valid: int = Field(0, ge=0)

    @model_validator(mode="after")
    def check_statistics(self) -> "SummaryRow":
        values = [getattr(self, name) for name in STATISTICS]
        if self.count_valid == 0:
            if any(value is not None for value in values):
                raise ValueError(f"{self.entity_id}: statistics present with count_valid = 0")
            return self
        if any(value is None for value in values):
            raise ValueError(f"{self.entity_id}: statistics missing with count_valid > 0")
        if not self.min <= self.mean <= self.max:
            raise ValueError(f"{self.entity_id}: expected min <= mean <= max")
        return self

    @property
    def is_grey(self) -> bool:
        return self.count_valid == 0

    def statistic(self, name: str) -> Optional[float]:
        if name not in STATISTICS:
            raise ValueError(f"Unknown statistic {name!r}, expected one of {STATISTICS}")
        return getattr(self, name)

    def sum_matches_mean(self, tolerance: float = 1e-9) -> bool:
        if self.is_grey:
            return True
        return math.isclose(self.sum, self.mean * self.count_valid, rel_tol=tolerance, abs_tol=tolerance)
