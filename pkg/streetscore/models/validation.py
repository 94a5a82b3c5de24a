from typing import Dict, List, Optional, Union

from pydantic import BaseModel, Field, model_validator


__all__ = ("AnnotationRow", "ClassPrecision", "PrecisionReport")


class AnnotationRow(BaseModel):
    """A model prediction next to the human label. `human is None` is an NA case."""

    point_id: str
    heading_deg: float
    task_id: str
    predicted: float
    human: Optional[float] = None

    @property
    def is_na(self) -> bool:
        return self.human is None


class ClassPrecision(BaseModel):
    correct: int = Field(..., ge=0)
    total_evaluated: int = Field(..., ge=0)

    @model_validator(mode="after")
    def correct_within_total(self) -> "ClassPrecision":
        if self.correct > self.total_evaluated:
            raise ValueError("correct cannot exceed total_evaluated")
        return self

    @property
    def precision(self) -> Optional[float]:
        if not self.total_evaluated:
            return None
        return self.correct / self.total_evaluated


class PrecisionReport(BaseModel):
    """Class-specific precision and overall accuracy of one task at one location.

    NA rows are excluded from every numerator and denominator but counted in `sample_size`.
    """

    task_id: str
    location: str = ""
    per_class: Dict[Union[float, str], ClassPrecision] = {}
    na_count: int = Field(0, ge=0)

    @property
    def correct(self) -> int:
        return sum(cls.correct for cls in self.per_class.values())

    @property
    def evaluated(self) -> int:
        return sum(cls.total_evaluated for cls in self.per_class.values())

    @property
    def accuracy(self) -> Optional[float]:
        if not self.evaluated:
            return None
        return self.correct / self.evaluated

    @property
    def sample_size(self) -> int:
        return self.evaluated + self.na_count

    def classes(self) -> List[Union[float, str]]:
        return list(self.per_class.keys())
