import math
from enum import Enum
from fractions import Fraction
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from streetscore.utils import format_number


__all__ = (
    "AnswerDomain",
    "TaskSpec",
    "BackendConfig",
    "ScoreStatus",
    "ScoreRecord",
    "PROMPT_BLOCKS",
)

PROMPT_BLOCKS = ("role_description", "theory_model", "task", "response_format")

# A stratum is either an exact domain value or an overflow label such as "2+"
Stratum = Union[float, str]


def _is_multiple(value: float, step: float) -> bool:
    # exact on the shortest decimal form of both numbers
    return (Fraction(repr(float(value))) / Fraction(repr(float(step)))).denominator == 1


class AnswerDomain(BaseModel):
    """Finite set of values, optionally united with the positive multiples of `step`"""

    model_config = ConfigDict(frozen=True)

    values: Tuple[float, ...] = ()
    step: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def non_empty(self) -> "AnswerDomain":
        if not self.values and self.step is None:
            raise ValueError("answer domain must not be empty")
        return self

    def __contains__(self, value: float) -> bool:
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            return False
        if any(value == allowed for allowed in self.values):
            return True
        return self.step is not None and value > 0 and _is_multiple(value, self.step)

    @property
    def is_finite(self) -> bool:
        return self.step is None

    def union(self, other: "AnswerDomain") -> "AnswerDomain":
        steps = {s for s in (self.step, other.step) if s is not None}
        if len(steps) > 1:
            raise ValueError("an answer domain holds at most one multiples() term")
        return AnswerDomain(
            values=tuple(sorted(set(self.values) | set(other.values))),
            step=steps.pop() if steps else None,
        )


class TaskSpec(BaseModel):
    """Prompt template and answer domain of a scoring task"""

    model_config = ConfigDict(frozen=True)

    task_id: str = Field(..., pattern=r"^[A-Za-z][A-Za-z0-9_\-]*$")
    role_description: str
    theory_model: str
    task: str
    response_format: str
    answer_domain: AnswerDomain
    overflow: Optional[float] = None

    def blocks(self) -> List[Tuple[str, str]]:
        return [(name, getattr(self, name)) for name in PROMPT_BLOCKS]

    def stratum_of(self, value: float) -> Stratum:
        """Validation stratum (column) a predicted value belongs to"""
        if self.overflow is not None and value >= self.overflow:
            return self.overflow_label
        return float(value)

    @property
    def overflow_label(self) -> str:
        return f"{format_number(self.overflow)}+"

    def strata(self) -> List[Stratum]:
        """All strata of the task in display order"""
        domain = self.answer_domain
        if not domain.is_finite and self.overflow is None:
            raise ValueError(
                f"Task {self.task_id} has an unbounded answer domain and needs an overflow value"
            )
        below = {float(v) for v in domain.values}
        if domain.step is not None:
            k = 1
            while domain.step * k < self.overflow:
                below.add(domain.step * k)
                k += 1
        strata: List[Stratum] = []
        for value in sorted(below):
            if self.overflow is None or value < self.overflow:
                strata.append(value)
        has_overflow = self.overflow is not None and (
            not domain.is_finite or any(v >= self.overflow for v in domain.values)
        )
        if has_overflow:
            strata.append(self.overflow_label)
        return strata


class BackendConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["http", "mock"] = "http"
    base_url: str = "http://127.0.0.1:8000/v1"
    model_name: str = "llava-v1.6-mistral-7b"
    temperature: float = Field(0.1, ge=0)
    max_new_tokens: int = Field(8, ge=1)
    stop_sequences: Tuple[str, ...] = ("\n",)
    max_retries: int = Field(2, ge=0)
    timeout_s: float = Field(120, gt=0)
    concurrency: int = Field(4, ge=1)
    token_env: str = "STREETSCORE_BACKEND_TOKEN"


class ScoreStatus(str, Enum):
    SCORED = "scored"
    UNAVAILABLE = "unavailable"
    PARSE_ERROR = "parse_error"
    BACKEND_ERROR = "backend_error"


class ScoreRecord(BaseModel):
    """Outcome of one (image, task) inference"""

    model_config = ConfigDict(frozen=True)

    point_id: str
    heading_deg: float
    task_id: str
    status: ScoreStatus
    raw_response: str = ""
    score: Optional[float] = None

    @model_validator(mode="after")
    def score_iff_scored(self) -> "ScoreRecord":
        if (self.status == ScoreStatus.SCORED) != (self.score is not None):
            raise ValueError(
                f"status {self.status.value} is inconsistent with score {self.score!r}"
            )
        return self

    @property
    def key(self) -> Tuple[str, float, str]:
        return (self.point_id, self.heading_deg, self.task_id)
