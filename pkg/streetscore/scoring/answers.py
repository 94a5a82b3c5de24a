import re
from typing import Optional, Tuple

from streetscore.models import TaskSpec


__all__ = ("NUMBER_TOKEN", "parse_answer")

NUMBER_TOKEN = re.compile(r"[-+]?(?:\d+(?:\.\d+)?|\.\d+)")


def parse_answer(raw: str, task: TaskSpec) -> Tuple[Optional[float], str]:
    """Score from the first numeric token of `raw`, if it lies in the task's answer domain

    Returns `(score, "")` on success, `(None, reason)` for a parse error.
    """
    match = NUMBER_TOKEN.search(raw or "")
    if match is None:
        return None, "no numeric token"
    value = float(match.group(0))
    if value not in task.answer_domain:
        return None, f"{match.group(0)} is outside the answer domain of {task.task_id}"
    return value, ""
