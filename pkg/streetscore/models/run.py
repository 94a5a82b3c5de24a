from datetime import datetime
from typing import Dict, Optional, Tuple

from pydantic import BaseModel


__all__ = ("STAGE_ORDER", "parse_stage", "stage_key", "RunManifest")

STAGE_ORDER = ("sample", "fetch", "score", "aggregate", "render")


def stage_key(stage: str, task_id: Optional[str] = None) -> str:
    return f"{stage}:{task_id}" if task_id else stage


def parse_stage(key: str) -> Tuple[str, Optional[str]]:
    stage, _, task_id = key.partition(":")
    return stage, task_id or None


class RunManifest(BaseModel):
    """Completion markers of a run directory, keyed "sample", "fetch", "score:T1", ..."""

    config_hash: str
    tool_version: str
    created_at: datetime
    updated_at: datetime
    stages: Dict[str, datetime] = {}

    def is_complete(self, key: str) -> bool:
        return key in self.stages

    def later_than(self, key: str):
        """Markers invalidated when `key` is (re)completed"""
        stage, task_id = parse_stage(key)
        rank = STAGE_ORDER.index(stage)
        later = []
        for other in self.stages:
            other_stage, other_task = parse_stage(other)
            if STAGE_ORDER.index(other_stage) <= rank:
                continue
            if task_id is None or other_task == task_id:
                later.append(other)
        return sorted(later)
