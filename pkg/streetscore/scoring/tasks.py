import logging
from pathlib import Path
from typing import Dict, List, Union

from lark import Lark
from lark.exceptions import UnexpectedInput, VisitError

from streetscore.common import TaskSpecError
from streetscore.models import TaskSpec
from streetscore.transformers import TaskSpecTransformer
from streetscore.utils import atomic_write_text, format_number


__all__ = (
    "TaskSpecParser",
    "parse_task",
    "load_task",
    "dump_task",
    "assemble_prompt",
    "TaskRegistry",
    "export_tasks",
)

LOGGER = logging.getLogger(__name__)

PACKAGE_DIR = Path(__file__).resolve().parent.parent
GRAMMAR_FILE = PACKAGE_DIR / "grammars" / "taskspec.lark"
SHIPPED_TASKS_DIR = PACKAGE_DIR / "tasks"
TASK_SUFFIX = ".task"


class TaskSpecParser:
    """Parse task documents into TaskSpec objects"""

    def __init__(self):
        with open(GRAMMAR_FILE, encoding="utf-8") as grammar:
            self.lark = Lark(grammar.read(), parser="lalr", lexer="contextual")
        self.transformer = TaskSpecTransformer()
        self.tree = None

    def parse(self, text: str, source: str = "<string>") -> TaskSpec:
        text = text.replace("\r\n", "\n")
        if not text.endswith("\n"):
            text += "\n"
        try:
            self.tree = self.lark.parse(text)
        except UnexpectedInput as exc:
            raise TaskSpecError(
                f"{source}, line {exc.line}, column {exc.column}: unexpected input\n"
                f"{exc.get_context(text)}"
            ) from exc
        try:
            return self.transformer.transform(self.tree)
        except VisitError as exc:
            if isinstance(exc.orig_exc, TaskSpecError):
                raise TaskSpecError(f"{source}: {exc.orig_exc}") from exc.orig_exc
            raise


_PARSER = None


def parse_task(text: str, source: str = "<string>") -> TaskSpec:
    global _PARSER  # pylint: disable=global-statement
    if _PARSER is None:
        _PARSER = TaskSpecParser()
    return _PARSER.parse(text, source)


def load_task(path: Union[str, Path]) -> TaskSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TaskSpecError(f"Cannot read task file {path}: {exc}") from exc
    return parse_task(text, source=str(path))


def _domain_text(task: TaskSpec) -> str:
    terms = []
    domain = task.answer_domain
    if domain.values:
        terms.append("{" + ", ".join(format_number(value) for value in domain.values) + "}")
    if domain.step is not None:
        terms.append(f"multiples({format_number(domain.step)})")
    return " | ".join(terms)


def dump_task(task: TaskSpec) -> str:
    """Serialise a TaskSpec as a task document that parses back to an equal TaskSpec"""
    lines = [f"@task {task.task_id}", f"@domain {_domain_text(task)}"]
    if task.overflow is not None:
        lines.append(f"@overflow {format_number(task.overflow)}")
    for name, text in task.blocks():
        body = text.split("\n")
        for line in body:
            if line.startswith("@"):
                raise TaskSpecError(
                    f"Block {name} of task {task.task_id} has a line starting with '@', "
                    "which a task document cannot hold"
                )
        lines.extend(["", f"@block {name}", *body])
    return "\n".join(lines) + "\n"


def assemble_prompt(task: TaskSpec) -> str:
    """The four prompt blocks in order, separated by blank lines"""
    for name, text in task.blocks():
        if not text.strip():
            raise TaskSpecError(f"Task {task.task_id} has an empty {name} block")
    return "\n\n".join(text for _, text in task.blocks())


class TaskRegistry:
    """Tasks available to a run, by task id"""

    def __init__(self):
        self._tasks: Dict[str, TaskSpec] = {}

    @classmethod
    def with_shipped_tasks(cls) -> "TaskRegistry":
        registry = cls()
        for path in sorted(SHIPPED_TASKS_DIR.glob(f"*{TASK_SUFFIX}")):
            registry.load_file(path)
        return registry

    def register(self, task: TaskSpec) -> TaskSpec:
        assemble_prompt(task)
        if task.task_id in self._tasks:
            LOGGER.info("Task %s is redefined", task.task_id)
        self._tasks[task.task_id] = task
        return task

    def load_file(self, path: Union[str, Path]) -> TaskSpec:
        return self.register(load_task(path))

    def get(self, task_id: str) -> TaskSpec:
        try:
            return self._tasks[task_id]
        except KeyError:
            raise TaskSpecError(
                f"Unknown task {task_id!r}; known tasks: {', '.join(self.ids()) or 'none'}"
            ) from None

    def ids(self) -> List[str]:
        return sorted(self._tasks)

    def __contains__(self, task_id: str) -> bool:
        return task_id in self._tasks

    def __len__(self) -> int:
        return len(self._tasks)


def export_tasks(registry: TaskRegistry, out_dir: Union[str, Path]) -> List[Path]:
    """Write every registered task as `<task_id>.task` into `out_dir`"""
    out_dir = Path(out_dir)
    paths = []
    for task_id in registry.ids():
        path = out_dir / f"{task_id}{TASK_SUFFIX}"
        atomic_write_text(path, dump_task(registry.get(task_id)))
        paths.append(path)
    LOGGER.info("Exported %d task(s) to %s", len(paths), out_dir)
    return paths
