from lark import Transformer, v_args

from streetscore.common import TaskSpecError
from streetscore.models import PROMPT_BLOCKS, AnswerDomain, TaskSpec


__all__ = ("TaskSpecTransformer",)


def to_number(token) -> float:
    value = float(token.value)
    return int(value) if value.is_integer() else value


class TaskSpecTransformer(Transformer):
    """Transform a parsed task document into a TaskSpec"""

    def start(self, args):
        # start: _NL* header+ block+
        headers = {}
        blocks = {}
        for kind, *payload in args:
            if kind == "block":
                name, text = payload
                if name in blocks:
                    raise TaskSpecError(f'Block "{name}" is given more than once')
                blocks[name] = text
            else:
                if kind in headers:
                    raise TaskSpecError(f'Directive "@{kind}" is given more than once')
                headers[kind] = payload[0]

        for required in ("task", "domain"):
            if required not in headers:
                raise TaskSpecError(f'Task document lacks the "@{required}" directive')
        unknown = sorted(set(blocks) - set(PROMPT_BLOCKS))
        if unknown:
            raise TaskSpecError(
                f"Unknown block(s) {', '.join(unknown)}; expected {', '.join(PROMPT_BLOCKS)}"
            )
        missing = [name for name in PROMPT_BLOCKS if name not in blocks]
        if missing:
            raise TaskSpecError(f"Task {headers['task']} lacks block(s): {', '.join(missing)}")

        try:
            return TaskSpec(
                task_id=headers["task"],
                answer_domain=headers["domain"],
                overflow=headers.get("overflow"),
                **blocks,
            )
        except ValueError as exc:
            raise TaskSpecError(f"Invalid task {headers['task']}: {exc}") from exc

    @v_args(inline=True)
    def task_id(self, token):
        # task_id: "@task" TASK_ID _NL+
        return ("task", token.value)

    @v_args(inline=True)
    def domain(self, expression):
        # domain: "@domain" domain_expr _NL+
        return ("domain", expression)

    @v_args(inline=True)
    def overflow(self, token):
        # overflow: "@overflow" NUMBER _NL+
        return ("overflow", to_number(token))

    def domain_expr(self, args):
        # domain_expr: domain_term ("|" domain_term)*
        domain = args[0]
        for term in args[1:]:
            try:
                domain = domain.union(term)
            except ValueError as exc:
                raise TaskSpecError(str(exc)) from exc
        return domain

    def value_set(self, args):
        # value_set: "{" [NUMBER ("," NUMBER)*] "}"
        values = sorted({to_number(token) for token in args if token is not None})
        if not values:
            raise TaskSpecError("Empty value set in @domain")
        return AnswerDomain(values=tuple(values))

    @v_args(inline=True)
    def multiples(self, token):
        # multiples: "multiples" "(" NUMBER ")"
        step = to_number(token)
        if step <= 0:
            raise TaskSpecError(f"multiples() needs a positive step, got {token.value}")
        return AnswerDomain(step=step)

    def block(self, args):
        # block: "@block" BLOCK_NAME _NL line*
        name, *lines = args
        while lines and not lines[-1]:
            lines.pop()
        while lines and not lines[0]:
            lines.pop(0)
        return ("block", name.value, "\n".join(lines))

    def line(self, args):
        # line: TEXT? _NL
        return args[0].value.rstrip() if args else ""
