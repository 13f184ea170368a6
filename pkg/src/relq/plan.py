"""Physical plan files: parsing, structural validation, and formatting.

Line syntax, one step per line::

    scan = seq_scan() <- people
    proj = project_sort_fused(attrs:name+city, m:4) <- people
    ix   = project_via_index(index:people.name+city, attrs:name)
    out  = output() <- proj

``name = op(arg:val, ...) <- input``.  Attribute lists join with ``+``.
Blank lines and ``#`` comments are ignored.  The input binding names an
earlier step or a catalog relation; which of the two is legal per op is
checked when the plan is bound against a database (see engine), while
this module enforces shape: known ops, known argument keys, exactly one
``output`` step in final position, no forward references, and every
non-output step consumed exactly once.

A JSON mirror of the same structure is accepted via parse_plan_json:
``{"steps": [{"name": ..., "op": ..., "args": {...}, "input": ...}]}``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import PlanError

# per op: {arg name: (required, kind)} with kind in {attrs, int, name}
OP_ARGS: dict[str, dict[str, tuple[bool, str]]] = {
    "seq_scan": {},
    "external_sort": {"attrs": (False, "attrs"), "m": (False, "int")},
    "project_sort_naive": {"attrs": (True, "attrs"), "m": (False, "int")},
    "project_sort_fused": {"attrs": (True, "attrs"), "m": (False, "int")},
    "project_hash": {"attrs": (True, "attrs"), "m": (False, "int"),
                     "seed": (False, "int")},
    "project_via_index": {"index": (True, "name"), "attrs": (False, "attrs")},
    "materialize": {},
    "output": {},
}
SOURCE_OPS = frozenset({"project_via_index"})  # steps that take no input binding

_LINE_RE = re.compile(
    r"^(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*=\s*"
    r"(?P<op>[A-Za-z_][A-Za-z0-9_]*)\s*\(\s*(?P<args>[^)]*)\)\s*"
    r"(?:<-\s*(?P<input>[A-Za-z_][A-Za-z0-9_.+]*)\s*)?$")
_ATTR_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_NAME_VAL_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.+]*$")


@dataclass(frozen=True)
class PlanStep:
    name: str
    op: str
    args: dict = field(default_factory=dict)
    input: str | None = None


@dataclass(frozen=True)
class PhysicalPlan:
    steps: tuple[PlanStep, ...]


def _parse_args(raw: str, op: str, step_no: int, name: str) -> dict:
    spec = OP_ARGS[op]
    args: dict = {}
    raw = raw.strip()
    if raw:
        for part in raw.split(","):
            part = part.strip()
            key, sep, val = part.partition(":")
            key = key.strip()
            val = val.strip()
            if not sep or not key or not val:
                raise PlanError(f"malformed argument {part!r}", step=step_no, field=name)
            if key not in spec:
                raise PlanError(f"op {op} takes no argument {key!r}",
                                step=step_no, field=key)
            if key in args:
                raise PlanError(f"argument {key!r} repeated", step=step_no, field=key)
            args[key] = _parse_value(val, spec[key][1], step_no, key)
    for key, (required, _) in spec.items():
        if required and key not in args:
            raise PlanError(f"op {op} requires argument {key!r}",
                            step=step_no, field=key)
    return args


def _parse_value(val: str, kind: str, step_no: int, key: str):
    if kind == "attrs":
        names = [a.strip() for a in val.split("+")]
        if not all(_ATTR_RE.match(a) for a in names):
            raise PlanError(f"bad attribute list {val!r}", step=step_no, field=key)
        return tuple(names)
    if kind == "int":
        try:
            return int(val, 10)
        except ValueError:
            raise PlanError(f"expected an integer, got {val!r}",
                            step=step_no, field=key) from None
    if not _NAME_VAL_RE.match(val):
        raise PlanError(f"bad name {val!r}", step=step_no, field=key)
    return val


def parse_plan(text: str) -> PhysicalPlan:
    steps: list[PlanStep] = []
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        step_no = len(steps)
        m = _LINE_RE.match(line)
        if not m:
            raise PlanError(f"unparseable step {line!r}", step=step_no)
        name, op, input_ = m.group("name"), m.group("op"), m.group("input")
        if op not in OP_ARGS:
            raise PlanError(f"unknown op {op!r}", step=step_no, field=name)
        args = _parse_args(m.group("args"), op, step_no, name)
        steps.append(PlanStep(name, op, args, input_))
    return _validate_structure(steps)


def parse_plan_json(text: str) -> PhysicalPlan:
    try:
        doc = json.loads(text)
    except ValueError as e:
        raise PlanError(f"invalid JSON plan: {e}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("steps"), list):
        raise PlanError('JSON plan must be {"steps": [...]}')
    steps: list[PlanStep] = []
    for step_no, item in enumerate(doc["steps"]):
        if not isinstance(item, dict):
            raise PlanError("each step must be an object", step=step_no)
        name, op = item.get("name"), item.get("op")
        if not isinstance(name, str) or not re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", name):
            raise PlanError(f"bad step name {name!r}", step=step_no)
        if op not in OP_ARGS:
            raise PlanError(f"unknown op {op!r}", step=step_no, field=name)
        raw_args = item.get("args", {})
        if not isinstance(raw_args, dict):
            raise PlanError("args must be an object", step=step_no, field=name)
        args: dict = {}
        for key, val in raw_args.items():
            if key not in OP_ARGS[op]:
                raise PlanError(f"op {op} takes no argument {key!r}",
                                step=step_no, field=key)
            kind = OP_ARGS[op][key][1]
            if kind == "attrs":
                if (not isinstance(val, list) or not val
                        or not all(isinstance(a, str) and _ATTR_RE.match(a) for a in val)):
                    raise PlanError(f"bad attribute list {val!r}", step=step_no, field=key)
                args[key] = tuple(val)
            elif kind == "int":
                if not isinstance(val, int) or isinstance(val, bool):
                    raise PlanError(f"expected an integer, got {val!r}",
                                    step=step_no, field=key)
                args[key] = val
            else:
                if not isinstance(val, str) or not _NAME_VAL_RE.match(val):
                    raise PlanError(f"bad name {val!r}", step=step_no, field=key)
                args[key] = val
        for key, (required, _) in OP_ARGS[op].items():
            if required and key not in args:
                raise PlanError(f"op {op} requires argument {key!r}",
                                step=step_no, field=key)
        input_ = item.get("input")
        if input_ is not None and (not isinstance(input_, str)
                                   or not _NAME_VAL_RE.match(input_)):
            raise PlanError(f"bad input {input_!r}", step=step_no, field=name)
        steps.append(PlanStep(name, op, args, input_))
    return _validate_structure(steps)


def _validate_structure(steps: list[PlanStep]) -> PhysicalPlan:
    if not steps:
        raise PlanError("empty plan")
    names: set[str] = set()
    consumed: dict[str, int] = {}
    for step_no, step in enumerate(steps):
        if step.name in names:
            raise PlanError(f"duplicate step name {step.name!r}",
                            step=step_no, field=step.name)
        if step.op in SOURCE_OPS:
            if step.input is not None:
                raise PlanError(f"op {step.op} takes no input", step=step_no,
                                field=step.name)
        else:
            if step.input is None:
                raise PlanError(f"op {step.op} needs an input", step=step_no,
                                field=step.name)
            if step.input in names:
                consumed[step.input] = consumed.get(step.input, 0) + 1
            # otherwise the input must be a catalog relation; bind checks it
        if step.op == "output" and step_no != len(steps) - 1:
            raise PlanError("output must be the final step", step=step_no,
                            field=step.name)
        names.add(step.name)
    if steps[-1].op != "output":
        raise PlanError("plan must end with an output step", step=len(steps) - 1,
                        field=steps[-1].name)
    for step_no, step in enumerate(steps[:-1]):
        n = consumed.get(step.name, 0)
        if n != 1:
            raise PlanError(
                f"step {step.name!r} consumed {n} times; every step feeds exactly one",
                step=step_no, field=step.name)
    return PhysicalPlan(tuple(steps))


def format_plan(plan: PhysicalPlan) -> str:
    lines = []
    for step in plan.steps:
        parts = []
        for key, val in step.args.items():
            if isinstance(val, tuple):
                parts.append(f"{key}:{'+'.join(val)}")
            else:
                parts.append(f"{key}:{val}")
        line = f"{step.name} = {step.op}({', '.join(parts)})"
        if step.input is not None:
            line += f" <- {step.input}"
        lines.append(line)
    return "\n".join(lines) + "\n"
