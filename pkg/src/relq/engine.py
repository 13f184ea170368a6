"""Plan binding and execution.

Binding resolves every step against the catalog and the configuration
before any I/O happens: scans take relations, sorts and projections
take files (a relation or the temp file product of an earlier step,
with ``materialize`` available to turn a scan into a file), and the
index projection takes an index whose key list starts with the wanted
attributes.  All diagnostics carry the step index and field.

Execution then runs the steps in order.  Steps that produce files run
eagerly; a scan is lazy, so its page reads are accounted to whichever
eager step consumes it; per-step deltas are boundary snapshots of one
monotone counter set, and therefore always sum to the totals.  A temp
file is deleted the moment its single consumer has finished with it;
on failure the context sweeps whatever is left, so the temp directory
ends every execution empty either way.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .buffer import IoStats
from .catalog import Database
from .config import EngineConfig, MIN_BUFFERS
from .context import ExecContext
from .errors import PlanError, SchemaError
from .heap import scan_heap
from .operators import (ProjectionSpec, materialize, project_hash,
                        project_sort_fused, project_sort_naive,
                        project_via_index, seq_scan)
from .plan import PhysicalPlan, PlanStep
from .schema import Schema
from .sort import external_sort

FILE_OPS = frozenset({"external_sort", "project_sort_naive", "project_sort_fused",
                      "project_hash"})


@dataclass
class BoundStep:
    step: PlanStep
    # resolution of the input binding: ("relation", name) | ("step", name) | None
    source: tuple[str, str] | None
    schema: Schema                      # schema of this step's product
    kind: str                           # "stream" | "file" | "sink"
    index_name: str | None = None
    prefix_len: int = 0


@dataclass
class ExecutionReport:
    steps: list[dict] = field(default_factory=list)
    totals: dict = field(default_factory=dict)
    output_rows: int = 0
    output_attrs: tuple[str, ...] = ()
    elapsed_ms: float = 0.0
    runs_created: int = 0
    merge_passes: int = 0
    stage_marks: list = field(default_factory=list)


def bind_plan(plan: PhysicalPlan, db: Database, config: EngineConfig) -> list[BoundStep]:
    bound: dict[str, BoundStep] = {}
    order: list[BoundStep] = []
    step_names = {s.name for s in plan.steps}
    for step_no, step in enumerate(plan.steps):
        m = step.args.get("m")
        if m is not None and not MIN_BUFFERS <= m <= config.buffers:
            raise PlanError(
                f"m must lie in {MIN_BUFFERS}..{config.buffers} (the pool capacity)",
                step=step_no, field="m")
        source: tuple[str, str] | None = None
        in_schema: Schema | None = None
        if step.op == "project_via_index":
            b = _bind_via_index(db, step, step_no)
        else:
            ref = step.input
            if ref in bound:
                source = ("step", ref)
                src = bound[ref]
                if src.kind == "stream" and step.op in FILE_OPS:
                    raise PlanError(
                        f"op {step.op} needs a file input; materialize step "
                        f"{ref!r} first", step=step_no, field=step.name)
                in_schema = src.schema
            elif ref in db.relations:
                # an earlier step shadows a relation; a later one does not,
                # matching how structure validation counts consumption
                if step.op in ("materialize", "output"):
                    raise PlanError(
                        f"op {step.op} consumes a prior step, not a relation",
                        step=step_no, field=step.name)
                source = ("relation", ref)
                in_schema = db.open_relation(ref).schema
            elif ref in step_names:
                raise PlanError(f"input {ref!r} is a later step (forward reference)",
                                step=step_no, field=step.name)
            else:
                raise PlanError(f"unknown relation {ref!r}", step=step_no,
                                field=step.name)
            b = _bind_regular(step, step_no, source, in_schema)
        bound[step.name] = b
        order.append(b)
    return order


def _bind_regular(step: PlanStep, step_no: int, source, in_schema: Schema) -> BoundStep:
    if step.op == "seq_scan":
        if source[0] != "relation":
            raise PlanError("seq_scan takes a relation", step=step_no, field=step.name)
        return BoundStep(step, source, in_schema, "stream")
    if step.op in ("materialize", "output"):
        kind = "file" if step.op == "materialize" else "sink"
        return BoundStep(step, source, in_schema, kind)
    attrs = step.args.get("attrs")
    if step.op == "external_sort":
        if attrs is not None:
            _check_attrs(attrs, in_schema, step_no)
        return BoundStep(step, source, in_schema, "file")
    # the three projection strategies
    _check_attrs(step.args["attrs"], in_schema, step_no)
    return BoundStep(step, source, in_schema.project(step.args["attrs"]), "file")


def _bind_via_index(db: Database, step: PlanStep, step_no: int) -> BoundStep:
    name = step.args["index"]
    if name not in db.indexes:
        raise PlanError(f"unknown index {name!r}", step=step_no, field="index")
    idx, entry = db.open_index(name)
    keys = tuple(entry["keys"])
    attrs = step.args.get("attrs", keys)
    if tuple(attrs) != keys[:len(attrs)] or not attrs:
        raise PlanError(
            f"attrs {list(attrs)} are not a prefix of index keys {list(keys)}",
            step=step_no, field="attrs")
    schema = Schema(idx.schema.attrs[:len(attrs)])
    return BoundStep(step, None, schema, "file",
                     index_name=name, prefix_len=len(attrs))


def _check_attrs(attrs: tuple[str, ...], schema: Schema, step_no: int) -> None:
    try:
        ProjectionSpec(attrs).bind(schema)
    except SchemaError as e:
        raise PlanError(str(e), step=step_no, field="attrs") from None


def execute(plan: PhysicalPlan, db: Database, config: EngineConfig,
            on_header=None, on_row=None) -> ExecutionReport:
    """Run a bound plan; rows go to on_row, header names to on_header."""
    bound = bind_plan(plan, db, config)
    stats = IoStats()
    ctx = ExecContext(config, db.tmp_dir, stats)
    report = ExecutionReport()
    t0 = time.perf_counter()
    # step name -> ("stream", relation HeapFile) | ("file", HeapFile, owned)
    products: dict[str, tuple] = {}
    try:
        prev = stats.snapshot()
        for b in bound:
            stats.current_step = b.step.name
            rows = _run_step(ctx, db, b, products, report, on_header, on_row)
            cur = stats.snapshot()
            delta = {k: cur[k] - prev[k] for k in cur}
            report.steps.append({"name": b.step.name, "op": b.step.op, **delta})
            prev = cur
            if rows is not None:
                report.output_rows = rows
    finally:
        ctx.cleanup()
    report.totals = stats.snapshot()
    report.runs_created = stats.runs_created
    report.merge_passes = stats.merge_passes
    report.stage_marks = list(stats.stage_marks)
    report.elapsed_ms = (time.perf_counter() - t0) * 1000.0
    return report


def _resolve_input(ctx: ExecContext, db: Database, b: BoundStep,
                   products: dict[str, tuple]):
    """Returns (tuples iterator or None, file or None, owned temp or None)."""
    kind, ref = b.source
    if kind == "relation":
        return None, db.open_relation(ref), None
    product = products.pop(ref)
    if product[0] == "stream":
        return seq_scan(ctx, product[1]), None, None
    _, heap, owned = product
    return None, heap, heap if owned else None


def _run_step(ctx: ExecContext, db: Database, b: BoundStep, products: dict,
              report: ExecutionReport, on_header, on_row) -> int | None:
    step = b.step
    op = step.op
    m = step.args.get("m")
    if op == "seq_scan":
        products[step.name] = ("stream", db.open_relation(b.source[1]))
        return None
    if op == "project_via_index":
        idx, _ = db.open_index(b.index_name)
        out = project_via_index(ctx, idx, b.prefix_len)
        products[step.name] = ("file", out, True)
        return None
    stream, heap, owned = _resolve_input(ctx, db, b, products)
    if op == "materialize":
        tuples = stream if stream is not None else scan_heap(ctx.pool, heap)
        out = materialize(ctx, tuples, b.schema)
        products[step.name] = ("file", out, True)
    elif op == "output":
        if on_header is not None:
            on_header(b.schema.names)
        tuples = stream if stream is not None else scan_heap(ctx.pool, heap)
        count = 0
        for t in tuples:
            count += 1
            if on_row is not None:
                on_row(t)
        report.output_attrs = b.schema.names
        if owned is not None:
            ctx.drop_temp(owned)
        return count
    elif op == "external_sort":
        out = external_sort(ctx, heap, step.args.get("attrs"), m=m)
        products[step.name] = ("file", out, True)
    else:
        spec = ProjectionSpec(step.args["attrs"])
        if op == "project_sort_naive":
            out = project_sort_naive(ctx, heap, spec, m=m)
        elif op == "project_sort_fused":
            out = project_sort_fused(ctx, heap, spec, m=m)
        else:
            out = project_hash(ctx, heap, spec, seed=step.args.get("seed"), m=m)
        products[step.name] = ("file", out, True)
    if owned is not None:
        ctx.drop_temp(owned)
    return None
