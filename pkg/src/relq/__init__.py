"""relq: a buffer-bounded relational execution engine.

Paged heap storage with extents and read-ahead, external merge sort,
dense non-clustered indexes, three duplicate-eliminating projection
strategies, and a plan-executing engine with exact page-I/O accounting.
"""

from .buffer import BufferPool, IoStats
from .catalog import Database
from .config import EngineConfig
from .context import ExecContext
from .engine import ExecutionReport, execute
from .errors import RelqError
from .heap import HeapFile, Rid
from .plan import PhysicalPlan, PlanStep, format_plan, parse_plan, parse_plan_json
from .schema import Attr, IntType, Schema, StrType

__version__ = "0.1.0"

__all__ = [
    "Attr", "BufferPool", "Database", "EngineConfig", "ExecContext",
    "ExecutionReport", "HeapFile", "IntType", "IoStats", "PhysicalPlan",
    "PlanStep", "RelqError", "Rid", "Schema", "StrType", "execute",
    "format_plan", "parse_plan", "parse_plan_json", "__version__",
]
