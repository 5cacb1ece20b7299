"""Heterogeneous task dependency graphs with in-graph control flow, run by an
adaptive per-domain work-stealing executor."""

from .capture import (
    CapturedGraph,
    DeviceGraph,
    DeviceRuntime,
    StreamSchedule,
    execute_deviceflow,
    levelize,
    make_schedule,
    simulate,
)
from .errors import *  # noqa: F401,F403
from .executor import Executor, ExecutorConfig, MetricsReport, RunHandle
from .graph import Diagnostic, Subflow, TaskGraph, TaskKind, TaskNode
from .notifier import Notifier
from .wsq import RETRY, WorkDeque

__version__ = "0.1.0"
