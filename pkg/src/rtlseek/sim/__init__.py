"""Built-in cycle-based simulator plus an external-command hook."""

from __future__ import annotations

from typing import Optional, Sequence

from ..verilog import ast as A
from .elaborate import ElaborationError, SimDesign, elaborate
from .engine import FAIL, PASS, SIM_ERROR, SimError, SimOutcome, run
from .external import run_external
from .vectors import Reset, Step, VectorError, VectorSuite, load_suite, suite_from_json


def simulate(
    tree: A.SyntaxTree,
    suite: VectorSuite,
    top: Optional[str] = None,
    library: Sequence[A.ModuleDecl] = (),
    trace: bool = False,
) -> SimOutcome:
    """Elaborate and run; elaboration failures come back as ``sim_error``."""
    try:
        design = elaborate(tree, top, list(library))
    except ElaborationError as exc:
        return SimOutcome(SIM_ERROR, message=f"elaboration failed: {exc}")
    return run(design, suite, trace=trace)


__all__ = [
    "ElaborationError",
    "FAIL",
    "PASS",
    "Reset",
    "SIM_ERROR",
    "SimDesign",
    "SimError",
    "SimOutcome",
    "Step",
    "VectorError",
    "VectorSuite",
    "elaborate",
    "load_suite",
    "run",
    "run_external",
    "simulate",
    "suite_from_json",
]
