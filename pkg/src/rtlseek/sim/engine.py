"""Cycle-based two-state simulation of an elaborated design."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Optional

from .elaborate import SimDesign
from .vectors import Step, VectorSuite

PASS = "pass"
FAIL = "fail"
SIM_ERROR = "sim_error"


class SimError(Exception):
    pass


class BindError(SimError):
    pass


@dataclass
class SimOutcome:
    verdict: str
    first_failure: Optional[dict] = None
    message: str = ""
    trace: Optional[list[dict[str, int]]] = None
    stdout: str = ""
    stderr: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_json(self, include_trace: bool = False) -> dict[str, Any]:
        doc: dict[str, Any] = {"schema": "sim/1", "verdict": self.verdict, "first_failure": self.first_failure}
        if self.message:
            doc["message"] = self.message
        if include_trace and self.trace is not None:
            doc["trace"] = self.trace
        return doc


class Runtime:
    """Mutable state for one run over a (shared, immutable) SimDesign."""

    def __init__(self, design: SimDesign):
        self.design = design
        self.values: list[int] = [0] * len(design.signals)
        self.nba: list[tuple[int, int, int]] = []
        self.cap = design.net_count + 1
        self._pos = {id(p): i for i, p in enumerate(design.comb)}
        readers: list[list[tuple[int, int]]] = [[] for _ in design.signals]
        for i, p in enumerate(design.comb):
            for sid, m in p.reads.items():
                readers[sid].append((i, m))
        self._readers = readers
        self._dirty: list[int] = []
        self._queued = [False] * len(design.comb)
        trigger_sigs = {sid for p in design.clocked for sid, _ in p.triggers}
        self._last = {sid: 0 for sid in trigger_sigs}

    def write(self, sid: int, new: int) -> None:
        old = self.values[sid]
        if old == new:
            return
        self.values[sid] = new
        changed = old ^ new
        for pos, m in self._readers[sid]:
            if m & changed and not self._queued[pos]:
                self._queued[pos] = True
                heapq.heappush(self._dirty, pos)

    def settle(self) -> None:
        counts: dict[int, int] = {}
        comb = self.design.comb
        while self._dirty:
            pos = heapq.heappop(self._dirty)
            self._queued[pos] = False
            n = counts.get(pos, 0) + 1
            if n > self.cap:
                raise SimError(f"combinational logic did not settle ({comb[pos].label} evaluated {n} times)")
            counts[pos] = n
            comb[pos].run(self)
            if self.nba:
                pending, self.nba = self.nba, []
                for sid, m, bits in pending:
                    self.write(sid, (self.values[sid] & ~m) | bits)

    def mark_all(self) -> None:
        for pos in range(len(self.design.comb)):
            if not self._queued[pos]:
                self._queued[pos] = True
                heapq.heappush(self._dirty, pos)

    def propagate(self) -> None:
        """Settle, then fire edge-triggered processes until nothing changes."""
        self.settle()
        for _ in range(self.cap + 1):
            fired = []
            for p in self.design.clocked:
                for sid, edge in p.triggers:
                    old, new = self._last[sid] & 1, self.values[sid] & 1
                    if (edge == "posedge" and old == 0 and new == 1) or (edge == "negedge" and old == 1 and new == 0):
                        fired.append(p)
                        break
            for sid in self._last:
                self._last[sid] = self.values[sid]
            if not fired:
                return
            for p in fired:
                p.run(self)
            pending, self.nba = self.nba, []
            for sid, m, bits in pending:
                self.write(sid, (self.values[sid] & ~m) | bits)
            self.settle()
        raise SimError("edge-triggered logic did not settle")

    def snapshot(self) -> dict[str, int]:
        names = self.design.alias
        return {name: self.values[sid] for name, sid in sorted(names.items())}


def _bind(design: SimDesign, suite: VectorSuite) -> None:
    ports = design.ports

    def check(name: str, value: Optional[int], want_input: bool, where: str) -> None:
        if name not in ports:
            raise BindError(f"{where}: {name!r} is not a port of {design.top!r}")
        direction, sid = ports[name]
        if want_input and direction != "input":
            raise BindError(f"{where}: {name!r} is not an input port")
        if value is not None and value >> design.signals[sid].width:
            raise BindError(f"{where}: value {value} does not fit in {design.signals[sid].width} bits of {name!r}")

    if suite.clock is not None:
        check(suite.clock, None, True, "clock")
    if suite.reset is not None:
        check(suite.reset.signal, None, True, "reset")
    for i, step in enumerate(suite.steps):
        for name, value in step.inputs.items():
            check(name, value, True, f"step {i}")
            if name == suite.clock:
                raise BindError(f"step {i}: the clock is driven by the runner, not by vectors")
        for name, value in step.expected.items():
            check(name, value, False, f"step {i}")


def _apply(rt: Runtime, design: SimDesign, assignments: dict[str, int]) -> None:
    for name, value in assignments.items():
        rt.write(design.ports[name][1], value)


def run(design: SimDesign, suite: VectorSuite, trace: bool = False) -> SimOutcome:
    try:
        _bind(design, suite)
    except BindError as exc:
        return SimOutcome(SIM_ERROR, message=str(exc))
    rt = Runtime(design)
    snapshots: Optional[list[dict[str, int]]] = [] if trace else None
    clk = design.ports[suite.clock][1] if suite.clock is not None else None
    try:
        rt.mark_all()
        rt.propagate()
        if suite.reset is not None:
            rst = design.ports[suite.reset.signal][1]
            rt.write(rst, suite.reset.active)
            rt.propagate()
            if clk is not None:
                for _ in range(suite.reset.cycles):
                    rt.write(clk, 0)
                    rt.propagate()
                    rt.write(clk, 1)
                    rt.propagate()
            rt.write(rst, 1 - suite.reset.active)
            rt.propagate()
        for i, step in enumerate(suite.steps):
            failure = _step(rt, design, step, clk)
            if snapshots is not None:
                snapshots.append(rt.snapshot())
            if failure is not None:
                failure["step"] = i
                return SimOutcome(FAIL, first_failure=failure, trace=snapshots)
    except SimError as exc:
        return SimOutcome(SIM_ERROR, message=str(exc), trace=snapshots)
    return SimOutcome(PASS, trace=snapshots)


def _step(rt: Runtime, design: SimDesign, step: Step, clk: Optional[int]) -> Optional[dict]:
    if clk is not None and not step.settle_only:
        rt.write(clk, 0)
    _apply(rt, design, dict(step.inputs))
    rt.propagate()
    if clk is not None and not step.settle_only:
        rt.write(clk, 1)
        rt.propagate()
    for name, expected in step.expected.items():
        actual = rt.values[design.ports[name][1]]
        if actual != expected:
            return {"signal": name, "expected": expected, "actual": actual}
    return None
