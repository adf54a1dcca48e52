"""Test-vector suites (schema ``tv/1``)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

SCHEMA = "tv/1"


class VectorError(ValueError):
    pass


@dataclass(frozen=True)
class Reset:
    signal: str
    active: int = 1
    cycles: int = 1


@dataclass(frozen=True)
class Step:
    inputs: Mapping[str, int] = field(default_factory=dict)
    expected: Mapping[str, int] = field(default_factory=dict)
    settle_only: bool = False


@dataclass(frozen=True)
class VectorSuite:
    steps: tuple[Step, ...]
    clock: Optional[str] = None
    reset: Optional[Reset] = None

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"schema": SCHEMA}
        if self.clock is not None:
            doc["clock"] = self.clock
        if self.reset is not None:
            doc["reset"] = {"signal": self.reset.signal, "active": self.reset.active, "cycles": self.reset.cycles}
        steps = []
        for s in self.steps:
            entry: dict[str, Any] = {"in": dict(s.inputs), "out": dict(s.expected)}
            if s.settle_only:
                entry["settle"] = True
            steps.append(entry)
        doc["steps"] = steps
        return doc


def _value(raw: Any, where: str) -> int:
    if isinstance(raw, bool):
        raise VectorError(f"{where}: booleans are not valid signal values")
    if isinstance(raw, int):
        value = raw
    elif isinstance(raw, str):
        try:
            value = int(raw, 0)
        except ValueError:
            raise VectorError(f"{where}: cannot read {raw!r} as an integer") from None
    else:
        raise VectorError(f"{where}: expected integer or hex string, got {type(raw).__name__}")
    if value < 0:
        raise VectorError(f"{where}: negative values are not allowed")
    return value


def suite_from_json(doc: Mapping[str, Any]) -> VectorSuite:
    if doc.get("schema") != SCHEMA:
        raise VectorError(f"unsupported vector schema {doc.get('schema')!r}, expected {SCHEMA!r}")
    reset = None
    if doc.get("reset") is not None:
        r = doc["reset"]
        reset = Reset(str(r["signal"]), _value(r.get("active", 1), "reset.active"), _value(r.get("cycles", 1), "reset.cycles"))
        if reset.active not in (0, 1):
            raise VectorError("reset.active must be 0 or 1")
    steps = []
    for i, s in enumerate(doc.get("steps", [])):
        ins = {k: _value(v, f"steps[{i}].in.{k}") for k, v in s.get("in", {}).items()}
        outs = {k: _value(v, f"steps[{i}].out.{k}") for k, v in s.get("out", {}).items()}
        steps.append(Step(ins, outs, bool(s.get("settle", False))))
    clock = doc.get("clock")
    return VectorSuite(tuple(steps), None if clock is None else str(clock), reset)


def load_suite(path: Union[str, Path]) -> VectorSuite:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise VectorError(f"{path}: {exc}") from None
    return suite_from_json(doc)
