"""Multi-objective reward for one model response.

    R_total = R_syn + R_func + R_div + R_cont

* R_syn  is 1 when any candidate module passes the syntax check.
* R_func is 1 when any syntactically valid candidate passes simulation.
* R_div  = N_c + N_s, the number of structurally distinct classes among
  the syntactically valid candidates and among the passing candidates.
* R_cont = 0.5*L_t + 0.5*I_f when R_syn + R_func + R_div > 4,
  else -0.5*L_t + 0.5*I_f. I_f is +1/-1 for well-formed/missing tags and L_t
  is the mean of the last four think lengths over the current one.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence, Union

from . import canon
from .sim import SIM_ERROR, SimOutcome, VectorSuite, run_external, simulate
from .sim.external import DEFAULT_TIMEOUT
from .verilog import SyntaxVerdict, check_syntax
from .verilog import ast as A

SCHEMA = "reward/1"
THRESHOLD = 4
HISTORY_SIZE = 4
LT_MAX = 4.0

THINK_OPEN, THINK_CLOSE = "<think>", "</think>"
DESIGN_OPEN, DESIGN_CLOSE = "<total_design>", "</total_design>"

COMPONENTS = ("syn", "func", "div", "cont")
STAGE_COMPONENTS = {
    2: frozenset({"syn", "div", "cont"}),
    3: frozenset({"syn", "func", "div", "cont"}),
}

SKIPPED = "skipped"


# -- response parsing -----------------------------------------------------------


@dataclass(frozen=True)
class ModelResponse:
    raw_text: str
    think_span: Optional[tuple[int, int]]
    design_span: Optional[tuple[int, int]]
    candidates: tuple[str, ...]

    @property
    def think(self) -> Optional[str]:
        return None if self.think_span is None else self.raw_text[self.think_span[0]:self.think_span[1]]

    @property
    def design(self) -> Optional[str]:
        return None if self.design_span is None else self.raw_text[self.design_span[0]:self.design_span[1]]

    @property
    def well_formatted(self) -> bool:
        return (
            self.think_span is not None
            and self.design_span is not None
            and self.think_span[1] + len(THINK_CLOSE) <= self.design_span[0] - len(DESIGN_OPEN)
        )


def _find_pair(text: str, open_tag: str, close_tag: str, start: int = 0) -> Optional[tuple[int, int]]:
    i = text.find(open_tag, start)
    if i < 0:
        return None
    body = i + len(open_tag)
    j = text.find(close_tag, body)
    if j < 0:
        return None
    return body, j


_SCAN_RE = re.compile(
    r"//[^\n]*|/\*.*?\*/|\"(?:[^\"\\\n]|\\.)*\"|(?<![A-Za-z0-9_$])(?:endmodule|module)(?![A-Za-z0-9_$])",
    re.DOTALL,
)


def extract_modules(text: str) -> list[str]:
    """Top-level ``module ... endmodule`` blocks, skipping comments and strings."""
    out = []
    depth = 0
    start = 0
    for m in _SCAN_RE.finditer(text):
        word = m.group()
        if word == "module":
            if depth == 0:
                start = m.start()
            depth += 1
        elif word == "endmodule":
            if depth == 0:
                continue
            depth -= 1
            if depth == 0:
                out.append(text[start:m.end()])
    return out


def parse_response(raw: str) -> ModelResponse:
    think = _find_pair(raw, THINK_OPEN, THINK_CLOSE)
    design = _find_pair(raw, DESIGN_OPEN, DESIGN_CLOSE)
    if design is not None and think is not None:
        t_open, t_close = think[0] - len(THINK_OPEN), think[1] + len(THINK_CLOSE)
        d_open, d_close = design[0] - len(DESIGN_OPEN), design[1] + len(DESIGN_CLOSE)
        if d_open < t_close and t_open < d_close:
            design = _find_pair(raw, DESIGN_OPEN, DESIGN_CLOSE, t_close)
    source = raw if design is None else raw[design[0]:design[1]]
    return ModelResponse(raw, think, design, tuple(extract_modules(source)))


# -- history ------------------------------------------------------------------------


class HistoryWindow:
    """The most recent think lengths; appending evicts the oldest."""

    def __init__(self, lengths: Iterable[int] = ()):
        self._lengths: deque[int] = deque(maxlen=HISTORY_SIZE)
        self._lengths.extend(lengths)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(self._lengths)

    def append(self, length: int) -> None:
        self._lengths.append(length)

    def mean(self) -> Optional[float]:
        if not self._lengths:
            return None
        return sum(self._lengths) / len(self._lengths)

    def __len__(self) -> int:
        return len(self._lengths)

    def __repr__(self) -> str:
        return f"HistoryWindow({list(self._lengths)})"

    @classmethod
    def load(cls, path: Union[str, Path]) -> "HistoryWindow":
        path = Path(path)
        if not path.exists():
            return cls()
        values = []
        for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            value = json.loads(line)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ValueError(f"{path}:{n}: history entries must be non-negative integers")
            values.append(value)
        return cls(values[-HISTORY_SIZE:])

    @staticmethod
    def append_to_file(path: Union[str, Path], length: int) -> None:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(f"{int(length)}\n")


# -- verification binding --------------------------------------------------------


@dataclass(frozen=True)
class Verification:
    """How candidates are checked for function: a vector suite or a command."""

    suite: Optional[VectorSuite] = None
    command: Optional[str] = None
    top: Optional[str] = None
    timeout: float = DEFAULT_TIMEOUT
    workdir: Optional[str] = None

    def __post_init__(self):
        if (self.suite is None) == (self.command is None):
            raise ValueError("exactly one of suite or command must be given")


# -- breakdown ------------------------------------------------------------------


@dataclass(frozen=True)
class CandidateVerdict:
    syntax: bool
    sim: str  # pass | fail | sim_error | skipped
    class_id: Optional[int]
    diagnostic: Optional[dict] = None
    sim_message: str = ""

    def to_json(self) -> dict[str, Any]:
        return {
            "syntax": "pass" if self.syntax else "fail",
            "diagnostic": self.diagnostic,
            "sim": self.sim,
            "sim_message": self.sim_message,
            "class_id": self.class_id,
        }


@dataclass(frozen=True)
class RewardBreakdown:
    stage: int
    r_syn: int
    r_func: int
    r_div: int
    r_cont: float
    r_total: float
    n_c: int
    n_s: int
    i_s: int
    i_f: int
    l_t: float
    think_length: int
    weights: Mapping[str, float]
    per_candidate: tuple[CandidateVerdict, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "stage": self.stage,
            "r_syn": self.r_syn,
            "r_func": self.r_func,
            "r_div": self.r_div,
            "r_cont": self.r_cont,
            "r_total": self.r_total,
            "n_c": self.n_c,
            "n_s": self.n_s,
            "i_s": self.i_s,
            "i_f": self.i_f,
            "l_t": self.l_t,
            "think_length": self.think_length,
            "weights": {k: self.weights[k] for k in COMPONENTS},
            "per_candidate": [c.to_json() for c in self.per_candidate],
        }


# -- component scores ------------------------------------------------------------


def score_syntax(candidates: Sequence[str]) -> tuple[int, list[SyntaxVerdict]]:
    verdicts = [check_syntax(c) for c in candidates]
    return int(any(v.ok for v in verdicts)), verdicts


def _library(trees: Sequence[Optional[A.SyntaxTree]], i: int) -> list[A.ModuleDecl]:
    """Modules from the other valid candidates, usable as submodules of ``i``."""
    own = {m.name for m in trees[i].modules}
    lib: dict[str, A.ModuleDecl] = {}
    for j, t in enumerate(trees):
        if j == i or t is None:
            continue
        for m in t.modules:
            if m.name not in own and m.name not in lib:
                lib[m.name] = m
    return list(lib.values())


def _needed_sources(trees, sources, i: int) -> list[str]:
    """Sources of the other candidates that candidate ``i`` instantiates, transitively."""
    owner: dict[str, int] = {}
    for j, t in enumerate(trees):
        if j != i and t is not None:
            for m in t.modules:
                owner.setdefault(m.name, j)
    own = {m.name for m in trees[i].modules}
    picked: list[int] = []
    todo = [trees[i]]
    while todo:
        t = todo.pop()
        for m in t.modules:
            for item in m.items:
                if isinstance(item, A.Instantiation) and item.module not in own:
                    j = owner.get(item.module)
                    if j is not None and j not in picked:
                        picked.append(j)
                        todo.append(trees[j])
    return [sources[j] for j in picked]


def check_candidate(
    trees: Sequence[Optional[A.SyntaxTree]], sources: Sequence[str], i: int, verification: Verification
) -> SimOutcome:
    if verification.suite is not None:
        return simulate(trees[i], verification.suite, verification.top, _library(trees, i))
    text = "\n\n".join([sources[i]] + _needed_sources(trees, sources, i))
    return run_external(text, verification.command, verification.workdir, verification.timeout)


def score_function(
    candidates: Sequence[str],
    syntax_verdicts: Sequence[SyntaxVerdict],
    verification: Optional[Verification],
) -> tuple[int, list[SimOutcome | None]]:
    """``None`` in the returned list marks a skipped candidate."""
    outcomes: list[Optional[SimOutcome]] = [None] * len(candidates)
    if verification is None:
        return 0, outcomes
    trees = [v.tree if v.ok else None for v in syntax_verdicts]
    for i, tree in enumerate(trees):
        if tree is None:
            continue
        try:
            outcomes[i] = check_candidate(trees, candidates, i, verification)
        except Exception as exc:  # a broken candidate must never abort scoring
            outcomes[i] = SimOutcome(SIM_ERROR, message=f"{type(exc).__name__}: {exc}")
    return int(any(o is not None and o.passed for o in outcomes)), outcomes


def score_diversity(
    syntax_verdicts: Sequence[SyntaxVerdict], sim_outcomes: Sequence[Optional[SimOutcome]]
) -> tuple[int, int, int, list[Optional[int]]]:
    """Returns ``(r_div, n_c, n_s, class id per candidate)``."""
    valid = [i for i, v in enumerate(syntax_verdicts) if v.ok]
    class_ids: list[Optional[int]] = [None] * len(syntax_verdicts)
    if not valid:
        return 0, 0, 0, class_ids
    parts = canon.partition([syntax_verdicts[i].tree for i in valid])
    for cid, members in enumerate(parts.classes):
        for k in members:
            class_ids[valid[k]] = cid
    n_c = len(parts.classes)
    n_s = len({class_ids[i] for i in valid if sim_outcomes[i] is not None and sim_outcomes[i].passed})
    return n_c + n_s, n_c, n_s, class_ids


def think_length(response: ModelResponse) -> int:
    """Characters in the think span, or the whole response when it is missing; at least 1."""
    text = response.think if response.think is not None else response.raw_text
    return max(len(text), 1)


def score_context(
    response: ModelResponse, history: HistoryWindow, i_s: int, update: bool = True
) -> tuple[float, float, int, int]:
    """Returns ``(r_cont, l_t, i_f, think_length)`` and records the length in ``history``."""
    i_f = 1 if response.well_formatted else -1
    length = think_length(response)
    mean = history.mean()
    l_t = 1.0 if mean is None else mean / length
    l_t = min(max(l_t, 0.0), LT_MAX)
    if i_s:
        r_cont = 0.5 * l_t + 0.5 * i_f
    else:
        r_cont = -0.5 * l_t + 0.5 * i_f
    if update:
        history.append(length)
    return r_cont, l_t, i_f, length


# -- composition ----------------------------------------------------------------


@dataclass
class RewardConfig:
    """Stage preset, static weights and an optional weight schedule.

    ``schedule(step)`` may return a partial weight mapping that overrides the
    static weights for that call; no schedule ships by default.
    """

    stage: int = 3
    verification: Optional[Verification] = None
    weights: Mapping[str, float] = field(default_factory=lambda: {k: 1.0 for k in COMPONENTS})
    schedule: Optional[Callable[[int], Mapping[str, float]]] = None

    def __post_init__(self):
        if self.stage not in STAGE_COMPONENTS:
            raise ValueError(f"stage must be 2 or 3, got {self.stage!r}")
        unknown = set(self.weights) - set(COMPONENTS)
        if unknown:
            raise ValueError(f"unknown reward components: {sorted(unknown)}")

    @property
    def live(self) -> frozenset[str]:
        return STAGE_COMPONENTS[self.stage]

    def weights_for(self, step: int = 0) -> dict[str, float]:
        w = {k: float(self.weights.get(k, 1.0)) for k in COMPONENTS}
        if self.schedule is not None:
            w.update({k: float(v) for k, v in self.schedule(step).items() if k in w})
        return w


def score(raw: str, config: RewardConfig, history: HistoryWindow, step: int = 0) -> RewardBreakdown:
    response = parse_response(raw)
    live = config.live
    weights = config.weights_for(step)

    r_syn, syntax = score_syntax(response.candidates)
    verification = config.verification if "func" in live else None
    r_func, outcomes = score_function(response.candidates, syntax, verification)
    r_div, n_c, n_s, class_ids = score_diversity(syntax, outcomes)

    parts = {"syn": r_syn, "func": r_func, "div": r_div}
    for k in parts:
        if k not in live:
            parts[k] = 0
    satisfied = sum(weights[k] * parts[k] for k in parts)
    i_s = int(satisfied > THRESHOLD)
    r_cont, l_t, i_f, length = score_context(response, history, i_s)
    if "cont" not in live:
        r_cont = 0.0
    r_total = satisfied + weights["cont"] * r_cont

    per_candidate = tuple(
        CandidateVerdict(
            syntax=v.ok,
            sim=SKIPPED if o is None else o.verdict,
            class_id=class_ids[i],
            diagnostic=None if v.ok else v.error.to_json(),
            sim_message="" if o is None else o.message,
        )
        for i, (v, o) in enumerate(zip(syntax, outcomes))
    )
    return RewardBreakdown(
        stage=config.stage,
        r_syn=parts["syn"],
        r_func=parts["func"],
        r_div=parts["div"],
        r_cont=r_cont,
        r_total=r_total,
        n_c=n_c,
        n_s=n_s,
        i_s=i_s,
        i_f=i_f,
        l_t=l_t,
        think_length=length,
        weights=weights,
        per_candidate=per_candidate,
    )
