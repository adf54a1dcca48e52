"""Benchmark metrics over directories of model responses.

Each manifest item points at a vector suite (or an external command) and says
how many samples to expect. Responses live at ``<root>/<item id>/sample_<k>.txt``
for k = 1..n. Every response is split into candidate modules; a response is
OPOO-correct when its first candidate is correct and OPMO-correct when any
candidate is. Syntax and function correctness are tracked separately.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from .reward import Verification, parse_response, score_function, score_syntax
from .sim import load_suite
from .sim.external import DEFAULT_TIMEOUT

log = logging.getLogger(__name__)

MANIFEST_SCHEMA = "bench/1"
REPORT_SCHEMA = "eval/1"
KS = (1, 5)
PROTOCOLS = ("opoo", "opmo")
KINDS = ("syn", "fun")
METRICS = tuple(f"{kind}_{proto}_pass@{k}" for kind in KINDS for proto in PROTOCOLS for k in KS)
COUNTS = ("gen_num", "syn_num", "fun_num", "success_rate")


class ManifestError(ValueError):
    pass


def pass_at_k(n: int, c: int, k: int) -> float:
    """Unbiased estimate of P(at least one of k draws without replacement is correct)."""
    if not (0 <= c <= n):
        raise ValueError(f"need 0 <= c <= n, got n={n}, c={c}")
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if n - c < k:
        return 1.0
    return 1.0 - comb(n - c, k) / comb(n, k)


def success_rate(correct: int, generated: int) -> float:
    return correct / generated if generated else 0.0


@dataclass(frozen=True)
class ResponseVerdict:
    syntax: tuple[bool, ...]
    function: tuple[bool, ...]

    @property
    def generated(self) -> int:
        return len(self.syntax)

    def correct(self, kind: str, protocol: str) -> bool:
        flags = self.syntax if kind == "syn" else self.function
        if protocol == "opoo":
            return bool(flags) and flags[0]
        return any(flags)


def judge_response(raw: str, verification: Optional[Verification]) -> ResponseVerdict:
    candidates = parse_response(raw).candidates
    _, syntax = score_syntax(candidates)
    _, outcomes = score_function(candidates, syntax, verification)
    return ResponseVerdict(
        tuple(v.ok for v in syntax),
        tuple(o is not None and o.passed for o in outcomes),
    )


@dataclass
class ItemReport:
    id: str
    n: int
    missing: list[str] = field(default_factory=list)
    metrics: dict[str, Optional[float]] = field(default_factory=dict)
    verdicts: list[ResponseVerdict] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.missing

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"id": self.id, "n": self.n, "complete": self.complete}
        if self.missing:
            doc["missing"] = list(self.missing)
        else:
            doc.update(self.metrics)
        return doc


def item_metrics(verdicts: Sequence[ResponseVerdict]) -> dict[str, Optional[float]]:
    """Metrics for one item from its n judged responses. pass@k is None when k > n."""
    n = len(verdicts)
    out: dict[str, Optional[float]] = {}
    for kind in KINDS:
        for proto in PROTOCOLS:
            c = sum(v.correct(kind, proto) for v in verdicts)
            for k in KS:
                out[f"{kind}_{proto}_pass@{k}"] = pass_at_k(n, c, k) if k <= n else None
    gen = sum(v.generated for v in verdicts)
    syn = sum(sum(v.syntax) for v in verdicts)
    fun = sum(sum(v.function) for v in verdicts)
    out["gen_num"] = gen / n
    out["syn_num"] = syn / n
    out["fun_num"] = fun / n
    out["success_rate"] = success_rate(fun, gen)
    return out


def evaluate_item(
    item_id: str, responses: Sequence[Optional[str]], verification: Optional[Verification]
) -> ItemReport:
    """``None`` entries mark missing responses; the item is then incomplete."""
    missing = [f"sample_{k}.txt" for k, r in enumerate(responses, 1) if r is None]
    report = ItemReport(item_id, len(responses), missing)
    if missing:
        log.warning("item %s is incomplete: missing %s", item_id, ", ".join(missing))
        return report
    report.verdicts = [judge_response(r, verification) for r in responses]
    report.metrics = item_metrics(report.verdicts)
    return report


# -- manifest ------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestItem:
    id: str
    n: int
    prompt: Optional[Path]
    verification: Optional[Verification]


def load_manifest(
    path: Union[str, Path], external_command: Optional[str] = None, timeout: float = DEFAULT_TIMEOUT
) -> list[ManifestItem]:
    """Read a ``bench/1`` manifest; file paths are relative to the manifest.

    ``external_command`` binds items that name neither ``vectors`` nor
    ``external``.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema", MANIFEST_SCHEMA) != MANIFEST_SCHEMA:
        raise ManifestError(f"{path}: expected a {MANIFEST_SCHEMA!r} manifest")
    raw_items = doc.get("items")
    if not isinstance(raw_items, list):
        raise ManifestError(f"{path}: 'items' must be a list")
    base = path.parent
    items: list[ManifestItem] = []
    seen: set[str] = set()
    for i, entry in enumerate(raw_items):
        where = f"{path}: items[{i}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("id"), str) or not entry["id"]:
            raise ManifestError(f"{where}: each item needs a non-empty string 'id'")
        item_id = entry["id"]
        if item_id in seen:
            raise ManifestError(f"{where}: duplicate id {item_id!r}")
        seen.add(item_id)
        n = entry.get("n", 5)
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ManifestError(f"{where}: 'n' must be a positive integer")
        if "vectors" in entry and "external" in entry:
            raise ManifestError(f"{where}: give either 'vectors' or 'external', not both")
        verification = None
        top = entry.get("top")
        try:
            if "vectors" in entry:
                verification = Verification(suite=load_suite(base / entry["vectors"]), top=top)
            elif "external" in entry:
                verification = Verification(command=str(entry["external"]), top=top, timeout=timeout)
            elif external_command:
                verification = Verification(command=external_command, top=top, timeout=timeout)
        except (OSError, ValueError) as exc:
            raise ManifestError(f"{where}: {exc}") from None
        prompt = base / entry["prompt"] if entry.get("prompt") else None
        items.append(ManifestItem(item_id, n, prompt, verification))
    return items


def read_responses(root: Union[str, Path], item: ManifestItem) -> list[Optional[str]]:
    folder = Path(root) / item.id
    out: list[Optional[str]] = []
    for k in range(1, item.n + 1):
        p = folder / f"sample_{k}.txt"
        try:
            out.append(p.read_bytes().decode("utf-8", errors="replace"))
        except OSError:
            out.append(None)
    return out


# -- report ------------------------------------------------------------------------


@dataclass
class EvalReport:
    items: list[ItemReport]

    @property
    def complete_items(self) -> list[ItemReport]:
        return [it for it in self.items if it.complete]

    @property
    def complete(self) -> bool:
        return bool(self.items) and all(it.complete for it in self.items)

    def aggregate(self) -> dict[str, Optional[float]]:
        """Unweighted means over complete items; a pass@k undefined for some item skips it."""
        done = self.complete_items
        out: dict[str, Optional[float]] = {}
        for key in METRICS + COUNTS:
            values = [it.metrics[key] for it in done if it.metrics.get(key) is not None]
            out[key] = sum(values) / len(values) if values else None
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            "schema": REPORT_SCHEMA,
            "complete_items": len(self.complete_items),
            "total_items": len(self.items),
            "aggregate": self.aggregate(),
            "items": [it.to_json() for it in self.items],
        }

    def table(self) -> str:
        """Fixed-width text table: one row per item plus the aggregate row."""
        cols = ("id",) + COUNTS + METRICS
        rows = []
        for it in self.items:
            if it.complete:
                rows.append([it.id] + [_cell(it.metrics[c]) for c in cols[1:]])
            else:
                rows.append([it.id] + ["incomplete"] + [""] * (len(cols) - 2))
        agg = self.aggregate()
        rows.append(["MEAN"] + [_cell(agg[c]) for c in cols[1:]])
        widths = [max(len(c), *(len(r[i]) for r in rows)) for i, c in enumerate(cols)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
        lines.append("  ".join("-" * w for w in widths))
        lines.extend("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows)
        return "\n".join(lines) + "\n"


def _cell(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3f}"


def evaluate(items: Sequence[ManifestItem], responses_root: Union[str, Path]) -> EvalReport:
    return EvalReport([evaluate_item(it.id, read_responses(responses_root, it), it.verification) for it in items])
