"""Figures written to files for the ``grpo-demo`` and ``eval`` reports."""

from __future__ import annotations

from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .grpo import LearningCurve  # noqa: E402
from .metrics import KS, PROTOCOLS, EvalReport  # noqa: E402


def _save(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    # drop timestamps so repeated runs write identical files
    metadata = {".svg": {"Date": None}, ".pdf": {"CreationDate": None}}.get(path.suffix.lower())
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata=metadata)
    plt.close(fig)
    return path


def plot_learning_curve(curve: LearningCurve, path: Union[str, Path], window: int = 20) -> Path:
    steps = list(range(len(curve.mean_reward)))
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.4, 5.6), sharex=True)
    top.plot(steps, curve.mean_reward, color="0.75", lw=0.8, label="per step")
    if len(steps) >= window:
        smooth = [sum(curve.mean_reward[i - window + 1:i + 1]) / window for i in range(window - 1, len(steps))]
        top.plot(steps[window - 1:], smooth, color="C0", lw=1.6, label=f"{window}-step mean")
    top.set_ylabel("mean group reward")
    top.legend(frameon=False, loc="lower right")
    bottom.plot(steps, curve.entropy, color="C3", lw=1.4)
    bottom.set_ylabel("policy entropy (nats)")
    bottom.set_xlabel("training step")
    for ax in (top, bottom):
        ax.spines[["top", "right"]].set_visible(False)
    fig.align_ylabels()
    return _save(fig, path)


def plot_eval_report(report: EvalReport, path: Union[str, Path]) -> Path:
    """Grouped bars of the aggregate pass@k metrics, OPOO next to OPMO."""
    agg = report.aggregate()
    labels = [f"{kind}@{k}" for kind in ("syn", "fun") for k in KS]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    width = 0.38
    for j, proto in enumerate(PROTOCOLS):
        heights = [agg[f"{kind}_{proto}_pass@{k}"] or 0.0 for kind in ("syn", "fun") for k in KS]
        xs = [i + (j - 0.5) * width for i in range(len(labels))]
        ax.bar(xs, heights, width, label=proto.upper(), color=f"C{j}")
    ax.set_xticks(range(len(labels)), labels)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("pass@k (mean over items)")
    ax.set_title(f"{len(report.complete_items)} of {len(report.items)} items complete", fontsize=10)
    ax.legend(frameon=False)
    ax.spines[["top", "right"]].set_visible(False)
    return _save(fig, path)
