"""Group-relative policy optimization on a toy categorical policy.

The policy is a softmax over a small vocabulary of atomic "designs", so a
sampled output is one integer and its log-probability is a single
log-softmax entry. Everything here is plain numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Environment = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GrpoConfig:
    group_size: int = 8
    clip_eps: float = 0.2
    kl_beta: float = 0.04
    adv_eps: float = 1e-8

    def __post_init__(self):
        if self.group_size < 2:
            raise ValueError("group_size must be at least 2")
        if not (0 < self.clip_eps <= 1):
            raise ValueError("clip_eps must be in (0, 1]")
        if self.kl_beta < 0:
            raise ValueError("kl_beta must be non-negative")
        if self.adv_eps < 0:
            raise ValueError("adv_eps must be non-negative")


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits)
    return z - np.log(np.sum(np.exp(z)))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def entropy(logits: np.ndarray) -> float:
    lp = log_softmax(logits)
    return float(-np.sum(np.exp(lp) * lp))


@dataclass
class ToyPolicy:
    logits: np.ndarray
    ref_logits: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=float).copy()
        if self.ref_logits is None:
            self.ref_logits = self.logits.copy()
        else:
            self.ref_logits = np.asarray(self.ref_logits, dtype=float).copy()
        if self.logits.shape != self.ref_logits.shape or self.logits.ndim != 1:
            raise ValueError("logits and ref_logits must be 1-D arrays of equal length")

    @property
    def size(self) -> int:
        return self.logits.shape[0]

    def probs(self) -> np.ndarray:
        return softmax(self.logits)

    def ref_probs(self) -> np.ndarray:
        return softmax(self.ref_logits)

    def logprob(self, outputs: np.ndarray) -> np.ndarray:
        return log_softmax(self.logits)[outputs]

    def ref_logprob(self, outputs: np.ndarray) -> np.ndarray:
        return log_softmax(self.ref_logits)[outputs]

    def entropy(self) -> float:
        return entropy(self.logits)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.choice(self.size, size=n, p=self.probs())


@dataclass(frozen=True)
class GroupBatch:
    outputs: np.ndarray
    rewards: np.ndarray
    advantages: np.ndarray
    logprob_current: np.ndarray
    logprob_old: np.ndarray
    logprob_ref: np.ndarray

    def __post_init__(self):
        n = len(self.rewards)
        for name in ("outputs", "advantages", "logprob_current", "logprob_old", "logprob_ref"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, expected {n}")

    def with_current(self, logprob_current: np.ndarray) -> "GroupBatch":
        return GroupBatch(self.outputs, self.rewards, self.advantages, np.asarray(logprob_current, float),
                          self.logprob_old, self.logprob_ref)


def advantages(rewards: Sequence[float], eps: float = 1e-8) -> np.ndarray:
    """Standardize rewards within the group: (r - mean) / (population std + eps)."""
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise ValueError("a group needs at least two rewards")
    centered = r - r.mean()
    std = float(np.sqrt(np.mean(centered ** 2)))
    if std == 0.0 or np.all(r == r[0]):
        return np.zeros_like(r)
    return centered / (std + eps)


def k3(logprob_ref: np.ndarray, logprob_current: np.ndarray) -> np.ndarray:
    """Per-sample KL estimate exp(d) - d - 1 with d = ref - current; never negative."""
    d = np.asarray(logprob_ref, float) - np.asarray(logprob_current, float)
    return np.expm1(d) - d


def _check_finite(batch: GroupBatch) -> None:
    for name in ("logprob_current", "logprob_old", "logprob_ref", "advantages"):
        if not np.all(np.isfinite(getattr(batch, name))):
            raise ValueError(f"non-finite values in {name}")


def objective(batch: GroupBatch, config: GrpoConfig) -> float:
    _check_finite(batch)
    ratio = np.exp(batch.logprob_current - batch.logprob_old)
    a = batch.advantages
    clipped = np.clip(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps)
    surrogate = np.minimum(ratio * a, clipped * a)
    return float(np.mean(surrogate - config.kl_beta * k3(batch.logprob_ref, batch.logprob_current)))


def policy_objective(policy: ToyPolicy, batch: GroupBatch, config: GrpoConfig) -> float:
    """Objective with current log-probabilities taken from ``policy``."""
    return objective(batch.with_current(policy.logprob(batch.outputs)), config)


def gradient(policy: ToyPolicy, batch: GroupBatch, config: GrpoConfig) -> np.ndarray:
    """Analytic d(objective)/d(logits); the clip uses the min-branch subgradient."""
    batch = batch.with_current(policy.logprob(batch.outputs))
    _check_finite(batch)
    probs = policy.probs()
    ratio = np.exp(batch.logprob_current - batch.logprob_old)
    a = batch.advantages
    lo, hi = 1.0 - config.clip_eps, 1.0 + config.clip_eps
    unclipped_is_min = ratio * a <= np.clip(ratio, lo, hi) * a
    inside = (ratio >= lo) & (ratio <= hi)
    surrogate = np.where(unclipped_is_min | inside, a * ratio, 0.0)
    kl = -config.kl_beta * (1.0 - np.exp(batch.logprob_ref - batch.logprob_current))
    coef = (surrogate + kl) / len(a)
    # d log pi(o) / d logits = onehot(o) - probs
    grad = np.zeros(policy.size)
    np.add.at(grad, batch.outputs, coef)
    grad -= coef.sum() * probs
    return grad


# -- environments --------------------------------------------------------------


def single_best(target: int = 3) -> Environment:
    """Reward 1 for sampling ``target`` and 0 otherwise."""

    def env(outputs: np.ndarray) -> np.ndarray:
        return (np.asarray(outputs) == target).astype(float)

    return env


def diversity(valid: Sequence[bool]) -> Environment:
    """Each valid output earns 1/(copies of it in the group).

    The group total is then the number of distinct valid outputs, while each
    sample is credited for its share; rare valid designs score highest.
    """
    valid_mask = np.asarray(valid, dtype=bool)

    def env(outputs: np.ndarray) -> np.ndarray:
        outputs = np.asarray(outputs)
        _, inverse, counts = np.unique(outputs, return_inverse=True, return_counts=True)
        return valid_mask[outputs] / counts[inverse]

    return env


def distinct_valid(outputs: np.ndarray, valid: Sequence[bool]) -> int:
    return len({int(o) for o in outputs if valid[int(o)]})


def expected_distinct(probs: np.ndarray, valid: Sequence[bool], group_size: int) -> float:
    """E[number of distinct valid items in ``group_size`` independent draws]."""
    p = np.asarray(probs, float)[np.asarray(valid, bool)]
    return float(np.sum(1.0 - (1.0 - p) ** group_size))


def near_degenerate_logits(size: int, favoured: int = 0, margin: float = 3.0) -> np.ndarray:
    logits = np.zeros(size)
    logits[favoured] = margin
    return logits


@dataclass
class LearningCurve:
    mean_reward: list[float]
    entropy: list[float]
    policy: ToyPolicy

    def rows(self):
        for step, (r, h) in enumerate(zip(self.mean_reward, self.entropy)):
            yield step, r, h

    def to_csv(self) -> str:
        lines = ["step,mean_reward,entropy"]
        lines.extend(f"{s},{r:.6f},{h:.6f}" for s, r, h in self.rows())
        return "\n".join(lines) + "\n"


def train_demo(
    environment: Environment,
    config: GrpoConfig,
    steps: int,
    policy: ToyPolicy,
    lr: float = 0.1,
    seed: int = 0,
    inner_steps: int = 1,
) -> LearningCurve:
    """Snapshot, sample, score, standardize, ascend; repeat ``steps`` times.

    ``policy`` is updated in place. Entry ``k`` of the curve describes the
    policy before update ``k`` (its group's mean reward and its entropy).
    """
    rng = np.random.default_rng(seed)
    rewards_out: list[float] = []
    entropy_out: list[float] = []
    for _ in range(steps):
        old_lp = log_softmax(policy.logits)
        outputs = policy.sample(rng, config.group_size)
        rewards = np.asarray(environment(outputs), dtype=float)
        adv = advantages(rewards, config.adv_eps)
        batch = GroupBatch(outputs, rewards, adv, old_lp[outputs], old_lp[outputs], policy.ref_logprob(outputs))
        rewards_out.append(float(rewards.mean()))
        entropy_out.append(policy.entropy())
        for _ in range(inner_steps):
            policy.logits = policy.logits + lr * gradient(policy, batch, config)
    return LearningCurve(rewards_out, entropy_out, policy)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))

