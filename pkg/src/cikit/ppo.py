"""Desk-scale PPO over compliance choices.

The policy is linear-softmax over three actions (the A/B/C choice letters),
the critic a linear value function, both over hashed case features. One
episode is one case: sample a case, sample a choice, collect the binary
compliance reward. Advantages come from GAE (implemented for general T >= 1
even though rollouts here are length-1), the policy ascends the clipped
surrogate minus a KL penalty via analytic gradients, and the critic
descends squared error to the GAE returns.

Everything is deterministic under a fixed seed: sampling, shuffling, and
updates are driven by one numpy Generator, and the update itself is pure
linear algebra.

Default learning rates (1e-2 actor / 1e-1 critic) are sized for this linear
policy; far smaller LLM-scale values are accepted through the config.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .cases import CaseStore, LegalCase
from .ci import ComplianceVerdict, Domain, verdict_to_choice
from . import verifier

__all__ = [
    "ACTIONS",
    "PpoConfig",
    "CaseFeaturizer",
    "PolicyParams",
    "ValueParams",
    "PpoBatch",
    "PpoDiagnostics",
    "IterationStats",
    "TrainResult",
    "ratio",
    "gae_advantages",
    "clipped_surrogate",
    "policy_logprobs",
    "surrogate_objective",
    "policy_gradient",
    "value_loss_and_grad",
    "update_step",
    "train",
]

# Action order mirrors the compliance question's option order.
ACTIONS = ("A", "B", "C")
_DOMAIN_ORDER = (Domain.GDPR, Domain.HIPAA, Domain.AI_ACT)


@dataclass(frozen=True)
class PpoConfig:
    epsilon: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    kl_coef: float = 1e-2
    lr_actor: float = 1e-2
    lr_critic: float = 1e-1
    epochs_per_batch: int = 16
    batch_size: int = 64
    seed: int = 0
    iterations: int = 500
    hash_dim: int = 64

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if not (0.0 <= self.gamma <= 1.0 and 0.0 <= self.lam <= 1.0):
            raise ValueError("gamma and lam must lie in [0, 1]")
        for name in ("lr_actor", "lr_critic"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("epochs_per_batch", "batch_size", "iterations", "hash_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be a positive integer")

    @classmethod
    def from_json(cls, data: Mapping) -> "PpoConfig":
        kwargs = dict(data)
        if "lambda" in kwargs:  # JSON alias; `lambda` is reserved in Python
            kwargs["lam"] = kwargs.pop("lambda")
        return cls(**kwargs)


class CaseFeaturizer:
    """Case -> fixed vector: domain one-hot, hashed annotation tags, bias.

    The hashed block collects every annotation string (roles, information
    types, attributes, purpose), buckets them with a stable hash, and is L2
    normalized so feature scale is independent of annotation richness.
    """

    def __init__(self, hash_dim: int = 64):
        if hash_dim <= 0:
            raise ValueError("hash_dim must be positive")
        self.hash_dim = hash_dim
        self.dimension = len(_DOMAIN_ORDER) + hash_dim + 1

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2s(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.hash_dim

    def featurize(self, case: LegalCase) -> np.ndarray:
        x = np.zeros(self.dimension, dtype=np.float64)
        if case.domain in _DOMAIN_ORDER:
            x[_DOMAIN_ORDER.index(case.domain)] = 1.0
        offset = len(_DOMAIN_ORDER)
        tags = []
        for name in ("sender", "subject", "recipient", "information_type", "attributes", "purpose"):
            values = case.annotation.labels(name)
            if values:
                tags.extend(f"{name}={v}" for v in values)
        for tag in tags:
            x[offset + self._bucket(tag)] += 1.0
        block = x[offset:offset + self.hash_dim]
        norm = float(np.linalg.norm(block))
        if norm > 0:
            block /= norm
        x[-1] = 1.0
        return x


@dataclass(frozen=True)
class PolicyParams:
    """Linear-softmax policy weights, shape (actions, feature_dim)."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != len(ACTIONS):
            raise ValueError(f"policy weights must have shape ({len(ACTIONS)}, D)")
        if not np.all(np.isfinite(w)):
            raise ValueError("policy weights must be finite")
        object.__setattr__(self, "weights", w)

    @classmethod
    def zeros(cls, feature_dim: int) -> "PolicyParams":
        return cls(np.zeros((len(ACTIONS), feature_dim)))


@dataclass(frozen=True)
class ValueParams:
    """Linear value-function weights, shape (feature_dim,)."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError("value weights must be a vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("value weights must be finite")
        object.__setattr__(self, "weights", w)

    @classmethod
    def zeros(cls, feature_dim: int) -> "ValueParams":
        return cls(np.zeros(feature_dim))


@dataclass(frozen=True)
class PpoBatch:
    """One rollout: per-step states, actions, old log-probs, rewards, values, dones."""

    states: np.ndarray       # (T, D)
    actions: np.ndarray      # (T,) int
    old_logprobs: np.ndarray # (T,)
    rewards: np.ndarray      # (T,)
    values: np.ndarray       # (T,)
    dones: np.ndarray        # (T,) bool

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=np.float64)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", np.asarray(self.actions, dtype=np.int64))
        object.__setattr__(self, "old_logprobs", np.asarray(self.old_logprobs, dtype=np.float64))
        object.__setattr__(self, "rewards", np.asarray(self.rewards, dtype=np.float64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "dones", np.asarray(self.dones, dtype=bool))
        t = len(states)
        for name in ("actions", "old_logprobs", "rewards", "values", "dones"):
            if len(getattr(self, name)) != t:
                raise ValueError(f"batch field {name} length != {t}")
        if t == 0:
            raise ValueError("batch must be non-empty")
        if not np.all(np.isfinite(self.old_logprobs)):
            raise ValueError("old_logprobs must be finite")

    def __len__(self) -> int:
        return len(self.actions)


def ratio(new_logprob: float, old_logprob: float) -> float:
    """Probability ratio exp(new - old); positive for finite inputs."""
    if not (math.isfinite(new_logprob) and math.isfinite(old_logprob)):
        raise ValueError("log-probabilities must be finite")
    return math.exp(new_logprob - old_logprob)


def gae_advantages(
    rewards: Sequence[float],
    values: Sequence[float],
    dones: Sequence[bool],
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation.

    delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t), with V = 0
    past the end of the batch; A_t = delta_t + gamma*lam*(1-done_t)*A_{t+1};
    returns_t = A_t + V(s_t). With lam = 0 the advantages reduce to one-step
    TD errors.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    t_len = len(rewards)
    if len(values) != t_len or len(dones) != t_len:
        raise ValueError("rewards, values and dones must have equal length")

    advantages = np.zeros(t_len, dtype=np.float64)
    running = 0.0
    for t in reversed(range(t_len)):
        next_value = values[t + 1] if t + 1 < t_len else 0.0
        nonterminal = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        running = delta + gamma * lam * nonterminal * running
        advantages[t] = running
    return advantages, advantages + values


def clipped_surrogate(
    ratios: Sequence[float],
    advantages: Sequence[float],
    epsilon: float,
) -> float:
    """Mean over t of min(r_t * A_t, clip(r_t, 1-eps, 1+eps) * A_t)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    r = np.asarray(ratios, dtype=np.float64)
    a = np.asarray(advantages, dtype=np.float64)
    if r.shape != a.shape:
        raise ValueError("ratios and advantages must have equal length")
    unclipped = r * a
    clipped = np.clip(r, 1.0 - epsilon, 1.0 + epsilon) * a
    return float(np.mean(np.minimum(unclipped, clipped)))


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def policy_logprobs(policy: PolicyParams, states: np.ndarray) -> np.ndarray:
    """Log action probabilities for each state, shape (T, actions)."""
    return _log_softmax(states @ policy.weights.T)


def surrogate_objective(
    policy: PolicyParams,
    batch: PpoBatch,
    advantages: np.ndarray,
    config: PpoConfig,
) -> tuple[float, float]:
    """(objective, approx_kl): clipped surrogate minus kl_coef * approx-KL.

    approx-KL is the sample mean of (old_logprob - new_logprob); it is 0 at
    the pre-update parameters, where every ratio equals 1.
    """
    logp = policy_logprobs(policy, batch.states)
    new_lp = logp[np.arange(len(batch)), batch.actions]
    ratios = np.exp(new_lp - batch.old_logprobs)
    surrogate = clipped_surrogate(ratios, advantages, config.epsilon)
    approx_kl = float(np.mean(batch.old_logprobs - new_lp))
    return surrogate - config.kl_coef * approx_kl, approx_kl


def policy_gradient(
    policy: PolicyParams,
    batch: PpoBatch,
    advantages: np.ndarray,
    config: PpoConfig,
) -> np.ndarray:
    """Analytic gradient of the objective w.r.t. the policy weights.

    Per step, the surrogate contributes A_t * r_t * grad log pi(a_t|s_t)
    when the unclipped branch attains the min (ties included), else 0; the
    KL penalty contributes kl_coef * grad log pi(a_t|s_t). For the linear
    softmax, grad_W log pi(a|s) = (onehot(a) - pi(s)) outer s.
    """
    t_len = len(batch)
    logp = policy_logprobs(policy, batch.states)
    new_lp = logp[np.arange(t_len), batch.actions]
    ratios = np.exp(new_lp - batch.old_logprobs)
    unclipped = ratios * advantages
    clipped = np.clip(ratios, 1.0 - config.epsilon, 1.0 + config.epsilon) * advantages
    surrogate_coef = np.where(unclipped <= clipped, ratios * advantages, 0.0)
    coef = surrogate_coef + config.kl_coef

    probs = np.exp(logp)
    onehot = np.eye(len(ACTIONS))[batch.actions]
    dlogits = coef[:, None] * (onehot - probs)       # (T, actions)
    return dlogits.T @ batch.states / t_len          # (actions, D)


def value_loss_and_grad(
    value: ValueParams,
    states: np.ndarray,
    returns: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Mean squared error to returns and its gradient."""
    predictions = states @ value.weights
    residual = predictions - returns
    loss = float(np.mean(residual ** 2))
    grad = 2.0 * states.T @ residual / len(returns)
    return loss, grad


@dataclass(frozen=True)
class PpoDiagnostics:
    objective: float
    approx_kl: float
    value_loss: float


def update_step(
    policy: PolicyParams,
    value: ValueParams,
    batch: PpoBatch,
    config: PpoConfig,
) -> tuple[PolicyParams, ValueParams, PpoDiagnostics]:
    """One PPO update: epochs_per_batch ascent/descent passes over the batch.

    Advantages and returns are computed once from the rollout; the policy
    gradient is recomputed per epoch against the fixed old log-probs.
    Diagnostics are evaluated at the post-update parameters. Non-finite
    gradients abort with the offending diagnostics attached.
    """
    advantages, returns = gae_advantages(
        batch.rewards, batch.values, batch.dones, config.gamma, config.lam
    )
    w_policy = policy.weights.copy()
    w_value = value.weights.copy()
    for _ in range(config.epochs_per_batch):
        grad_p = policy_gradient(PolicyParams(w_policy), batch, advantages, config)
        _, grad_v = value_loss_and_grad(ValueParams(w_value), batch.states, returns)
        if not (np.all(np.isfinite(grad_p)) and np.all(np.isfinite(grad_v))):
            objective, approx_kl = surrogate_objective(PolicyParams(w_policy), batch, advantages, config)
            raise RuntimeError(
                f"non-finite gradient (objective={objective}, approx_kl={approx_kl})"
            )
        w_policy = w_policy + config.lr_actor * grad_p
        w_value = w_value - config.lr_critic * grad_v

    new_policy = PolicyParams(w_policy)
    new_value = ValueParams(w_value)
    objective, approx_kl = surrogate_objective(new_policy, batch, advantages, config)
    value_loss, _ = value_loss_and_grad(new_value, batch.states, returns)
    return new_policy, new_value, PpoDiagnostics(objective, approx_kl, value_loss)


@dataclass(frozen=True)
class IterationStats:
    iteration: int
    mean_reward: float
    approx_kl: float
    objective: float


@dataclass(frozen=True)
class TrainResult:
    curve: tuple[IterationStats, ...]
    policy: PolicyParams
    value: ValueParams
    featurizer: CaseFeaturizer = field(compare=False, default=None)  # type: ignore[assignment]

    def curve_rows(self) -> list[dict]:
        return [
            {
                "iteration": s.iteration,
                "mean_reward": s.mean_reward,
                "approx_kl": s.approx_kl,
                "objective": s.objective,
            }
            for s in self.curve
        ]


RewardFn = Callable[[LegalCase, str], float]


def train(
    store: CaseStore,
    reward_fn: RewardFn | None = None,
    config: PpoConfig = PpoConfig(),
) -> TrainResult:
    """Train the toy policy against the compliance reward.

    Each iteration samples ``batch_size`` cases (with replacement), samples
    a choice per case from the current policy, renders it as a minimal
    ``Choice: <letter>`` response, scores it with ``reward_fn`` (default:
    the rule-based verifier reward), then runs one PPO update. The returned
    curve carries mean reward, approx-KL, and objective per iteration.
    """
    if len(store) == 0:
        raise ValueError("case store is empty")
    if reward_fn is None:
        reward_fn = verifier.reward

    featurizer = CaseFeaturizer(config.hash_dim)
    cases = sorted(store, key=lambda c: c.id)
    features = np.stack([featurizer.featurize(c) for c in cases])

    rng = np.random.default_rng(config.seed)
    policy = PolicyParams.zeros(featurizer.dimension)
    value = ValueParams.zeros(featurizer.dimension)
    curve: list[IterationStats] = []

    for iteration in range(config.iterations):
        picks = rng.integers(0, len(cases), size=config.batch_size)
        states = features[picks]
        logp = policy_logprobs(policy, states)
        cdf = np.cumsum(np.exp(logp), axis=1)
        draws = rng.random((config.batch_size, 1))
        actions = (draws > cdf).sum(axis=1)
        actions = np.minimum(actions, len(ACTIONS) - 1)  # guard fp roundoff in the cdf
        old_logprobs = logp[np.arange(config.batch_size), actions]

        rewards = np.array([
            reward_fn(cases[case_idx], f"Choice: {ACTIONS[action]}")
            for case_idx, action in zip(picks, actions)
        ])
        values = states @ value.weights
        dones = np.ones(config.batch_size, dtype=bool)

        batch = PpoBatch(states, actions, old_logprobs, rewards, values, dones)
        policy, value, diag = update_step(policy, value, batch, config)
        curve.append(IterationStats(
            iteration=iteration,
            mean_reward=float(rewards.mean()),
            approx_kl=diag.approx_kl,
            objective=diag.objective,
        ))

    return TrainResult(curve=tuple(curve), policy=policy, value=value, featurizer=featurizer)


def gold_action_index(verdict: ComplianceVerdict) -> int:
    """Action index of the gold verdict's choice letter."""
    return ACTIONS.index(verdict_to_choice(verdict))
