"""Clipped-surrogate policy optimization over fixed-size rollouts.

Rollouts hold T timesteps of experience for G independent parameter sets with
B parallel streams each (per-device learners: G devices, B=1; a shared policy
trained on pooled experience: G=1, B devices). An update runs a fixed number
of epochs over contiguous time chunks in shuffled order; each chunk replays
the recurrent state from its stored snapshot and backpropagates through the
chunk. Rewards are negated costs; the behavior-policy log-probabilities and
values are supplied by the caller and stay frozen for every epoch of one
update.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .neural import (AdamState, NumericalError, WeightBundle, adam_step,
                     backward_sequence, clip_gradients, forward_sequence)

_RATIO_EXP_CLIP = 30.0  # keeps importance weights finite under extreme drift


@dataclass(frozen=True)
class PPOHyperparams:
    clip_epsilon: float = 0.2
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    epochs: int = 4
    minibatches: int = 10
    gamma: float = 0.99
    learning_rate: float = 7e-4
    max_grad_norm: float = 0.5
    adv_norm_floor: float = 1e-8

    def __post_init__(self) -> None:
        if self.clip_epsilon <= 0.0:
            raise ValueError("clip range must be > 0")
        if self.epochs * self.minibatches < 1:
            raise ValueError("need at least one epoch and one minibatch")


@dataclass
class ExperienceTuple:
    observation: np.ndarray
    action: int
    cost: float
    next_observation: np.ndarray
    log_prob: float
    value: float
    hidden: np.ndarray


class RolloutBuffer:
    """T timesteps of experience for (n_sets x n_streams) agent streams."""

    def __init__(self, period: int, n_sets: int, n_streams: int,
                 input_dim: int, hidden: int = 32):
        if period < 1:
            raise ValueError("update period must be >= 1")
        self.period = period
        self.n_sets = n_sets
        self.n_streams = n_streams
        shape = (period, n_sets, n_streams)
        self.obs = np.zeros(shape + (input_dim,))
        self.actions = np.zeros(shape, dtype=np.int64)
        self.costs = np.zeros(shape)
        self.log_probs = np.zeros(shape)
        self.values = np.zeros(shape)
        self.hidden_pre = np.zeros(shape + (hidden,))
        self.size = 0

    @property
    def full(self) -> bool:
        return self.size == self.period

    def push(self, obs, action, cost, log_prob, value, hidden_pre) -> None:
        if self.full:
            raise RuntimeError("rollout buffer already full")
        t = self.size
        self.obs[t] = obs
        self.actions[t] = action
        self.costs[t] = cost
        self.log_probs[t] = log_prob
        self.values[t] = value
        self.hidden_pre[t] = hidden_pre
        self.size = t + 1

    def clear(self) -> None:
        self.size = 0

    def experience(self, t: int, g: int = 0, b: int = 0,
                   final_next_obs=None) -> ExperienceTuple:
        """Tuple view of one recorded step; the next observation of the last
        step must be supplied by the caller."""
        if not (0 <= t < self.size):
            raise IndexError("experience index out of range")
        nxt = self.obs[t + 1, g, b] if t + 1 < self.size else final_next_obs
        return ExperienceTuple(observation=self.obs[t, g, b],
                               action=int(self.actions[t, g, b]),
                               cost=float(self.costs[t, g, b]),
                               next_observation=nxt,
                               log_prob=float(self.log_probs[t, g, b]),
                               value=float(self.values[t, g, b]),
                               hidden=self.hidden_pre[t, g, b])


def compute_returns_and_advantages(costs: np.ndarray, values: np.ndarray,
                                   gamma: float, bootstrap_value,
                                   normalize: str = "none",
                                   norm_floor: float = 1e-8):
    """Discounted returns (rewards are negated costs, bootstrapped past the
    buffer edge with the critic) and advantages = returns - values.

    normalize: "none" returns raw advantages; "stream" standardizes each
    parameter set's batch; "batch" standardizes across everything. Batches
    with fewer than two samples are left raw.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.shape[0] == 0:
        raise ValueError("empty rollout")
    rewards = -costs
    returns = np.empty_like(rewards)
    acc = np.broadcast_to(np.asarray(bootstrap_value, dtype=float),
                          rewards.shape[1:]).astype(float)
    for t in range(rewards.shape[0] - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        returns[t] = acc
    advantages = normalize_advantages(returns - np.asarray(values, dtype=float),
                                      normalize, norm_floor)
    return returns, advantages


def clipped_surrogate(log_prob_new, log_prob_old, advantage, clip_epsilon: float):
    """Pessimistic clipped policy objective
    min(G*A, clip(G, 1-eps, 1+eps)*A) with G the importance weight."""
    ratio = np.exp(np.clip(np.asarray(log_prob_new, dtype=float)
                           - np.asarray(log_prob_old, dtype=float),
                           -_RATIO_EXP_CLIP, _RATIO_EXP_CLIP))
    adv = np.asarray(advantage, dtype=float)
    out = np.minimum(ratio * adv,
                     np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * adv)
    if out.ndim == 0:
        return float(out)
    return out


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def surrogate_objective(weights: WeightBundle, batch: dict,
                        hp: PPOHyperparams, actor_coef: float = 1.0,
                        value_coef=None, entropy_coef=None):
    """Evaluate the full surrogate J = J_clip - k1*J_VF + k2*H on one chunk
    and return (per-set J, output gradients dJ/dlogits, dJ/dvalues).

    batch keys: h0 (G,B,H), obs (G,B,L,D), actions/log_probs_old/advantages/
    returns all (L,G,B). The returned gradients are per-sample and already
    averaged over the chunk.
    """
    k1 = hp.value_coef if value_coef is None else value_coef
    # scalar or per-set (G,) entropy weight
    k2 = np.asarray(hp.entropy_coef if entropy_coef is None else entropy_coef)
    logits, values, _, tape = forward_sequence(weights, batch["h0"], batch["obs"])
    n_steps, n_sets, n_streams, n_actions = logits.shape
    n_samples = n_steps * n_streams
    lsm = _log_softmax(logits)
    probs = np.exp(lsm)
    actions = batch["actions"]
    lp_new = np.take_along_axis(lsm, actions[..., None], axis=-1)[..., 0]
    ratio = np.exp(np.clip(lp_new - batch["log_probs_old"],
                           -_RATIO_EXP_CLIP, _RATIO_EXP_CLIP))
    adv = batch["advantages"]
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - hp.clip_epsilon, 1.0 + hp.clip_epsilon) * adv
    j_clip = np.minimum(unclipped, clipped).sum(axis=(0, 2)) / n_samples
    vdiff = values - batch["returns"]
    j_vf = (vdiff ** 2).sum(axis=(0, 2)) / n_samples
    entropy = -(probs * lsm).sum(axis=-1)
    j_ent = entropy.sum(axis=(0, 2)) / n_samples
    j_total = actor_coef * j_clip - k1 * j_vf + k2 * j_ent

    # Gradient of J w.r.t. the network outputs, per sample.
    dlp = np.where(unclipped <= clipped, unclipped, 0.0) * (actor_coef / n_samples)
    dlogits = -dlp[..., None] * probs
    np.put_along_axis(dlogits, actions[..., None],
                      np.take_along_axis(dlogits, actions[..., None], axis=-1)
                      + dlp[..., None], axis=-1)
    if np.any(k2 != 0.0):
        k2b = k2.reshape(1, -1, 1, 1) if k2.ndim else k2
        dlogits += (k2b / n_samples) * (-probs * (lsm + entropy[..., None]))
    dvalues = (-k1 * 2.0 / n_samples) * vdiff
    return j_total, dlogits, dvalues, tape


def normalize_advantages(advantages: np.ndarray, mode: str,
                         norm_floor: float = 1e-8) -> np.ndarray:
    """Standardize advantages per parameter set ("stream") or globally
    ("batch"); degenerate single-sample batches are returned raw."""
    if mode == "none":
        return advantages
    if mode == "stream" and advantages.ndim >= 2:
        axes = (0,) + tuple(range(2, advantages.ndim))
        n = advantages.shape[0] * int(np.prod(advantages.shape[2:], initial=1))
        if n >= 2:
            mean = advantages.mean(axis=axes, keepdims=True)
            std = advantages.std(axis=axes, keepdims=True)
            return (advantages - mean) / np.maximum(std, norm_floor)
        return advantages
    if mode == "batch":
        if advantages.size >= 2:
            return (advantages - advantages.mean()) / max(advantages.std(),
                                                          norm_floor)
        return advantages
    raise ValueError(f"unknown normalization mode {mode!r}")


def td_advantages(costs: np.ndarray, values: np.ndarray, gamma: float,
                  bootstrap_value) -> np.ndarray:
    """One-step temporal-difference advantages r + gamma*V(s') - V(s), the
    sampled-Q actor-critic form used when the critic value arrives as an
    external per-TTI feedback rather than from the learner's own head."""
    costs = np.asarray(costs, dtype=float)
    if costs.shape[0] == 0:
        raise ValueError("empty rollout")
    v = np.asarray(values, dtype=float)
    v_next = np.concatenate([v[1:], np.broadcast_to(
        np.asarray(bootstrap_value, dtype=float), v[:1].shape)], axis=0)
    return -costs + gamma * v_next - v


def ppo_update(buffer: RolloutBuffer, weights: WeightBundle, adam: AdamState,
               hp: PPOHyperparams, rng: np.random.Generator, *,
               bootstrap_value, log_probs_old=None, values_old=None,
               advantages_override=None, actor_coef: float = 1.0,
               value_coef=None, entropy_coef=None,
               normalize: str = "stream", freeze=(), audit=None) -> WeightBundle:
    """Run the epoch/minibatch update on a full rollout buffer, in place.

    log_probs_old and values_old default to the quantities stored during the
    rollout (behavior policy == pre-update policy); a trainer whose rollouts
    were collected by stale copies passes values recomputed under its own
    pre-update snapshot. Both stay frozen across every epoch. Advantage
    normalization is selected by the caller (training paths standardize per
    update batch; the default leaves tiny diagnostic batches raw).

    Numerical failures roll the weights back to the pre-update snapshot and
    re-raise. The buffer is cleared after a successful update.
    """
    if not buffer.full:
        raise RuntimeError("ppo_update requires a full rollout buffer")
    lp_old = buffer.log_probs if log_probs_old is None else log_probs_old
    v_old = buffer.values if values_old is None else values_old
    returns, raw_adv = compute_returns_and_advantages(
        buffer.costs, v_old, hp.gamma, bootstrap_value, normalize="none")
    if advantages_override is not None:
        raw_adv = np.asarray(advantages_override, float)
    advantages = normalize_advantages(raw_adv, normalize, hp.adv_norm_floor)
    entropy_eff = hp.entropy_coef if entropy_coef is None else entropy_coef
    snapshot = weights.copy()
    lp_old_digest = hashlib.sha256(np.ascontiguousarray(lp_old).tobytes()).hexdigest()
    chunks = [c for c in np.array_split(np.arange(buffer.period), hp.minibatches)
              if len(c)]
    try:
        for _ in range(hp.epochs):
            if audit is not None:
                digest = hashlib.sha256(
                    np.ascontiguousarray(lp_old).tobytes()).hexdigest()
                audit.setdefault("pi_old_checksums", []).append(digest)
            for ci in rng.permutation(len(chunks)):
                t0, t1 = chunks[ci][0], chunks[ci][-1] + 1
                batch = {
                    "h0": buffer.hidden_pre[t0],
                    "obs": np.moveaxis(buffer.obs[t0:t1], 0, 2),
                    "actions": buffer.actions[t0:t1],
                    "log_probs_old": lp_old[t0:t1],
                    "advantages": advantages[t0:t1],
                    "returns": returns[t0:t1],
                }
                j, dlogits, dvalues, tape = surrogate_objective(
                    weights, batch, hp, actor_coef=actor_coef,
                    value_coef=value_coef, entropy_coef=entropy_eff)
                if not np.all(np.isfinite(j)):
                    raise NumericalError("non-finite surrogate objective")
                grads = backward_sequence(weights, tape, -dlogits, -dvalues)
                for name in freeze:
                    grads[name][...] = 0.0
                clip_gradients(grads, hp.max_grad_norm)
                adam_step(weights, grads, adam, hp.learning_rate)
        digest = hashlib.sha256(np.ascontiguousarray(lp_old).tobytes()).hexdigest()
        if digest != lp_old_digest:
            raise NumericalError("behavior log-probabilities mutated mid-update")
    except NumericalError:
        weights.load(snapshot)
        raise
    buffer.clear()
    return weights
