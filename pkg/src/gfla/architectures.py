"""Training topologies: independent learners, distributed actors with a
central critic, centralized learning with distributed inference, and the
reactive power-boosting baseline.

Every driver exposes the same per-TTI surface to the engine: `act` picks the
joint action from the current observations, `record_cost` attaches the TTI's
costs to the pending experience, `notify_harq` delivers ACK/drop flags, and
`maybe_update` runs training when a rollout period completes. Drivers also
count the coordination bits they actually move so the zero-overhead contract
of independent learners is assertable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .neural import (AdamState, DecodeError, NetworkDims, WeightBundle,
                     deserialize_weights, forward, forward_sequence,
                     serialize_weights)
from .posg import ActionSpace
from .ppo import PPOHyperparams, RolloutBuffer, ppo_update, td_advantages

log = logging.getLogger(__name__)

ARCH_IL = "il"
ARCH_DACC = "dacc"
ARCH_CLDI = "cldi"
ARCH_BASELINE = "baseline"
ALL_ARCHS = (ARCH_IL, ARCH_DACC, ARCH_CLDI, ARCH_BASELINE)

# Published downlink figure for the shared-policy broadcast, kept for
# side-by-side comparison with the count-derived rate.
PAPER_CLDI_DL_BPS = 20496.0
PAPER_STATE_REPORT_BPS = 1600.0


@dataclass
class AgentContext:
    """Everything a driver needs about the deployment, fixed per realization."""

    n_devices: int
    input_dim: int        # N_B*N_S + 4 local features
    pooled_dim: int       # N_B*N_S + 3 device-averaged global features
    action_space: ActionSpace
    hp: PPOHyperparams
    update_period: int
    power_levels_w: tuple
    tti_s: float
    broadcast_period: int = 200
    fc_activation: str = "relu"
    congestion_threshold: float = 0.3
    # Training-side conditioning only: rewards are -cost * reward_scale so
    # value targets stay in a range the fixed-step optimizer can reach.
    # Normalized advantages make the policy gradient invariant to it.
    reward_scale: float = 1.0
    # Cold-start actor-head bias on the radio-on half of the action space.
    # Zero keeps the uniform policy; negative values start devices quiet,
    # as an energy-constrained radio would ship.
    init_on_logit: float = 0.0
    # Updates that train the value function only before the policy moves;
    # sharp advantages from the first policy update onward.
    critic_warmup_updates: int = 0


@dataclass
class TTIView:
    """Per-TTI observation bundle handed to drivers before acting."""

    features: np.ndarray     # (N_U, input_dim)
    pooled: np.ndarray       # (pooled_dim,)
    queue: np.ndarray        # (N_U,) packets at TTI start
    delay_limit: np.ndarray  # (N_U,)


@dataclass
class ActionBatch:
    radio_on: np.ndarray
    mod_order: np.ndarray
    power_index: np.ndarray
    subcarrier: np.ndarray  # 1-based
    power_w: np.ndarray
    flat_index: np.ndarray


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _init_policy_bundle(ctx: AgentContext, dims: NetworkDims, n_sets: int,
                        rng: np.random.Generator) -> WeightBundle:
    bundle = WeightBundle.init_random(dims, n_sets, rng)
    if ctx.init_on_logit != 0.0:
        half = ctx.action_space.size // 2  # x-major layout: upper half is x=1
        bundle.params["ba"][:, half:] += ctx.init_on_logit
    return bundle


def sample_categorical(logits: np.ndarray, u: np.ndarray):
    """Inverse-CDF draw per row from softmax(logits); u are uniforms shaped
    like logits minus the action axis. Returns (indices, log-probs)."""
    lsm = _log_softmax(logits)
    cdf = np.cumsum(np.exp(lsm), axis=-1)
    idx = np.minimum((cdf < u[..., None]).sum(axis=-1), logits.shape[-1] - 1)
    logp = np.take_along_axis(lsm, idx[..., None], axis=-1)[..., 0]
    return idx, logp


class DriverBase:
    kind: str = "?"

    def __init__(self, ctx: AgentContext):
        self.ctx = ctx
        self.ul_bits = 0
        self.dl_bits = 0

    def act(self, view: TTIView, rng: np.random.Generator) -> ActionBatch:
        raise NotImplementedError

    def record_cost(self, local_costs: np.ndarray, mean_cost: float) -> None:
        pass

    def notify_harq(self, acks: np.ndarray, nacks: np.ndarray,
                    overflow: np.ndarray) -> None:
        pass

    def maybe_update(self, rng: np.random.Generator) -> None:
        pass

    def _batch_from_flat(self, flat: np.ndarray) -> ActionBatch:
        space = self.ctx.action_space
        x, beta, p_idx, k = space.decode_batch(flat)
        power = np.asarray(self.ctx.power_levels_w)[p_idx]
        return ActionBatch(radio_on=x, mod_order=beta, power_index=p_idx,
                           subcarrier=k, power_w=power, flat_index=flat)


class _PendingStep:
    __slots__ = ("obs", "hidden_pre", "action", "log_prob", "value", "cost")

    def __init__(self, obs, hidden_pre, action, log_prob, value):
        self.obs = obs
        self.hidden_pre = hidden_pre
        self.action = action
        self.log_prob = log_prob
        self.value = value
        self.cost = None


class IndependentLearners(DriverBase):
    """One private network, optimizer and rollout per device; the update uses
    only the device's own cost and critic. No coordination traffic at all."""

    kind = ARCH_IL

    def __init__(self, ctx: AgentContext, rng_init: np.random.Generator):
        super().__init__(ctx)
        dims = NetworkDims(ctx.input_dim, ctx.action_space.size,
                           fc_activation=ctx.fc_activation)
        n = ctx.n_devices
        self.weights = _init_policy_bundle(ctx, dims, n, rng_init)
        self.adam = AdamState.zeros(self.weights)
        self.buffer = RolloutBuffer(ctx.update_period, n, 1, ctx.input_dim)
        self.hidden = np.zeros((n, 1, dims.hidden))
        self._pending = None
        self._updates_done = 0

    def act(self, view: TTIView, rng: np.random.Generator) -> ActionBatch:
        self._commit_pending()
        obs = view.features[:, None, :]  # (G=N_U, B=1, D)
        h_pre = self.hidden
        logits, value, self.hidden = forward(self.weights, h_pre, obs)
        idx, logp = sample_categorical(logits, rng.random(logits.shape[:2]))
        self._pending = _PendingStep(obs, h_pre, idx, logp, value)
        return self._batch_from_flat(idx[:, 0])

    def record_cost(self, local_costs: np.ndarray, mean_cost: float) -> None:
        self._pending.cost = self.ctx.reward_scale * local_costs[:, None]

    def maybe_update(self, rng: np.random.Generator) -> None:
        if self.buffer.full:
            warming = self._updates_done < self.ctx.critic_warmup_updates
            ppo_update(self.buffer, self.weights, self.adam, self.ctx.hp, rng,
                       bootstrap_value=self._pending.value, normalize="stream",
                       actor_coef=0.0 if warming else 1.0,
                       entropy_coef=0.0 if warming else None)
            self._updates_done += 1

    def _commit_pending(self) -> None:
        p = self._pending
        if p is not None and p.cost is not None:
            self.buffer.push(p.obs, p.action, p.cost, p.log_prob, p.value,
                             p.hidden_pre)
            self._pending = None


class CentralCritic(DriverBase):
    """Per-device actors trained on local costs with advantages against a
    single value estimator that watches a device-averaged view of the global
    state. The estimator lives at the edge and feeds one 16-bit value back
    each TTI; devices report their buffer state (16 bits) the other way."""

    kind = ARCH_DACC

    def __init__(self, ctx: AgentContext, rng_init: np.random.Generator):
        super().__init__(ctx)
        dims = NetworkDims(ctx.input_dim, ctx.action_space.size,
                           fc_activation=ctx.fc_activation)
        n = ctx.n_devices
        self.actor_weights = _init_policy_bundle(ctx, dims, n, rng_init)
        self.actor_adam = AdamState.zeros(self.actor_weights)
        self.buffer = RolloutBuffer(ctx.update_period, n, 1, ctx.input_dim)
        self.hidden = np.zeros((n, 1, dims.hidden))
        critic_dims = NetworkDims(ctx.pooled_dim, ctx.action_space.size,
                                  fc_activation=ctx.fc_activation)
        self.critic_weights = WeightBundle.init_random(critic_dims, 1, rng_init)
        self.critic_adam = AdamState.zeros(self.critic_weights)
        self.critic_buffer = RolloutBuffer(ctx.update_period, 1, 1, ctx.pooled_dim)
        self.critic_hidden = np.zeros((1, 1, critic_dims.hidden))
        self._pending = None
        self._critic_pending = None
        self._updates_done = 0

    def act(self, view: TTIView, rng: np.random.Generator) -> ActionBatch:
        self._commit_pending()
        pooled = view.pooled[None, None, :]
        ch_pre = self.critic_hidden
        _, v_global, self.critic_hidden = forward(self.critic_weights, ch_pre, pooled)
        self._critic_pending = _PendingStep(pooled, ch_pre,
                                            np.zeros((1, 1), np.int64),
                                            np.zeros((1, 1)), v_global)
        # The value estimate crosses the air as one 16-bit float.
        v_fedback = float(np.float16(v_global[0, 0]))
        self.dl_bits += 16
        self.ul_bits += 16 * self.ctx.n_devices

        obs = view.features[:, None, :]
        h_pre = self.hidden
        logits, _, self.hidden = forward(self.actor_weights, h_pre, obs)
        idx, logp = sample_categorical(logits, rng.random(logits.shape[:2]))
        value = np.full(idx.shape, v_fedback)
        self._pending = _PendingStep(obs, h_pre, idx, logp, value)
        return self._batch_from_flat(idx[:, 0])

    def record_cost(self, local_costs: np.ndarray, mean_cost: float) -> None:
        s = self.ctx.reward_scale
        self._pending.cost = s * local_costs[:, None]
        self._critic_pending.cost = np.array([[s * mean_cost]])

    def maybe_update(self, rng: np.random.Generator) -> None:
        if self.buffer.full:
            # Actors: clipped objective plus entropy only; the critic head of
            # the on-device bundle stays frozen (value signal comes from the
            # edge). Advantages use the sampled-Q actor-critic form around
            # the fed-back values: r + gamma*V(s') - V(s). While the edge
            # critic warms up, actors hold still (their advantages hinge on
            # the fed-back values).
            if self._updates_done >= self.ctx.critic_warmup_updates:
                adv = td_advantages(self.buffer.costs, self.buffer.values,
                                    self.ctx.hp.gamma, self._pending.value)
                ppo_update(self.buffer, self.actor_weights, self.actor_adam,
                           self.ctx.hp, rng,
                           bootstrap_value=self._pending.value,
                           advantages_override=adv, actor_coef=1.0,
                           value_coef=0.0, normalize="stream",
                           freeze=("wc", "bc"))
            else:
                self.buffer.clear()
            self._updates_done += 1
        if self.critic_buffer.full:
            # Edge: pure value regression against mean-cost returns; the
            # (unused) actor head never moves.
            ppo_update(self.critic_buffer, self.critic_weights, self.critic_adam,
                       self.ctx.hp, rng,
                       bootstrap_value=self._critic_pending.value,
                       actor_coef=0.0, value_coef=1.0, entropy_coef=0.0,
                       normalize="none", freeze=("wa", "ba"))

    def _commit_pending(self) -> None:
        if self._pending is not None and self._pending.cost is not None:
            p = self._pending
            self.buffer.push(p.obs, p.action, p.cost, p.log_prob, p.value,
                             p.hidden_pre)
            c = self._critic_pending
            self.critic_buffer.push(c.obs, c.action, c.cost, c.log_prob,
                                    c.value, c.hidden_pre)
            self._pending = None
            self._critic_pending = None


class CentralLearning(DriverBase):
    """One shared policy trained at the edge on the pooled experience of all
    devices; devices run inference on a possibly stale 16-bit copy refreshed
    by periodic weight broadcasts.

    The shared policy optimizes the device-averaged objective through
    parameter sharing: every device contributes its own experience tuple per
    TTI (observation, action, own cost), and one update consumes all of them,
    so the average performance improves with per-action credit intact."""

    kind = ARCH_CLDI

    def __init__(self, ctx: AgentContext, rng_init: np.random.Generator):
        super().__init__(ctx)
        dims = NetworkDims(ctx.input_dim, ctx.action_space.size,
                           fc_activation=ctx.fc_activation)
        self.edge_weights = _init_policy_bundle(ctx, dims, 1, rng_init)
        self.adam = AdamState.zeros(self.edge_weights)
        self.buffer = RolloutBuffer(ctx.update_period, 1, ctx.n_devices,
                                    ctx.input_dim)
        self.hidden = np.zeros((1, ctx.n_devices, dims.hidden))
        self.device_weights = None
        self._updates_between = max(1, round(ctx.broadcast_period
                                             / ctx.update_period))
        self._updates_done = 0
        self._pending = None
        self.broadcast(count_overhead=True)

    def broadcast(self, count_overhead: bool = True) -> None:
        data = serialize_weights(self.edge_weights)
        if count_overhead:
            self.dl_bits += 16 * self.edge_weights.param_count()
        self.receive_broadcast(data)

    def receive_broadcast(self, data: bytes) -> None:
        try:
            self.device_weights = deserialize_weights(
                data, fc_activation=self.ctx.fc_activation)
        except DecodeError as err:
            log.warning("weight broadcast dropped (%s); devices keep the "
                        "previous copy", err)

    def act(self, view: TTIView, rng: np.random.Generator) -> ActionBatch:
        self._commit_pending()
        obs = view.features[None, :, :]  # (G=1, B=N_U, D)
        h_pre = self.hidden
        logits, value, self.hidden = forward(self.device_weights, h_pre, obs)
        idx, logp = sample_categorical(logits, rng.random(logits.shape[:2]))
        self._pending = _PendingStep(obs, h_pre, idx, logp, value)
        self.ul_bits += 16 * self.ctx.n_devices
        return self._batch_from_flat(idx[0])

    def record_cost(self, local_costs: np.ndarray, mean_cost: float) -> None:
        self._pending.cost = self.ctx.reward_scale * local_costs[None, :]

    def maybe_update(self, rng: np.random.Generator) -> None:
        if not self.buffer.full:
            return
        # Importance ratios and advantages are taken against the edge's own
        # pre-update policy: replay the rollout under the edge weights from
        # the stored (stale-policy) hidden snapshots.
        obs_seq = np.moveaxis(self.buffer.obs, 0, 2)
        logits, values_old, h_last, _ = forward_sequence(
            self.edge_weights, self.buffer.hidden_pre[0], obs_seq)
        lsm = _log_softmax(logits)
        lp_old = np.take_along_axis(lsm, self.buffer.actions[..., None],
                                    axis=-1)[..., 0]
        _, v_boot, _ = forward(self.edge_weights, h_last, self._pending.obs)
        warming = self._updates_done < self.ctx.critic_warmup_updates
        ppo_update(self.buffer, self.edge_weights, self.adam, self.ctx.hp, rng,
                   bootstrap_value=v_boot, log_probs_old=lp_old,
                   values_old=values_old, normalize="batch",
                   actor_coef=0.0 if warming else 1.0,
                   entropy_coef=0.0 if warming else None)
        self._updates_done += 1
        if self._updates_done % self._updates_between == 0:
            self.broadcast(count_overhead=True)

    def _commit_pending(self) -> None:
        p = self._pending
        if p is not None and p.cost is not None:
            self.buffer.push(p.obs, p.action, p.cost, p.log_prob, p.value,
                             p.hidden_pre)
            self._pending = None


class ReactiveBaseline(DriverBase):
    """Reactive HARQ with power boosting: probabilistic channel access under
    a congestion threshold, power up on delay violations or drops, modulation
    up on ACKs and down on NACKs, random subcarrier. Memory-1 by design.

    Rate and power-relax steps react to HARQ feedback, which only exists for
    TTIs with an actual transmission attempt; TTIs spent idle or deferred
    leave the link adaptation untouched.
    """

    kind = ARCH_BASELINE

    def __init__(self, ctx: AgentContext, rng_init=None):
        super().__init__(ctx)
        n = ctx.n_devices
        self.power_index = np.zeros(n, dtype=np.int64)
        self.mod_order = np.ones(n, dtype=np.int64)
        self.last_ack = np.zeros(n, dtype=bool)
        self.last_attempt = np.zeros(n, dtype=bool)
        self.last_drop = np.zeros(n, dtype=bool)

    def act(self, view: TTIView, rng: np.random.Generator) -> ActionBatch:
        ctx = self.ctx
        n = ctx.n_devices
        q = rng.random(n)
        k = rng.integers(1, ctx.action_space.n_subcarriers + 1, size=n)
        access = (view.queue > 0) & (q <= ctx.congestion_threshold)
        violating = view.queue > view.delay_limit
        boost = access & (violating | self.last_drop)
        relax = access & self.last_ack & ~violating & ~self.last_drop
        self.power_index = np.clip(
            self.power_index + boost.astype(np.int64) - relax.astype(np.int64),
            0, len(ctx.power_levels_w) - 1)
        rate_up = access & self.last_attempt & self.last_ack
        rate_down = access & self.last_attempt & ~self.last_ack
        self.mod_order = np.clip(
            self.mod_order + rate_up.astype(np.int64) - rate_down.astype(np.int64),
            1, ctx.action_space.max_mod_order)
        x = access.astype(np.int64)
        power = np.asarray(ctx.power_levels_w)[self.power_index]
        space = ctx.action_space
        flat = (((x * space.max_mod_order + (self.mod_order - 1)) * space.n_powers
                 + self.power_index) * space.n_subcarriers + (k - 1))
        return ActionBatch(radio_on=x, mod_order=self.mod_order.copy(),
                           power_index=self.power_index.copy(), subcarrier=k,
                           power_w=power, flat_index=flat)

    def notify_harq(self, acks: np.ndarray, nacks: np.ndarray,
                    overflow: np.ndarray) -> None:
        self.last_ack = acks > 0
        self.last_attempt = (acks + nacks) > 0
        self.last_drop = overflow > 0


_DRIVERS = {
    ARCH_IL: IndependentLearners,
    ARCH_DACC: CentralCritic,
    ARCH_CLDI: CentralLearning,
    ARCH_BASELINE: ReactiveBaseline,
}


def make_driver(kind: str, ctx: AgentContext,
                rng_init: np.random.Generator) -> DriverBase:
    try:
        cls = _DRIVERS[kind]
    except KeyError:
        raise ValueError(f"unknown architecture {kind!r}") from None
    return cls(ctx, rng_init)


def overhead_report(kind: str, tti_s: float, weight_count: int = 0,
                    broadcast_period: int = 200) -> tuple:
    """Per-device (uplink, downlink) coordination rates in bits/s.

    State reports and value feedback are one 16-bit float per TTI; the
    shared-policy broadcast ships every weight as 16 bits once per period.
    """
    if kind in (ARCH_IL, ARCH_BASELINE):
        return 0.0, 0.0
    if kind == ARCH_DACC:
        return 16.0 / tti_s, 16.0 / tti_s
    if kind == ARCH_CLDI:
        return 16.0 / tti_s, 16.0 * weight_count / (broadcast_period * tti_s)
    raise ValueError(f"unknown architecture {kind!r}")
