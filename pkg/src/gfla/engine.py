"""Realization orchestration: topology, the TTI loop, metrics, seeding.

Each realization owns a root seed sequence forked into named independent
streams (topology, fading, traffic, contention, policy, training). Streams
that drive the environment consume a fixed amount of randomness per TTI for
every device, whether or not the device acts, so runs of different
architectures under the same seed share identical topologies, fading paths,
arrival processes and contention draws: ratio comparisons between
architectures are paired.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .architectures import AgentContext, TTIView, make_driver
from .channel import (FadingState, Topology, bit_error_prob, channel_gains,
                      packet_loss_prob, received_power_map, step_fading)
from .config import RealizationConfig
from .mac import (ContentionConfig, PacketTiming, backoff_from_uniform, cw_min,
                  packets_per_tti, resolve_domains)
from .posg import (ActionSpace, CostParams, average_cost,
                   delay_violation_weight, local_cost, observation_features,
                   overflow_penalty, pooled_global_features)
from .traffic import BufferState, sample_arrivals

WORKERS_ENV = "GFLA_WORKERS"

STREAM_NAMES = ("topology", "fading", "traffic", "contention", "policy",
                "training")


def make_streams(seed: int, realization_index: int) -> dict:
    root = np.random.SeedSequence((seed, realization_index))
    children = root.spawn(len(STREAM_NAMES))
    return {name: np.random.Generator(np.random.PCG64(child))
            for name, child in zip(STREAM_NAMES, children)}


def _disk_points(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def generate_topology(cfg: RealizationConfig, rng: np.random.Generator):
    """Uniform-on-disk placement, nearest-BS association, and per-device QoS
    classes (delay limit, arrival rate) resampled every realization."""
    bs = _disk_points(cfg.base_stations, cfg.radius_m, rng)
    devices = _disk_points(cfg.users, cfg.radius_m, rng)
    topo = Topology(device_positions=devices, bs_positions=bs,
                    radius=cfg.radius_m, path_loss_exp=cfg.path_loss_exp,
                    n_subcarriers=cfg.subcarriers, n_preambles=cfg.preambles)
    delay = np.asarray(cfg.delay_classes)[rng.integers(0, len(cfg.delay_classes),
                                                       cfg.users)]
    rates = np.asarray(cfg.arrival_classes)[rng.integers(0, len(cfg.arrival_classes),
                                                         cfg.users)]
    return topo, delay.astype(np.int64), rates.astype(float)


@dataclass
class RealizationResult:
    arch: str
    index: int
    holding_cum: np.ndarray
    overflow_cum: np.ndarray
    power_cum_mw: np.ndarray
    collisions_cum: np.ndarray
    holding_by_delta: dict
    conservation_violations: int
    collision_events: int
    ul_bits: int
    dl_bits: int
    wall_s: float
    contention_log: list = field(default_factory=list)


class Realization:
    """One seeded run of one architecture over a fixed number of TTIs."""

    def __init__(self, cfg: RealizationConfig, arch: str, index: int,
                 log_contention: bool = False):
        self.cfg = cfg
        self.arch = arch
        self.index = index
        self.log_contention = log_contention
        self.streams = make_streams(cfg.seed, index)
        self.topology, self.delay_limit, self.arrival_rate = generate_topology(
            cfg, self.streams["topology"])
        self.fading = FadingState.initial(cfg.users, cfg.base_stations,
                                          cfg.subcarriers, cfg.f_max_hz,
                                          cfg.tti_s, self.streams["fading"])
        self.buffers = BufferState.empty(cfg.buffer_capacity,
                                         self.arrival_rate, self.delay_limit)
        self.space = ActionSpace(cfg.max_mod_order, len(cfg.power_levels_mw),
                                 cfg.subcarriers)
        self.contention = ContentionConfig(cfg.cw_a, cfg.max_mod_order,
                                           cfg.slot_quantum)
        self.timing = PacketTiming(cfg.packet_bits, cfg.symbol_s, cfg.tti_s)
        mu = overflow_penalty(cfg.gamma)
        self.cost_params = CostParams(p_on_w=cfg.p_on_w, p_off_w=cfg.p_off_w,
                                      gamma=cfg.gamma, penalty_mu=mu,
                                      violation_scale=cfg.kappa_omega,
                                      power_scale=cfg.power_cost_scale)
        ctx = AgentContext(n_devices=cfg.users, input_dim=cfg.input_dim,
                           pooled_dim=cfg.pooled_dim, action_space=self.space,
                           hp=cfg.hyperparams(),
                           update_period=cfg.update_period,
                           power_levels_w=cfg.power_levels_w,
                           tti_s=cfg.tti_s,
                           broadcast_period=cfg.broadcast_period,
                           fc_activation=cfg.fc_activation,
                           congestion_threshold=cfg.q_bar,
                           reward_scale=cfg.reward_scale,
                           init_on_logit=cfg.init_on_logit,
                           critic_warmup_updates=cfg.critic_warmup_updates)
        self.driver = make_driver(arch, ctx, self.streams["training"])
        self.penalized = np.zeros(cfg.users, dtype=bool)
        # Widest packet budget of any TTI; sizes the per-packet loss draws.
        self.z_cap = packets_per_tti(cfg.max_mod_order, cfg.tti_s, self.timing)
        self._cw_table = np.array(
            [0] + [cw_min(b, self.contention) for b in
                   range(1, cfg.max_mod_order + 1)], dtype=np.int64)

    def run(self, ttis: int = None) -> RealizationResult:
        cfg = self.cfg
        n_ttis = cfg.ttis if ttis is None else ttis
        n = cfg.users
        rng_pol = self.streams["policy"]
        rng_con = self.streams["contention"]
        rng_tra = self.streams["traffic"]
        rng_fad = self.streams["fading"]
        rng_trn = self.streams["training"]

        holding = np.empty(n_ttis)
        overflow_m = np.empty(n_ttis)
        power_mw = np.empty(n_ttis)
        collisions = np.empty(n_ttis, dtype=np.int64)
        delta_values = np.unique(self.delay_limit)
        delta_masks = {int(d): self.delay_limit == d for d in delta_values}
        holding_by_delta = {d: np.zeros(n_ttis) for d in delta_masks}
        violations = 0
        log = []
        t_start = time.perf_counter()

        for t in range(n_ttis):
            # (1) observations from the start-of-TTI state
            gains = channel_gains(self.fading, self.topology)
            feats = observation_features(gains, self.buffers.b,
                                         self.buffers.last_arrivals,
                                         self.buffers.last_goodput,
                                         self.buffers.last_overflow,
                                         cfg.buffer_capacity)
            pooled = pooled_global_features(gains, self.buffers.b,
                                            self.buffers.last_arrivals,
                                            self.buffers.last_goodput,
                                            cfg.buffer_capacity)
            view = TTIView(features=feats, pooled=pooled,
                           queue=self.buffers.b.copy(),
                           delay_limit=self.delay_limit)
            # (2) action selection
            action = self.driver.act(view, rng_pol)
            # (3) contention: preamble/backoff drawn for every device so the
            # stream advances identically whichever devices are active
            u_pre = rng_con.random(n)
            u_back = rng_con.random(n)
            preamble = np.minimum((u_pre * cfg.preambles).astype(np.int64),
                                  cfg.preambles - 1)
            cw = np.where(self.penalized, self.contention.cw_max,
                          self._cw_table[action.mod_order])
            slots = backoff_from_uniform(u_back, cw)
            contending = (action.radio_on == 1) & (self.buffers.b > 0)
            c_idx = np.flatnonzero(contending)
            domain = (self.topology.association[c_idx] * cfg.subcarriers
                      + (action.subcarrier[c_idx] - 1))
            win_c, col_c, n_events = resolve_domains(domain, preamble[c_idx],
                                                     slots[c_idx])
            winners = c_idx[win_c]
            collided = c_idx[col_c]
            self.penalized = np.zeros(n, dtype=bool)
            self.penalized[collided] = True
            if self.log_contention:
                log.append((t, domain.copy(), preamble[c_idx].copy(),
                            slots[c_idx].copy()))
            # (4) SINR / BER / PLR for all concurrent transmissions
            loss_u = rng_tra.random((n, self.z_cap))
            goodput = np.zeros(n, dtype=np.int64)
            acks = np.zeros(n, dtype=np.int64)
            nacks = np.zeros(n, dtype=np.int64)
            if len(winners):
                k0 = action.subcarrier[winners] - 1
                p_w = action.power_w[winners]
                serving = self.topology.association[winners]
                rx_map = received_power_map(winners, p_w, k0, gains)
                link_gain = gains[winners, serving, k0]
                interference = np.maximum(rx_map[serving, k0] - p_w * link_gain,
                                          0.0)
                ber = bit_error_prob(p_w, link_gain, interference, cfg.noise_w,
                                     action.mod_order[winners],
                                     cfg.max_mod_order,
                                     literal_order=cfg.ber_literal)
                plr = packet_loss_prob(ber, cfg.packet_bits)
                tau_tx = cfg.tti_s * (1.0 - slots[winners]
                                      * self.contention.slot_quantum)
                z = packets_per_tti(action.mod_order[winners], tau_tx,
                                    self.timing)
                attempted = np.minimum(z, self.buffers.b[winners])
                # (5) goodput and ACK/NACK; collided transmissions are lost
                clean = ~col_c[win_c]
                delivered = ((loss_u[winners] >= plr[:, None])
                             & (np.arange(self.z_cap)[None, :]
                                < attempted[:, None])).sum(axis=1)
                delivered = np.where(clean, delivered, 0)
                goodput[winners] = delivered
                acks[winners] = delivered
                nacks[winners] = attempted - delivered
            # (6) arrivals and buffer update
            arrivals = sample_arrivals(self.arrival_rate, cfg.tti_s, rng_tra)
            b_pre = self.buffers.b.copy()
            xi = self.buffers.advance(arrivals, goodput)
            if np.any(self.buffers.b != b_pre + arrivals - goodput - xi) or \
               np.any((self.buffers.b < 0) | (self.buffers.b > cfg.buffer_capacity)):
                violations += 1
            # (7) costs with the violation weight recomputed from the
            # post-update queue
            omega = delay_violation_weight(self.buffers.b, xi, self.delay_limit,
                                           self.cost_params.penalty_mu,
                                           self.cost_params.violation_scale)
            costs = local_cost(action.radio_on, action.power_w, self.buffers.b,
                               xi, omega, self.cost_params)
            self.driver.notify_harq(acks, nacks, xi)
            # (8) experience recorded (committed with the next observation)
            self.driver.record_cost(costs, average_cost(costs))
            # (9) training when a rollout period has completed
            self.driver.maybe_update(rng_trn)
            # (10) fading advances to the next TTI
            self.fading = step_fading(self.fading, rng_fad)

            power_term = (action.radio_on * (cfg.p_on_w + action.power_w)
                          + (1 - action.radio_on) * cfg.p_off_w)
            holding[t] = self.buffers.b.mean()
            overflow_m[t] = xi.mean()
            power_mw[t] = power_term.mean() * 1e3
            collisions[t] = n_events
            for d, mask in delta_masks.items():
                holding_by_delta[d][t] = self.buffers.b[mask].mean()

        steps = np.arange(1, n_ttis + 1, dtype=float)
        by_delta_final = {d: float(np.cumsum(series)[-1] / n_ttis)
                          for d, series in holding_by_delta.items()}
        return RealizationResult(
            arch=self.arch, index=self.index,
            holding_cum=np.cumsum(holding) / steps,
            overflow_cum=np.cumsum(overflow_m) / steps,
            power_cum_mw=np.cumsum(power_mw) / steps,
            collisions_cum=np.cumsum(collisions),
            holding_by_delta=by_delta_final,
            conservation_violations=violations,
            collision_events=int(collisions.sum()),
            ul_bits=self.driver.ul_bits, dl_bits=self.driver.dl_bits,
            wall_s=time.perf_counter() - t_start,
            contention_log=log)


def _limit_blas_threads() -> None:
    # The network is 32 wide: BLAS threading only adds contention, and
    # worker processes would otherwise oversubscribe the cores.
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(1)
    except ImportError:
        pass


def run_realization(cfg: RealizationConfig, arch: str, index: int,
                    log_contention: bool = False) -> RealizationResult:
    _limit_blas_threads()
    return Realization(cfg, arch, index, log_contention=log_contention).run()


@dataclass
class ArchAggregate:
    arch: str
    series: dict           # metric name -> (mean, std) arrays over TTIs
    final: dict            # summary scalars
    holding_by_delta: dict
    ul_bits: int
    dl_bits: int
    conservation_violations: int
    n_realizations: int


@dataclass
class CampaignResult:
    cfg: RealizationConfig
    archs: list
    per_arch: dict
    failures: list
    wall_s: float

    @property
    def ttis(self) -> int:
        first = next(iter(self.per_arch.values()))
        return len(first.series["holding"][0])


def _aggregate(arch: str, results: list) -> ArchAggregate:
    series = {}
    for name, attr in (("holding", "holding_cum"), ("overflow", "overflow_cum"),
                       ("power_mw", "power_cum_mw"),
                       ("collisions_cum", "collisions_cum")):
        stack = np.stack([getattr(r, attr) for r in results]).astype(float)
        series[name] = (stack.mean(axis=0), stack.std(axis=0))
    final = {
        "holding_cost_packets": float(series["holding"][0][-1]),
        "overflow_packets": float(series["overflow"][0][-1]),
        "power_cost_mw": float(series["power_mw"][0][-1]),
        "collisions": float(series["collisions_cum"][0][-1]),
    }
    deltas = sorted({d for r in results for d in r.holding_by_delta})
    by_delta = {d: float(np.mean([r.holding_by_delta[d] for r in results
                                  if d in r.holding_by_delta])) for d in deltas}
    return ArchAggregate(arch=arch, series=series, final=final,
                         holding_by_delta=by_delta,
                         ul_bits=sum(r.ul_bits for r in results),
                         dl_bits=sum(r.dl_bits for r in results),
                         conservation_violations=sum(r.conservation_violations
                                                     for r in results),
                         n_realizations=len(results))


def worker_count(requested=None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_campaign(cfg: RealizationConfig, archs, realizations: int = None,
                 workers=None, progress=None) -> CampaignResult:
    """Run every (architecture, realization) pair and aggregate mean/std
    curves. Pairs run in a process pool; failed realizations are reported and
    excluded from the aggregate while the campaign continues."""
    realizations = cfg.realizations if realizations is None else realizations
    jobs = [(arch, idx) for arch in archs for idx in range(realizations)]
    n_workers = min(worker_count(workers), len(jobs))
    results, failures = {}, []
    t0 = time.perf_counter()
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = {pool.submit(run_realization, cfg, arch, idx): (arch, idx)
                       for arch, idx in jobs}
            for fut, (arch, idx) in futures.items():
                try:
                    results[(arch, idx)] = fut.result()
                except Exception as err:  # noqa: BLE001 - reported, not fatal
                    failures.append({"arch": arch, "realization": idx,
                                     "error": repr(err)})
                if progress:
                    progress(arch, idx)
    else:
        for arch, idx in jobs:
            try:
                results[(arch, idx)] = run_realization(cfg, arch, idx)
            except Exception as err:  # noqa: BLE001
                failures.append({"arch": arch, "realization": idx,
                                 "error": repr(err)})
            if progress:
                progress(arch, idx)
    per_arch = {}
    for arch in archs:
        ok = [results[(arch, idx)] for idx in range(realizations)
              if (arch, idx) in results]
        if ok:
            per_arch[arch] = _aggregate(arch, ok)
    return CampaignResult(cfg=cfg, archs=list(archs), per_arch=per_arch,
                          failures=failures, wall_s=time.perf_counter() - t0)
