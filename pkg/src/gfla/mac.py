"""Rate-adaptive listen-before-talk contention and per-TTI packet capacity.

Each TTI splits into a contention phase (random backoff, sensing) and a
transmission phase. Devices on one (serving BS, subcarrier) pair form a
contention domain: the minimum-backoff devices all start transmitting at the
same instant (they cannot sense each other), everyone else defers. A
collision is a group of same-domain winners that also drew the same preamble;
their transmissions are lost and they back off with the maximum window on the
next TTI.

Backoff is discretized into integer slots so that equal draws have nonzero
probability; the default slot length is 1/(2*CW_max) of a TTI, which keeps
the transmission phase at least half the TTI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ContentionConfig:
    cw_design_a: float        # window scale A; CW_min(beta) = floor(A * 2^(M - beta))
    max_mod_order: int        # M
    slot_quantum: float = 0.0 # backoff slot length as a fraction of the TTI; 0 -> auto

    def __post_init__(self) -> None:
        if self.cw_design_a <= 0.0:
            raise ValueError("contention window design parameter must be > 0")
        if self.max_mod_order < 1:
            raise ValueError("maximum modulation order must be >= 1")
        if self.slot_quantum == 0.0:
            object.__setattr__(self, "slot_quantum", 1.0 / (2.0 * self.cw_max))
        if not (0.0 < self.cw_max * self.slot_quantum < 1.0):
            raise ValueError("backoff must always end within the TTI "
                             "(require 0 < CW_max * slot_quantum < 1)")
        if cw_min(1, self) < 1:
            raise ValueError("CW_min must be >= 1 for every modulation order")

    @property
    def cw_max(self) -> int:
        return int(math.floor(self.cw_design_a * 2 ** self.max_mod_order))


def cw_min(mod_order: int, cfg: ContentionConfig) -> int:
    """Minimum contention window floor(A * 2^(M - beta)); higher rates wait less."""
    if not (1 <= mod_order <= cfg.max_mod_order):
        raise ValueError(f"modulation order {mod_order} outside 1..{cfg.max_mod_order}")
    return int(math.floor(cfg.cw_design_a * 2 ** (cfg.max_mod_order - mod_order)))


def draw_backoff(mod_order: int, penalized: bool, cfg: ContentionConfig,
                 rng: np.random.Generator) -> int:
    """Integer backoff uniform on {0..CW}; CW is the maximum window for one
    TTI after a collision, otherwise CW_min(beta)."""
    cw = cfg.cw_max if penalized else cw_min(mod_order, cfg)
    return int(rng.integers(0, cw + 1))


def backoff_from_uniform(u: np.ndarray, cw: np.ndarray) -> np.ndarray:
    """Map pre-drawn uniforms to integer backoffs on {0..cw} elementwise.

    Lets the engine consume one uniform per device per TTI so the contention
    stream advances identically regardless of which devices are active."""
    return np.minimum((u * (cw + 1)).astype(np.int64), cw)


@dataclass
class ContentionOutcome:
    winners: list = field(default_factory=list)
    deferred: list = field(default_factory=list)
    collided: list = field(default_factory=list)


def resolve_contention(contenders) -> ContentionOutcome:
    """Resolve one (BS, subcarrier) domain.

    `contenders` is a list of (device, preamble, backoff) triples. Winners are
    the minimum-backoff set; collided winners share their preamble with
    another winner and lose their transmissions.
    """
    out = ContentionOutcome()
    if not contenders:
        return out
    min_backoff = min(b for _, _, b in contenders)
    preamble_count: dict = {}
    for dev, pre, b in contenders:
        if b == min_backoff:
            out.winners.append(dev)
            preamble_count[pre] = preamble_count.get(pre, 0) + 1
        else:
            out.deferred.append(dev)
    for dev, pre, b in contenders:
        if b == min_backoff and preamble_count[pre] >= 2:
            out.collided.append(dev)
    return out


def resolve_domains(domain_key: np.ndarray, preamble: np.ndarray,
                    backoff: np.ndarray):
    """Vectorized contention resolution across every domain at once.

    All arrays are indexed by contender. Returns (winner_mask, collided_mask,
    n_collision_events) where a collision event is one (domain, preamble)
    group of >= 2 minimum-backoff devices.
    """
    n = len(domain_key)
    winner = np.zeros(n, dtype=bool)
    collided = np.zeros(n, dtype=bool)
    if n == 0:
        return winner, collided, 0
    order = np.argsort(domain_key, kind="stable")
    key_sorted = domain_key[order]
    starts = np.flatnonzero(np.r_[True, key_sorted[1:] != key_sorted[:-1]])
    seg_id = np.cumsum(np.r_[True, key_sorted[1:] != key_sorted[:-1]]) - 1
    min_per_seg = np.minimum.reduceat(backoff[order], starts)
    winner_sorted = backoff[order] == min_per_seg[seg_id]
    winner[order] = winner_sorted
    # Collisions: same (domain, preamble) among winners.
    w_idx = np.flatnonzero(winner)
    if len(w_idx):
        group = domain_key[w_idx].astype(np.int64) * (preamble.max() + 1) + preamble[w_idx]
        uniq, inv, counts = np.unique(group, return_inverse=True, return_counts=True)
        collided[w_idx] = counts[inv] >= 2
        n_events = int(np.sum(counts >= 2))
    else:
        n_events = 0
    return winner, collided, n_events


@dataclass(frozen=True)
class PacketTiming:
    packet_bits: int
    symbol_s: float  # 1 / symbol rate
    tti_s: float

    def __post_init__(self) -> None:
        if self.packet_bits < 1 or self.symbol_s <= 0 or self.tti_s <= 0:
            raise ValueError("invalid packet timing parameters")


def packets_per_tti(mod_order, tx_time_s, timing: PacketTiming):
    """Whole packets that fit in the transmission phase:
    floor(beta * tau_tx / (L * T_S))."""
    tau = np.asarray(tx_time_s, dtype=float)
    if np.any(tau < 0.0) or np.any(tau > timing.tti_s + 1e-12):
        raise ValueError("transmission time outside [0, TTI]")
    z = np.floor(np.asarray(mod_order, dtype=float) * tau
                 / (timing.packet_bits * timing.symbol_s)).astype(np.int64)
    if z.ndim == 0:
        return int(z)
    return z


def harq_feedback(attempted: int, lost_flags) -> tuple:
    """Per-attempt ACK/NACK counts; collided transmissions are all-NACK
    upstream (they never reach decoding)."""
    flags = np.asarray(lost_flags, dtype=bool)
    if flags.shape != (attempted,):
        raise ValueError("lost_flags length must equal attempted count")
    nacks = int(flags.sum())
    return attempted - nacks, nacks
