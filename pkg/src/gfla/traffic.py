"""Poisson arrivals, finite buffer bookkeeping, goodput and overflow."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sample_arrivals(rate_pkt_s, tti_s: float, rng: np.random.Generator):
    """Packets arriving in one TTI: Poisson with mean rate * dt. Accepts a
    scalar rate or a per-device vector."""
    lam = np.asarray(rate_pkt_s, dtype=float)
    if np.any(lam < 0.0):
        raise ValueError("arrival rate must be >= 0")
    draw = rng.poisson(lam * tti_s)
    if lam.ndim == 0:
        return int(draw)
    return draw.astype(np.int64)


def realize_goodput(b_pre: int, attempted_capacity: int, p_loss: float,
                    collided: bool, rng: np.random.Generator) -> int:
    """Packets leaving the buffer this TTI. Collisions lose everything; lost
    packets stay queued for retransmission (reactive HARQ)."""
    if collided or attempted_capacity <= 0 or b_pre <= 0:
        return 0
    n = min(attempted_capacity, b_pre)
    return int(rng.binomial(n, 1.0 - p_loss))


def update_buffer(b_pre, arrivals, goodput, capacity: int):
    """Apply one TTI of departures then arrivals to a finite buffer.

    Returns (b_post, overflow). Transmissions draw only from packets present
    at the TTI start, so goodput <= b_pre is a hard precondition.
    """
    b = np.asarray(b_pre, dtype=np.int64)
    l = np.asarray(arrivals, dtype=np.int64)
    g = np.asarray(goodput, dtype=np.int64)
    assert np.all(g <= b), "goodput exceeded pre-arrival queue"
    overflow = np.maximum(b + l - g - capacity, 0)
    b_post = np.minimum(b - g + l, capacity)
    if b.ndim == 0:
        return int(b_post), int(overflow)
    return b_post, overflow


@dataclass
class BufferState:
    """Per-device queues for one realization, advanced by the engine."""

    capacity: int
    arrival_rate: np.ndarray  # packets/s per device
    delay_limit: np.ndarray   # constraint in queued packets per device
    b: np.ndarray
    last_arrivals: np.ndarray
    last_goodput: np.ndarray
    last_overflow: np.ndarray

    @classmethod
    def empty(cls, capacity: int, arrival_rate: np.ndarray,
              delay_limit: np.ndarray) -> "BufferState":
        n = len(arrival_rate)
        zeros = lambda: np.zeros(n, dtype=np.int64)
        return cls(capacity=capacity, arrival_rate=np.asarray(arrival_rate, float),
                   delay_limit=np.asarray(delay_limit, np.int64), b=zeros(),
                   last_arrivals=zeros(), last_goodput=zeros(), last_overflow=zeros())

    def advance(self, arrivals: np.ndarray, goodput: np.ndarray):
        """Vectorized buffer update; returns the per-device overflow."""
        b_pre = self.b
        b_post, overflow = update_buffer(b_pre, arrivals, goodput, self.capacity)
        # Conservation audit: b' = b + l - g - xi exactly, within capacity.
        assert np.all(b_post == b_pre + arrivals - goodput - overflow)
        assert np.all((b_post >= 0) & (b_post <= self.capacity))
        self.b = b_post
        self.last_arrivals = np.asarray(arrivals, np.int64)
        self.last_goodput = np.asarray(goodput, np.int64)
        self.last_overflow = overflow
        return overflow
