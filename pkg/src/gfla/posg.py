"""State/observation/action encodings and the cost functions of the game.

Costs mix a radio power term (watts) with a queue term weighted by a
per-device delay-violation multiplier. Dropping a packet is priced at the
largest discounted cost of holding one forever, gamma/(1-gamma).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# Fixed affine/log feature scaling for network inputs. Gains are mapped to
# dB and normalized to roughly [-1, 1] over the deployment geometry; queue
# counts are scaled by the buffer capacity.
GAIN_DB_OFFSET = 70.0
GAIN_DB_SCALE = 30.0
GAIN_FLOOR = 1e-30


def overflow_penalty(gamma: float) -> float:
    """Price of a dropped packet, gamma/(1-gamma).

    Evaluated through the exact decimal value of gamma so that e.g. 0.99
    yields exactly 99 rather than 98.99999999999991 from float cancellation.
    """
    gamma = float(gamma)
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"discount factor must lie in (0, 1), got {gamma}")
    g = Fraction(repr(gamma))
    return float(g / (1 - g))


def delay_violation_weight(queue, overflow, delay_limit, penalty: float,
                           scale: float = 1.0):
    """Multiplier proportional to how far b + mu*xi exceeds the delay limit."""
    q = np.asarray(queue, dtype=float)
    xi = np.asarray(overflow, dtype=float)
    d = np.asarray(delay_limit, dtype=float)
    out = scale * np.maximum(0.0, q + penalty * xi - d)
    if q.ndim == 0 and xi.ndim == 0 and d.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class CostParams:
    p_on_w: float
    p_off_w: float
    gamma: float
    penalty_mu: float        # overflow_penalty(gamma)
    violation_scale: float   # kappa applied inside delay_violation_weight
    power_scale: float = 1.0


def local_cost(radio_on, tx_power_w, queue, overflow, violation_weight,
               params: CostParams):
    """x*(P_ON + p) + (1-x)*P_OFF + w*(b + mu*xi), elementwise."""
    x = np.asarray(radio_on, dtype=float)
    p = np.asarray(tx_power_w, dtype=float)
    b = np.asarray(queue, dtype=float)
    xi = np.asarray(overflow, dtype=float)
    w = np.asarray(violation_weight, dtype=float)
    power = (x * (params.p_on_w + p) + (1.0 - x) * params.p_off_w) * params.power_scale
    out = power + w * (b + params.penalty_mu * xi)
    if x.ndim == 0:
        return float(out)
    return out


def global_cost(local_costs) -> float:
    """Network cost: sum of the per-device costs."""
    c = np.asarray(local_costs, dtype=float)
    if c.ndim != 1:
        raise ValueError("expected a vector of per-device costs")
    return float(c.sum())


def average_cost(local_costs) -> float:
    """Per-device mean of the network cost (the shared-policy objective)."""
    c = np.asarray(local_costs, dtype=float)
    if c.size == 0:
        raise ValueError("average cost undefined for zero devices")
    return float(c.mean())


@dataclass(frozen=True)
class ActionSpace:
    """Flat categorical encoding of (radio x, modulation beta, power index,
    subcarrier k), x-major lexicographic. beta and k are 1-based."""

    max_mod_order: int
    n_powers: int
    n_subcarriers: int

    @property
    def size(self) -> int:
        return 2 * self.max_mod_order * self.n_powers * self.n_subcarriers

    def encode(self, radio_on: int, mod_order: int, power_index: int,
               subcarrier: int) -> int:
        if radio_on not in (0, 1):
            raise ValueError("radio state must be 0 or 1")
        if not (1 <= mod_order <= self.max_mod_order):
            raise ValueError("modulation order out of range")
        if not (0 <= power_index < self.n_powers):
            raise ValueError("power index out of range")
        if not (1 <= subcarrier <= self.n_subcarriers):
            raise ValueError("subcarrier out of range")
        return (((radio_on * self.max_mod_order + (mod_order - 1)) * self.n_powers
                 + power_index) * self.n_subcarriers + (subcarrier - 1))

    def decode(self, index: int):
        if not (0 <= index < self.size):
            raise ValueError(f"action index {index} outside 0..{self.size - 1}")
        index, k0 = divmod(index, self.n_subcarriers)
        index, p = divmod(index, self.n_powers)
        x, b0 = divmod(index, self.max_mod_order)
        return x, b0 + 1, p, k0 + 1

    def decode_batch(self, indices: np.ndarray):
        """Vectorized decode; returns (x, beta, power_index, subcarrier)."""
        idx = np.asarray(indices, dtype=np.int64)
        if np.any(idx < 0) or np.any(idx >= self.size):
            raise ValueError("action index out of range")
        idx, k0 = np.divmod(idx, self.n_subcarriers)
        idx, p = np.divmod(idx, self.n_powers)
        x, b0 = np.divmod(idx, self.max_mod_order)
        return x, b0 + 1, p, k0 + 1


@dataclass
class Observation:
    """What one device sees at the start of a TTI: its channel gains to every
    BS and subcarrier, plus last-TTI queue statistics. The previous radio
    state is recorded but the network consumes gains + (b, l, g, xi)."""

    channel_gains: np.ndarray  # (N_B * N_S,) linear power gains
    radio_prev: int
    queue: int
    arrivals: int
    goodput: int
    overflow: int

    def features(self, capacity: int) -> np.ndarray:
        return np.concatenate([
            gain_features(self.channel_gains),
            np.array([self.queue, self.arrivals, self.goodput, self.overflow],
                     dtype=float) / capacity,
        ])


def gain_features(gains) -> np.ndarray:
    """dB-scaled, offset-normalized channel gains."""
    g = np.asarray(gains, dtype=float)
    return (10.0 * np.log10(g + GAIN_FLOOR) + GAIN_DB_OFFSET) / GAIN_DB_SCALE


def observation_features(gains: np.ndarray, queue: np.ndarray, arrivals: np.ndarray,
                         goodput: np.ndarray, overflow: np.ndarray,
                         capacity: int) -> np.ndarray:
    """Network input matrix (N_U, N_B*N_S + 4) for all devices at once."""
    n = gains.shape[0]
    flat = gain_features(gains.reshape(n, -1))
    queue_feats = np.stack([queue, arrivals, goodput, overflow], axis=1).astype(float)
    return np.concatenate([flat, queue_feats / capacity], axis=1)


def pooled_global_features(gains: np.ndarray, queue: np.ndarray, arrivals: np.ndarray,
                           goodput: np.ndarray, capacity: int) -> np.ndarray:
    """Device-averaged view of the global state (h, b, l, g) for the central
    value estimator; dimension N_B*N_S + 3, independent of the device count."""
    n = gains.shape[0]
    flat = gain_features(gains.reshape(n, -1)).mean(axis=0)
    queue_feats = np.array([queue.mean(), arrivals.mean(), goodput.mean()]) / capacity
    return np.concatenate([flat, queue_feats])
