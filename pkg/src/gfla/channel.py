"""Per-link geometry, Gauss-Markov fading, interference and error rates.

The physical layer is abstracted to the per-link power gain
|h|^2 * d^-alpha: transmissions are resolved through an SINR, an approximate
QAM bit-error probability, and an i.i.d. per-bit packet-loss probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .special import bessel_j0, erfc

# Free-space gain diverges at d -> 0; clamp every link to one meter.
MIN_LINK_DISTANCE_M = 1.0


@dataclass
class Topology:
    """Fixed geometry of one realization: positions, distances, association."""

    device_positions: np.ndarray  # (N_U, 2) meters
    bs_positions: np.ndarray      # (N_B, 2) meters
    radius: float
    path_loss_exp: float
    n_subcarriers: int
    n_preambles: int
    distances: np.ndarray = field(init=False)    # (N_U, N_B), >= 1 m
    association: np.ndarray = field(init=False)  # (N_U,) nearest-BS index
    path_gain: np.ndarray = field(init=False)    # (N_U, N_B) = d^-alpha

    def __post_init__(self) -> None:
        dev = np.asarray(self.device_positions, dtype=float)
        bs = np.asarray(self.bs_positions, dtype=float)
        diff = dev[:, None, :] - bs[None, :, :]
        d = np.sqrt((diff ** 2).sum(axis=-1))
        self.distances = np.maximum(d, MIN_LINK_DISTANCE_M)
        # argmin breaks ties toward the lowest BS index
        self.association = np.argmin(self.distances, axis=1)
        self.path_gain = self.distances ** (-self.path_loss_exp)

    @property
    def n_devices(self) -> int:
        return self.device_positions.shape[0]

    @property
    def n_bs(self) -> int:
        return self.bs_positions.shape[0]


def correlation_coefficient(f_max_hz: float, tti_s: float) -> float:
    """Lag-1 fading correlation J0(2*pi*f_max*dt) for Doppler f_max."""
    if not (f_max_hz >= 0.0):
        raise ValueError(f"maximum Doppler frequency must be >= 0, got {f_max_hz}")
    if not (tti_s > 0.0):
        raise ValueError(f"TTI duration must be > 0, got {tti_s}")
    return bessel_j0(2.0 * math.pi * f_max_hz * tti_s)


@dataclass
class FadingState:
    """First-order Gauss-Markov flat fading, one coefficient per link and
    subcarrier. Stationary per-entry distribution is CN(0, 1)."""

    h: np.ndarray  # complex (N_U, N_B, N_S)
    kappa: float

    def __post_init__(self) -> None:
        # |J0| <= 1 analytically; the clamp only guards rounding.
        self.kappa = float(np.clip(self.kappa, -1.0, 1.0))

    @property
    def innovation_variance(self) -> float:
        return 1.0 - self.kappa ** 2

    @classmethod
    def initial(cls, n_devices: int, n_bs: int, n_subcarriers: int,
                f_max_hz: float, tti_s: float, rng: np.random.Generator) -> "FadingState":
        kappa = correlation_coefficient(f_max_hz, tti_s)
        shape = (n_devices, n_bs, n_subcarriers)
        h = math.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        return cls(h=h, kappa=kappa)


def step_fading(state: FadingState, rng: np.random.Generator) -> FadingState:
    """Advance every coefficient one TTI: h' = kappa*h + n, n ~ CN(0, 1-kappa^2)."""
    var = state.innovation_variance
    if var == 0.0:
        return FadingState(h=state.h.copy(), kappa=state.kappa)
    s = math.sqrt(0.5 * var)
    n = s * (rng.standard_normal(state.h.shape) + 1j * rng.standard_normal(state.h.shape))
    return FadingState(h=state.kappa * state.h + n, kappa=state.kappa)


def channel_gains(state: FadingState, topo: Topology) -> np.ndarray:
    """Instantaneous power gains |h|^2 * d^-alpha, shape (N_U, N_B, N_S)."""
    return (np.abs(state.h) ** 2) * topo.path_gain[:, :, None]


def interference_power(transmitters, topo: Topology, fading: FadingState,
                       victim: int, bs: int, subcarrier: int) -> float:
    """Aggregate co-channel power received at `bs` on `subcarrier` from every
    transmitter except the victim, regardless of serving cell.

    `transmitters` is an iterable of (device, power_w, subcarrier) triples.
    """
    if not (0 <= subcarrier < topo.n_subcarriers):
        raise IndexError(f"subcarrier {subcarrier} outside 0..{topo.n_subcarriers - 1}")
    total = 0.0
    for dev, power, sub in transmitters:
        if dev == victim or sub != subcarrier:
            continue
        gain = abs(fading.h[dev, bs, sub]) ** 2 * topo.path_gain[dev, bs]
        total += power * gain
    return total


def received_power_map(tx_devices: np.ndarray, tx_power_w: np.ndarray,
                       tx_subcarrier: np.ndarray, gains: np.ndarray) -> np.ndarray:
    """Total transmit power landing on each (BS, subcarrier) cell, (N_B, N_S).

    Vectorized companion of interference_power: a victim's interference is the
    map entry at (serving BS, chosen subcarrier) minus its own contribution.
    """
    n_bs, n_sub = gains.shape[1], gains.shape[2]
    out = np.zeros((n_sub, n_bs))
    if len(tx_devices):
        contrib = tx_power_w[:, None] * gains[tx_devices, :, tx_subcarrier]  # (n_tx, N_B)
        np.add.at(out, tx_subcarrier, contrib)
    return out.T


def bit_error_prob(power_w, gain, interference_w, noise_w, mod_order,
                   max_mod_order: int, literal_order: bool = False):
    """Approximate QAM bit-error probability from the post-contention SINR.

    mod_order = 1 uses the binary branch 0.5*erfc(sqrt(SINR)); higher orders
    use 2*erfc(sqrt(3*log2(B)*SINR / (2*(B-1)))) with B = 2^mod_order by
    default (constellation size) or B = mod_order when literal_order is set.
    The prefactor 2 can push the expression above 1 at low SINR, so the
    result is clamped to [0, 1].
    """
    p = np.asarray(power_w, dtype=float)
    g = np.asarray(gain, dtype=float)
    i_w = np.asarray(interference_w, dtype=float)
    beta = np.asarray(mod_order)
    scalar = p.ndim == 0 and g.ndim == 0 and np.ndim(interference_w) == 0 and beta.ndim == 0
    if noise_w <= 0.0:
        raise ValueError("noise power must be > 0")
    if np.any(p < 0.0) or np.any(g < 0.0) or np.any(i_w < 0.0):
        raise ValueError("power, gain and interference must be >= 0")
    beta = np.atleast_1d(beta).astype(int)
    if np.any(beta < 1) or np.any(beta > max_mod_order):
        raise ValueError(f"modulation order outside 1..{max_mod_order}")
    p, g, i_w = np.atleast_1d(p), np.atleast_1d(g), np.atleast_1d(i_w)
    sinr = p * g / (i_w + noise_w)
    sinr, beta = np.broadcast_arrays(sinr, beta)
    out = np.empty(sinr.shape)
    binary = beta == 1
    if np.any(binary):
        out[binary] = 0.5 * erfc(np.sqrt(sinr[binary]))
    if np.any(~binary):
        b_eff = beta[~binary].astype(float) if literal_order else 2.0 ** beta[~binary]
        arg = 3.0 * np.log2(b_eff) * sinr[~binary] / (2.0 * (b_eff - 1.0))
        out[~binary] = 2.0 * erfc(np.sqrt(arg))
    out = np.clip(out, 0.0, 1.0)
    if scalar:
        return float(out[0])
    return out


def packet_loss_prob(bit_error, packet_bits: int):
    """Probability of losing an L-bit packet given i.i.d. bit errors:
    1 - (1 - P_e)^L, evaluated through log1p/expm1 for accuracy."""
    pe = np.asarray(bit_error, dtype=float)
    if np.any(pe < 0.0) or np.any(pe > 1.0):
        raise ValueError("bit error probability outside [0, 1]")
    if packet_bits < 1:
        raise ValueError("packet length must be >= 1 bit")
    with np.errstate(divide="ignore"):
        out = -np.expm1(packet_bits * np.log1p(-pe))
    if pe.ndim == 0:
        return float(out)
    return out
