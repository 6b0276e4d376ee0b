"""Fading, interference and error-rate model checks."""

import math

import numpy as np
import pytest

from gfla.channel import (FadingState, Topology, bit_error_prob, channel_gains,
                          correlation_coefficient, interference_power,
                          packet_loss_prob, received_power_map, step_fading)


def make_topology(n_dev=3, n_bs=2, n_sub=4):
    rng = np.random.Generator(np.random.PCG64(1))
    return Topology(device_positions=rng.uniform(-200, 200, (n_dev, 2)),
                    bs_positions=rng.uniform(-200, 200, (n_bs, 2)),
                    radius=300.0, path_loss_exp=3.5, n_subcarriers=n_sub,
                    n_preambles=8)


# --- correlation coefficient -------------------------------------------------

def test_correlation_static_channel():
    assert correlation_coefficient(0.0, 0.01) == 1.0


def test_correlation_reference_doppler():
    assert correlation_coefficient(10.0, 0.01) == pytest.approx(
        0.9037126420924663, abs=1e-9)


def test_correlation_first_bessel_zero():
    # 2*pi*38.27*0.01 sits at the first zero of the Bessel factor
    assert abs(correlation_coefficient(38.27, 0.01)) < 1e-3


def test_correlation_rejects_negative_doppler():
    with pytest.raises(ValueError):
        correlation_coefficient(-1.0, 0.01)
    with pytest.raises(ValueError):
        correlation_coefficient(10.0, 0.0)


# --- fading ------------------------------------------------------------------

def test_step_fading_kappa_one_is_static():
    rng = np.random.Generator(np.random.PCG64(2))
    state = FadingState.initial(2, 2, 3, 0.0, 0.01, rng)
    nxt = step_fading(state, rng)
    assert np.array_equal(nxt.h, state.h)


def test_step_fading_kappa_zero_is_memoryless():
    rng = np.random.Generator(np.random.PCG64(3))
    state = FadingState(h=np.ones((1, 1, 1), dtype=complex), kappa=0.0)
    draws = []
    for _ in range(4000):
        state = FadingState(h=np.ones((1, 1, 1), dtype=complex), kappa=0.0)
        state = step_fading(state, rng)
        draws.append(state.h[0, 0, 0])
    draws = np.array(draws)
    assert abs(np.mean(np.abs(draws) ** 2) - 1.0) < 0.08
    assert abs(np.mean(draws.real)) < 0.05


def test_fading_autocorrelation_and_variance():
    # AR(1) statistics over 1e5 steps at the reference Doppler
    rng = np.random.Generator(np.random.PCG64(4))
    state = FadingState.initial(1, 1, 1, 10.0, 0.01, rng)
    kappa = state.kappa
    n = 100_000
    trace = np.empty(n, dtype=complex)
    for t in range(n):
        trace[t] = state.h[0, 0, 0]
        state = step_fading(state, rng)
    var = np.mean(np.abs(trace) ** 2)
    x = trace - trace.mean()
    lag1 = float(np.real(np.vdot(x[:-1], x[1:]) / np.vdot(x[:-1], x[:-1])))
    assert var == pytest.approx(1.0, abs=0.02)
    assert lag1 == pytest.approx(kappa, abs=0.01)


def test_fading_stationary_for_high_kappa():
    rng = np.random.Generator(np.random.PCG64(5))
    state = FadingState(h=np.zeros((1, 1, 1), complex), kappa=0.99)
    # warm up past the transient from the degenerate start
    for _ in range(1000):
        state = step_fading(state, rng)
    n = 100_000
    acc = 0.0
    for _ in range(n):
        state = step_fading(state, rng)
        acc += abs(state.h[0, 0, 0]) ** 2
    assert 0.95 <= acc / n <= 1.05


# --- geometry ----------------------------------------------------------------

def test_topology_min_distance_clamp():
    topo = Topology(device_positions=np.array([[5.0, 5.0]]),
                    bs_positions=np.array([[5.0, 5.0], [100.0, 5.0]]),
                    radius=300.0, path_loss_exp=3.5, n_subcarriers=2,
                    n_preambles=4)
    assert topo.distances[0, 0] == 1.0
    assert topo.association[0] == 0


def test_topology_association_is_nearest():
    topo = make_topology(n_dev=40)
    for i in range(topo.n_devices):
        assert topo.distances[i, topo.association[i]] == topo.distances[i].min()


# --- interference ------------------------------------------------------------

def test_interference_empty_and_self_excluded():
    topo = make_topology()
    rng = np.random.Generator(np.random.PCG64(6))
    fading = FadingState.initial(3, 2, 4, 10.0, 0.01, rng)
    assert interference_power([(0, 0.01, 1)], topo, fading, victim=0, bs=0,
                              subcarrier=1) == 0.0


def test_interference_single_interferer():
    topo = make_topology()
    rng = np.random.Generator(np.random.PCG64(7))
    fading = FadingState.initial(3, 2, 4, 10.0, 0.01, rng)
    got = interference_power([(0, 0.01, 2), (1, 0.02, 2)], topo, fading,
                             victim=0, bs=1, subcarrier=2)
    expected = 0.02 * abs(fading.h[1, 1, 2]) ** 2 * topo.path_gain[1, 1]
    assert got == pytest.approx(expected, rel=1e-12)


def test_interference_hand_sum_and_additivity():
    topo = make_topology()
    rng = np.random.Generator(np.random.PCG64(8))
    fading = FadingState.initial(3, 2, 4, 10.0, 0.01, rng)
    txers = [(0, 0.01, 0), (1, 0.02, 0), (2, 0.04, 0)]
    total = interference_power(txers, topo, fading, victim=0, bs=0, subcarrier=0)
    by_hand = sum(p * abs(fading.h[d, 0, 0]) ** 2 * topo.path_gain[d, 0]
                  for d, p, _ in txers[1:])
    assert total == pytest.approx(by_hand, rel=1e-12)
    # permutation invariance and additivity over disjoint sets
    assert interference_power(txers[::-1], topo, fading, 0, 0, 0) == \
        pytest.approx(total, rel=1e-12)
    parts = (interference_power([txers[1]], topo, fading, 0, 0, 0)
             + interference_power([txers[2]], topo, fading, 0, 0, 0))
    assert parts == pytest.approx(total, rel=1e-12)


def test_interference_unknown_subcarrier():
    topo = make_topology()
    rng = np.random.Generator(np.random.PCG64(9))
    fading = FadingState.initial(3, 2, 4, 10.0, 0.01, rng)
    with pytest.raises(IndexError):
        interference_power([], topo, fading, 0, 0, 11)


def test_received_power_map_matches_scalar_sum():
    topo = make_topology(n_dev=6)
    rng = np.random.Generator(np.random.PCG64(10))
    fading = FadingState.initial(6, 2, 4, 10.0, 0.01, rng)
    gains = channel_gains(fading, topo)
    tx = np.array([0, 2, 3, 5])
    power = np.array([0.01, 0.02, 0.04, 0.08])
    sub = np.array([1, 1, 3, 1])
    rx = received_power_map(tx, power, sub, gains)
    triples = list(zip(tx.tolist(), power.tolist(), sub.tolist()))
    for bs in range(2):
        for k in range(4):
            scalar = interference_power(triples, topo, fading, victim=-1,
                                        bs=bs, subcarrier=k)
            assert rx[bs, k] == pytest.approx(scalar, rel=1e-12)


# --- error rates -------------------------------------------------------------

def test_ber_binary_zero_sinr():
    assert bit_error_prob(0.0, 1.0, 0.0, 1e-13, 1, 4) == 0.5


def test_ber_binary_unit_sinr():
    # SINR == 1 through p=gain=noise scaling
    got = bit_error_prob(1e-13, 1.0, 0.0, 1e-13, 1, 4)
    assert got == pytest.approx(0.07864960352514257, abs=1e-12)


def test_ber_higher_order_reference_point():
    # SINR 4 at order 2 with constellation size 4 -> 2*erfc(2)
    got = bit_error_prob(4e-13, 1.0, 0.0, 1e-13, 2, 4)
    assert got == pytest.approx(0.009355469962094532, abs=1e-12)


def test_ber_literal_order_mode():
    got = bit_error_prob(4e-13, 1.0, 0.0, 1e-13, 2, 4, literal_order=True)
    arg = math.sqrt(3 * math.log2(2) * 4.0 / (2 * (2 - 1)))
    assert got == pytest.approx(2 * math.erfc(arg), abs=1e-12)


def test_ber_clamped_to_unit_interval():
    low = bit_error_prob(1e-20, 1.0, 0.0, 1e-13, 4, 4)
    assert low == 1.0  # 2*erfc(~0) would be ~2 without the clamp


def test_ber_monotonicity_grids():
    powers = np.linspace(1e-14, 1e-11, 25)
    vals = [bit_error_prob(p, 1.0, 1e-13, 1e-13, 3, 4) for p in powers]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))
    interf = np.linspace(0.0, 1e-11, 25)
    vals_i = [bit_error_prob(1e-12, 1.0, i, 1e-13, 3, 4) for i in interf]
    assert all(a <= b + 1e-15 for a, b in zip(vals_i, vals_i[1:]))


def test_ber_rejects_bad_order():
    with pytest.raises(ValueError):
        bit_error_prob(1e-12, 1.0, 0.0, 1e-13, 0, 4)
    with pytest.raises(ValueError):
        bit_error_prob(1e-12, 1.0, 0.0, 1e-13, 5, 4)


def test_packet_loss_endpoints_and_reference():
    assert packet_loss_prob(0.0, 800) == 0.0
    assert packet_loss_prob(1.0, 800) == 1.0
    # frozen from exact high-precision evaluation of 1 - 0.999^800
    assert packet_loss_prob(0.001, 800) == pytest.approx(0.5508508513899246,
                                                         abs=1e-12)


def test_packet_loss_single_bit_identity_and_monotonicity():
    for pe in (0.0, 0.1, 0.5, 0.9):
        assert packet_loss_prob(pe, 1) == pytest.approx(pe, abs=1e-15)
    grid = np.linspace(0, 1, 30)
    vals = [packet_loss_prob(p, 800) for p in grid]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))
    assert packet_loss_prob(0.001, 1600) >= packet_loss_prob(0.001, 800)
