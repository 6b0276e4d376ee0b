"""Built-in oracle suite behind the `verify` CLI subcommand.

A quick, self-contained subset of the test suite: exact formula anchors,
fading statistics, a gradient check against central finite differences, and
a short end-to-end conservation run. Prints one PASS/FAIL line per check.
"""

from __future__ import annotations

import math

import numpy as np

from .channel import correlation_coefficient, packet_loss_prob
from .config import RealizationConfig
from .engine import Realization
from .mac import ContentionConfig, PacketTiming, cw_min, packets_per_tti
from .neural import NetworkDims, WeightBundle, backward_sequence, forward_sequence
from .posg import ActionSpace, overflow_penalty


def _check_formula_anchors():
    ok = True
    detail = []
    mu = overflow_penalty(0.99)
    ok &= mu == 99.0
    detail.append(f"penalty(0.99)={mu!r}")
    kappa = correlation_coefficient(10.0, 0.01)
    ok &= abs(kappa - 0.9037126420924663) < 1e-9
    detail.append(f"kappa={kappa:.10f}")
    pl = packet_loss_prob(0.001, 800)
    ok &= abs(pl - 0.5508508513899246) < 1e-12
    detail.append(f"plr={pl:.10f}")
    cfg = ContentionConfig(8.0, 4)
    ok &= [cw_min(b, cfg) for b in (1, 2, 3, 4)] == [64, 32, 16, 8]
    timing = PacketTiming(800, 1e-5, 0.01)
    ok &= packets_per_tti(4, 0.009, timing) == 4
    ok &= packets_per_tti(1, 0.008, timing) == 1
    ok &= packets_per_tti(1, 0.0079, timing) == 0
    return ok, "; ".join(detail)


def _check_fading_statistics():
    from .channel import FadingState, step_fading
    rng = np.random.Generator(np.random.PCG64(7))
    state = FadingState.initial(4, 1, 2, 10.0, 0.01, rng)
    n = 100_000
    trace = np.empty(n, dtype=complex)
    for t in range(n):
        trace[t] = state.h[0, 0, 0]
        state = step_fading(state, rng)
    var = np.mean(np.abs(trace) ** 2)
    x = trace - trace.mean()
    lag1 = float(np.real(np.vdot(x[:-1], x[1:]) / np.vdot(x[:-1], x[:-1])))
    ok = abs(var - 1.0) < 0.02 and abs(lag1 - state.kappa) < 0.01
    return ok, f"var={var:.4f}, lag1={lag1:.4f}, kappa={state.kappa:.4f}"


def _check_gradients():
    dims = NetworkDims(input_dim=6, n_actions=8)
    worst = 0.0
    for seed in range(2):
        rng = np.random.Generator(np.random.PCG64(100 + seed))
        bundle = WeightBundle.init_random(dims, 1, rng)
        obs = rng.standard_normal((1, 1, 4, dims.input_dim))
        h0 = rng.standard_normal((1, 1, dims.hidden)) * 0.1
        cl = rng.standard_normal((4, 1, 1, dims.n_actions))
        cv = rng.standard_normal((4, 1, 1))

        def loss(b):
            logits, values, _, _ = forward_sequence(b, h0, obs)
            return float((cl * logits).sum() + (cv * values).sum())

        _, _, _, tape = forward_sequence(bundle, h0, obs)
        grads = backward_sequence(bundle, tape, cl, cv)
        eps = 1e-5
        for name in ("wz", "uh", "w2", "wa", "bc"):
            arr = bundle.params[name]
            flat = arr.reshape(-1)
            for i in range(0, flat.size, max(1, flat.size // 40)):
                orig = flat[i]
                flat[i] = orig + eps
                up = loss(bundle)
                flat[i] = orig - eps
                dn = loss(bundle)
                flat[i] = orig
                fd = (up - dn) / (2 * eps)
                an = grads[name].reshape(-1)[i]
                denom = max(abs(fd), abs(an), 1e-8)
                worst = max(worst, abs(fd - an) / denom)
    return worst < 1e-4, f"max relative error {worst:.2e}"


def _check_conservation():
    cfg = RealizationConfig(users=8, base_stations=2, subcarriers=4,
                            preambles=8, ttis=300, realizations=1, seed=5)
    result = Realization(cfg, "il", 0).run(ttis=300)
    ok = result.conservation_violations == 0
    return ok, f"violations={result.conservation_violations} over 300 TTIs"


def _check_action_encoding():
    space = ActionSpace(4, 5, 8)
    ok = space.size == 320
    for idx in range(space.size):
        if space.encode(*space.decode(idx)) != idx:
            ok = False
            break
    return ok, f"bijection over {space.size} actions"


CHECKS = (
    ("formula anchors", _check_formula_anchors),
    ("fading statistics", _check_fading_statistics),
    ("gradient check", _check_gradients),
    ("action encoding", _check_action_encoding),
    ("buffer conservation", _check_conservation),
)


def run_verify(out=print) -> bool:
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as err:  # noqa: BLE001 - reported as failure
            ok, detail = False, f"raised {err!r}"
        all_ok &= ok
        out(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok
