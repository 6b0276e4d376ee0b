"""Validate critic warmup + final protocol across seeds, both scales."""
import sys

import numpy as np

from gfla.config import RealizationConfig
from gfla.engine import run_realization

BASE = dict(base_stations=2, subcarriers=8, preambles=16,
            arrival_classes=(8.0, 12.0, 16.0), update_period=50,
            broadcast_period=50, gamma=0.98, reward_scale=0.1, q_bar=0.5,
            learning_rate=3.5e-3, init_on_logit=-2.2, critic_warmup_updates=0,
            ttis=3000, realizations=1)


def report(tag, arch, r):
    h = r.holding_cum; p = r.power_cum_mw; c = r.collisions_cum; o = r.overflow_cum
    ih = np.diff(h * np.arange(1, len(h) + 1))
    print(f'{tag} {arch:9s} hold={h[-1]:6.2f} ovf={o[-1]:7.4f} '
          f'cumPow={p[-1]:7.1f} coll={c[-1]:5d} iHold@end={ih[-100:].mean():5.2f}',
          flush=True)


mode = sys.argv[1] if len(sys.argv) > 1 else "64"
if mode == "64":
    for seed in (77, 101, 202):
        cfg = RealizationConfig(users=64, seed=seed, **BASE)
        for arch in ('baseline', 'il', 'dacc', 'cldi'):
            report(f's{seed}', arch, run_realization(cfg, arch, 0))
else:
    for seed in (77, 101):
        cfg = RealizationConfig(users=192, seed=seed, **BASE)
        for arch in ('il', 'dacc', 'cldi'):
            report(f's{seed}', arch, run_realization(cfg, arch, 0))
