"""CLDI stability vs learning rate on the campaign's own seed streams."""
import numpy as np

from gfla.config import RealizationConfig
from gfla.engine import run_realization

BASE = dict(users=64, base_stations=2, subcarriers=8, preambles=16,
            arrival_classes=(8.0, 12.0, 16.0), update_period=50,
            broadcast_period=50, gamma=0.98, reward_scale=0.1, q_bar=0.7,
            init_on_logit=-2.2, ttis=3000, realizations=8, seed=20260808)

for lr in (2.5e-3, 3.5e-3):
    vals = []
    for idx in range(4):
        cfg = RealizationConfig(learning_rate=lr, **BASE)
        r = run_realization(cfg, 'cldi', idx)
        vals.append((r.power_cum_mw[-1], r.collisions_cum[-1],
                     r.holding_cum[-1]))
        print(f'lr={lr} idx={idx}: pow={vals[-1][0]:7.1f} coll={vals[-1][1]:4d} '
              f'hold={vals[-1][2]:6.2f}', flush=True)
    arr = np.array(vals)
    print(f'lr={lr} MEAN pow={arr[:,0].mean():.1f} coll={arr[:,1].mean():.1f} '
          f'hold={arr[:,2].mean():.2f}', flush=True)
