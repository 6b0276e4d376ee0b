"""Final calibration: CLDI variants at 64 users + criterion-8 shape at 192."""
import numpy as np

from gfla.config import RealizationConfig
from gfla.engine import run_realization

BASE = dict(base_stations=2, subcarriers=8, preambles=16,
            arrival_classes=(8.0, 12.0, 16.0), update_period=50,
            broadcast_period=50, gamma=0.98, reward_scale=0.1, q_bar=0.5,
            ttis=3000, realizations=1, seed=77)


def report(tag, arch, r):
    h = r.holding_cum; p = r.power_cum_mw; c = r.collisions_cum; o = r.overflow_cum
    ip = np.diff(p * np.arange(1, 3001)); ih = np.diff(h * np.arange(1, 3001))
    print(f'{tag} {arch:9s} hold={h[-1]:6.2f} ovf={o[-1]:7.4f} cumPow={p[-1]:7.1f} '
          f'coll={c[-1]:4d} | iPow@2900={ip[-100:].mean():6.1f} '
          f'iHold@2900={ih[-100:].mean():5.2f}', flush=True)


for init, lr in ((-2.6, 3.5e-3), (-2.2, 5e-3), (-2.6, 5e-3)):
    cfg = RealizationConfig(users=64, learning_rate=lr, init_on_logit=init, **BASE)
    report(f'64u init={init} lr={lr}', 'cldi', run_realization(cfg, 'cldi', 0))

cfg = RealizationConfig(users=64, learning_rate=5e-3, init_on_logit=-2.2, **BASE)
report('64u init=-2.2 lr=5e-3', 'dacc', run_realization(cfg, 'dacc', 0))

print('--- 192 users (criterion 8 shape), lr=3.5e-3 init=-2.2', flush=True)
cfg = RealizationConfig(users=192, learning_rate=3.5e-3, init_on_logit=-2.2, **BASE)
for arch in ('il', 'dacc', 'cldi'):
    report('192u', arch, run_realization(cfg, arch, 0))
