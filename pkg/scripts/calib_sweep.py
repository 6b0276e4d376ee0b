"""One-off calibration sweep for the desk-scale acceptance protocol."""
import numpy as np

from gfla.config import RealizationConfig
from gfla.engine import run_realization

print('--- baseline q_bar sweep (holding is its objective)', flush=True)
for q in (0.3, 0.5, 0.7):
    cfg = RealizationConfig(users=64, base_stations=2, subcarriers=8, preambles=16,
                            arrival_classes=(8.0, 12.0, 16.0), q_bar=q,
                            ttis=3000, realizations=1, seed=77)
    r = run_realization(cfg, 'baseline', 0)
    print(f'q_bar={q}: hold={r.holding_cum[-1]:6.3f} ovf={r.overflow_cum[-1]:.4f} '
          f'pow={r.power_cum_mw[-1]:6.1f} coll={r.collisions_cum[-1]}', flush=True)

print('--- learned at q_bar=0.5, kappa_omega sweep', flush=True)
for kw in (1.0, 3.0):
    print(f'== kappa_omega={kw}', flush=True)
    cfg = RealizationConfig(users=64, base_stations=2, subcarriers=8, preambles=16,
                            arrival_classes=(8.0, 12.0, 16.0), update_period=50,
                            broadcast_period=50, gamma=0.98, reward_scale=0.1,
                            learning_rate=3.5e-3, init_on_logit=-2.2, q_bar=0.5,
                            kappa_omega=kw, ttis=3000, realizations=1, seed=77)
    for arch in ('il', 'dacc', 'cldi'):
        r = run_realization(cfg, arch, 0)
        h = r.holding_cum; p = r.power_cum_mw; c = r.collisions_cum; o = r.overflow_cum
        ip = np.diff(p * np.arange(1, 3001)); ih = np.diff(h * np.arange(1, 3001))
        print(f'{arch:9s} hold={h[-1]:6.2f} ovf={o[-1]:7.4f} cumPow={p[-1]:7.1f} '
              f'coll={c[-1]:4d} | iPow @1500={ip[1450:1550].mean():6.1f} '
              f'@2900={ip[-100:].mean():6.1f} | iHold@2900={ih[-100:].mean():5.2f}',
              flush=True)
