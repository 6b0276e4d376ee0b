"""Run the actual criterion-7 shaped campaign and print the aggregate ratios."""
import sys

from gfla.config import RealizationConfig
from gfla.engine import run_campaign

Q = float(sys.argv[1]) if len(sys.argv) > 1 else 0.7
cfg = RealizationConfig(users=64, base_stations=2, subcarriers=8, preambles=16,
                        arrival_classes=(8.0, 12.0, 16.0), update_period=50,
                        broadcast_period=50, gamma=0.98, reward_scale=0.1,
                        learning_rate=3.5e-3, init_on_logit=-2.2, q_bar=Q,
                        ttis=3000, realizations=8, seed=20260808)
campaign = run_campaign(cfg, ["baseline", "il", "dacc", "cldi"], workers=2)
base = campaign.per_arch["baseline"].final
print(f"q_bar={Q} wall={campaign.wall_s:.0f}s failures={campaign.failures}")
print(f"baseline: pow={base['power_cost_mw']:.2f} coll={base['collisions']:.2f} "
      f"hold={base['holding_cost_packets']:.3f} ovf={base['overflow_packets']:.4f}")
for arch in ("il", "dacc", "cldi"):
    f = campaign.per_arch[arch].final
    print(f"{arch:5s}: pow={f['power_cost_mw']:7.2f} ({f['power_cost_mw']/base['power_cost_mw']:.3f}x) "
          f"coll={f['collisions']:6.2f} ({f['collisions']/max(base['collisions'],1e-9):.3f}x) "
          f"hold={f['holding_cost_packets']:6.3f} ovf={f['overflow_packets']:.4f}")
