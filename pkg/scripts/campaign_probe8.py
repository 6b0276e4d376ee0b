"""Criterion-8 shaped campaign: 192 devices, learned architectures only."""
from gfla.config import RealizationConfig
from gfla.engine import run_campaign

cfg = RealizationConfig(users=192, base_stations=2, subcarriers=8, preambles=16,
                        arrival_classes=(8.0, 12.0, 16.0), update_period=50,
                        broadcast_period=50, gamma=0.98, reward_scale=0.1,
                        learning_rate=3.5e-3, init_on_logit=-2.2, q_bar=0.7,
                        ttis=3000, realizations=8, seed=20260808)
campaign = run_campaign(cfg, ["il", "dacc", "cldi"], workers=2)
print(f"wall={campaign.wall_s:.0f}s failures={campaign.failures}")
for arch in ("il", "dacc", "cldi"):
    f = campaign.per_arch[arch].final
    print(f"{arch:5s}: pow={f['power_cost_mw']:7.2f} hold={f['holding_cost_packets']:6.3f} "
          f"coll={f['collisions']:7.2f} ovf={f['overflow_packets']:.4f}")
il = campaign.per_arch["il"].final
da = campaign.per_arch["dacc"].final
cl = campaign.per_arch["cldi"].final
print(f"CLDI hold vs 1.1*min(IL,DACC): {cl['holding_cost_packets']:.3f} vs "
      f"{1.1*min(il['holding_cost_packets'], da['holding_cost_packets']):.3f}")
print(f"CLDI pow {cl['power_cost_mw']:.2f} <= IL {il['power_cost_mw']:.2f}? "
      f"{cl['power_cost_mw'] <= il['power_cost_mw']}; <= DACC {da['power_cost_mw']:.2f}? "
      f"{cl['power_cost_mw'] <= da['power_cost_mw']}")
