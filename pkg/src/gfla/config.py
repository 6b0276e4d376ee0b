"""Flat key=value configuration with validated defaults.

Defaults mirror the reference deployment (two base stations, eight
subcarriers, 10 ms TTIs, gamma 0.99, ...); knobs the reference leaves open
(contention window scale, congestion threshold, transmit power set, noise
floor, violation-weight scale, clip range, slot quantum) carry calibrated
defaults that are echoed into every run record.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .ppo import PPOHyperparams

ARCH_CHOICES = ("il", "dacc", "cldi", "baseline", "all")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RealizationConfig:
    users: int = 2560
    base_stations: int = 2
    subcarriers: int = 8
    preambles: int = 64
    radius_m: float = 300.0
    path_loss_exp: float = 3.5
    symbol_rate: float = 1e5
    packet_bytes: int = 100
    tti_s: float = 0.01
    buffer_capacity: int = 25
    update_period: int = 200
    delay_classes: tuple = (4, 8, 12)
    arrival_classes: tuple = (40.0, 60.0, 80.0)
    gamma: float = 0.99
    p_on_mw: float = 320.0
    p_off_mw: float = 0.0
    f_max_hz: float = 10.0
    max_mod_order: int = 4
    power_levels_mw: tuple = (10.0, 20.0, 40.0, 80.0, 160.0)
    noise_w: float = 1e-13
    cw_a: float = 8.0
    q_bar: float = 0.3
    kappa_omega: float = 1.0
    clip_epsilon: float = 0.2
    slot_quantum: float = 0.0  # 0 -> 1/(2*CW_max)
    ber_literal: bool = False
    fc_activation: str = "relu"
    learning_rate: float = 7e-4
    ppo_epochs: int = 4
    ppo_minibatches: int = 10
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    broadcast_period: int = 200
    power_cost_scale: float = 1.0
    reward_scale: float = 1.0
    init_on_logit: float = 0.0
    critic_warmup_updates: int = 0
    arch: str = "all"
    ttis: int = 3000
    realizations: int = 8
    seed: int = 1234

    # -- derived quantities -------------------------------------------------
    @property
    def packet_bits(self) -> int:
        return 8 * self.packet_bytes

    @property
    def symbol_s(self) -> float:
        return 1.0 / self.symbol_rate

    @property
    def p_on_w(self) -> float:
        return self.p_on_mw * 1e-3

    @property
    def p_off_w(self) -> float:
        return self.p_off_mw * 1e-3

    @property
    def power_levels_w(self) -> tuple:
        return tuple(p * 1e-3 for p in self.power_levels_mw)

    @property
    def input_dim(self) -> int:
        return self.base_stations * self.subcarriers + 4

    @property
    def pooled_dim(self) -> int:
        return self.base_stations * self.subcarriers + 3

    def hyperparams(self) -> PPOHyperparams:
        return PPOHyperparams(clip_epsilon=self.clip_epsilon,
                              value_coef=self.value_coef,
                              entropy_coef=self.entropy_coef,
                              epochs=self.ppo_epochs,
                              minibatches=self.ppo_minibatches,
                              gamma=self.gamma,
                              learning_rate=self.learning_rate)


def _parse_int(s): return int(s)
def _parse_float(s): return float(s)


def _parse_bool(s):
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_int_list(s):
    return tuple(int(v.strip()) for v in s.split(","))


def _parse_float_list(s):
    return tuple(float(v.strip()) for v in s.split(","))


def _choice(options):
    def parse(s):
        v = s.strip().lower()
        if v not in options:
            raise ValueError(f"expected one of {options}, got {s!r}")
        return v
    return parse


# key -> (parser, validator, description of the constraint)
_SCHEMA = {
    "users": (_parse_int, lambda v: v >= 1, ">= 1"),
    "base_stations": (_parse_int, lambda v: v >= 1, ">= 1"),
    "subcarriers": (_parse_int, lambda v: v >= 1, ">= 1"),
    "preambles": (_parse_int, lambda v: v >= 1, ">= 1"),
    "radius_m": (_parse_float, lambda v: v > 0, "> 0"),
    "path_loss_exp": (_parse_float, lambda v: v > 0, "> 0"),
    "symbol_rate": (_parse_float, lambda v: v > 0, "> 0"),
    "packet_bytes": (_parse_int, lambda v: v >= 1, ">= 1"),
    "tti_s": (_parse_float, lambda v: v > 0, "> 0"),
    "buffer_capacity": (_parse_int, lambda v: v >= 1, ">= 1"),
    "update_period": (_parse_int, lambda v: v >= 1, ">= 1"),
    "delay_classes": (_parse_int_list, lambda v: len(v) >= 1 and all(d >= 0 for d in v), "non-empty, >= 0"),
    "arrival_classes": (_parse_float_list, lambda v: len(v) >= 1 and all(r >= 0 for r in v), "non-empty, >= 0"),
    "gamma": (_parse_float, lambda v: 0 < v < 1, "in (0, 1)"),
    "p_on_mw": (_parse_float, lambda v: v >= 0, ">= 0"),
    "p_off_mw": (_parse_float, lambda v: v >= 0, ">= 0"),
    "f_max_hz": (_parse_float, lambda v: v >= 0, ">= 0"),
    "max_mod_order": (_parse_int, lambda v: v >= 1, ">= 1"),
    "power_levels_mw": (_parse_float_list, lambda v: len(v) >= 1 and all(p > 0 for p in v), "non-empty, > 0"),
    "noise_w": (_parse_float, lambda v: v > 0, "> 0"),
    "cw_a": (_parse_float, lambda v: v > 0, "> 0"),
    "q_bar": (_parse_float, lambda v: 0 <= v <= 1, "in [0, 1]"),
    "kappa_omega": (_parse_float, lambda v: v >= 0, ">= 0"),
    "clip_epsilon": (_parse_float, lambda v: v > 0, "> 0"),
    "slot_quantum": (_parse_float, lambda v: 0 <= v < 1, "in [0, 1)"),
    "ber_literal": (_parse_bool, lambda v: True, ""),
    "fc_activation": (_choice(("relu", "tanh")), lambda v: True, ""),
    "learning_rate": (_parse_float, lambda v: v > 0, "> 0"),
    "ppo_epochs": (_parse_int, lambda v: v >= 1, ">= 1"),
    "ppo_minibatches": (_parse_int, lambda v: v >= 1, ">= 1"),
    "value_coef": (_parse_float, lambda v: v >= 0, ">= 0"),
    "entropy_coef": (_parse_float, lambda v: v >= 0, ">= 0"),
    "broadcast_period": (_parse_int, lambda v: v >= 1, ">= 1"),
    "power_cost_scale": (_parse_float, lambda v: v > 0, "> 0"),
    "reward_scale": (_parse_float, lambda v: v > 0, "> 0"),
    "init_on_logit": (_parse_float, lambda v: True, ""),
    "critic_warmup_updates": (_parse_int, lambda v: v >= 0, ">= 0"),
    "arch": (_choice(ARCH_CHOICES), lambda v: True, ""),
    "ttis": (_parse_int, lambda v: v >= 1, ">= 1"),
    "realizations": (_parse_int, lambda v: v >= 1, ">= 1"),
    "seed": (_parse_int, lambda v: v >= 0, ">= 0"),
}


def parse_config_text(text: str, source: str = "<config>") -> RealizationConfig:
    """Parse `key = value` lines; blank lines and #-comments are skipped.
    Unknown keys, malformed lines and out-of-range values raise ConfigError
    with the offending line number."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: malformed line {raw!r} "
                              "(expected key = value)")
        key, _, val = line.partition("=")
        key = key.strip().lower()
        val = val.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        parser, valid, constraint = _SCHEMA[key]
        try:
            parsed = parser(val)
        except ValueError as err:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {err}") from None
        if not valid(parsed):
            raise ConfigError(f"{source}:{lineno}: {key} = {parsed!r} out of "
                              f"range (must be {constraint})")
        values[key] = parsed
    cfg = RealizationConfig(**values)
    _cross_validate(cfg, source)
    return cfg


def _cross_validate(cfg: RealizationConfig, source: str) -> None:
    import math
    cw_max = int(math.floor(cfg.cw_a * 2 ** cfg.max_mod_order))
    quantum = cfg.slot_quantum if cfg.slot_quantum > 0 else 1.0 / (2.0 * cw_max)
    if not (cw_max * quantum < 1.0):
        raise ConfigError(f"{source}: slot_quantum {quantum} leaves no "
                          "transmission time (CW_max * slot_quantum >= 1)")


def parse_config(path) -> RealizationConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return parse_config_text(text, source=str(path))


def format_config(cfg: RealizationConfig) -> str:
    """Canonical text form; parse_config_text(format_config(cfg)) == cfg."""
    lines = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            text = ",".join(repr(v) for v in value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def config_dict(cfg: RealizationConfig) -> dict:
    return {f.name: (list(v) if isinstance(v := getattr(cfg, f.name), tuple) else v)
            for f in dataclasses.fields(cfg)}
