"""Experiment configuration: one JSON document, validated field by field."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .augment import SCHEMES, AugmentConfig
from .channel import SimScenario, SystemConfig, default_scenario
from .metaenv import MetaEnvConfig
from .model import ModelConfig
from .train import TrainConfig


class ConfigError(ValueError):
    """Validation failure; the message names the offending field."""


@dataclass(frozen=True)
class TargetConfig:
    n_ues: int = 20
    n_slots: int = 5
    n_eval_slots: int = 10


@dataclass
class ExperimentConfig:
    seed: int
    system: SystemConfig
    scenario: SimScenario
    metaenv: MetaEnvConfig
    augment: AugmentConfig
    model: ModelConfig
    train: TrainConfig
    target: TargetConfig
    raw: dict = field(default_factory=dict, repr=False)


def _get(doc: dict, section: str, key: str, kind, default, checks=()):
    sec = doc.get(section, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{section}: must be an object")
    value = sec.get(key, default)
    if value is None:
        raise ConfigError(f"{section}.{key}: required")
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"{section}.{key}: expected {kind.__name__}")
    for ok, msg in checks:
        if not ok(value):
            raise ConfigError(f"{section}.{key}: {msg}")
    return value


def _pos(name="must be >= 1"):
    return (lambda v: v >= 1, name)


def load_experiment_config(path=None, doc: dict = None,
                           seed_override: int = None) -> ExperimentConfig:
    """Parse and cross-validate a config document (path or dict)."""
    if doc is None:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError("top level: must be an object")

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed: expected a non-negative integer")
    if seed_override is not None:
        seed = seed_override

    n_h = _get(doc, "system", "n_h", int, 4, [_pos()])
    n_v = _get(doc, "system", "n_v", int, 2, [_pos()])
    n_r = _get(doc, "system", "n_r", int, 2, [_pos()])
    n_d = _get(doc, "system", "n_d", int, 8, [_pos()])
    n_sc = _get(doc, "system", "n_sc", int, 16, [_pos()])
    n_gran = _get(doc, "system", "n_gran", int, 4, [_pos()])
    if n_sc % n_gran != 0:
        raise ConfigError("system.n_sc: must be a multiple of system.n_gran")
    if n_d > n_sc:
        raise ConfigError("system.n_d: must not exceed system.n_sc")
    system = SystemConfig(n_h=n_h, n_v=n_v, n_r=n_r, n_d=n_d,
                          n_sc=n_sc, n_gran=n_gran)

    scen_doc = doc.get("scenario", {})
    if not isinstance(scen_doc, dict):
        raise ConfigError("scenario: must be an object")
    if "cluster_delays" in scen_doc:
        delays = scen_doc["cluster_delays"]
        powers = scen_doc.get("cluster_powers")
        azim = scen_doc.get("cluster_azimuth_deg")
        zen = scen_doc.get("cluster_zenith_deg")
        for name, val in (("cluster_powers", powers),
                          ("cluster_azimuth_deg", azim),
                          ("cluster_zenith_deg", zen)):
            if not isinstance(val, list) or len(val) != len(delays):
                raise ConfigError(
                    f"scenario.{name}: must be a list matching cluster_delays")
        if any((not isinstance(d, int)) or d < 1 or d > system.n_d for d in delays):
            raise ConfigError("scenario.cluster_delays: taps must lie in [1, n_d]")
        if abs(sum(powers) - 1.0) > 1e-9:
            raise ConfigError("scenario.cluster_powers: must sum to 1")
        scenario = SimScenario(
            cluster_delays=tuple(delays),
            cluster_powers=tuple(float(p) for p in powers),
            cluster_azimuth_deg=tuple(float(a) for a in azim),
            cluster_zenith_deg=tuple(float(z) for z in zen),
            azimuth_spread_deg=_get(doc, "scenario", "azimuth_spread_deg",
                                    float, 10.0),
            zenith_spread_deg=_get(doc, "scenario", "zenith_spread_deg",
                                   float, 5.0),
            rays_per_cluster=_get(doc, "scenario", "rays_per_cluster", int, 10,
                                  [_pos()]),
            doppler_cycles_per_slot=_get(doc, "scenario",
                                         "doppler_cycles_per_slot", float, 0.05),
            slot_spacing=_get(doc, "scenario", "slot_spacing", float, 1.0),
        )
    else:
        scenario = default_scenario(
            system,
            n_clusters=_get(doc, "scenario", "n_clusters", int, 4, [_pos()]),
            delay_spread_taps=_get(doc, "scenario", "delay_spread_taps",
                                   float, 2.0,
                                   [(lambda v: v > 0, "must be > 0")]),
            doppler_cycles_per_slot=_get(doc, "scenario",
                                         "doppler_cycles_per_slot", float, 0.05),
        )

    t_tasks = _get(doc, "metaenv", "t_tasks", int, 200, [_pos()])
    p_groups = _get(doc, "metaenv", "p_groups", int, 8, [_pos()])
    max_ues = _get(doc, "metaenv", "max_ues", int, 8, [_pos()])
    max_slots = _get(doc, "metaenv", "max_slots", int, 4, [_pos()])
    l_task = _get(doc, "metaenv", "l_task", int, min(6, system.n_t), [_pos()])
    m_task = _get(doc, "metaenv", "m_task", int, min(4, system.n_sb), [_pos()])
    alpha = _get(doc, "metaenv", "alpha", float, 0.75)
    beta = _get(doc, "metaenv", "beta", float, 0.75)
    if l_task > system.n_t:
        raise ConfigError("metaenv.l_task: must not exceed n_t")
    if m_task > system.n_sb:
        raise ConfigError("metaenv.m_task: must not exceed n_sb")
    if not 0.0 < alpha <= 1.0:
        raise ConfigError("metaenv.alpha: must be in (0, 1]")
    if not 0.0 < beta <= 1.0:
        raise ConfigError("metaenv.beta: must be in (0, 1]")
    metaenv = MetaEnvConfig(t_tasks=t_tasks, p_groups=p_groups,
                            max_ues=max_ues, max_slots=max_slots,
                            l_task=l_task, m_task=m_task,
                            alpha=alpha, beta=beta, seed=seed)

    scheme = _get(doc, "augment", "scheme", str, "proposed")
    if scheme not in SCHEMES:
        raise ConfigError(
            f"augment.scheme: unknown scheme '{scheme}' (expected one of {SCHEMES})")
    augment = AugmentConfig(
        n_aug=_get(doc, "augment", "n_aug", int, 50, [_pos()]),
        scheme=scheme,
        noise_snr_db=_get(doc, "augment", "noise_snr_db", float, 10.0),
    )

    d_lat = _get(doc, "model", "d_lat", int, 8, [_pos()])
    feedback_bits = _get(doc, "model", "feedback_bits", int, 16, [_pos()])
    if feedback_bits % d_lat != 0:
        raise ConfigError("model.feedback_bits: must be a multiple of model.d_lat")
    bits_per_latent = feedback_bits // d_lat
    if not 1 <= bits_per_latent <= 8:
        raise ConfigError(
            "model.feedback_bits: bits per latent (feedback_bits/d_lat) must be in 1..8")
    for key in ("enc_widths", "dec_widths"):
        widths = doc.get("model", {}).get(key, None)
        if widths is not None and (not isinstance(widths, list)
                                   or any((not isinstance(w, int)) or w < 1
                                          for w in widths)):
            raise ConfigError(f"model.{key}: must be a list of positive integers")
    model = ModelConfig(
        n_t=system.n_t, n_sb=system.n_sb, d_lat=d_lat,
        bits_per_latent=bits_per_latent,
        enc_widths=tuple(doc.get("model", {}).get("enc_widths", [256, 128])),
        dec_widths=tuple(doc.get("model", {}).get("dec_widths", [128, 256])),
        init_scale=doc.get("model", {}).get("init_scale"),
    )

    optimizer = _get(doc, "train", "optimizer", str, "adam")
    if optimizer not in ("sgd", "adam"):
        raise ConfigError("train.optimizer: must be 'sgd' or 'adam'")
    meta_step = _get(doc, "train", "meta_step", float, 0.25)
    if not 0.0 <= meta_step <= 1.0:
        raise ConfigError("train.meta_step: must be in [0, 1]")
    lr = _get(doc, "train", "lr", float, 1e-3)
    if lr < 0.0:
        raise ConfigError("train.lr: must be >= 0")
    train = TrainConfig(
        optimizer=optimizer,
        lr=lr,
        batch_size=_get(doc, "train", "batch_size", int, 32, [_pos()]),
        inner_steps=_get(doc, "train", "inner_steps", int, 32, [_pos()]),
        meta_step=meta_step,
        meta_passes=_get(doc, "train", "meta_passes", int, 1, [_pos()]),
        retrain_steps=_get(doc, "train", "retrain_steps", int, 1500, [_pos()]),
        eval_interval=_get(doc, "train", "eval_interval", int, 25, [_pos()]),
        seed=seed,
    )

    target = TargetConfig(
        n_ues=_get(doc, "target", "n_ues", int, 20, [_pos()]),
        n_slots=_get(doc, "target", "n_slots", int, 5, [_pos()]),
        n_eval_slots=_get(doc, "target", "n_eval_slots", int, 10,
                          [(lambda v: v >= 0, "must be >= 0")]),
    )

    return ExperimentConfig(seed=seed, system=system, scenario=scenario,
                            metaenv=metaenv, augment=augment, model=model,
                            train=train, target=target, raw=doc)


def config_echo(cfg: ExperimentConfig) -> dict:
    """Flat parameter echo embedded into every output artifact."""
    return {
        "seed": cfg.seed,
        "system": {"n_h": cfg.system.n_h, "n_v": cfg.system.n_v,
                   "n_r": cfg.system.n_r, "n_d": cfg.system.n_d,
                   "n_sc": cfg.system.n_sc, "n_gran": cfg.system.n_gran},
        "scenario": {"cluster_delays": list(cfg.scenario.cluster_delays),
                     "cluster_powers": list(cfg.scenario.cluster_powers),
                     "rays_per_cluster": cfg.scenario.rays_per_cluster,
                     "doppler_cycles_per_slot": cfg.scenario.doppler_cycles_per_slot},
        "metaenv": {"t_tasks": cfg.metaenv.t_tasks, "p_groups": cfg.metaenv.p_groups,
                    "max_ues": cfg.metaenv.max_ues, "max_slots": cfg.metaenv.max_slots,
                    "l_task": cfg.metaenv.l_task, "m_task": cfg.metaenv.m_task,
                    "alpha": cfg.metaenv.alpha, "beta": cfg.metaenv.beta},
        "augment": {"n_aug": cfg.augment.n_aug, "scheme": cfg.augment.scheme,
                    "noise_snr_db": cfg.augment.noise_snr_db},
        "model": {"d_lat": cfg.model.d_lat,
                  "feedback_bits": cfg.model.feedback_bits,
                  "enc_widths": list(cfg.model.enc_widths),
                  "dec_widths": list(cfg.model.dec_widths)},
        "train": {"optimizer": cfg.train.optimizer, "lr": cfg.train.lr,
                  "batch_size": cfg.train.batch_size,
                  "inner_steps": cfg.train.inner_steps,
                  "meta_step": cfg.train.meta_step,
                  "meta_passes": cfg.train.meta_passes,
                  "retrain_steps": cfg.train.retrain_steps,
                  "eval_interval": cfg.train.eval_interval},
        "target": {"n_ues": cfg.target.n_ues, "n_slots": cfg.target.n_slots,
                   "n_eval_slots": cfg.target.n_eval_slots},
    }
