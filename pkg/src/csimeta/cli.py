"""Experiment harness: gen-meta, gen-target, augment, meta-train, retrain-eval.

Every subcommand is deterministic under a fixed config and seed. --out is an
output stem; each subcommand derives its artifact paths from it. Exit codes:
0 success, 1 config/validation error, 2 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from types import SimpleNamespace

import numpy as np

from .augment import augment_baseline, augment_dataset
from .channel import ORIGIN_SIMULATED, channel_to_csi, simulate_ue
from .config import ConfigError, ExperimentConfig, config_echo, load_experiment_config
from .dataio import (KIND_CSI, KIND_TIME, DatasetFormatError, DatasetWriter,
                     group_csi_by_task, load_checkpoint, read_dataset,
                     save_checkpoint, write_env_meta, write_log_csv)
from .metaenv import iter_meta_tasks
from .model import init_params
from .rng import RngStream
from .train import evaluate, meta_train, target_retrain


def _pmap(fn, n: int, threads: int) -> list:
    """Index-ordered map; work units derive their own rng so results do not
    depend on completion order."""
    if threads <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def _load_config(args) -> ExperimentConfig:
    return load_experiment_config(args.config, seed_override=args.seed)


def cmd_gen_meta(args) -> int:
    cfg = _load_config(args)
    echo = config_echo(cfg)
    count = 0
    norm_worst = 0.0
    with DatasetWriter(args.out + ".csids", KIND_CSI,
                       (cfg.system.n_t, cfg.system.n_sb),
                       cfg.seed, echo) as writer:
        # stream tasks; only skeletons are retained for the metadata sidecar
        skeletons = []
        for basis, task in iter_meta_tasks(cfg.system, cfg.metaenv):
            for s in task.samples:
                writer.add_csi(s.csi)
                norm_worst = max(norm_worst, float(np.max(np.abs(
                    np.linalg.norm(s.csi.w, axis=0) - 1.0))))
                count += 1
            task.samples = []
            skeletons.append(task)
    write_env_meta(args.out + ".env.json",
                   SimpleNamespace(env_cfg=cfg.metaenv, tasks=skeletons), echo)
    print(f"gen-meta: {len(skeletons)} tasks, {count} samples, "
          f"worst column-norm deviation {norm_worst:.3e}")
    return 0


def _simulate_target(cfg: ExperimentConfig, n_slots: int, threads: int):
    base = RngStream(cfg.seed)

    def one(ue):
        return simulate_ue(cfg.system, cfg.scenario,
                           base.derive("ue", ue), n_slots, ue_id=ue)

    return _pmap(one, cfg.target.n_ues, threads)


def cmd_gen_target(args) -> int:
    cfg = _load_config(args)
    echo = config_echo(cfg)
    per_ue = _simulate_target(cfg, cfg.target.n_slots, args.threads)
    sys_cfg = cfg.system
    with DatasetWriter(args.out + ".time.csids", KIND_TIME,
                       (sys_cfg.n_r, sys_cfg.n_t, sys_cfg.n_d),
                       cfg.seed, echo) as tw:
        for slots in per_ue:
            for tc in slots:
                tw.add_time_channel(tc)
    n_csi = 0
    with DatasetWriter(args.out + ".csi.csids", KIND_CSI,
                       (sys_cfg.n_t, sys_cfg.n_sb), cfg.seed, echo) as cw:
        for slots in per_ue:
            for tc in slots:
                cw.add_csi(channel_to_csi(sys_cfg, tc, origin=ORIGIN_SIMULATED))
                n_csi += 1
    print(f"gen-target: {cfg.target.n_ues} UEs x {cfg.target.n_slots} slots, "
          f"{n_csi} channel and CSI records")
    return 0


def cmd_augment(args) -> int:
    cfg = _load_config(args)
    scheme = args.scheme or cfg.augment.scheme
    echo = config_echo(cfg)
    echo["augment"]["scheme"] = scheme
    if scheme == "proposed":
        kind, dims, _, _, seeds = read_dataset(args.seeds)
        if kind != KIND_TIME:
            raise DatasetFormatError(
                "proposed augmentation needs a time-channel seed dataset")
        per_ue = {}
        for tc in seeds:
            per_ue.setdefault(tc.ue_id, []).append(tc)
        out = augment_dataset(cfg.system, cfg.augment, per_ue, cfg.seed)
        diag = _covariance_diagnostic(cfg, per_ue)
        print(f"augment[proposed]: {len(out)} samples from {len(per_ue)} UEs; "
              f"worst per-delay covariance mismatch {diag:.3f}")
    elif scheme == "none":
        raise ConfigError("augment.scheme: 'none' produces no dataset")
    else:
        kind, dims, _, _, seeds = read_dataset(args.seeds)
        if kind != KIND_CSI:
            raise DatasetFormatError(
                "baseline augmentation needs a csi-eigen seed dataset")
        n_out = cfg.augment.n_aug * len({s.ue_id for s in seeds})
        out = augment_baseline(scheme, seeds, RngStream(cfg.seed).derive("baseline"),
                               n_out, cfg.augment.noise_snr_db)
        print(f"augment[{scheme}]: {len(out)} samples from {len(seeds)} seeds")
    with DatasetWriter(args.out + ".csids", KIND_CSI,
                       (cfg.system.n_t, cfg.system.n_sb), cfg.seed, echo) as w:
        for s in out:
            w.add_csi(s)
    return 0


def _covariance_diagnostic(cfg: ExperimentConfig, per_ue: dict,
                           n_draws: int = 2000) -> float:
    """Worst relative Frobenius mismatch between draw covariance and the
    per-delay target, over the first UE's nonzero-power delays."""
    from .augment import augment_channel, estimate_stats

    ue_id = sorted(per_ue)[0]
    stats = estimate_stats(cfg.system, per_ue[ue_id])
    rng = RngStream(cfg.seed).derive("diag")
    dim = cfg.system.n_t * cfg.system.n_r
    acc = {d: np.zeros((dim, dim), dtype=np.complex128)
           for d in range(cfg.system.n_d) if stats.p_hat[d] > 0}
    for i in range(n_draws):
        tc = augment_channel(cfg.system, stats, rng.derive(i))
        for d in acc:
            v = tc.h[:, :, d].reshape(-1)
            acc[d] += np.outer(v, v.conj())
    worst = 0.0
    for d in acc:
        target = stats.p_hat[d] * stats.r_joint[d]
        worst = max(worst, float(np.linalg.norm(acc[d] / n_draws - target)
                                 / np.linalg.norm(target)))
    return worst


def cmd_meta_train(args) -> int:
    cfg = _load_config(args)
    kind, dims, _, _, records = read_dataset(args.env)
    if kind != KIND_CSI:
        raise DatasetFormatError("meta-train needs a csi-eigen environment dataset")
    tasks = group_csi_by_task(records)
    theta, log = meta_train(tasks, cfg.model, cfg.train)
    echo = config_echo(cfg)
    save_checkpoint(args.out + ".ckpt", cfg.model, theta, echo)
    write_log_csv(args.out + ".csv", log, echo)
    print(f"meta-train: {len(tasks)} tasks, final task loss {log.rows[-1][1]:.4f}")
    return 0


def cmd_retrain_eval(args) -> int:
    cfg = _load_config(args)
    kind, _, _, _, train_records = read_dataset(args.train_data)
    if kind != KIND_CSI:
        raise DatasetFormatError("retrain-eval needs csi-eigen training data")
    eval_records = None
    if args.eval_data:
        kind_e, _, _, _, eval_records = read_dataset(args.eval_data)
        if kind_e != KIND_CSI:
            raise DatasetFormatError("retrain-eval needs csi-eigen eval data")
    if args.init == "random":
        theta = init_params(cfg.model, RngStream(cfg.seed).derive("init"))
        model_cfg = cfg.model
    else:
        model_cfg, theta, _ = load_checkpoint(args.init)
    phi, log = target_retrain(theta, train_records, model_cfg, cfg.train,
                              eval_set=eval_records)
    echo = config_echo(cfg)
    save_checkpoint(args.out + ".ckpt", model_cfg, phi, echo)
    write_log_csv(args.out + ".csv", log, echo)
    final = evaluate(phi, model_cfg, eval_records or train_records)
    print(f"retrain-eval: best SGCS {log.best_sgcs:.4f}, final eval {final:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csimeta",
        description="CSI feedback experiments: data synthesis, meta-training, "
                    "augmentation, retraining")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", required=True, help="output path stem")
        p.add_argument("--threads", type=int, default=os.cpu_count(),
                       help="worker cap for parallel sections")

    p = sub.add_parser("gen-meta", help="synthesize the meta task environment")
    common(p)
    p.set_defaults(fn=cmd_gen_meta)

    p = sub.add_parser("gen-target", help="simulate target-scenario seed data")
    common(p)
    p.set_defaults(fn=cmd_gen_target)

    p = sub.add_parser("augment", help="augment a seed dataset")
    common(p)
    p.add_argument("--seeds", required=True, help="seed dataset path")
    p.add_argument("--scheme", default=None,
                   help="override the configured augmentation scheme")
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("meta-train", help="meta-train on an environment dataset")
    common(p)
    p.add_argument("--env", required=True, help="meta environment dataset path")
    p.set_defaults(fn=cmd_meta_train)

    p = sub.add_parser("retrain-eval", help="retrain from a checkpoint or "
                                            "random init and log convergence")
    common(p)
    p.add_argument("--init", required=True,
                   help="checkpoint path or the literal 'random'")
    p.add_argument("--train-data", required=True, help="training dataset path")
    p.add_argument("--eval-data", default=None, help="evaluation dataset path")
    p.set_defaults(fn=cmd_retrain_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, DatasetFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
