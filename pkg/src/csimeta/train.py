"""Inner-loop optimization, Reptile-style meta-training, and target retraining."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .model import (ModelConfig, init_params, loss_and_grad, params_copy,
                    reconstruct_batch, sgcs)
from .rng import RngStream


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    lr: float = 1e-3
    batch_size: int = 32
    inner_steps: int = 32         # g: steps per meta task
    meta_step: float = 0.25       # epsilon
    meta_passes: int = 1
    retrain_steps: int = 1500     # g': target retraining steps
    eval_interval: int = 25
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")
        if self.inner_steps < 1 or self.retrain_steps < 1:
            raise ValueError("inner_steps and retrain_steps must be >= 1")
        if not (0.0 <= self.meta_step <= 1.0):
            raise ValueError("meta_step must be in [0, 1]")
        if self.batch_size < 1 or self.eval_interval < 1:
            raise ValueError("batch_size and eval_interval must be >= 1")


@dataclass
class ConvergenceLog:
    """Rows of (step, loss, eval_sgcs, best_sgcs, wall_ms)."""

    rows: list = field(default_factory=list)

    def append(self, step: int, loss: float, eval_sgcs: float, wall_ms: float):
        best = self.best_sgcs
        if not math.isnan(eval_sgcs):
            best = eval_sgcs if math.isnan(best) else max(best, eval_sgcs)
        if self.rows and step <= self.rows[-1][0]:
            raise ValueError("steps must be strictly increasing")
        self.rows.append((step, loss, eval_sgcs, best, wall_ms))

    @property
    def best_sgcs(self) -> float:
        return self.rows[-1][3] if self.rows else float("nan")

    def steps_to_reach(self, threshold: float) -> int:
        """First logged step whose best-so-far eval SGCS meets the threshold."""
        for step, _, _, best, _ in self.rows:
            if not math.isnan(best) and best >= threshold:
                return step
        return -1


class Sgd:
    def __init__(self, cfg: TrainConfig):
        self.lr = cfg.lr

    def step(self, params: dict, grads: dict) -> None:
        for key in params:
            params[key] -= self.lr * grads[key]


class Adam:
    def __init__(self, cfg: TrainConfig):
        self.lr = cfg.lr
        self.b1 = cfg.adam_beta1
        self.b2 = cfg.adam_beta2
        self.eps = cfg.adam_eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        for key in params:
            g = grads[key]
            m = self.m.get(key)
            if m is None:
                m = np.zeros_like(g)
                self.m[key] = m
                self.v[key] = np.zeros_like(g)
            v = self.v[key]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            m_hat = m / (1.0 - self.b1 ** self.t)
            v_hat = v / (1.0 - self.b2 ** self.t)
            params[key] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(cfg: TrainConfig):
    return Adam(cfg) if cfg.optimizer == "adam" else Sgd(cfg)


def _batch_indices(n: int, batch_size: int, steps: int, rng: RngStream):
    """Seeded epoch reshuffling; trailing short batches are kept."""
    done = 0
    while done < steps:
        order = rng.permutation(n)
        for lo in range(0, n, batch_size):
            yield order[lo:lo + batch_size]
            done += 1
            if done >= steps:
                return


def inner_update(params: dict, model_cfg: ModelConfig, samples: list,
                 cfg: TrainConfig, rng: RngStream):
    """g optimizer steps on mini-batches from one task; input left untouched.

    Optimizer state starts fresh for every task. Returns (new params,
    mean training loss over the g steps).
    """
    if not samples:
        raise ValueError("task must be nonempty")
    p = params_copy(params)
    opt = make_optimizer(cfg)
    losses = []
    for idx in _batch_indices(len(samples), cfg.batch_size, cfg.inner_steps, rng):
        loss, grads = loss_and_grad(p, model_cfg, [samples[i] for i in idx])
        opt.step(p, grads)
        losses.append(loss)
    return p, float(np.mean(losses))


def meta_train(tasks: list, model_cfg: ModelConfig, cfg: TrainConfig,
               init: dict = None):
    """Reptile pass(es) over the task list in seeded-shuffled order.

    The update theta <- theta + eps*(U(theta) - theta) short-circuits at the
    endpoints so eps=0 is a bitwise no-op and eps=1 adopts the inner-loop
    result exactly.
    """
    if not tasks:
        raise ValueError("task environment must be nonempty")
    base = RngStream(cfg.seed)
    theta = params_copy(init) if init is not None else init_params(
        model_cfg, base.derive("init"))
    log = ConvergenceLog()
    t0 = time.perf_counter()
    step = 0
    for pass_idx in range(cfg.meta_passes):
        order = base.derive("task-order", pass_idx).permutation(len(tasks))
        for j in order:
            task = tasks[j]
            samples = task.samples if hasattr(task, "samples") else task
            batch_rng = base.derive("inner", pass_idx, int(j))
            updated, task_loss = inner_update(
                theta, model_cfg, [s.csi if hasattr(s, "csi") else s for s in samples],
                cfg, batch_rng)
            if cfg.meta_step == 1.0:
                theta = updated
            elif cfg.meta_step != 0.0:
                for key in theta:
                    theta[key] += cfg.meta_step * (updated[key] - theta[key])
            step += 1
            log.append(step, task_loss, float("nan"),
                       (time.perf_counter() - t0) * 1e3)
    return theta, log


def evaluate(params: dict, model_cfg: ModelConfig, dataset: list) -> float:
    """Mean SGCS over full encode/quantize/decode passes (order-invariant)."""
    if not dataset:
        raise ValueError("dataset must be nonempty")
    rec = reconstruct_batch(params, model_cfg, dataset, quantize=True)
    scores = [sgcs(dataset[i], rec[i]) for i in range(len(dataset))]
    return math.fsum(scores) / len(scores)


def target_retrain(theta_init: dict, dataset: list, model_cfg: ModelConfig,
                   cfg: TrainConfig, eval_set: list = None):
    """g' optimizer steps on a 90/10 split of the target dataset.

    The eval-SGCS curve is computed on `eval_set` when given, otherwise on
    the internal 10% split; rows are logged at step 0, every eval_interval
    steps, and at the final step.
    """
    if not dataset:
        raise ValueError("dataset must be nonempty")
    base = RngStream(cfg.seed).derive("retrain")
    order = base.derive("split").permutation(len(dataset))
    n_train = max(1, int(round(0.9 * len(dataset))))
    train_set = [dataset[i] for i in order[:n_train]]
    held_out = [dataset[i] for i in order[n_train:]]
    eval_data = eval_set if eval_set is not None else held_out
    if not eval_data:
        eval_data = train_set  # degenerate tiny datasets

    params = params_copy(theta_init)
    opt = make_optimizer(cfg)
    log = ConvergenceLog()
    t0 = time.perf_counter()
    batch_rng = base.derive("batches")
    last_loss = float("nan")
    step = 0
    log.append(0, float("nan"), evaluate(params, model_cfg, eval_data), 0.0)
    for idx in _batch_indices(len(train_set), cfg.batch_size,
                              cfg.retrain_steps, batch_rng):
        loss, grads = loss_and_grad(params, model_cfg,
                                    [train_set[i] for i in idx])
        opt.step(params, grads)
        last_loss = loss
        step += 1
        if step % cfg.eval_interval == 0 or step == cfg.retrain_steps:
            log.append(step, last_loss, evaluate(params, model_cfg, eval_data),
                       (time.perf_counter() - t0) * 1e3)
    return params, log
