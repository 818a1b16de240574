"""Synthetic meta-task environment built from random orthonormal bases.

Tasks are generated without any collected channel data: each task picks a
spatial basis group and nested index subsets (task -> UE -> slot) that control
how many basis directions a sample may mix. Samples are random coefficient
matrices projected through the selected basis columns, then column-normalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ORIGIN_META_SYNTH, CsiEigen, SystemConfig
from .linalg import RankDeficient, complex_gaussian, gram_schmidt, kron
from .rng import RngStream

_MAX_REDRAWS = 16


class DegenerateColumn(Exception):
    """Raised when a synthesized sample column vanishes before normalization."""


@dataclass(frozen=True)
class MetaEnvConfig:
    """Task-environment sizing and diversity degrees."""

    t_tasks: int = 200
    p_groups: int = 8
    max_ues: int = 8
    max_slots: int = 4
    l_task: int = 6
    m_task: int = 4
    alpha: float = 0.75
    beta: float = 0.75
    seed: int = 0

    def validate(self, cfg: SystemConfig) -> None:
        if self.t_tasks < 1 or self.p_groups < 1:
            raise ValueError("t_tasks and p_groups must be >= 1")
        if self.max_ues < 1 or self.max_slots < 1:
            raise ValueError("max_ues and max_slots must be >= 1")
        if not (1 <= self.l_task <= cfg.n_t):
            raise ValueError("l_task must be in [1, n_t]")
        if not (1 <= self.m_task <= cfg.n_sb):
            raise ValueError("m_task must be in [1, n_sb]")
        if not (0.0 < self.alpha <= 1.0) or not (0.0 < self.beta <= 1.0):
            raise ValueError("alpha and beta must be in (0, 1]")


@dataclass
class BasisSet:
    """P spatial unitary groups plus one frequency unitary.

    Each spatial group is the Kronecker product of a horizontal and a
    vertical unitary factor, both of which are retained.
    """

    spatial_groups: list
    freq_basis: np.ndarray
    factors_h: list
    factors_v: list


@dataclass
class MetaSample:
    ue: int
    slot: int
    s_slot: np.ndarray
    f_slot: np.ndarray
    csi: CsiEigen


@dataclass
class UeRecord:
    s_ue: np.ndarray
    f_ue: np.ndarray
    l_m: int
    m_m: int


@dataclass
class MetaTask:
    task_id: int
    p_idx: int
    s_task: np.ndarray
    f_task: np.ndarray
    n_ue: int
    n_slot: int
    ue_records: list = field(default_factory=list)
    samples: list = field(default_factory=list)


@dataclass
class MetaEnv:
    sys_cfg: SystemConfig
    env_cfg: MetaEnvConfig
    basis: BasisSet
    tasks: list


def _draw_unitary(n: int, rng: RngStream) -> np.ndarray:
    for _ in range(_MAX_REDRAWS):
        try:
            return gram_schmidt(complex_gaussian(rng, n, n))
        except RankDeficient:
            continue
    raise RankDeficient(f"no full-rank {n}x{n} draw in {_MAX_REDRAWS} attempts")


def build_bases(cfg: SystemConfig, env: MetaEnvConfig, rng: RngStream) -> BasisSet:
    """Draw and orthonormalize the P spatial groups and the frequency basis."""
    factors_h, factors_v, groups = [], [], []
    for _ in range(env.p_groups):
        uh = _draw_unitary(cfg.n_h, rng)
        uv = _draw_unitary(cfg.n_v, rng)
        factors_h.append(uh)
        factors_v.append(uv)
        groups.append(kron(uh, uv))
    freq = _draw_unitary(cfg.n_sb, rng)
    return BasisSet(spatial_groups=groups, freq_basis=freq,
                    factors_h=factors_h, factors_v=factors_v)


def sample_task_structure(cfg: SystemConfig, env: MetaEnvConfig, task_id: int,
                          rng: RngStream) -> MetaTask:
    """Task skeleton: sizes, basis group, and nested index sets (no samples)."""
    n_ue = rng.uniform_int(1, env.max_ues)
    n_slot = rng.uniform_int(1, env.max_slots)
    p_idx = rng.uniform_int(0, env.p_groups - 1)
    s_task = rng.subset(np.arange(cfg.n_t), env.l_task)
    f_task = rng.subset(np.arange(cfg.n_sb), env.m_task)
    task = MetaTask(task_id=task_id, p_idx=p_idx, s_task=s_task,
                    f_task=f_task, n_ue=n_ue, n_slot=n_slot)
    for _ in range(n_ue):
        l_m = rng.uniform_int(1, env.l_task)
        m_m = rng.uniform_int(1, env.m_task)
        task.ue_records.append(UeRecord(
            s_ue=rng.subset(s_task, l_m),
            f_ue=rng.subset(f_task, m_m),
            l_m=l_m, m_m=m_m,
        ))
    return task


def synth_sample(basis: BasisSet, env: MetaEnvConfig, task: MetaTask,
                 ue: int, slot: int, rng: RngStream,
                 keep_factors: bool = False) -> MetaSample:
    """One slot's CSI sample for UE `ue` of `task` (0-based indices)."""
    rec = task.ue_records[ue]
    s_slot = rng.subset(rec.s_ue, math.ceil(env.alpha * rec.l_m))
    f_slot = rng.subset(rec.f_ue, math.ceil(env.beta * rec.m_m))
    s_cols = basis.spatial_groups[task.p_idx][:, s_slot]
    f_cols = basis.freq_basis[:, f_slot]
    for _ in range(_MAX_REDRAWS):
        coeff = complex_gaussian(rng, len(s_slot), len(f_slot))
        w = s_cols @ coeff @ f_cols.conj().T
        norms = np.linalg.norm(w, axis=0)
        if np.all(norms >= 1e-15):
            break
    else:
        raise DegenerateColumn(
            f"task {task.task_id} ue {ue} slot {slot}: column norm < 1e-15")
    w /= norms[None, :]
    csi = CsiEigen(w=w, eigvals=np.zeros(w.shape[1]), ue_id=ue,
                   slot_index=slot, origin=ORIGIN_META_SYNTH,
                   task_id=task.task_id,
                   factors=(s_slot, f_slot, coeff) if keep_factors else None)
    return MetaSample(ue=ue, slot=slot, s_slot=s_slot, f_slot=f_slot, csi=csi)


def build_task(cfg: SystemConfig, env: MetaEnvConfig, basis: BasisSet,
               task_id: int, base_rng: RngStream,
               keep_factors: bool = False) -> MetaTask:
    """Full task: skeleton plus all n_ue*n_slot samples, grouped UE-major."""
    task_rng = base_rng.derive("task", task_id)
    task = sample_task_structure(cfg, env, task_id, task_rng)
    for m in range(task.n_ue):
        for n in range(task.n_slot):
            slot_rng = task_rng.derive("slot", m, n)
            task.samples.append(
                synth_sample(basis, env, task, m, n, slot_rng, keep_factors))
    return task


def iter_meta_tasks(cfg: SystemConfig, env: MetaEnvConfig,
                    keep_factors: bool = False):
    """Generate (basis, task) lazily; suitable for streaming large T to disk."""
    env.validate(cfg)
    base_rng = RngStream(env.seed)
    basis = build_bases(cfg, env, base_rng.derive("bases"))
    for task_id in range(env.t_tasks):
        yield basis, build_task(cfg, env, basis, task_id, base_rng, keep_factors)


def build_meta_env(cfg: SystemConfig, env: MetaEnvConfig,
                   keep_factors: bool = False) -> MetaEnv:
    """Materialize the full environment (deterministic in env.seed)."""
    env.validate(cfg)
    base_rng = RngStream(env.seed)
    basis = build_bases(cfg, env, base_rng.derive("bases"))
    tasks = [build_task(cfg, env, basis, j, base_rng, keep_factors)
             for j in range(env.t_tasks)]
    return MetaEnv(sys_cfg=cfg, env_cfg=env, basis=basis, tasks=tasks)
