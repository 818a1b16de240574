"""Statistics-matched channel augmentation plus simple CSI-level baselines.

The proposed path estimates per-delay power and tx/rx self-correlations from
a UE's seed slots, colors white noise to the joint per-delay covariance, and
pushes the synthetic channels through the regular channel -> CSI pipeline.
Baselines operate directly on CSI eigenvector samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import (ORIGIN_AUGMENTED, ORIGIN_BASELINE, CsiEigen, SystemConfig,
                      TimeChannel, channel_to_csi)
from .linalg import complex_gaussian, hermitian_eig, kron
from .rng import RngStream

BASELINE_SCHEMES = ("noise-injection", "flipping", "cyclic-shift",
                    "random-shift", "rotation")
SCHEMES = ("none", "proposed") + BASELINE_SCHEMES


class UnknownScheme(Exception):
    pass


@dataclass(frozen=True)
class AugmentConfig:
    n_aug: int = 50
    scheme: str = "proposed"
    noise_snr_db: float = 10.0

    def __post_init__(self):
        if self.n_aug < 1:
            raise ValueError("n_aug must be >= 1")
        if self.scheme not in SCHEMES:
            raise UnknownScheme(f"unknown scheme '{self.scheme}'")


@dataclass
class ChannelStats:
    """Second-order statistics of one UE's seed slots.

    p_hat[d] is the average per-element power of delay d; r_tx/r_rx are the
    trace-normalized self-correlations (zero matrices on zero-power delays);
    r_joint[d] = kron(r_rx[d], r_tx[d]).
    """

    p_hat: np.ndarray
    r_tx: list
    r_rx: list
    r_joint: list
    n_seed_slots: int
    ue_id: int
    _coloring: list = field(default=None, repr=False, compare=False)

    def coloring(self, d: int) -> np.ndarray:
        """sqrt(p_hat_d) * U * D^{1/2} for delay d, cached after first use."""
        if self._coloring is None:
            factors = []
            for k in range(len(self.p_hat)):
                if self.p_hat[k] <= 0.0:
                    factors.append(None)
                    continue
                vals, vecs = hermitian_eig(self.r_joint[k])
                vals = np.clip(vals, 0.0, None)  # tiny negatives from sampling noise
                factors.append(np.sqrt(self.p_hat[k]) * (vecs * np.sqrt(vals)[None, :]))
            self._coloring = factors
        return self._coloring[d]


def estimate_stats(cfg: SystemConfig, seeds: list) -> ChannelStats:
    """Per-delay power and correlation statistics over one UE's seed slots."""
    if not seeds:
        raise ValueError("need at least one seed slot")
    ue_id = seeds[0].ue_id
    if any(s.ue_id != ue_id for s in seeds):
        raise ValueError("seed slots must belong to a single UE")
    hs = np.stack([s.h for s in seeds])  # (T, n_r, n_t, n_d)
    if hs.shape[1:] != (cfg.n_r, cfg.n_t, cfg.n_d):
        raise ValueError(f"seed shape {hs.shape[1:]} does not match config")
    n_slots = hs.shape[0]
    p_hat = np.zeros(cfg.n_d)
    r_tx, r_rx, r_joint = [], [], []
    for d in range(cfg.n_d):
        hd = hs[:, :, :, d]
        power = float(np.sum(np.abs(hd) ** 2))
        p_hat[d] = power / (cfg.n_t * cfg.n_r * n_slots)
        if power == 0.0:
            r_tx.append(np.zeros((cfg.n_t, cfg.n_t), dtype=np.complex128))
            r_rx.append(np.zeros((cfg.n_r, cfg.n_r), dtype=np.complex128))
            r_joint.append(np.zeros((cfg.n_t * cfg.n_r,) * 2, dtype=np.complex128))
            continue
        s_tx = np.einsum("irt,irs->ts", hd.conj(), hd)
        s_rx = np.einsum("irt,ist->rs", hd, hd.conj())
        r_tx.append(cfg.n_t * s_tx / np.trace(s_tx).real)
        r_rx.append(cfg.n_r * s_rx / np.trace(s_rx).real)
        r_joint.append(kron(r_rx[-1], r_tx[-1]))
    return ChannelStats(p_hat=p_hat, r_tx=r_tx, r_rx=r_rx, r_joint=r_joint,
                        n_seed_slots=n_slots, ue_id=ue_id)


def augment_channel(cfg: SystemConfig, stats: ChannelStats, rng: RngStream,
                    slot_index: int = 0) -> TimeChannel:
    """Draw one synthetic channel whose per-delay covariance is p_hat_d * R_d.

    The colored vector is reshaped rx-major: entry (r, t) of the per-delay
    matrix is element r*n_t + t of the vector. Zero-power delays stay zero.
    """
    h = np.zeros((cfg.n_r, cfg.n_t, cfg.n_d), dtype=np.complex128)
    for d in range(cfg.n_d):
        col = stats.coloring(d)
        if col is None:
            continue
        noise = complex_gaussian(rng, cfg.n_t * cfg.n_r, 1)[:, 0]
        h[:, :, d] = (col @ noise).reshape(cfg.n_r, cfg.n_t)
    return TimeChannel(h=h, ue_id=stats.ue_id, slot_index=slot_index)


def augment_dataset(cfg: SystemConfig, aug: AugmentConfig, per_ue_seeds: dict,
                    seed: int) -> list:
    """Statistics-matched augmentation: n_aug CSI samples per seeded UE."""
    base = RngStream(seed)
    out = []
    for ue_id in sorted(per_ue_seeds):
        stats = estimate_stats(cfg, per_ue_seeds[ue_id])
        for i in range(aug.n_aug):
            tc = augment_channel(cfg, stats, base.derive("aug", ue_id, i),
                                 slot_index=i)
            out.append(channel_to_csi(cfg, tc, origin=ORIGIN_AUGMENTED))
    return out


def _renorm(w: np.ndarray) -> np.ndarray:
    return w / np.linalg.norm(w, axis=0)[None, :]


def augment_baseline(scheme: str, samples: list, rng: RngStream, n_out: int,
                     noise_snr_db: float = 10.0) -> list:
    """Generate n_out baseline-augmented CSI samples by cycling the seeds.

    flipping is deterministic per seed, so it caps at one new sample per
    seed; all other schemes redraw per output. Outputs are column-normalized.
    """
    if scheme not in BASELINE_SCHEMES:
        raise UnknownScheme(f"unknown scheme '{scheme}'")
    if not samples:
        raise ValueError("need at least one seed sample")
    if scheme == "flipping":
        n_out = min(n_out, len(samples))
    out = []
    for i in range(n_out):
        src = samples[i % len(samples)]
        w = src.w
        n_t, n_sb = w.shape
        if scheme == "noise-injection":
            # per-entry signal power of a unit-norm column is 1/n_t
            sigma = np.sqrt((1.0 / n_t) / (10.0 ** (noise_snr_db / 10.0)))
            w = w + sigma * complex_gaussian(rng, n_t, n_sb)
        elif scheme == "flipping":
            w = w[:, ::-1]
        elif scheme == "cyclic-shift":
            w = np.roll(w, rng.uniform_int(1, n_t - 1), axis=0)
        elif scheme == "random-shift":
            w = np.roll(w, rng.uniform_int(1, n_sb - 1), axis=1)
        elif scheme == "rotation":
            w = w * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
        out.append(CsiEigen(w=_renorm(w), eigvals=src.eigvals.copy(),
                            ue_id=src.ue_id, slot_index=src.slot_index,
                            origin=ORIGIN_BASELINE))
    return out
