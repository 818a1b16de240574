"""Clustered tapped-delay-line channel simulator and the channel -> CSI pipeline.

The simulator is a deliberately simplified stand-in for a standards-grade
channel model: per UE it draws cluster ray geometry once, then rotates ray
phases across slots, so slots of one UE share spatial structure while
differing in detail. That UE-coherent, slot-varying behaviour is the only
property downstream consumers rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import dft_delay_to_freq, top_eigvec
from .rng import RngStream

ORIGIN_SIMULATED = "simulated"
ORIGIN_META_SYNTH = "meta-synth"
ORIGIN_AUGMENTED = "augmented"
ORIGIN_BASELINE = "baseline-augmented"
ORIGIN_DECODED = "decoded"

ORIGINS = (ORIGIN_SIMULATED, ORIGIN_META_SYNTH, ORIGIN_AUGMENTED, ORIGIN_BASELINE)


@dataclass(frozen=True)
class SystemConfig:
    """Antenna/subcarrier geometry; n_t and n_sb are derived."""

    n_h: int = 4
    n_v: int = 2
    n_r: int = 2
    n_d: int = 8
    n_sc: int = 16
    n_gran: int = 4

    def __post_init__(self):
        for name in ("n_h", "n_v", "n_r", "n_d", "n_sc", "n_gran"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_sc % self.n_gran != 0:
            raise ValueError("n_sc must be a multiple of n_gran")
        if self.n_d > self.n_sc:
            raise ValueError("n_d must not exceed n_sc")

    @property
    def n_t(self) -> int:
        return self.n_h * self.n_v

    @property
    def n_sb(self) -> int:
        return self.n_sc // self.n_gran


@dataclass(frozen=True)
class SimScenario:
    """Cluster layout shared by all UEs of one scenario.

    Each cluster sits on one delay tap (1-based) with a fixed power share;
    rays scatter around the cluster mean angles. doppler_cycles_per_slot is
    the maximum per-ray phase-rotation rate across slots.
    """

    cluster_delays: tuple  # 1-based taps
    cluster_powers: tuple
    cluster_azimuth_deg: tuple
    cluster_zenith_deg: tuple
    azimuth_spread_deg: float = 10.0
    zenith_spread_deg: float = 5.0
    rays_per_cluster: int = 10
    doppler_cycles_per_slot: float = 0.05
    slot_spacing: float = 1.0

    def __post_init__(self):
        n = len(self.cluster_delays)
        if not (len(self.cluster_powers) == len(self.cluster_azimuth_deg)
                == len(self.cluster_zenith_deg) == n) or n == 0:
            raise ValueError("cluster field lengths must match and be nonzero")
        if abs(sum(self.cluster_powers) - 1.0) > 1e-9:
            raise ValueError("cluster powers must sum to 1")
        if self.rays_per_cluster < 1:
            raise ValueError("rays_per_cluster must be >= 1")


def default_scenario(cfg: SystemConfig, n_clusters: int = 4,
                     delay_spread_taps: float = 2.0,
                     doppler_cycles_per_slot: float = 0.05) -> SimScenario:
    """Exponential power-delay profile over taps spread through [1, n_d]."""
    n_clusters = min(n_clusters, cfg.n_d)
    delays = tuple(1 + round(i * (cfg.n_d - 1) / max(1, 2 * (n_clusters - 1)))
                   for i in range(n_clusters))
    # collapse accidental duplicate taps
    delays = tuple(dict.fromkeys(delays))
    raw = np.exp(-(np.asarray(delays, dtype=float) - 1.0) / delay_spread_taps)
    powers = tuple(float(p) for p in raw / raw.sum())
    azim = tuple(float(a) for a in np.linspace(-50.0, 50.0, len(delays)))
    zen = tuple(float(z) for z in np.linspace(75.0, 105.0, len(delays)))
    return SimScenario(
        cluster_delays=delays,
        cluster_powers=powers,
        cluster_azimuth_deg=azim,
        cluster_zenith_deg=zen,
        doppler_cycles_per_slot=doppler_cycles_per_slot,
    )


@dataclass
class TimeChannel:
    """One slot's time-domain channel, shape (n_r, n_t, n_d)."""

    h: np.ndarray
    ue_id: int = 0
    slot_index: int = 0


@dataclass
class CsiEigen:
    """Per-subband dominant eigenvectors (n_t, n_sb) with their eigenvalues."""

    w: np.ndarray
    eigvals: np.ndarray
    ue_id: int = 0
    slot_index: int = 0
    origin: str = ORIGIN_SIMULATED
    task_id: int = -1
    factors: object = field(default=None, repr=False, compare=False)


def _tx_steering(cfg: SystemConfig, azimuth: np.ndarray, zenith: np.ndarray) -> np.ndarray:
    """Half-wavelength UPA steering vectors, horizontal index varying slowest.

    Returns shape (n_rays, n_t) with entry layout t = h*n_v + v, matching how
    the spatial basis groups are assembled elsewhere in the package.
    """
    idx_h = np.arange(cfg.n_h)
    idx_v = np.arange(cfg.n_v)
    freq_h = np.sin(azimuth) * np.sin(zenith)
    freq_v = np.cos(zenith)
    a_h = np.exp(1j * np.pi * freq_h[:, None] * idx_h[None, :])
    a_v = np.exp(1j * np.pi * freq_v[:, None] * idx_v[None, :])
    return (a_h[:, :, None] * a_v[:, None, :]).reshape(len(azimuth), cfg.n_t)


def _rx_steering(cfg: SystemConfig, aoa: np.ndarray) -> np.ndarray:
    idx = np.arange(cfg.n_r)
    return np.exp(1j * np.pi * np.sin(aoa)[:, None] * idx[None, :])


def simulate_ue(cfg: SystemConfig, scen: SimScenario, rng: RngStream,
                n_slots: int, ue_id: int = 0) -> list:
    """Simulate n_slots time-domain channels for one UE.

    Ray angles, phases and Doppler rates are drawn once per UE; slots differ
    only by per-ray phase rotation, so zero Doppler gives identical slots.
    """
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    n_rays = scen.rays_per_cluster
    taps = np.zeros((cfg.n_d, cfg.n_r, cfg.n_t), dtype=np.complex128)
    ray_terms = []  # (tap, base matrix, doppler rate) per ray
    for c in range(len(scen.cluster_delays)):
        az = np.deg2rad(scen.cluster_azimuth_deg[c]
                        + scen.azimuth_spread_deg * rng.standard_normal(n_rays))
        zen = np.deg2rad(scen.cluster_zenith_deg[c]
                         + scen.zenith_spread_deg * rng.standard_normal(n_rays))
        aoa = rng.uniform(-np.pi, np.pi, n_rays)
        psi = rng.uniform(0.0, 2.0 * np.pi, n_rays)
        nu = rng.uniform(-scen.doppler_cycles_per_slot,
                         scen.doppler_cycles_per_slot, n_rays)
        amp = np.sqrt(scen.cluster_powers[c] / n_rays)
        a_tx = _tx_steering(cfg, az, zen)
        a_rx = _rx_steering(cfg, aoa)
        tap = scen.cluster_delays[c] - 1
        for r in range(n_rays):
            base = amp * np.exp(1j * psi[r]) * np.outer(a_rx[r], a_tx[r].conj())
            ray_terms.append((tap, base, nu[r]))
    slots = []
    for t in range(n_slots):
        taps[:] = 0.0
        phase_t = 2.0 * np.pi * t * scen.slot_spacing
        for tap, base, nu_r in ray_terms:
            taps[tap] += base * np.exp(1j * phase_t * nu_r)
        slots.append(TimeChannel(h=taps.transpose(1, 2, 0).copy(),
                                 ue_id=ue_id, slot_index=t))
    return slots


def channel_to_csi(cfg: SystemConfig, tc: TimeChannel,
                   origin: str = ORIGIN_SIMULATED) -> CsiEigen:
    """Per-subband dominant eigenvector of the averaged channel Gram matrix."""
    if tc.h.shape != (cfg.n_r, cfg.n_t, cfg.n_d):
        raise ValueError(f"channel shape {tc.h.shape} does not match config")
    hf = dft_delay_to_freq(tc.h, cfg.n_sc)
    w = np.zeros((cfg.n_t, cfg.n_sb), dtype=np.complex128)
    eigvals = np.zeros(cfg.n_sb)
    for l in range(cfg.n_sb):
        gram = np.zeros((cfg.n_t, cfg.n_t), dtype=np.complex128)
        for k in range(l * cfg.n_gran, (l + 1) * cfg.n_gran):
            hk = hf[:, :, k]
            gram += hk.conj().T @ hk
        gram /= cfg.n_gran
        lam, vec = top_eigvec(gram)
        w[:, l] = vec
        eigvals[l] = lam
    return CsiEigen(w=w, eigvals=eigvals, ue_id=tc.ue_id,
                    slot_index=tc.slot_index, origin=origin)
