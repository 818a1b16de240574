"""Compact quantized CSI autoencoder with exact analytic gradients.

Encoder and decoder are small tanh MLPs over the real flattening of the
complex CSI matrix (real parts then imaginary parts, subband-major). The
bottleneck is a uniform midrise scalar quantizer over [-1, 1]; training
treats it as identity in the backward pass (straight-through), with zero
gradient outside the clamp range. The decoder ends in a fixed per-subband
normalization layer so recovered columns are unit norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ORIGIN_DECODED, CsiEigen
from .rng import RngStream


class BadBitstreamLength(Exception):
    pass


class ZeroColumn(Exception):
    pass


@dataclass(frozen=True)
class ModelConfig:
    n_t: int = 8
    n_sb: int = 4
    d_lat: int = 8
    bits_per_latent: int = 2
    enc_widths: tuple = (256, 128)
    dec_widths: tuple = (128, 256)
    init_scale: float = None

    def __post_init__(self):
        if not (1 <= self.bits_per_latent <= 8):
            raise ValueError("bits_per_latent must be in 1..8")
        if self.d_lat < 1:
            raise ValueError("d_lat must be >= 1")
        if any(w < 1 for w in self.enc_widths + self.dec_widths):
            raise ValueError("layer widths must be >= 1")

    @property
    def feedback_bits(self) -> int:
        return self.d_lat * self.bits_per_latent

    @property
    def input_dim(self) -> int:
        return 2 * self.n_t * self.n_sb

    def enc_dims(self) -> list:
        return [self.input_dim, *self.enc_widths, self.d_lat]

    def dec_dims(self) -> list:
        return [self.d_lat, *self.dec_widths, self.input_dim]


def init_params(cfg: ModelConfig, rng: RngStream) -> dict:
    """Uniform [-s, s] weights with s = init_scale or 1/sqrt(fan_in); zero bias."""
    params = {}
    for prefix, dims in (("enc", cfg.enc_dims()), ("dec", cfg.dec_dims())):
        for i in range(len(dims) - 1):
            fan_in, fan_out = dims[i], dims[i + 1]
            s = cfg.init_scale if cfg.init_scale is not None else 1.0 / math.sqrt(fan_in)
            params[f"{prefix}{i}_w"] = rng.uniform(-s, s, (fan_in, fan_out))
            params[f"{prefix}{i}_b"] = np.zeros(fan_out)
    return params


def params_copy(params: dict) -> dict:
    return {k: v.copy() for k, v in params.items()}


def flatten_csi(w: np.ndarray) -> np.ndarray:
    """Real feature vector: [Re(vec_F(W)); Im(vec_F(W))]."""
    v = np.asarray(w).flatten(order="F")
    return np.concatenate([v.real, v.imag])


def unflatten_csi(y: np.ndarray, n_t: int, n_sb: int) -> np.ndarray:
    k = n_t * n_sb
    return (y[:k] + 1j * y[k:]).reshape((n_t, n_sb), order="F")


def quantize_latent(x: np.ndarray, bits: int) -> np.ndarray:
    """Midrise level indices over [-1, 1]: floor((x+1)/2 * 2^bits), clamped."""
    levels = 1 << bits
    idx = np.floor((x + 1.0) / 2.0 * levels)
    return np.clip(idx, 0, levels - 1).astype(np.int64)


def dequantize_latent(idx: np.ndarray, bits: int) -> np.ndarray:
    levels = 1 << bits
    return (idx.astype(np.float64) + 0.5) * (2.0 / levels) - 1.0


def indices_to_bits(idx: np.ndarray, bits: int) -> np.ndarray:
    """Big-endian bit expansion, one group of `bits` per index."""
    shifts = np.arange(bits - 1, -1, -1)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8).reshape(-1)


def bits_to_indices(bitstream: np.ndarray, bits: int) -> np.ndarray:
    groups = bitstream.reshape(-1, bits).astype(np.int64)
    shifts = np.arange(bits - 1, -1, -1)
    return (groups << shifts[None, :]).sum(axis=1)


def _layers(params: dict, prefix: str) -> list:
    out = []
    i = 0
    while f"{prefix}{i}_w" in params:
        out.append((params[f"{prefix}{i}_w"], params[f"{prefix}{i}_b"]))
        i += 1
    return out


def _mlp_forward(layers: list, x: np.ndarray, tanh_output: bool) -> list:
    """Returns activations [x, a1, ..., aL]; hidden layers always tanh."""
    acts = [x]
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        z = acts[-1] @ w + b
        acts.append(np.tanh(z) if (i < last or tanh_output) else z)
    return acts


def _as_w(sample) -> np.ndarray:
    return sample.w if isinstance(sample, CsiEigen) else np.asarray(sample)


def encode(params: dict, cfg: ModelConfig, sample):
    """Compress one CSI sample to (latent, bitstream of length feedback_bits)."""
    x = flatten_csi(_as_w(sample))
    latent = _mlp_forward(_layers(params, "enc"), x[None, :], tanh_output=True)[-1][0]
    idx = quantize_latent(latent, cfg.bits_per_latent)
    return latent, indices_to_bits(idx, cfg.bits_per_latent)


def decode(params: dict, cfg: ModelConfig, bitstream: np.ndarray) -> CsiEigen:
    """Recover a CSI sample (unit-norm columns) from a feedback bitstream."""
    bitstream = np.asarray(bitstream)
    if bitstream.size != cfg.feedback_bits:
        raise BadBitstreamLength(
            f"expected {cfg.feedback_bits} bits, got {bitstream.size}")
    deq = dequantize_latent(bits_to_indices(bitstream, cfg.bits_per_latent),
                            cfg.bits_per_latent)
    y = _mlp_forward(_layers(params, "dec"), deq[None, :], tanh_output=False)[-1][0]
    w = unflatten_csi(y, cfg.n_t, cfg.n_sb)
    norms = np.linalg.norm(w, axis=0)
    for l in range(cfg.n_sb):
        if norms[l] < 1e-30:  # all-zero net output; pick a fixed unit column
            w[:, l] = 0.0
            w[0, l] = 1.0
        else:
            w[:, l] /= norms[l]
    return CsiEigen(w=w, eigvals=np.zeros(cfg.n_sb), origin=ORIGIN_DECODED)


def sgcs(w, w_rec) -> float:
    """Mean squared cosine similarity over subbands, in [0, 1]."""
    a = _as_w(w)
    b = _as_w(w_rec)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    na = np.linalg.norm(a, axis=0)
    nb = np.linalg.norm(b, axis=0)
    if np.any(na == 0.0) or np.any(nb == 0.0):
        raise ZeroColumn("sgcs is undefined for zero columns")
    dots = np.abs(np.einsum("tl,tl->l", a.conj(), b))
    return float(np.mean((dots / (na * nb)) ** 2))


def _forward_batch(params: dict, cfg: ModelConfig, x: np.ndarray,
                   quantize: bool):
    """Shared forward pass; returns (enc_acts, latent_fed, dec_acts)."""
    enc_acts = _mlp_forward(_layers(params, "enc"), x, tanh_output=True)
    latent = enc_acts[-1]
    if quantize:
        fed = dequantize_latent(quantize_latent(latent, cfg.bits_per_latent),
                                cfg.bits_per_latent)
    else:
        fed = latent
    dec_acts = _mlp_forward(_layers(params, "dec"), fed, tanh_output=False)
    return enc_acts, fed, dec_acts


def reconstruct_batch(params: dict, cfg: ModelConfig, samples: list,
                      quantize: bool = True) -> np.ndarray:
    """Normalized reconstructions, shape (batch, n_t, n_sb)."""
    x = np.stack([flatten_csi(_as_w(s)) for s in samples])
    _, _, dec_acts = _forward_batch(params, cfg, x, quantize)
    y = dec_acts[-1]
    k = cfg.n_t * cfg.n_sb
    u = (y[:, :k] + 1j * y[:, k:]).reshape(-1, cfg.n_sb, cfg.n_t).transpose(0, 2, 1)
    norms = np.linalg.norm(u, axis=1, keepdims=True)
    return u / np.where(norms < 1e-30, 1.0, norms)


def loss_and_grad(params: dict, cfg: ModelConfig, batch: list,
                  quantize: bool = True):
    """Negative batch-mean SGCS and its exact gradient.

    The SGCS term is differentiated through the complex modulus and the
    decoder's normalization (the quotient form used here is scale-invariant,
    which is the same thing); the quantizer backward is straight-through with
    zero gradient outside [-1, 1].
    """
    if not batch:
        raise ValueError("batch must be nonempty")
    n_b = len(batch)
    w_t = np.stack([_as_w(s) for s in batch])  # (B, n_t, n_sb) targets
    x = np.stack([flatten_csi(_as_w(s)) for s in batch])
    enc_acts, fed, dec_acts = _forward_batch(params, cfg, x, quantize)
    y = dec_acts[-1]
    k = cfg.n_t * cfg.n_sb
    u = (y[:, :k] + 1j * y[:, k:]).reshape(n_b, cfg.n_sb, cfg.n_t).transpose(0, 2, 1)

    dots = np.einsum("btl,btl->bl", w_t.conj(), u)  # w^H u per (sample, subband)
    nw = np.sum(np.abs(w_t) ** 2, axis=1)
    nu = np.sum(np.abs(u) ** 2, axis=1)
    rho = np.abs(dots) ** 2 / (nw * nu)
    loss = -float(np.mean(np.mean(rho, axis=1)))

    # dL/dconj(u): -(1/(B*n_sb)) * (dots*w/(nw*nu) - rho*u/nu); real-part
    # gradients are twice the real/imag components (Wirtinger)
    coef = -1.0 / (n_b * cfg.n_sb)
    g_u = coef * (dots[:, None, :] * w_t / (nw * nu)[:, None, :]
                  - (rho / nu)[:, None, :] * u)
    g_vec = g_u.transpose(0, 2, 1).reshape(n_b, k)  # subband-major flattening
    g_y = np.concatenate([2.0 * g_vec.real, 2.0 * g_vec.imag], axis=1)

    grads = {key: None for key in params}
    dec_layers = _layers(params, "dec")
    delta = g_y
    for i in range(len(dec_layers) - 1, -1, -1):
        w_l, _ = dec_layers[i]
        a_prev = dec_acts[i]
        if i < len(dec_layers) - 1:  # tanh on hidden layers only
            delta = delta * (1.0 - dec_acts[i + 1] ** 2)
        grads[f"dec{i}_w"] = a_prev.T @ delta
        grads[f"dec{i}_b"] = delta.sum(axis=0)
        delta = delta @ w_l.T

    # straight-through: identity inside the clamp range, zero outside
    latent = enc_acts[-1]
    delta = delta * (np.abs(latent) <= 1.0)

    enc_layers = _layers(params, "enc")
    for i in range(len(enc_layers) - 1, -1, -1):
        w_l, _ = enc_layers[i]
        a_prev = enc_acts[i]
        delta = delta * (1.0 - enc_acts[i + 1] ** 2)  # every encoder layer is tanh
        grads[f"enc{i}_w"] = a_prev.T @ delta
        grads[f"enc{i}_b"] = delta.sum(axis=0)
        delta = delta @ w_l.T
    return loss, grads
