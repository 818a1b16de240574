"""Deterministic complex linear-algebra kernels.

All routines work on complex128 arrays and are pure functions; eigenvector
phases follow a single convention (first significant element real-positive)
so repeated runs produce byte-identical results.
"""

from __future__ import annotations

import numpy as np

from .rng import RngStream

_PHASE_EPS = 1e-12


class RankDeficient(Exception):
    """Raised when a pivot collapses during orthogonalization."""


class NotHermitian(Exception):
    """Raised when a matrix fails the Hermitian symmetry check."""


class DelayOverflow(Exception):
    """Raised when there are more delay taps than subcarriers."""


def complex_gaussian(rng: RngStream, rows: int, cols: int) -> np.ndarray:
    """i.i.d. circular complex Gaussian entries with E|x|^2 = 1."""
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2.0)


def canonical_phases(v: np.ndarray) -> np.ndarray:
    """Rotate each column so its first element with |.| > 1e-12 is real-positive."""
    v = v.copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        sig = np.nonzero(np.abs(col) > _PHASE_EPS)[0]
        if sig.size:
            pivot = col[sig[0]]
            v[:, k] = col * (np.conj(pivot) / np.abs(pivot))
    return v


def gram_schmidt(x: np.ndarray) -> np.ndarray:
    """Orthonormalize the columns of a square matrix (modified Gram-Schmidt).

    Column k of the result spans the same flag as columns 1..k of the input.
    Raises :class:`RankDeficient` when a pivot norm falls to <= 1e-8 so the
    caller can redraw instead of working with a near-singular basis.
    """
    x = np.asarray(x, dtype=np.complex128)
    n, m = x.shape
    if n != m:
        raise ValueError(f"expected a square matrix, got {n}x{m}")
    u = x.copy()
    for k in range(m):
        for j in range(k):
            u[:, k] -= (np.vdot(u[:, j], u[:, k])) * u[:, j]
        norm = np.linalg.norm(u[:, k])
        if norm <= 1e-8:
            raise RankDeficient(f"pivot {k} has norm {norm:.3e}")
        u[:, k] /= norm
    # second sweep: re-orthogonalization keeps ||U^H U - I|| at machine level
    # even for ill-conditioned draws
    for k in range(m):
        for j in range(k):
            u[:, k] -= (np.vdot(u[:, j], u[:, k])) * u[:, j]
        u[:, k] /= np.linalg.norm(u[:, k])
    return u


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; (A kron B)[i*rB+k, j*cB+l] = A[i,j]*B[k,l]."""
    return np.kron(np.asarray(a), np.asarray(b))


def _check_hermitian(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    norm = np.linalg.norm(a)
    if norm > 0.0 and np.linalg.norm(a - a.conj().T) / norm >= 1e-8:
        raise NotHermitian("relative asymmetry >= 1e-8")
    return (a + a.conj().T) / 2.0


def hermitian_eig(a: np.ndarray, max_sweeps: int = 60):
    """Full eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Returns (eigenvalues descending, V unitary) with A ~ V diag(w) V^H.
    The input is symmetrized as (A + A^H)/2 before factorization; column
    phases follow the package-wide convention.
    """
    w = _check_hermitian(a)
    n = w.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = max(np.linalg.norm(w), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(w - np.diag(np.diag(w)))
        if off <= 1e-14 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = w[p, q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                app = w[p, p].real
                aqq = w[q, q].real
                phi = apq / abs(apq)
                # 2x2 symmetric Schur on the phase-aligned real problem
                tau = (aqq - app) / (2.0 * abs(apq))
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # W <- R^H W R with R = I except
                # R[[p,q],[p,q]] = [[c, s], [-s*conj(phi), c*conj(phi)]]
                wp = w[:, p].copy()
                wq = w[:, q].copy()
                w[:, p] = c * wp - s * np.conj(phi) * wq
                w[:, q] = s * wp + c * np.conj(phi) * wq
                wp = w[p, :].copy()
                wq = w[q, :].copy()
                w[p, :] = c * wp - s * phi * wq
                w[q, :] = s * wp + c * phi * wq
                w[p, q] = 0.0
                w[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * np.conj(phi) * vq
                v[:, q] = s * vp + c * np.conj(phi) * vq
    vals = np.diag(w).real.copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], canonical_phases(v[:, order])


def top_eigvec(a: np.ndarray, tol: float = 1e-12, max_iter: int = 1000):
    """Dominant eigenpair of a Hermitian PSD matrix via power iteration.

    Stops once the eigenvalue change is below `tol` relative and the residual
    ||Av - lv|| is below 1e-11*l; falls back to the full Jacobi decomposition
    when the iteration stalls (small spectral gaps, repeated eigenvalues).
    """
    a = _check_hermitian(a)
    n = a.shape[0]
    scale = np.linalg.norm(a)
    if scale == 0.0:
        w = np.zeros(n, dtype=np.complex128)
        w[0] = 1.0
        return 0.0, w
    v = 1.0 / np.sqrt(np.arange(1, n + 1, dtype=np.float64))
    v = v.astype(np.complex128) / np.linalg.norm(v)
    z = a @ v
    lam = 0.0
    for _ in range(max_iter):
        zn = np.linalg.norm(z)
        if zn <= 1e-300:
            break
        v = z / zn
        z = a @ v
        lam_new = float(np.vdot(v, z).real)
        resid = np.linalg.norm(z - lam_new * v)
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300) and resid <= 1e-11 * max(
            lam_new, 1e-300
        ):
            return lam_new, canonical_phases(v[:, None])[:, 0]
        lam = lam_new
    vals, vecs = hermitian_eig(a)
    return float(vals[0]), vecs[:, 0]


def dft_delay_to_freq(h: np.ndarray, n_sc: int) -> np.ndarray:
    """Delay-tap DFT along the last axis, zero-padded to n_sc subcarriers.

    out[..., k] = sum_d h[..., d] * exp(-2j*pi*k*d/n_sc), k = 0..n_sc-1.
    """
    h = np.asarray(h, dtype=np.complex128)
    n_d = h.shape[-1]
    if n_d > n_sc:
        raise DelayOverflow(f"{n_d} delay taps exceed {n_sc} subcarriers")
    d = np.arange(n_d)
    k = np.arange(n_sc)
    phase = np.exp(-2j * np.pi * np.outer(d, k) / n_sc)
    return h @ phase
