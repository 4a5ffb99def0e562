"""Complex linear algebra and seeded sampling shared by every other module.

Matrices are plain ``numpy`` complex128 arrays. Random streams come from
``numpy.random.Generator`` backed by PCG64, whose output for a given seed is
fixed by numpy's stream-compatibility policy, so results are reproducible
across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SeededRng = np.random.Generator


class NumericalError(RuntimeError):
    """Raised when a numerical routine fails to converge or meets bad input."""


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.conj().T


def make_rng(seed: int, *keys: int) -> SeededRng:
    """Return a generator for ``seed``, optionally forked by integer ``keys``.

    ``make_rng(s, 3, 1)`` is a stream independent of ``make_rng(s, 3, 2)``;
    the same arguments always reproduce the same stream.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit sub-seed, used to hand workers their own stream."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"{name} has non-finite entries")
    return m


def svd(a) -> SvdResult:
    """Thin SVD with a deterministic phase convention.

    Each left singular vector is rotated so that its largest-magnitude entry
    is real and positive; the matching right vector gets the same rotation,
    which leaves ``U diag(s) V^H`` unchanged.
    """
    m = as_complex_matrix(a)
    if min(m.shape) < 1:
        raise ValueError("svd needs a matrix with at least one row and column")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    v = vh.conj().T
    idx = np.argmax(np.abs(u), axis=0)
    pivot = u[idx, np.arange(u.shape[1])]
    mag = np.abs(pivot)
    phase = np.where(mag > 0, pivot / np.where(mag > 0, mag, 1.0), 1.0)
    u = u / phase
    v = v / phase
    return SvdResult(u=u, sigma=s, v=v)


def complex_gaussian(rows: int, cols: int, variance: float, rng: SeededRng) -> np.ndarray:
    """i.i.d. circularly symmetric CN(0, variance) entries."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    scale = np.sqrt(variance / 2.0)
    z = rng.standard_normal((rows, cols, 2))
    return scale * (z[..., 0] + 1j * z[..., 1])


def pinv_left(a) -> np.ndarray:
    """(A^H A)^{-1} A^H for a full-column-rank A."""
    m = as_complex_matrix(a)
    ah = m.conj().T
    return np.linalg.solve(ah @ m, ah)
