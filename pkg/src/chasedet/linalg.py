"""Small dense linear algebra with the exact conventions the detectors need.

QR factors are thin, with the diagonal of R normalized to be real and
positive, which makes the factorization unique and reproducible. Triangular
systems are solved by substitution; no routine here ever forms a matrix
inverse.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NotPositiveDefiniteError, SingularMatrixError

RANK_RTOL = 1e-12


class QrFactors(NamedTuple):
    q: np.ndarray
    r: np.ndarray


def qr(a: np.ndarray) -> QrFactors:
    """Thin QR with positive real diagonal of R.

    Requires rows >= cols and numerical full column rank: any |R_kk| below
    1e-12 * ||A||_F raises SingularMatrixError. Leading batch dimensions are
    factored together in one call (and a batch fails as a whole if any member
    is rank deficient).
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-2] < a.shape[-1]:
        raise ValueError("qr expects tall or square matrices")
    if not np.all(np.isfinite(a)):
        raise ValueError("qr input must be finite")
    q, r = np.linalg.qr(a, mode="reduced")
    diag = np.diagonal(r, axis1=-2, axis2=-1).copy()
    scale = np.sqrt((np.abs(a) ** 2).sum(axis=(-2, -1)))
    floor = RANK_RTOL * np.maximum(scale, np.finfo(float).tiny)
    if np.any(np.abs(diag) < floor[..., None]):
        raise SingularMatrixError("matrix is numerically rank deficient")
    phase = diag / np.abs(diag)
    q = q * phase[..., None, :]
    r = phase.conj()[..., :, None] * r
    # Scrub rounding residue so the advertised structure holds exactly.
    n = r.shape[-1]
    r = np.triu(r)
    r[..., np.arange(n), np.arange(n)] = np.abs(diag)
    return QrFactors(q, r)


def back_substitute(r: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve R x = b for upper-triangular R by back substitution.

    b may be a vector (one fewer dimension than r) or a matrix of stacked
    right-hand sides; passing the identity columnwise is the supported way to
    materialize R^-1. Leading batch dimensions of r and b broadcast.
    """
    r = np.asarray(r)
    b = np.asarray(b)
    n = r.shape[-1]
    if r.ndim < 2 or r.shape[-2] != n:
        raise ValueError("R must be square")
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    if np.any(np.abs(diag) == 0.0):
        raise SingularMatrixError("zero pivot in back substitution")
    vector = b.ndim == r.ndim - 1
    if vector:
        b = b[..., None]
    if b.shape[-2] != n:
        raise ValueError("right-hand side length must match R")
    batch = np.broadcast_shapes(r.shape[:-2], b.shape[:-2])
    x = np.zeros(batch + b.shape[-2:], dtype=np.result_type(r, b, float))
    for i in range(n - 1, -1, -1):
        acc = b[..., i, :] - np.einsum(
            "...j,...jk->...k", r[..., i, i + 1 :], x[..., i + 1 :, :]
        )
        x[..., i, :] = acc / diag[..., i, None]
    return x[..., 0] if vector else x


def cholesky(b: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor L with L L^H = B for Hermitian positive definite B."""
    b = np.asarray(b, dtype=complex)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("cholesky expects a square matrix")
    if np.abs(b - b.conj().T).max() > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian")
    try:
        return np.linalg.cholesky((b + b.conj().T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None


def swap_permutation(n: int, i: int) -> np.ndarray:
    """Index map that swaps positions i and n-1 (an involution)."""
    if not 0 <= i < n:
        raise ValueError(f"stream index {i} out of range for {n}")
    perm = np.arange(n)
    perm[i], perm[n - 1] = perm[n - 1], perm[i]
    return perm


def apply_permutation(a: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Reorder columns: result[:, k] = a[:, perm[k]]."""
    perm = np.asarray(perm)
    _check_permutation(perm, a.shape[1])
    return a[:, perm]


def invert_permutation(perm: np.ndarray) -> np.ndarray:
    perm = np.asarray(perm)
    _check_permutation(perm, len(perm))
    return np.argsort(perm)


def _check_permutation(perm: np.ndarray, n: int) -> None:
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError("not a permutation of the expected size")
