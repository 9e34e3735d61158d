"""Spatially correlated flat Rayleigh MIMO channel with noise whitening.

The observation model is y = Hbar W s + n with Hbar = Rr^(1/2) Hw Rt^(1/2),
Hw i.i.d. CN(0,1) and n ~ CN(0, C_nn). Detection happens on the whitened
model y_tilde = sqrt(B) y, H_tilde = sqrt(B) Hbar W with B = C_nn^-1, where
sqrt(B) = L^H from the Cholesky factorization B = L L^H; the whitened noise
is CN(0, I).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .linalg import back_substitute, cholesky


@dataclass(frozen=True)
class CorrelationModel:
    """Exponential (Kronecker) antenna correlation, entry rho^|a-b| per side."""

    rho_tx: float = 0.0
    rho_rx: float = 0.0

    def __post_init__(self) -> None:
        for rho in (self.rho_tx, self.rho_rx):
            if not 0.0 <= rho < 1.0:
                raise ConfigError(f"correlation magnitude {rho} outside [0, 1)")

    def tx_matrix(self, n: int) -> np.ndarray:
        return _exponential_matrix(self.rho_tx, n)

    def rx_matrix(self, n: int) -> np.ndarray:
        return _exponential_matrix(self.rho_rx, n)


def _exponential_matrix(rho: float, n: int) -> np.ndarray:
    idx = np.arange(n)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _sym_sqrt(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition."""
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def iid_complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) entries: unit total variance split across real and imaginary."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def generate_channel(
    n_r: int, n_t: int, corr: CorrelationModel, rng: np.random.Generator | int
) -> np.ndarray:
    """Draw Hbar = Rr^(1/2) Hw Rt^(1/2), entries unit-variance complex Gaussian."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    h_w = iid_complex_gaussian(rng, (n_r, n_t))
    if corr.rho_rx > 0.0:
        h_w = _sym_sqrt(corr.rx_matrix(n_r)) @ h_w
    if corr.rho_tx > 0.0:
        h_w = h_w @ _sym_sqrt(corr.tx_matrix(n_t))
    return h_w


@dataclass(frozen=True)
class WhitenedModel:
    """Observation after noise whitening: y = h s + n with n ~ CN(0, I)."""

    y: np.ndarray
    h: np.ndarray

    @property
    def n_streams(self) -> int:
        return self.h.shape[1]


class ChannelRealization:
    """One channel draw plus everything needed to transmit and whiten on it."""

    def __init__(self, hbar: np.ndarray, c_nn: np.ndarray, w: np.ndarray | None = None):
        hbar = np.asarray(hbar, dtype=complex)
        n_r, n_t = hbar.shape
        if w is None:
            w = np.eye(n_t, dtype=complex)
        w = np.asarray(w, dtype=complex)
        if w.shape[0] != n_t:
            raise ConfigError("precoder row count must match transmit antennas")
        n_l = w.shape[1]
        if n_l > n_t or n_l > n_r:
            raise ConfigError(
                f"{n_l} streams exceed antenna budget ({n_t} tx, {n_r} rx)"
            )
        c_nn = np.asarray(c_nn, dtype=complex)
        if c_nn.shape != (n_r, n_r):
            raise ConfigError("noise covariance must be N_r x N_r")

        self.hbar = hbar
        self.w = w
        self.h = hbar @ w
        self.c_nn = c_nn
        # B = C_nn^-1 assembled from the noise factor by substitution, then
        # held through its own Cholesky factor; the whitener is L^H.
        self._noise_factor = cholesky(c_nn)
        y_inv = back_substitute(self._noise_factor.conj().T, np.eye(n_r, dtype=complex))
        b = y_inv @ y_inv.conj().T
        b = (b + b.conj().T) / 2.0
        self.whitener = cholesky(b).conj().T

    @property
    def n_streams(self) -> int:
        return self.h.shape[1]


def transmit(
    ch: ChannelRealization, s: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """y = H s + n with n drawn from CN(0, C_nn)."""
    s = np.asarray(s, dtype=complex)
    if s.shape != (ch.n_streams,):
        raise ValueError(f"expected {ch.n_streams} stream symbols")
    w = iid_complex_gaussian(rng, ch.c_nn.shape[0])
    return ch.h @ s + ch._noise_factor @ w


def whiten(y: np.ndarray, ch: ChannelRealization) -> WhitenedModel:
    """Apply the realization's whitener to an observation."""
    y = np.asarray(y, dtype=complex)
    return WhitenedModel(ch.whitener @ y, ch.whitener @ ch.h)
