"""Gray-mapped square QAM alphabets and their one-dimensional PAM machinery.

A square M-QAM symbol is two independent sqrt(M)-PAM coordinates. Every
per-symbol operation the detectors need (a-priori-aware slicing, per-level
metrics, soft symbol statistics) therefore reduces to one-dimensional work on
a PamAxis, which is where almost all of this module lives.

Labeling convention (fixed, asserted by tests): bits are indexed 0..q-1 with
bit 0 the MSB of the symbol index; even positions (0, 2, ...) form the real
sub-label, odd positions the imaginary one. Each axis uses a binary-reflected
Gray code with the all-zero sub-label on the most positive level, and levels
are stored in strictly descending order (index 0 = most positive).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .llr import saturate

SUPPORTED_ORDERS = (4, 16, 64, 256)


def _gray_sub_labels(nbits: int) -> np.ndarray:
    """Binary-reflected Gray sub-labels, one row per level, MSB first."""
    count = 1 << nbits
    idx = np.arange(count)
    gray = idx ^ (idx >> 1)
    shifts = np.arange(nbits - 1, -1, -1)
    return ((gray[:, None] >> shifts) & 1).astype(np.int8)


class PamAxis:
    """One PAM coordinate: descending levels plus their Gray sub-labels.

    Precomputes the per-pair tables used to modulate decision boundaries so
    that boundary construction is a couple of matrix products regardless of
    how many (batched) LLR vectors are involved.
    """

    def __init__(self, levels: np.ndarray, sub_labels: np.ndarray):
        levels = np.asarray(levels, dtype=float)
        sub_labels = np.asarray(sub_labels)
        if levels.ndim != 1 or len(levels) < 2:
            raise ValueError("axis needs at least two levels")
        if sub_labels.shape != (len(levels), int(math.log2(len(levels)))):
            raise ValueError("sub_labels must be (n_levels, log2(n_levels))")
        if not np.all(np.diff(levels) < 0):
            raise ValueError("levels must be strictly descending")
        if not np.allclose(levels, -levels[::-1], atol=1e-9):
            raise ValueError("levels must be symmetric about zero")
        spacing = np.diff(levels)
        if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=1e-12):
            raise ValueError("levels must be uniformly spaced")
        if len({tuple(row) for row in sub_labels.tolist()}) != len(levels):
            raise ValueError("sub-labels must be distinct")
        flips = np.abs(np.diff(sub_labels.astype(int), axis=0)).sum(axis=1)
        if not np.all(flips == 1):
            raise ValueError("adjacent levels must differ in exactly one bit (Gray)")

        self.levels = levels
        self.sub_labels = sub_labels.astype(np.int8)
        self.nlevels = len(levels)
        self.nbits = self.sub_labels.shape[1]
        self._labels_f = self.sub_labels.astype(float)
        self.signs = 2.0 * self._labels_f - 1.0

        # Unordered level pairs (m, u) with m < u, i.e. x_m > x_u.
        first, second = np.triu_indices(self.nlevels, 1)
        self.pair_first = first
        self.pair_second = second
        self.pair_mid = (levels[first] + levels[second]) / 2.0
        gap = 2.0 * (levels[first] - levels[second])
        self.pair_coef = (self._labels_f[first] - self._labels_f[second]) / gap[:, None]
        self.npairs = len(first)

        # Gather tables mapping each level to the pair slots that bound it
        # from below (first == m) or above (second == m), padded and masked
        # so interval extraction is one gather plus one reduction.
        width = self.nlevels - 1
        self._pairs_by_first = np.zeros((self.nlevels, width), dtype=int)
        self._first_mask = np.zeros((self.nlevels, width), dtype=bool)
        self._pairs_by_second = np.zeros((self.nlevels, width), dtype=int)
        self._second_mask = np.zeros((self.nlevels, width), dtype=bool)
        for m in range(self.nlevels):
            idx = np.nonzero(first == m)[0]
            self._pairs_by_first[m, : len(idx)] = idx
            self._first_mask[m, : len(idx)] = True
            idx = np.nonzero(second == m)[0]
            self._pairs_by_second[m, : len(idx)] = idx
            self._second_mask[m, : len(idx)] = True

        # Level indices per (bit, value) coset; both must be populated.
        self.bit_cosets: list[tuple[np.ndarray, np.ndarray]] = []
        for n in range(self.nbits):
            zeros = np.nonzero(self.sub_labels[:, n] == 0)[0]
            ones = np.nonzero(self.sub_labels[:, n] == 1)[0]
            if len(zeros) == 0 or len(ones) == 0:
                raise ValueError(f"axis bit {n} has an empty coset")
            self.bit_cosets.append((zeros, ones))

    def level_priors(self, apriori: np.ndarray) -> np.ndarray:
        """Per-level a priori term sum_n b_mn * La(n); apriori is (..., nbits)."""
        return np.asarray(apriori, dtype=float) @ self._labels_f.T


class BoundarySet:
    """A-priori-modulated slicing boundaries for one PamAxis.

    Holds one boundary value per unordered level pair plus the per-level
    [lower, upper) interval bounds they induce. Leading batch dimensions of
    `apriori`/`noise_var` are carried through, so one BoundarySet can describe
    a whole batch of independent slicing problems.
    """

    def __init__(self, axis: PamAxis, apriori: np.ndarray, noise_var) -> None:
        apriori = np.asarray(apriori, dtype=float)
        if apriori.shape[-1] != axis.nbits:
            raise ValueError("apriori length must match axis bit count")
        var = np.asarray(noise_var, dtype=float)
        if np.any(var <= 0.0) or not np.all(np.isfinite(var)):
            raise ValueError("noise_var must be positive and finite")

        values = axis.pair_mid - var[..., None] * (apriori @ axis.pair_coef.T)
        lower = np.where(
            axis._first_mask, values[..., axis._pairs_by_first], -np.inf
        ).max(axis=-1)
        upper = np.where(
            axis._second_mask, values[..., axis._pairs_by_second], np.inf
        ).min(axis=-1)

        self.axis = axis
        self.values = values
        self.lower = lower
        self.upper = upper
        self._level_prior = axis.level_priors(apriori)
        self._var = var

    @property
    def nboundaries(self) -> int:
        return self.axis.npairs


def pam_boundaries(axis: PamAxis, apriori: np.ndarray, noise_var) -> BoundarySet:
    """Boundary set for slicing with priors `apriori` and noise variance `noise_var`.

    With zero priors the boundaries are the plain pairwise midpoints; finite
    priors shift each pairwise boundary by noise_var * sum_n (b_mn - b_un) *
    La(n) / (2 (x_m - x_u)).
    """
    return BoundarySet(axis, apriori, noise_var)


def slice_pam(z, axis: PamAxis, boundaries: BoundarySet) -> np.ndarray:
    """Map observations to the metric-maximizing level index.

    Returns, for every z, the index m whose interval [max_{u>m} D_mu,
    min_{u<m} D_um) contains z, which is exactly the argmax of
    pam_metric over all levels, with ties resolved toward the smaller index
    (more positive level). Total on all real inputs.
    """
    z = np.asarray(z, dtype=float)
    ze = z[..., None]
    inside = (ze >= boundaries.lower) & (ze < boundaries.upper)
    idx = inside.argmax(axis=-1)
    covered = inside.any(axis=-1)
    if not np.all(covered):
        # Float rounding can open an ulp-wide gap between intervals at 3-way
        # near-ties; resolve those inputs by direct metric evaluation.
        metric = boundaries._level_prior - (
            (ze - boundaries.axis.levels) ** 2
        ) / boundaries._var[..., None]
        idx = np.where(covered, idx, metric.argmax(axis=-1))
    return idx


def pam_metric(axis: PamAxis, level, z, apriori: np.ndarray, noise_var) -> np.ndarray:
    """Per-level metric sum_n b_mn*La(n) - (z - x_m)^2 / noise_var."""
    level = np.asarray(level)
    apriori = np.asarray(apriori, dtype=float)
    prior = (axis._labels_f[level] * apriori).sum(axis=-1)
    dist = (np.asarray(z, dtype=float) - axis.levels[level]) ** 2
    return prior - dist / np.asarray(noise_var, dtype=float)


def coset_min_sqdist(z, axis: PamAxis) -> tuple[np.ndarray, np.ndarray]:
    """Per-bit minimum squared distance to the bit-0 / bit-1 level cosets.

    Returns (d0, d1), each shaped like z with a trailing axis of axis.nbits.
    This is the prior-free slicing problem restricted to each coset, used by
    the post-detection LLRs of the feedback chain and the LMMSE demapper.
    """
    z = np.asarray(z, dtype=float)
    d2 = (z[..., None] - axis.levels) ** 2
    d0 = np.empty(z.shape + (axis.nbits,))
    d1 = np.empty(z.shape + (axis.nbits,))
    for n, (zeros, ones) in enumerate(axis.bit_cosets):
        d0[..., n] = d2[..., zeros].min(axis=-1)
        d1[..., n] = d2[..., ones].min(axis=-1)
    return d0, d1


class Constellation:
    """Unit-energy Gray-mapped square QAM alphabet.

    symbols[k] is the point whose bit label is the MSB-first binary expansion
    of k, so modulation is a table lookup. The real (imaginary) coordinate is
    driven by the even (odd) label positions.
    """

    def __init__(self, order: int):
        if order not in SUPPORTED_ORDERS:
            raise ConfigError(f"unsupported modulation order {order}")
        self.order = order
        self.bits_per_symbol = int(math.log2(order))
        q = self.bits_per_symbol
        side = 1 << (q // 2)

        norm = math.sqrt(2.0 * (order - 1) / 3.0)
        amplitudes = np.arange(side - 1, -side, -2, dtype=float)
        levels = amplitudes / norm
        sub_labels = _gray_sub_labels(q // 2)
        self.real_axis = PamAxis(levels, sub_labels)
        self.imag_axis = PamAxis(levels, sub_labels)

        self.real_bits = np.arange(0, q, 2)
        self.imag_bits = np.arange(1, q, 2)

        shifts = np.arange(q - 1, -1, -1)
        ks = np.arange(order)
        self.bit_labels = ((ks[:, None] >> shifts) & 1).astype(np.int8)
        self.bit_labels_f = self.bit_labels.astype(float)

        sub_weights = 1 << np.arange(q // 2 - 1, -1, -1)
        gray_to_level = np.empty(side, dtype=int)
        gray_ints = (sub_labels * sub_weights).sum(axis=1)
        gray_to_level[gray_ints] = np.arange(side)

        real_sub = self.bit_labels[:, self.real_bits] @ sub_weights
        imag_sub = self.bit_labels[:, self.imag_bits] @ sub_weights
        self.real_level_idx = gray_to_level[real_sub]
        self.imag_level_idx = gray_to_level[imag_sub]
        self.symbols = levels[self.real_level_idx] + 1j * levels[self.imag_level_idx]

        energy = np.mean(np.abs(self.symbols) ** 2)
        if abs(energy - 1.0) > 1e-12:
            raise AssertionError(f"constellation energy {energy} != 1")

        # Symbol-index cosets per full-label bit; both sides always populated.
        self.bit_coset_idx: list[tuple[np.ndarray, np.ndarray]] = []
        for k in range(q):
            zeros = np.nonzero(self.bit_labels[:, k] == 0)[0]
            ones = np.nonzero(self.bit_labels[:, k] == 1)[0]
            assert len(zeros) == order // 2 and len(ones) == order // 2
            self.bit_coset_idx.append((zeros, ones))

        self._weights = 1 << shifts

    def nearest_index(self, points) -> np.ndarray:
        """Index of the closest constellation point (hard decision)."""
        points = np.asarray(points, dtype=complex)
        return np.abs(points[..., None] - self.symbols).argmin(axis=-1)


def build_constellation(order: int) -> Constellation:
    """Construct the Gray-mapped unit-energy QAM alphabet of the given order."""
    return Constellation(order)


def modulate(bits, c: Constellation) -> np.ndarray:
    """Map bit vectors (..., q) with the fixed Gray labeling to symbols (...,)."""
    bits = np.asarray(bits)
    if bits.shape[-1] != c.bits_per_symbol:
        raise ValueError(
            f"expected {c.bits_per_symbol} bits per symbol, got {bits.shape[-1]}"
        )
    if not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0/1")
    idx = bits @ c._weights
    return c.symbols[idx]


def soft_symbol_stats(llrs, c: Constellation) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance of a symbol given per-bit LLRs (..., q).

    Bits are treated as independent with P(b=1) = sigmoid(L). Evaluated in
    factorized per-axis form; equals the direct sum over all M symbols.
    Inputs are saturated first, so +-inf LLRs are safe and a fully saturated
    vector returns the labeled point with exactly zero variance.
    """
    llrs = saturate(np.asarray(llrs, dtype=float))
    t = np.tanh(llrs / 2.0)
    mean_parts = []
    var_total = 0.0
    for axis, cols in ((c.real_axis, c.real_bits), (c.imag_axis, c.imag_bits)):
        ta = t[..., cols]
        probs = np.prod(1.0 + axis.signs * ta[..., None, :], axis=-1) / axis.nlevels
        mean = probs @ axis.levels
        second = probs @ (axis.levels**2)
        mean_parts.append(mean)
        var_total = var_total + np.clip(second - mean**2, 0.0, None)
    return mean_parts[0] + 1j * mean_parts[1], var_total
