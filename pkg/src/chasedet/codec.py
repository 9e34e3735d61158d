"""Rate-1/2 terminated convolutional code with a max-log BCJR decoder.

The mother code is the 4-state (7,5) octal feed-forward code. Two zero tail
bits terminate the trellis, so K info bits become 2*(K+2) coded bits. An
optional regular puncturing pattern thins that to roughly rate 5/6 (~0.83).
The decoder is a max-log forward/backward pass returning per-coded-bit
extrinsic LLRs (total - channel - a priori), per-info-bit LLRs, and hard
decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

G0 = (1, 1, 1)  # 7 octal: current input, previous, one before
G1 = (1, 0, 1)  # 5 octal

SUPPORTED_RATES = (0.5, 0.83)

# Period-5 keep pattern (c0, c1) per trellis step for the ~0.83 selector:
# both bits on step 0, first bit only elsewhere -> 6 of 10 kept.
PUNCTURE_KEEP = np.array(
    [[1, 1], [1, 0], [1, 0], [1, 0], [1, 0]], dtype=bool
)

# Trellis tables indexed [state][input]; state = 2*b(t-1) + b(t-2).
_NS = [[0, 0], [0, 0], [0, 0], [0, 0]]
_C0 = [[0, 0], [0, 0], [0, 0], [0, 0]]
_C1 = [[0, 0], [0, 0], [0, 0], [0, 0]]
for _s in range(4):
    _d1, _d2 = _s >> 1, _s & 1
    for _u in (0, 1):
        _NS[_s][_u] = (_u << 1) | _d1
        _C0[_s][_u] = _u ^ _d1 ^ _d2
        _C1[_s][_u] = _u ^ _d2


@dataclass(frozen=True)
class CodeConfig:
    info_len: int
    rate: float = 0.5

    def __post_init__(self) -> None:
        if self.info_len < 1:
            raise ConfigError("info_len must be positive")
        if self.rate not in SUPPORTED_RATES:
            raise ConfigError(f"rate selector must be one of {SUPPORTED_RATES}")

    @property
    def steps(self) -> int:
        return self.info_len + 2

    @property
    def coded_len(self) -> int:
        return 2 * self.steps

    def keep_mask(self) -> np.ndarray:
        """Boolean mask over the mother codeword of bits actually sent."""
        if self.rate == 0.5:
            return np.ones(self.coded_len, dtype=bool)
        reps = -(-self.steps // len(PUNCTURE_KEEP))
        return np.tile(PUNCTURE_KEEP, (reps, 1))[: self.steps].reshape(-1)

    @property
    def transmitted_len(self) -> int:
        return int(self.keep_mask().sum())


def encode(info_bits, cfg: CodeConfig) -> np.ndarray:
    """Terminated mother-code codeword, c0/c1 interleaved per step."""
    info_bits = np.asarray(info_bits)
    if info_bits.shape != (cfg.info_len,):
        raise ValueError(f"expected {cfg.info_len} info bits")
    if not np.all((info_bits == 0) | (info_bits == 1)):
        raise ValueError("info bits must be 0/1")
    u = np.concatenate([info_bits.astype(np.int8), np.zeros(2, dtype=np.int8)])
    c0 = np.convolve(u, G0)[: cfg.steps] % 2
    c1 = np.convolve(u, G1)[: cfg.steps] % 2
    coded = np.empty(cfg.coded_len, dtype=np.int8)
    coded[0::2] = c0
    coded[1::2] = c1
    return coded


def puncture(coded: np.ndarray, cfg: CodeConfig) -> np.ndarray:
    """Keep only transmitted positions of a mother codeword (or LLR vector)."""
    coded = np.asarray(coded)
    if coded.shape != (cfg.coded_len,):
        raise ValueError(f"expected {cfg.coded_len} values")
    return coded[cfg.keep_mask()]


def depuncture(llrs: np.ndarray, cfg: CodeConfig) -> np.ndarray:
    """Re-expand transmitted-position LLRs, zeros at punctured positions."""
    llrs = np.asarray(llrs, dtype=float)
    mask = cfg.keep_mask()
    if llrs.shape != (int(mask.sum()),):
        raise ValueError(f"expected {int(mask.sum())} values")
    full = np.zeros(cfg.coded_len)
    full[mask] = llrs
    return full


@dataclass(frozen=True)
class Interleaver:
    perm: np.ndarray
    inv: np.ndarray

    def __len__(self) -> int:
        return len(self.perm)


def make_interleaver(length: int, seed: int) -> Interleaver:
    """Seeded pseudo-random bit permutation (a bijection by construction)."""
    perm = np.random.default_rng(seed).permutation(length)
    return Interleaver(perm=perm, inv=np.argsort(perm))


def interleave(x: np.ndarray, il: Interleaver) -> np.ndarray:
    return np.asarray(x)[il.perm]


def deinterleave(x: np.ndarray, il: Interleaver) -> np.ndarray:
    return np.asarray(x)[il.inv]


def bcjr_decode(
    channel_llrs: np.ndarray, apriori_llrs: np.ndarray | None, cfg: CodeConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Max-log BCJR over the terminated 4-state trellis.

    channel_llrs and apriori_llrs are per mother-coded-bit (length
    2*(K+2)); pass None for a zero a priori. Returns (extrinsic per coded
    bit, total LLR per info bit, hard info bits), where extrinsic is the
    total coded-bit LLR minus channel minus a priori.
    """
    channel_llrs = np.asarray(channel_llrs, dtype=float)
    if channel_llrs.shape != (cfg.coded_len,):
        raise ValueError(f"expected {cfg.coded_len} channel LLRs")
    if apriori_llrs is None:
        lam = channel_llrs
    else:
        apriori_llrs = np.asarray(apriori_llrs, dtype=float)
        if apriori_llrs.shape != (cfg.coded_len,):
            raise ValueError(f"expected {cfg.coded_len} a priori LLRs")
        lam = channel_llrs + apriori_llrs

    steps = cfg.steps
    k = cfg.info_len
    pairs = lam.reshape(steps, 2).tolist()
    neg = float("-inf")

    alphas = [[0.0, neg, neg, neg]]
    for t in range(steps):
        l0, l1 = pairs[t]
        cur = alphas[-1]
        nxt = [neg, neg, neg, neg]
        inputs = (0, 1) if t < k else (0,)
        for s in range(4):
            a = cur[s]
            if a == neg:
                continue
            for u in inputs:
                v = a + _C0[s][u] * l0 + _C1[s][u] * l1
                ns = _NS[s][u]
                if v > nxt[ns]:
                    nxt[ns] = v
        alphas.append(nxt)

    betas = [[neg, neg, neg, neg] for _ in range(steps + 1)]
    betas[steps] = [0.0, neg, neg, neg]
    for t in range(steps - 1, -1, -1):
        l0, l1 = pairs[t]
        nxt = betas[t + 1]
        cur = betas[t]
        inputs = (0, 1) if t < k else (0,)
        for s in range(4):
            best = neg
            for u in inputs:
                b = nxt[_NS[s][u]]
                if b == neg:
                    continue
                v = b + _C0[s][u] * l0 + _C1[s][u] * l1
                if v > best:
                    best = v
            cur[s] = best

    # Edge totals, vectorized: alpha(t, s) + gamma(t, s, u) + beta(t+1, ns).
    alpha_arr = np.array(alphas[:-1])
    beta_arr = np.array(betas[1:])
    lam_arr = lam.reshape(steps, 2)
    c0_tab = np.array(_C0, dtype=float)
    c1_tab = np.array(_C1, dtype=float)
    ns_tab = np.array(_NS)
    gamma = c0_tab * lam_arr[:, None, 0:1] + c1_tab * lam_arr[:, None, 1:2]
    totals = alpha_arr[:, :, None] + gamma + beta_arr[np.arange(steps)[:, None, None], ns_tab]
    totals[k:, :, 1] = neg  # tail steps force input 0

    def _coset_llr(bit_tab: np.ndarray) -> np.ndarray:
        ones = np.where(bit_tab == 1, totals, neg).max(axis=(1, 2))
        zeros = np.where(bit_tab == 0, totals, neg).max(axis=(1, 2))
        return ones - zeros

    llr_c0 = _coset_llr(c0_tab)
    llr_c1 = _coset_llr(c1_tab)
    coded_total = np.empty(cfg.coded_len)
    coded_total[0::2] = llr_c0
    coded_total[1::2] = llr_c1

    u_tab = np.broadcast_to(np.array([0.0, 1.0]), (4, 2))
    info_total = _coset_llr(u_tab)[:k]
    extrinsic = coded_total - lam
    hard = (info_total > 0).astype(np.int8)
    return extrinsic, info_total, hard
