"""Iterative detection and decoding over a block of channel uses.

One code block is spread over U channel uses of an n_l-stream whitened MIMO
model: the transmitted (interleaved, punctured) codeword fills the bit slots
use by use, stream 0 bits 0..q-1 first, then stream 1, and so on; leftover
slots in the final uses are padded with zero bits. Each iteration runs the
soft-input detector on every use, feeds its (by default extrinsic) output
through the deinterleaver and depuncturer into the decoder, and feeds the
decoder's output back as the next round of detector a priori LLRs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import bchase, lchase
from .channel import WhitenedModel
from .codec import (
    CodeConfig,
    Interleaver,
    bcjr_decode,
    depuncture,
    make_interleaver,
)
from .constellation import Constellation
from .counters import DetectorStats
from .errors import ConfigError
from .llr import LLR_CLIP, saturate
from .reference import exact_maxlog_llrs, lmmse_llrs

DETECTORS = ("lchase", "bchase", "maxlog", "lmmse")
FEEDBACK_MODES = ("extrinsic", "combined")


@dataclass(frozen=True)
class IddConfig:
    constellation: Constellation
    code: CodeConfig
    detector: str = "lchase"
    iterations: int = 3
    interleaver_seed: int = 0
    feedback: str = "extrinsic"

    def __post_init__(self) -> None:
        if self.detector not in DETECTORS:
            raise ConfigError(f"unknown detector {self.detector!r}")
        if self.iterations < 1:
            raise ConfigError("iterations must be positive")
        if self.feedback not in FEEDBACK_MODES:
            raise ConfigError(f"unknown feedback mode {self.feedback!r}")


@dataclass
class IddResult:
    info_llrs: np.ndarray  # (iterations, K) decoder info-bit LLRs
    decoded: np.ndarray  # (K,) hard bits from the final iteration
    iter_block_error: np.ndarray  # (iterations,) bool, any info bit wrong
    iter_bit_errors: np.ndarray  # (iterations,) int
    detector_frames: list = field(default_factory=list)  # (U, n, q) per iter
    apriori_frames: list = field(default_factory=list)  # (U, n, q) per iter
    decoder_extrinsics: list = field(default_factory=list)  # (coded_len,) per iter
    iter_stats: list = field(default_factory=list)  # DetectorStats per iter


def uses_for_block(code: CodeConfig, c: Constellation, n_streams: int) -> int:
    """Channel uses needed to carry one transmitted codeword."""
    per_use = n_streams * c.bits_per_symbol
    return -(-code.transmitted_len // per_use)


def slot_bits(tx_bits: np.ndarray, c: Constellation, n_streams: int) -> np.ndarray:
    """Lay transmitted bits into (U, n_streams, q) slots, zero padded."""
    tx_bits = np.asarray(tx_bits)
    uses = -(-len(tx_bits) // (n_streams * c.bits_per_symbol))
    slots = np.zeros(uses * n_streams * c.bits_per_symbol, dtype=np.int8)
    slots[: len(tx_bits)] = tx_bits
    return slots.reshape(uses, n_streams, c.bits_per_symbol)


def _detect_all_uses(
    models: Sequence[WhitenedModel],
    contexts,
    cfg: IddConfig,
    la: np.ndarray,
    stats: DetectorStats,
) -> np.ndarray:
    c = cfg.constellation
    if cfg.detector == "lchase":
        return lchase.detect_all_uses(contexts, c, la, stats)
    if cfg.detector == "bchase":
        return bchase.detect_all_uses(contexts, c, la, stats)
    n_uses = len(models)
    out = np.empty((n_uses, models[0].n_streams, c.bits_per_symbol))
    if cfg.detector == "maxlog":
        for u, model in enumerate(models):
            out[u] = exact_maxlog_llrs(model, c, la[u], stats=stats).values
    else:
        for u, model in enumerate(models):
            out[u] = lmmse_llrs(model, c, stats=stats).values
    return out


def run_idd(
    models: Sequence[WhitenedModel],
    info_bits: np.ndarray,
    cfg: IddConfig,
    stats: DetectorStats | None = None,
) -> IddResult:
    """Run the full detect/decode loop and report per-iteration outcomes.

    models carry the already-whitened observations for each channel use of
    the block; info_bits are the true payload used only for error counting.
    """
    c = cfg.constellation
    code = cfg.code
    info_bits = np.asarray(info_bits)
    if info_bits.shape != (code.info_len,):
        raise ValueError(f"expected {code.info_len} info bits")
    n_uses = len(models)
    if n_uses < 1:
        raise ValueError("need at least one channel use")
    n_streams = models[0].n_streams
    q = c.bits_per_symbol
    n_slots = n_uses * n_streams * q
    n_tx = code.transmitted_len
    if n_slots < n_tx:
        raise ValueError(
            f"{n_uses} uses carry {n_slots} bits, codeword needs {n_tx}"
        )

    il = make_interleaver(n_tx, cfg.interleaver_seed)
    keep = code.keep_mask()

    if cfg.detector == "lchase":
        contexts = lchase.prepare_all_uses(models)
    elif cfg.detector == "bchase":
        contexts = bchase.prepare_all_uses(models)
    else:
        contexts = None
    # The LMMSE baseline ignores a priori input: its output is already
    # extrinsic and iterating it would just repeat the first pass, so no a
    # priori is subtracted or fed back for it.
    apriori_aware = cfg.detector != "lmmse"

    result = IddResult(
        info_llrs=np.zeros((cfg.iterations, code.info_len)),
        decoded=np.zeros(code.info_len, dtype=np.int8),
        iter_block_error=np.zeros(cfg.iterations, dtype=bool),
        iter_bit_errors=np.zeros(cfg.iterations, dtype=np.int64),
    )

    la_slots = np.zeros(n_slots)
    for it in range(cfg.iterations):
        iter_stats = DetectorStats()
        la = la_slots.reshape(n_uses, n_streams, q)
        result.apriori_frames.append(la.copy())
        det = _detect_all_uses(models, contexts, cfg, la, iter_stats)
        result.detector_frames.append(det)

        if cfg.feedback == "extrinsic" and apriori_aware:
            fwd_slots = saturate(det.reshape(-1) - la_slots)
        else:
            fwd_slots = saturate(det.reshape(-1))
        ch_llrs = depuncture(fwd_slots[:n_tx][il.inv], code)
        dec_ext, info_total, hard = bcjr_decode(ch_llrs, None, code)
        result.decoder_extrinsics.append(dec_ext)
        result.info_llrs[it] = info_total
        result.decoded = hard
        errs = int(np.sum(hard != info_bits))
        result.iter_bit_errors[it] = errs
        result.iter_block_error[it] = errs > 0
        result.iter_stats.append(iter_stats)
        if stats is not None:
            stats.add(iter_stats)

        if it + 1 < cfg.iterations and apriori_aware:
            if cfg.feedback == "extrinsic":
                back = dec_ext
            else:
                back = dec_ext + ch_llrs
            la_slots = np.zeros(n_slots)
            la_slots[:n_tx] = saturate(back[keep][il.perm])

    return result
