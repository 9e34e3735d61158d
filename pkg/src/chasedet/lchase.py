"""List-type Chase detector: exhaustive over one stream, sliced elsewhere.

For a target stream i the channel columns are swapped so stream i sits last,
a QR factorization triangularizes the system, and the upper block is scaled
by Rtilde^-1 so every remaining layer sees stream i through a direct coupling
coefficient. Each of the M candidate values of stream i then contributes its
own last-row metric plus, per inner layer, the exact prior-aware maximum over
that layer's alphabet obtained by boundary slicing. Residual noise
correlation between the scaled rows is deliberately ignored; the per-row
noise variances are the squared row norms of Rtilde^-1 (exactly 1 for the
unscaled last row).

Slicing boundaries depend on the layer's a priori LLRs and noise variance
but not on the candidate, so they are computed once per (stream, layer).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import WhitenedModel
from .constellation import Constellation, pam_boundaries, pam_metric, slice_pam
from .counters import DetectorStats
from .linalg import back_substitute, qr, swap_permutation
from .llr import LlrFrame


@dataclass(frozen=True)
class LchaseStreamContext:
    """Per-(channel, target stream) factorization state.

    layers[k] is the original stream index occupying permuted position k;
    layers[-1] == stream and layers[stream] == n-1 (columns i and n-1 are
    swapped). coupling[l] expresses how the candidate symbol leaks into inner
    layer l of the scaled observation ybar, and noise_vars[l] is that row's
    (approximated, decorrelated) noise variance.
    """

    stream: int
    layers: np.ndarray
    ybar: np.ndarray
    coupling: np.ndarray
    pivot: float
    noise_vars: np.ndarray


def _prepare_stream_uses(
    h: np.ndarray, y: np.ndarray, stream: int
) -> list[LchaseStreamContext]:
    """Factor one target stream for a stack of uses (h is (U, n_rx, n))."""
    n = h.shape[-1]
    perm = swap_permutation(n, stream)
    factors = qr(h[:, :, perm])
    y_rot = np.einsum("uji,uj->ui", factors.q.conj(), y)
    r = factors.r
    r_inner = r[:, : n - 1, : n - 1]
    coupling = back_substitute(r_inner, r[:, : n - 1, n - 1])
    inv_inner = back_substitute(r_inner, np.eye(n - 1, dtype=complex)[None])
    noise_vars = (np.abs(inv_inner) ** 2).sum(axis=-1)
    ybar = np.concatenate(
        [back_substitute(r_inner, y_rot[:, : n - 1]), y_rot[:, n - 1 :]], axis=-1
    )
    pivots = r[:, n - 1, n - 1].real
    return [
        LchaseStreamContext(
            stream=stream,
            layers=perm,
            ybar=ybar[u],
            coupling=coupling[u],
            pivot=float(pivots[u]),
            noise_vars=noise_vars[u],
        )
        for u in range(len(h))
    ]


def prepare_stream(model: WhitenedModel, stream: int) -> LchaseStreamContext:
    """Factor the whitened channel for one target stream."""
    return _prepare_stream_uses(model.h[None], model.y[None], stream)[0]


def prepare_all(model: WhitenedModel) -> list[LchaseStreamContext]:
    return [prepare_stream(model, i) for i in range(model.n_streams)]


def prepare_all_uses(models) -> list[list[LchaseStreamContext]]:
    """Factor every stream of every use; returns contexts indexed [use][stream].

    Equivalent to [prepare_all(m) for m in models] but factors each stream's
    whole batch of uses in stacked linear algebra calls.
    """
    h = np.stack([m.h for m in models])
    y = np.stack([m.y for m in models])
    per_stream = [_prepare_stream_uses(h, y, i) for i in range(h.shape[-1])]
    return [list(row) for row in zip(*per_stream)]


def _detect_contexts(
    contexts: list[LchaseStreamContext],
    c: Constellation,
    la: np.ndarray,
    use_idx: np.ndarray,
    stats: DetectorStats | None,
) -> np.ndarray:
    """Core detection over a flat batch of contexts (any mix of streams).

    la is (uses, n_streams, q) and use_idx maps each context to its la row.
    Returns max-log LLRs of shape (len(contexts), q).
    """
    batch = len(contexts)
    m = c.order

    layers = np.stack([ctx.layers for ctx in contexts])
    streams = np.array([ctx.stream for ctx in contexts])
    ybar = np.stack([ctx.ybar for ctx in contexts])
    coupling = np.stack([ctx.coupling for ctx in contexts])
    pivots = np.array([ctx.pivot for ctx in contexts])
    noise_vars = np.stack([ctx.noise_vars for ctx in contexts])

    cand = c.symbols
    prior = la[use_idx, streams, :] @ c.bit_labels_f.T
    total = prior - np.abs(ybar[:, -1:] - pivots[:, None] * cand) ** 2
    if stats is not None:
        stats.metric_evals += batch * m
        stats.hypotheses += batch * m
        stats.streams += batch

    for l in range(layers.shape[1] - 1):
        la_layer = la[use_idx, layers[:, l], :]
        var = noise_vars[:, l]
        z = ybar[:, l : l + 1] - coupling[:, l : l + 1] * cand
        for axis, cols, zz in (
            (c.real_axis, c.real_bits, z.real),
            (c.imag_axis, c.imag_bits, z.imag),
        ):
            la_axis = la_layer[:, cols][:, None, :]
            bset = pam_boundaries(axis, la_axis, var[:, None])
            idx = slice_pam(zz, axis, bset)
            total = total + pam_metric(axis, idx, zz, la_axis, var[:, None])
            if stats is not None:
                stats.boundary_evals += batch * axis.npairs

    llrs = np.empty((batch, c.bits_per_symbol))
    for k, (zeros, ones) in enumerate(c.bit_coset_idx):
        llrs[:, k] = total[:, ones].max(axis=1) - total[:, zeros].max(axis=1)
    return llrs


def detect_stream_batch(
    contexts: list[LchaseStreamContext],
    c: Constellation,
    la: np.ndarray,
    stats: DetectorStats | None = None,
) -> np.ndarray:
    """Detect one stream across a batch of channel uses.

    contexts holds one prepared context per use, all for the same target
    stream; la is the a priori array of shape (uses, n_streams, q). Returns
    max-log LLRs of shape (uses, q).
    """
    return _detect_contexts(contexts, c, la, np.arange(len(contexts)), stats)


def detect_all_uses(
    contexts: list[list[LchaseStreamContext]],
    c: Constellation,
    la: np.ndarray,
    stats: DetectorStats | None = None,
) -> np.ndarray:
    """Detect every stream of every use in one fused batch.

    contexts is indexed [use][stream] (from prepare_all_uses) and la is
    (uses, n_streams, q); returns LLRs of the same shape as la.
    """
    n_uses = len(contexts)
    n_streams = len(contexts[0])
    flat = [contexts[u][i] for i in range(n_streams) for u in range(n_uses)]
    use_idx = np.tile(np.arange(n_uses), n_streams)
    out = _detect_contexts(flat, c, la, use_idx, stats)
    return out.reshape(n_streams, n_uses, -1).transpose(1, 0, 2)


def detect_stream(
    ctx: LchaseStreamContext,
    c: Constellation,
    la,
    stats: DetectorStats | None = None,
) -> np.ndarray:
    """Max-log LLRs (q,) for one stream of one channel use."""
    values = la.values if isinstance(la, LlrFrame) else np.asarray(la, dtype=float)
    return detect_stream_batch([ctx], c, values[None], stats)[0]


def detect_all(
    model: WhitenedModel,
    c: Constellation,
    la,
    stats: DetectorStats | None = None,
) -> LlrFrame:
    """Detect every stream of one channel use; returns a 'detector' frame."""
    values = la.values if isinstance(la, LlrFrame) else np.asarray(la, dtype=float)
    contexts = prepare_all_uses([model])
    return LlrFrame(detect_all_uses(contexts, c, values[None], stats)[0], "detector")
