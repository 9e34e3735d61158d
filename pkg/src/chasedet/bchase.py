"""B-type Chase detector: exhaustive over one stream, soft feedback elsewhere.

The target stream is moved to the last column and the remaining columns are
BLAST-ordered (best post-nulling SNR detected first), so after QR the
feedback chain walks rows bottom-up. For every candidate value of the target
stream, each inner layer is soft-interference-cancelled using the posterior
symbol statistics of the layers already processed under that same candidate:
post-detection LLRs for a layer are combined with its a priori LLRs, turned
into a soft symbol mean and variance, and folded into the next layer's
effective noise. Layer metrics themselves are exact prior-aware maxima
obtained by boundary slicing, with the boundary modulation using the
per-candidate effective variance.

The bottom-most inner layer sees no feedback (unit effective variance), and
the top layer computes no post-detection LLRs since nothing consumes them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import WhitenedModel
from .constellation import (
    Constellation,
    coset_min_sqdist,
    pam_boundaries,
    pam_metric,
    slice_pam,
    soft_symbol_stats,
)
from .counters import DetectorStats
from .errors import SingularMatrixError
from .linalg import qr
from .llr import LlrFrame, saturate


@dataclass(frozen=True)
class BchaseStreamContext:
    """QR state for one target stream: column `stream` last, rest BLAST-ordered.

    layers[k] is the original stream index at permuted position k
    (layers[-1] == stream). r is the full upper-triangular factor and y_rot
    the rotated observation Q^H y.
    """

    stream: int
    layers: np.ndarray
    r: np.ndarray
    y_rot: np.ndarray


def _blast_order_uses(h: np.ndarray, stream: int) -> np.ndarray:
    """blast_order for a stack of uses at once; h is (U, n_rx, n)."""
    n_uses, _, n = h.shape
    rows = np.arange(n_uses)
    gram = np.einsum("uji,ujk->uik", h.conj(), h)
    remaining = np.tile([k for k in range(n) if k != stream], (n_uses, 1))
    order = np.empty((n_uses, n), dtype=int)
    order[:, -1] = stream
    for pos in range(n - 2, -1, -1):
        k = remaining.shape[1]
        if k == 1:
            order[:, pos] = remaining[:, 0]
            break
        sub = gram[rows[:, None, None], remaining[:, :, None], remaining[:, None, :]]
        try:
            inv = np.linalg.inv(sub)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(str(exc)) from None
        amplification = np.diagonal(inv, axis1=1, axis2=2).real
        pick = amplification.argmin(axis=1)
        order[:, pos] = remaining[rows, pick]
        keep = np.ones((n_uses, k), dtype=bool)
        keep[rows, pick] = False
        remaining = remaining[keep].reshape(n_uses, k - 1)
    return order


def blast_order(h: np.ndarray, stream: int) -> np.ndarray:
    """Column order with `stream` last and the rest V-BLAST sorted.

    Working from the bottom-most inner position upward (earliest detected
    first), each step assigns the remaining column with the smallest
    zero-forcing noise amplification, the corresponding diagonal entry of
    (H_sub^H H_sub)^-1, i.e. the squared row norm of R_sub^-1. Ties go to the
    smaller original column index.
    """
    h = np.asarray(h)
    n = h.shape[1]
    if not 0 <= stream < n:
        raise ValueError(f"stream index {stream} out of range for {n}")
    return _blast_order_uses(h[None], stream)[0]


def _prepare_stream_uses(
    h: np.ndarray, y: np.ndarray, stream: int
) -> list[BchaseStreamContext]:
    orders = _blast_order_uses(h, stream)
    h_perm = np.take_along_axis(h, orders[:, None, :], axis=2)
    factors = qr(h_perm)
    y_rot = np.einsum("uji,uj->ui", factors.q.conj(), y)
    return [
        BchaseStreamContext(
            stream=stream, layers=orders[u], r=factors.r[u], y_rot=y_rot[u]
        )
        for u in range(len(h))
    ]


def prepare_stream(model: WhitenedModel, stream: int) -> BchaseStreamContext:
    return _prepare_stream_uses(model.h[None], model.y[None], stream)[0]


def prepare_all(model: WhitenedModel) -> list[BchaseStreamContext]:
    return [prepare_stream(model, i) for i in range(model.n_streams)]


def prepare_all_uses(models) -> list[list[BchaseStreamContext]]:
    """Factor every stream of every use; returns contexts indexed [use][stream].

    Equivalent to [prepare_all(m) for m in models] but orders and factors each
    stream's whole batch of uses in stacked linear algebra calls.
    """
    h = np.stack([m.h for m in models])
    y = np.stack([m.y for m in models])
    per_stream = [_prepare_stream_uses(h, y, i) for i in range(h.shape[-1])]
    return [list(row) for row in zip(*per_stream)]


def layer_post_llrs(z, r_ll, layer_var, c: Constellation) -> np.ndarray:
    """Post-detection LLRs of a layer given its normalized observation z.

    z is the feedback-cancelled, r_ll-normalized layer observation (so the
    residual distance to a symbol s is |r_ll|^2 |z - s|^2), and layer_var the
    layer's effective noise variance. Distance-only (prior-free) coset minima
    are taken per axis. Shapes broadcast; the result gains a trailing q axis.
    """
    z = np.asarray(z)
    scale = np.asarray(r_ll, dtype=float) ** 2 / np.asarray(layer_var, dtype=float)
    out = np.empty(np.broadcast(z, scale).shape + (c.bits_per_symbol,))
    for axis, cols, zz in (
        (c.real_axis, c.real_bits, z.real),
        (c.imag_axis, c.imag_bits, z.imag),
    ):
        d0, d1 = coset_min_sqdist(zz, axis)
        out[..., cols] = (d0 - d1) * scale[..., None]
    return out


def _detect_contexts(
    contexts: list[BchaseStreamContext],
    c: Constellation,
    la: np.ndarray,
    use_idx: np.ndarray,
    stats: DetectorStats | None,
    *,
    zero_post_llrs: bool = False,
    genie_symbols: np.ndarray | None = None,
) -> np.ndarray:
    """Core detection over a flat batch of contexts (any mix of streams).

    la is (uses, n_streams, q) and use_idx maps each context to its la (and
    genie_symbols) row. Returns max-log LLRs of shape (len(contexts), q).
    """
    batch = len(contexts)
    n = len(contexts[0].layers)
    m = c.order

    r = np.stack([ctx.r for ctx in contexts])
    y_rot = np.stack([ctx.y_rot for ctx in contexts])
    perms = np.stack([ctx.layers for ctx in contexts])
    streams = np.array([ctx.stream for ctx in contexts])

    cand = c.symbols
    prior = la[use_idx, streams, :] @ c.bit_labels_f.T
    total = prior - np.abs(y_rot[:, -1:] - r[:, -1, -1].real[:, None] * cand) ** 2
    if stats is not None:
        stats.metric_evals += batch * m
        stats.hypotheses += batch * m
        stats.streams += batch

    shat = np.zeros((batch, max(n - 1, 1), m), dtype=complex)
    svar = np.zeros((batch, max(n - 1, 1), m))

    for l in range(n - 2, -1, -1):
        layer_streams = perms[:, l]
        la_layer = la[use_idx, layer_streams, :]
        r_row = r[:, l, :]
        feedback = np.einsum("uf,ufm->um", r_row[:, l + 1 : n - 1], shat[:, l + 1 : n - 1])
        layer_var = 1.0 + np.einsum(
            "uf,ufm->um", np.abs(r_row[:, l + 1 : n - 1]) ** 2, svar[:, l + 1 : n - 1]
        )
        r_ll = r_row[:, l].real
        z = (y_rot[:, l : l + 1] - r_row[:, n - 1 : n] * cand - feedback) / r_ll[:, None]
        eff_var = layer_var / r_ll[:, None] ** 2
        # The bottom inner layer has no feedback, so its effective variance
        # (hence its boundary set) is the same for every candidate.
        bound_var = eff_var[:, :1] if l == n - 2 else eff_var

        for axis, cols, zz in (
            (c.real_axis, c.real_bits, z.real),
            (c.imag_axis, c.imag_bits, z.imag),
        ):
            la_axis = la_layer[:, cols][:, None, :]
            bset = pam_boundaries(axis, la_axis, bound_var)
            idx = slice_pam(zz, axis, bset)
            total = total + pam_metric(axis, idx, zz, la_axis, eff_var)
            if stats is not None:
                stats.boundary_evals += batch * bound_var.shape[1] * axis.npairs

        if l == 0:
            break  # nothing below consumes this layer's estimate

        if genie_symbols is not None:
            shat[:, l, :] = genie_symbols[use_idx, layer_streams][:, None]
            svar[:, l, :] = 0.0
            continue
        if zero_post_llrs:
            posterior = np.broadcast_to(la_layer[:, None, :], (batch, m, c.bits_per_symbol))
        else:
            post = layer_post_llrs(z, r_ll[:, None], layer_var, c)
            posterior = saturate(la_layer[:, None, :] + post)
        mean, var = soft_symbol_stats(posterior, c)
        shat[:, l, :] = mean
        svar[:, l, :] = var
        if stats is not None:
            stats.soft_stat_evals += batch * m

    llrs = np.empty((batch, c.bits_per_symbol))
    for k, (zeros, ones) in enumerate(c.bit_coset_idx):
        llrs[:, k] = total[:, ones].max(axis=1) - total[:, zeros].max(axis=1)
    return llrs


def detect_stream_batch(
    contexts: list[BchaseStreamContext],
    c: Constellation,
    la: np.ndarray,
    stats: DetectorStats | None = None,
    *,
    zero_post_llrs: bool = False,
    genie_symbols: np.ndarray | None = None,
) -> np.ndarray:
    """Detect one stream across a batch of uses; la is (uses, n_streams, q).

    Test hooks: zero_post_llrs forces every post-detection LLR to zero (the
    feedback chain then uses priors only); genie_symbols (uses, n_streams)
    forces the chain to feed back the true symbols with zero variance.
    """
    return _detect_contexts(
        contexts,
        c,
        la,
        np.arange(len(contexts)),
        stats,
        zero_post_llrs=zero_post_llrs,
        genie_symbols=genie_symbols,
    )


def detect_all_uses(
    contexts: list[list[BchaseStreamContext]],
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
    ctx: BchaseStreamContext,
    c: Constellation,
    la,
    stats: DetectorStats | None = None,
    *,
    zero_post_llrs: bool = False,
    genie_symbols: np.ndarray | None = None,
) -> np.ndarray:
    """Max-log LLRs (q,) for one stream of one channel use."""
    values = la.values if isinstance(la, LlrFrame) else np.asarray(la, dtype=float)
    genie = None if genie_symbols is None else np.asarray(genie_symbols)[None]
    return detect_stream_batch(
        [ctx],
        c,
        values[None],
        stats,
        zero_post_llrs=zero_post_llrs,
        genie_symbols=genie,
    )[0]


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
