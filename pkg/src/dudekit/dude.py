"""Two-pass sliding-window denoiser.

Pass one counts, for every double-sided order-k context, how often each
symbol appears at the center. Pass two replays the sequence and maps
each interior position through the single-symbol rule that minimizes
the count-weighted estimated loss of its context. Positions within k of
either edge are passed through unchanged.

The selection rule exists in two equivalent forms: the original one
scores each reconstruction for the observed center symbol directly; the
estimated-loss form scores whole single-symbol rules and then applies
the winner to the center. Both are provided; the sequence-level code
uses the estimated-loss form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (
    ChannelMatrix,
    EstimatedLossTables,
    LossMatrix,
    SingleSymbolDenoiser,
    build_estimated_loss,
    denoiser_from_index,
)
from .core import Alphabet, Context, Sequence, context_key, interior_slice, pack_context_keys
from .errors import DataError, DimensionMismatch

# Cap on score-matrix chunk size, in float64 entries.
_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class CountTable:
    """Center-symbol counts per context, keyed by context_key."""

    alphabet: Alphabet
    k: int
    counts: dict[int, np.ndarray]
    n_interior: int

    def vector(self, c: Context) -> np.ndarray:
        """Count vector for a context; zeros if the context never occurred."""
        key = context_key(c, self.alphabet)
        row = self.counts.get(key)
        if row is None:
            return np.zeros(self.alphabet.size, dtype=np.int64)
        return row


def _interior_contexts(data: np.ndarray, k: int) -> np.ndarray:
    """(n-2k, 2k) context digits for the pad-free interior positions."""
    n = data.shape[0]
    m = n - 2 * k
    out = np.empty((m, 2 * k), dtype=np.uint8)
    for j in range(k):
        out[:, j] = data[j : j + m]
        out[:, k + j] = data[k + 1 + j : k + 1 + j + m]
    return out


def _group_interior(z: Sequence, k: int):
    """Group interior positions by context.

    Returns (inverse, counts) where inverse maps each interior position
    to its context group and counts[g, a] is how often symbol a sits at
    the center of group g's context.
    """
    size = z.alphabet.size
    inner = interior_slice(len(z), k)
    ctx = _interior_contexts(z.data, k)
    keys = pack_context_keys(ctx, size)
    if keys is not None:
        uniq_keys, inverse = np.unique(keys, return_inverse=True)
        key_list = [int(v) for v in uniq_keys]
    else:
        uniq_rows, inverse = np.unique(ctx, axis=0, return_inverse=True)
        key_list = []
        for row in uniq_rows:
            acc = 0
            for j, d in enumerate(row):
                acc += int(d) * size**j
            key_list.append(acc)
    centers = z.data[inner].astype(np.int64)
    n_groups = len(key_list)
    flat = inverse.astype(np.int64) * size + centers
    counts = np.bincount(flat, minlength=n_groups * size).reshape(n_groups, size)
    return inverse, counts, key_list


def collect_counts(z: Sequence, k: int) -> CountTable:
    """First pass: tally center symbols for every interior context."""
    _, counts, keys = _group_interior(z, k)
    table = {key: counts[g] for g, key in enumerate(keys)}
    for row in table.values():
        row.flags.writeable = False
    return CountTable(alphabet=z.alphabet, k=k, counts=table, n_interior=int(counts.sum()))


def dude_rule_original(
    m: np.ndarray, z_center: int, channel: ChannelMatrix, loss: LossMatrix
) -> int:
    """Reconstruction for one context and center symbol, original form.

    Scores each candidate guess by m^T Pi^{-1} (lambda_guess * pi_z)
    where lambda_guess is that guess's loss column and pi_z the channel
    likelihood column of the observed center. Lowest score wins; ties go
    to the smallest symbol index.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (channel.size,):
        raise DimensionMismatch(f"count vector must have length {channel.size}")
    v = m @ channel.inverse
    weighted = loss.entries * channel.entries[:, z_center][:, None]
    return int(np.argmin(v @ weighted))


def dude_rule_estimated(m: np.ndarray, tables: EstimatedLossTables) -> SingleSymbolDenoiser:
    """Single-symbol rule minimizing the count-weighted estimated loss."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (tables.channel.size,):
        raise DimensionMismatch(f"count vector must have length {tables.channel.size}")
    scores = m @ tables.estimated_loss
    idx = int(np.argmin(scores))
    return denoiser_from_index(idx, tables.channel.size, tables.loss.n_reconstructions)


def _argmin_chunked(counts: np.ndarray, est: np.ndarray) -> np.ndarray:
    """Row-wise argmin of counts @ est without materializing all scores."""
    n_groups = counts.shape[0]
    n_rules = est.shape[1]
    out = np.empty(n_groups, dtype=np.int64)
    step = max(1, _CHUNK_ENTRIES // max(1, n_rules))
    for start in range(0, n_groups, step):
        stop = min(start + step, n_groups)
        scores = counts[start:stop].astype(np.float64) @ est
        out[start:stop] = np.argmin(scores, axis=1)
    return out


def select_denoisers(z: Sequence, k: int, tables: EstimatedLossTables) -> np.ndarray:
    """Per-position single-symbol rule indices for the whole sequence.

    Interior positions get the rule chosen from their context's counts;
    edge positions get the identity rule, which reproduces the
    pass-through behavior of the denoiser there.
    """
    if tables.channel.alphabet != z.alphabet:
        raise DataError("tables were built for a different alphabet")
    if tables.loss.n_reconstructions != z.alphabet.size:
        raise DimensionMismatch("sliding-window denoising requires a square loss")
    n = len(z)
    inner = interior_slice(n, k)
    inverse, counts, _ = _group_interior(z, k)
    per_group = _argmin_chunked(counts, tables.estimated_loss)
    s_idx = np.full(n, tables.identity, dtype=np.int64)
    s_idx[inner] = per_group[inverse]
    return s_idx


def dude_denoise(
    z: Sequence,
    k: int,
    channel: ChannelMatrix | None = None,
    loss: LossMatrix | None = None,
    tables: EstimatedLossTables | None = None,
) -> Sequence:
    """Denoise a sequence with context order k.

    Pass either prebuilt tables or (channel, loss). Edge positions are
    emitted unchanged.
    """
    if tables is None:
        if channel is None or loss is None:
            raise DataError("dude_denoise needs tables or (channel, loss)")
        tables = build_estimated_loss(channel, loss)
    s_idx = select_denoisers(z, k, tables)
    xhat = tables.map_table[s_idx, z.data.astype(np.int64)]
    return Sequence(xhat, z.alphabet)
