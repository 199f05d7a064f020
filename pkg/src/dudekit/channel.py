"""Memoryless channels, per-symbol losses, and estimated-loss tables.

A discrete memoryless channel is a row-stochastic matrix over the
alphabet. From a channel and a loss we derive, for every single-symbol
denoising rule s (a map from observed symbol to reconstruction):

  expected_loss[x, s]   mean true loss of rule s when the clean symbol
                        is x, averaged over the channel output
  estimated_loss[z, s]  the channel-inverted image of expected_loss,
                        indexed by the observed symbol; unbiased in the
                        sense that the channel maps it back exactly
  pseudo_labels[z, s]   estimated_loss flipped and shifted by its own
                        maximum so every entry is non-negative

estimated_loss lets a denoiser be scored from noisy data alone;
pseudo_labels turn that score into non-negative training targets.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from .core import BINARY, Alphabet
from .errors import (
    CapExceeded,
    DataError,
    DimensionMismatch,
    InvalidChannel,
    SingularChannel,
    SingularMatrix,
)

ROW_SUM_TOL = 1e-9
DEFAULT_DENOISER_CAP = 65536


@dataclass(frozen=True)
class ChannelMatrix:
    """Row-stochastic transition matrix Pi over a common in/out alphabet.

    Invertibility is not required to construct a channel (corruption and
    forward-backward smoothing work regardless); it is checked when the
    inverse is first needed.
    """

    entries: np.ndarray
    alphabet: Alphabet
    pivot_eps: float = linalg.PIVOT_EPS

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64)
        n = self.alphabet.size
        if arr.shape != (n, n):
            raise InvalidChannel(f"channel must be {n}x{n}, got {arr.shape}")
        if np.any(arr < 0):
            raise InvalidChannel("channel entries must be non-negative")
        if np.max(np.abs(arr.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise InvalidChannel("channel rows must sum to 1")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def size(self) -> int:
        return self.alphabet.size

    @property
    def inverse(self) -> np.ndarray:
        """Matrix inverse of the channel; raises SingularChannel."""
        cached = getattr(self, "_inverse_cache", None)
        if cached is None:
            try:
                cached = linalg.invert(self.entries, self.pivot_eps)
            except SingularMatrix as exc:
                raise SingularChannel(
                    f"channel matrix is singular to working precision: {exc}"
                ) from exc
            cached.flags.writeable = False
            object.__setattr__(self, "_inverse_cache", cached)
        return cached


def bsc(delta: float, alphabet: Alphabet = BINARY) -> ChannelMatrix:
    """Binary symmetric channel with crossover probability delta."""
    if alphabet.size != 2:
        raise InvalidChannel("bsc requires a binary alphabet")
    return symmetric_channel(delta, alphabet)


def symmetric_channel(delta: float, alphabet: Alphabet) -> ChannelMatrix:
    """Channel keeping each symbol w.p. 1-delta, else uniform over the rest."""
    n = alphabet.size
    if not 0.0 <= delta <= 1.0:
        raise InvalidChannel(f"flip probability must be in [0, 1], got {delta}")
    if n == 1:
        return ChannelMatrix(np.ones((1, 1)), alphabet)
    off = delta / (n - 1)
    entries = np.full((n, n), off)
    np.fill_diagonal(entries, 1.0 - delta)
    return ChannelMatrix(entries, alphabet)


@dataclass(frozen=True)
class LossMatrix:
    """Per-symbol loss: rows index the clean symbol, columns the guess."""

    entries: np.ndarray
    alphabet: Alphabet

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != self.alphabet.size:
            raise DimensionMismatch(
                f"loss must have {self.alphabet.size} rows, got shape {arr.shape}"
            )
        if arr.shape[1] < 1:
            raise DimensionMismatch("loss needs at least one reconstruction symbol")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise DataError("loss entries must be finite and non-negative")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def n_reconstructions(self) -> int:
        return int(self.entries.shape[1])


def hamming_loss(alphabet: Alphabet) -> LossMatrix:
    n = alphabet.size
    return LossMatrix(np.ones((n, n)) - np.eye(n), alphabet)


@dataclass(frozen=True)
class SingleSymbolDenoiser:
    """A map from observed symbol to reconstruction, with its enumeration index.

    The index is the little-endian base-|reconstructions| integer of the
    mapping: index = sum_j mapping[j] * n_out**j. Index 0 is the constant
    map to symbol 0; for a square alphabet the identity map has index
    sum_j j * n**j.
    """

    mapping: tuple[int, ...]
    index: int

    def __call__(self, z: int) -> int:
        return self.mapping[z]


def denoiser_index(mapping: tuple[int, ...], n_out: int) -> int:
    return sum(m * n_out**j for j, m in enumerate(mapping))


def denoiser_from_index(index: int, n_in: int, n_out: int) -> SingleSymbolDenoiser:
    if not 0 <= index < n_out**n_in:
        raise DataError(f"denoiser index {index} out of range")
    mapping = tuple((index // n_out**j) % n_out for j in range(n_in))
    return SingleSymbolDenoiser(mapping, index)


def identity_index(n: int) -> int:
    return sum(j * n**j for j in range(n))


def enumerate_denoisers(
    n_in: int, n_out: int | None = None, cap: int = DEFAULT_DENOISER_CAP
) -> tuple[SingleSymbolDenoiser, ...]:
    """All n_out**n_in single-symbol maps, ordered by index."""
    n_out = n_in if n_out is None else n_out
    total = n_out**n_in
    if total > cap:
        raise CapExceeded(f"{total} denoisers exceed cap {cap}")
    return tuple(denoiser_from_index(i, n_in, n_out) for i in range(total))


def mapping_table(n_in: int, n_out: int, cap: int = DEFAULT_DENOISER_CAP) -> np.ndarray:
    """(n_denoisers, n_in) uint8 table: row s gives mapping of denoiser s."""
    total = n_out**n_in
    if total > cap:
        raise CapExceeded(f"{total} denoisers exceed cap {cap}")
    idx = np.arange(total, dtype=np.int64)
    table = np.empty((total, n_in), dtype=np.uint8)
    for j in range(n_in):
        table[:, j] = (idx // n_out**j) % n_out
    return table


@dataclass(frozen=True)
class EstimatedLossTables:
    """Loss tables over the full family of single-symbol denoisers."""

    channel: ChannelMatrix
    loss: LossMatrix
    map_table: np.ndarray  # (S, Z) denoiser index, observed symbol -> guess
    expected_loss: np.ndarray  # (X, S)
    estimated_loss: np.ndarray  # (Z, S)
    pseudo_labels: np.ndarray  # (Z, S), non-negative
    label_norms: np.ndarray  # (Z,) row sums of pseudo_labels
    max_estimated_loss: float

    @property
    def n_denoisers(self) -> int:
        return int(self.map_table.shape[0])

    @property
    def identity(self) -> int:
        """Index of the identity denoiser (square losses only)."""
        n = self.channel.size
        if self.loss.n_reconstructions != n:
            raise DataError("identity denoiser undefined for rectangular loss")
        return identity_index(n)

    def fingerprint(self) -> str:
        """Stable digest of the (channel, loss) pair, for checkpoint checks."""
        h = hashlib.sha256()
        h.update("|".join(self.channel.alphabet.labels).encode())
        h.update(self.channel.entries.tobytes())
        h.update(self.loss.entries.tobytes())
        return h.hexdigest()[:16]


def _mapping_and_expected(channel: ChannelMatrix, loss: LossMatrix, cap: int):
    table = mapping_table(channel.size, loss.n_reconstructions, cap)
    rho = np.empty((channel.size, table.shape[0]))
    for x in range(channel.size):
        # loss of denoiser s at observation z, averaged over z ~ channel row x
        rho[x] = loss.entries[x][table] @ channel.entries[x]
    return table, rho


def build_expected_loss(
    channel: ChannelMatrix, loss: LossMatrix, cap: int = DEFAULT_DENOISER_CAP
) -> np.ndarray:
    """Mean true loss of every denoiser for every clean symbol."""
    return _mapping_and_expected(channel, loss, cap)[1]


def build_estimated_loss(
    channel: ChannelMatrix, loss: LossMatrix, cap: int = DEFAULT_DENOISER_CAP
) -> EstimatedLossTables:
    """Derive all tables; raises SingularChannel if the channel has no inverse."""
    table, rho = _mapping_and_expected(channel, loss, cap)
    est = channel.inverse @ rho
    l_max = float(est.max())
    # Non-negative by construction: the shift is the max over the same array.
    labels = l_max - est
    for arr in (table, rho, est, labels):
        arr.flags.writeable = False
    norms = labels.sum(axis=1)
    norms.flags.writeable = False
    return EstimatedLossTables(
        channel=channel,
        loss=loss,
        map_table=table,
        expected_loss=rho,
        estimated_loss=est,
        pseudo_labels=labels,
        label_norms=norms,
        max_estimated_loss=l_max,
    )


def expected_estimated_loss(x: int, s: SingleSymbolDenoiser, tables: EstimatedLossTables) -> float:
    """Channel average of the estimated loss of s given clean symbol x.

    Equals expected_loss[x, s.index] exactly up to floating point; the
    identity is what makes single-letter scoring from noisy data work.
    """
    return float(tables.channel.entries[x] @ tables.estimated_loss[:, s.index])


def load_channel_json(path: str) -> tuple[ChannelMatrix, LossMatrix]:
    """Read a channel (and optional loss) description from a JSON file.

    Expected keys: "alphabet" (list of labels), "channel" (nested list,
    row-stochastic, square), optional "loss" (nested list, defaults to
    Hamming on the same alphabet).
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidChannel(f"cannot read channel file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "alphabet" not in doc or "channel" not in doc:
        raise InvalidChannel("channel file needs 'alphabet' and 'channel' keys")
    alphabet = Alphabet(tuple(str(lab) for lab in doc["alphabet"]))
    raw = np.asarray(doc["channel"], dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
        raise InvalidChannel(f"channel matrix must be square, got shape {raw.shape}")
    chan = ChannelMatrix(raw, alphabet)
    if "loss" in doc:
        loss = LossMatrix(np.asarray(doc["loss"], dtype=np.float64), alphabet)
    else:
        loss = hamming_loss(alphabet)
    return chan, loss


def parse_channel_spec(spec: str) -> tuple[ChannelMatrix, LossMatrix]:
    """Parse a channel argument: 'bsc:<delta>', 'dsc:<labels>:<delta>', or a JSON path."""
    if spec.startswith("bsc:"):
        try:
            delta = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise InvalidChannel(f"bad bsc spec {spec!r}") from exc
        return bsc(delta), hamming_loss(BINARY)
    if spec.startswith("dsc:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise InvalidChannel(f"bad dsc spec {spec!r}, want dsc:<labels>:<delta>")
        alphabet = Alphabet(tuple(parts[1]))
        try:
            delta = float(parts[2])
        except ValueError as exc:
            raise InvalidChannel(f"bad dsc spec {spec!r}") from exc
        return symmetric_channel(delta, alphabet), hamming_loss(alphabet)
    return load_channel_json(spec)
