"""Alphabets, symbol sequences, and double-sided sliding-window contexts.

Sequences are stored as uint8 index arrays into a fixed alphabet. A
context of order k at position i is the k symbols to the left and the k
symbols to the right of i, center excluded. Positions within k of either
edge use a padding sentinel (index == alphabet.size) for the missing
symbols, so the sentinel never collides with a real symbol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, InvalidSymbol, SequenceTooShort

# uint8 storage must leave room for the padding sentinel.
MAX_ALPHABET_SIZE = 255


@dataclass(frozen=True)
class Alphabet:
    """An ordered set of distinct symbol labels; index = position."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if not isinstance(self.labels, tuple):
            object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) == 0:
            raise DataError("alphabet must contain at least one symbol")
        if len(self.labels) > MAX_ALPHABET_SIZE:
            raise DataError(f"alphabet larger than {MAX_ALPHABET_SIZE} symbols")
        if len(set(self.labels)) != len(self.labels):
            raise DataError("alphabet labels must be distinct")
        for lab in self.labels:
            if not isinstance(lab, str) or lab == "":
                raise DataError("alphabet labels must be non-empty strings")

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def pad_index(self) -> int:
        """Sentinel index used for out-of-range context positions."""
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InvalidSymbol(f"symbol {label!r} not in alphabet") from None

    def single_char(self) -> bool:
        return all(len(lab) == 1 for lab in self.labels)

    def encode(self, text: str) -> np.ndarray:
        """Map a string of single-character labels to an index array."""
        if not self.single_char():
            raise DataError("text encoding requires single-character labels")
        lut = np.full(256, -1, dtype=np.int16)
        for i, lab in enumerate(self.labels):
            lut[ord(lab)] = i
        raw = np.frombuffer(text.encode("latin-1", "replace"), dtype=np.uint8)
        idx = lut[raw]
        bad = np.nonzero(idx < 0)[0]
        if bad.size:
            pos = int(bad[0])
            raise InvalidSymbol(f"symbol {text[pos]!r} at offset {pos} not in alphabet")
        return idx.astype(np.uint8)

    def decode(self, indices: np.ndarray) -> str:
        return "".join(self.labels[int(i)] for i in indices)


BINARY = Alphabet(("0", "1"))
DNA = Alphabet(("A", "C", "G", "T"))


@dataclass(frozen=True, eq=False)
class Sequence:
    """Immutable index sequence over a fixed alphabet."""

    data: np.ndarray
    alphabet: Alphabet

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 1:
            raise DataError("sequence data must be one-dimensional")
        if arr.size and (arr.min() < 0 or arr.max() >= self.alphabet.size):
            raise InvalidSymbol("sequence contains indices outside the alphabet")
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    def __len__(self) -> int:
        return int(self.data.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Sequence):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.data, other.data)

    @classmethod
    def from_text(cls, text: str, alphabet: Alphabet) -> "Sequence":
        return cls(alphabet.encode(text), alphabet)

    def to_text(self) -> str:
        return self.alphabet.decode(self.data)


@dataclass(frozen=True)
class Context:
    """Double-sided context: k symbols left of center, k symbols right.

    left is stored in sequence order (left[0] is the farthest symbol,
    left[-1] the one immediately before the center); right likewise
    (right[0] immediately after the center). Entries equal to the
    alphabet's pad_index mark positions beyond the sequence edge.
    """

    left: tuple[int, ...]
    right: tuple[int, ...]

    def __post_init__(self):
        if len(self.left) != len(self.right):
            raise DataError("context sides must have equal length")

    @property
    def k(self) -> int:
        return len(self.left)

    def digits(self) -> tuple[int, ...]:
        return self.left + self.right


def extract_context(seq: Sequence, i: int, k: int) -> Context:
    """Context of order k around position i, padded at the edges."""
    n = len(seq)
    if not 0 <= i < n:
        raise DataError(f"position {i} out of range for sequence of length {n}")
    if k < 0:
        raise DataError("context order k must be non-negative")
    pad = seq.alphabet.pad_index
    data = seq.data
    left = tuple(int(data[j]) if j >= 0 else pad for j in range(i - k, i))
    right = tuple(int(data[j]) if j < n else pad for j in range(i + 1, i + k + 1))
    return Context(left, right)


def context_key(c: Context, alphabet: Alphabet) -> int:
    """Injective integer key for a context.

    Pad-free contexts use little-endian base-|Z| over (left, right) and
    occupy [0, |Z|^(2k)). Contexts containing padding are shifted past
    that range and keyed in base |Z|+1, so the two families never
    collide.
    """
    size = alphabet.size
    digits = c.digits()
    if all(d < size for d in digits):
        key = 0
        for j, d in enumerate(digits):
            key += d * size**j
        return key
    if any(d > size for d in digits):
        raise InvalidSymbol("context digit outside alphabet and pad range")
    base = size + 1
    key = 0
    for j, d in enumerate(digits):
        key += d * base**j
    return size ** (2 * c.k) + key


def context_matrix(data: np.ndarray, k: int, pad: int) -> np.ndarray:
    """Per-position context digits as an (n, 2k) uint8 matrix.

    Row i holds (z[i-k], ..., z[i-1], z[i+1], ..., z[i+k]) with pad
    substituted for out-of-range positions. Column order matches
    Context.digits().
    """
    n = data.shape[0]
    padded = np.full(n + 2 * k, pad, dtype=np.uint8)
    padded[k : k + n] = data
    out = np.empty((n, 2 * k), dtype=np.uint8)
    for j in range(k):
        out[:, j] = padded[j : j + n]
        out[:, k + j] = padded[k + 1 + j : k + 1 + j + n]
    return out


def interior_slice(n: int, k: int) -> slice:
    """Positions whose order-k context needs no padding.

    Raises SequenceTooShort when no interior position exists.
    """
    if n <= 2 * k:
        raise SequenceTooShort(f"need length > 2k = {2 * k}, got {n}")
    return slice(k, n - k)


def pack_context_keys(ctx: np.ndarray, base: int) -> np.ndarray | None:
    """Little-endian base-`base` packing of context rows into uint64.

    Returns None when base**(2k) exceeds the uint64 range; callers fall
    back to row-wise uniquing. For pad-free rows with base == |Z| the
    packed value equals context_key of the row.
    """
    width = ctx.shape[1]
    if base**width > np.iinfo(np.uint64).max:
        return None
    out = np.zeros(ctx.shape[0], dtype=np.uint64)
    # Column-wise accumulation keeps peak memory at O(n) regardless of k.
    for j in range(width):
        out += ctx[:, j].astype(np.uint64) * np.uint64(base**j)
    return out
