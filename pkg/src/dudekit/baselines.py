"""Synthetic sources, channel corruption, and the informed smoothing baseline.

The forward-backward denoiser here knows the true source chain and
channel, so it attains the best possible per-symbol loss on hidden
Markov data. It exists as the yardstick the universal denoisers are
measured against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from .channel import ChannelMatrix, LossMatrix
from .core import BINARY, Alphabet, Sequence
from .errors import DataError, DimensionMismatch, SequenceTooShort, SingularMatrix

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class MarkovSource:
    """First-order stationary Markov chain over an alphabet.

    initial defaults to the chain's stationary distribution, which is
    uniform for symmetric transition matrices. rng_seed fixes the sample
    path, so generation is reproducible by construction.
    """

    transition: np.ndarray
    alphabet: Alphabet
    initial: np.ndarray | None = None
    rng_seed: int = 0

    def __post_init__(self):
        n = self.alphabet.size
        arr = np.asarray(self.transition, dtype=np.float64)
        if arr.shape != (n, n):
            raise DataError(f"transition must be {n}x{n}, got {arr.shape}")
        if np.any(arr < 0) or np.max(np.abs(arr.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise DataError("transition rows must be non-negative and sum to 1")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "transition", arr)
        if self.initial is None:
            init = _stationary(arr)
        else:
            init = np.asarray(self.initial, dtype=np.float64)
            if init.shape != (n,):
                raise DataError(f"initial distribution must have length {n}")
            if np.any(init < 0) or abs(init.sum() - 1.0) > ROW_SUM_TOL:
                raise DataError("initial distribution must be a distribution")
            init = init.copy()
        init.flags.writeable = False
        object.__setattr__(self, "initial", init)


def _stationary(transition: np.ndarray) -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix.

    Solves (P^T - I) pi = 0 with the last equation replaced by the
    normalization constraint. Chains whose stationary distribution is
    not unique (for example the identity transition) fall back to the
    uniform distribution when that is stationary, else fail.
    """
    n = transition.shape[0]
    a = transition.T - np.eye(n)
    a[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = linalg.solve(a, rhs)
    except SingularMatrix:
        uniform = np.full(n, 1.0 / n)
        if np.max(np.abs(uniform @ transition - uniform)) < 1e-12:
            return uniform
        raise DataError(
            "transition matrix has no unique stationary distribution; "
            "provide an initial distribution explicitly"
        ) from None
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def bsmc(alpha: float, rng_seed: int = 0) -> MarkovSource:
    """Binary symmetric Markov chain with switch probability alpha."""
    if not 0.0 <= alpha <= 1.0:
        raise DataError(f"switch probability must be in [0, 1], got {alpha}")
    trans = np.array([[1.0 - alpha, alpha], [alpha, 1.0 - alpha]])
    return MarkovSource(trans, BINARY, rng_seed=rng_seed)


def generate_source(source: MarkovSource, n: int) -> Sequence:
    """Sample a length-n path from the chain, deterministic in rng_seed.

    Sampling draws one uniform per step. Binary chains flip when the
    uniform falls below the current row's switch probability; larger
    alphabets walk the row's cumulative distribution. Symmetric binary
    chains reduce to an accumulated-parity fast path with identical
    output to the stepwise rule.
    """
    if n < 1:
        raise SequenceTooShort("cannot generate an empty sequence")
    rng = np.random.default_rng(source.rng_seed)
    size = source.alphabet.size
    first = int(np.searchsorted(np.cumsum(source.initial), rng.random(), side="right"))
    first = min(first, size - 1)
    u = rng.random(n - 1)
    if size == 2:
        switch = np.array([source.transition[0, 1], source.transition[1, 0]])
        if switch[0] == switch[1]:
            flips = (u < switch[0]).astype(np.uint8)
            out = np.empty(n, dtype=np.uint8)
            out[0] = first
            np.bitwise_xor.accumulate(flips, out=out[1:])
            out[1:] ^= np.uint8(first)
            return Sequence(out, source.alphabet)
        out = np.empty(n, dtype=np.uint8)
        out[0] = first
        cur = first
        for i in range(1, n):
            if u[i - 1] < switch[cur]:
                cur = 1 - cur
            out[i] = cur
        return Sequence(out, source.alphabet)
    cum = np.cumsum(source.transition, axis=1)
    out = np.empty(n, dtype=np.uint8)
    out[0] = first
    cur = first
    for i in range(1, n):
        cur = min(int(np.searchsorted(cum[cur], u[i - 1], side="right")), size - 1)
        out[i] = cur
    return Sequence(out, source.alphabet)


def corrupt(x: Sequence, channel: ChannelMatrix, rng_seed: int = 0) -> Sequence:
    """Pass a sequence through the memoryless channel, position by position."""
    if channel.alphabet != x.alphabet:
        raise DataError("channel alphabet does not match the sequence")
    rng = np.random.default_rng(rng_seed)
    n = len(x)
    u = rng.random(n)
    cum = np.cumsum(channel.entries, axis=1)
    # z_i = first column whose cumulative mass exceeds u_i, per row x_i
    z = (cum[x.data.astype(np.int64)] <= u[:, None]).sum(axis=1)
    z = np.minimum(z, channel.size - 1)
    return Sequence(z.astype(np.uint8), x.alphabet)


def load_source_json(path: str, rng_seed: int = 0) -> MarkovSource:
    """Read a Markov source from JSON: alphabet, transition, optional initial."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read source file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "alphabet" not in doc or "transition" not in doc:
        raise DataError("source file needs 'alphabet' and 'transition' keys")
    alphabet = Alphabet(tuple(str(lab) for lab in doc["alphabet"]))
    initial = None
    if doc.get("initial") is not None:
        initial = np.asarray(doc["initial"], dtype=np.float64)
    return MarkovSource(
        transition=np.asarray(doc["transition"], dtype=np.float64),
        alphabet=alphabet,
        initial=initial,
        rng_seed=rng_seed,
    )


def parse_source_spec(spec: str, rng_seed: int = 0) -> MarkovSource:
    """Parse a source argument: 'bsmc:<alpha>' or a JSON path."""
    if spec.startswith("bsmc:"):
        try:
            alpha = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise DataError(f"bad bsmc spec {spec!r}") from exc
        return bsmc(alpha, rng_seed=rng_seed)
    return load_source_json(spec, rng_seed=rng_seed)


@dataclass(frozen=True)
class HMMSpec:
    """A Markov source observed through a memoryless channel."""

    source: MarkovSource
    channel: ChannelMatrix

    def __post_init__(self):
        if self.source.alphabet != self.channel.alphabet:
            raise DimensionMismatch("source and channel alphabets differ")


def smoothing_posteriors(z: Sequence, spec: HMMSpec) -> np.ndarray:
    """P(x_i | z) for every position, by scaled forward-backward passes.

    Each forward step is normalized to sum to one, which keeps the
    recursion stable for arbitrarily long sequences; the backward pass
    reuses the same scale factors.
    """
    if z.alphabet != spec.channel.alphabet:
        raise DataError("sequence alphabet does not match the model")
    n = len(z)
    if n < 1:
        raise SequenceTooShort("cannot smooth an empty sequence")
    trans = spec.source.transition
    emit = spec.channel.entries  # emit[x, z]
    obs = z.data.astype(np.int64)
    like = emit[:, obs].T.copy()  # (n, |X|) likelihood of each state per position
    alpha = np.empty((n, trans.shape[0]))
    scale = np.empty(n)
    cur = spec.source.initial * like[0]
    scale[0] = cur.sum()
    if scale[0] <= 0.0:
        raise DataError("observation has zero likelihood under the model")
    alpha[0] = cur / scale[0]
    for i in range(1, n):
        cur = (alpha[i - 1] @ trans) * like[i]
        s = cur.sum()
        if s <= 0.0:
            raise DataError("observation has zero likelihood under the model")
        scale[i] = s
        alpha[i] = cur / s
    beta = np.empty_like(alpha)
    beta[n - 1] = 1.0
    for i in range(n - 2, -1, -1):
        beta[i] = (trans @ (like[i + 1] * beta[i + 1])) / scale[i + 1]
    post = alpha * beta
    post /= post.sum(axis=1, keepdims=True)
    return post


def forward_backward_denoise(z: Sequence, spec: HMMSpec, loss: LossMatrix) -> Sequence:
    """Loss-optimal per-symbol reconstruction given the true model.

    Picks, at each position, the guess minimizing the posterior-averaged
    loss; ties resolve to the smallest symbol index.
    """
    post = smoothing_posteriors(z, spec)
    risk = post @ loss.entries  # (n, guesses)
    xhat = np.argmin(risk, axis=1).astype(np.uint8)
    return Sequence(xhat, z.alphabet)
