"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from dudekit.channel import ChannelMatrix, LossMatrix, hamming_loss
from dudekit.core import Alphabet

ALPHABETS = {
    2: Alphabet(("0", "1")),
    3: Alphabet(("0", "1", "2")),
    4: Alphabet(("0", "1", "2", "3")),
}


def random_invertible_channel(rng: np.random.Generator, size: int) -> ChannelMatrix:
    """Row-stochastic and strictly diagonally dominant, hence invertible."""
    raw = rng.random((size, size)) + size * np.eye(size)
    raw /= raw.sum(axis=1, keepdims=True)
    return ChannelMatrix(raw, ALPHABETS[size])


def random_loss(rng: np.random.Generator, size: int) -> LossMatrix:
    if rng.random() < 0.5:
        return hamming_loss(ALPHABETS[size])
    return LossMatrix(rng.random((size, size)) * 2.0, ALPHABETS[size])


@pytest.fixture
def rng():
    return np.random.default_rng(20260817)
