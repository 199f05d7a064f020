"""Channels, losses, denoiser enumeration, and the derived loss tables."""

import itertools

import numpy as np
import pytest

from conftest import ALPHABETS, random_invertible_channel, random_loss
from dudekit.channel import (
    ChannelMatrix,
    LossMatrix,
    bsc,
    build_estimated_loss,
    build_expected_loss,
    denoiser_from_index,
    denoiser_index,
    enumerate_denoisers,
    expected_estimated_loss,
    hamming_loss,
    identity_index,
    load_channel_json,
    mapping_table,
    parse_channel_spec,
    symmetric_channel,
)
from dudekit.core import BINARY, DNA
from dudekit.errors import (
    CapExceeded,
    DataError,
    DimensionMismatch,
    InvalidChannel,
    SingularChannel,
)


def test_channel_validation():
    with pytest.raises(InvalidChannel):
        ChannelMatrix(np.array([[0.5, 0.5, 0.0]]), BINARY)
    with pytest.raises(InvalidChannel):
        ChannelMatrix(np.array([[0.7, 0.4], [0.5, 0.5]]), BINARY)
    with pytest.raises(InvalidChannel):
        ChannelMatrix(np.array([[1.1, -0.1], [0.5, 0.5]]), BINARY)


def test_bsc_entries_and_inverse():
    c = bsc(0.1)
    assert np.allclose(c.entries, [[0.9, 0.1], [0.1, 0.9]])
    expected_inv = np.array([[1.125, -0.125], [-0.125, 1.125]])
    assert np.allclose(c.inverse, expected_inv, atol=1e-14)


def test_symmetric_channel_rows():
    c = symmetric_channel(0.3, ALPHABETS[4])
    assert np.allclose(np.diag(c.entries), 0.7)
    assert np.allclose(c.entries.sum(axis=1), 1.0)
    off = c.entries[np.eye(4) == 0]
    assert np.allclose(off, 0.1)


def test_singular_channel_construction_ok_inverse_raises():
    c = bsc(0.5)  # rank one, still a valid channel
    with pytest.raises(SingularChannel):
        _ = c.inverse
    with pytest.raises(SingularChannel):
        build_estimated_loss(c, hamming_loss(BINARY))


def test_loss_validation():
    with pytest.raises(DataError):
        LossMatrix(np.array([[0.0, -1.0], [1.0, 0.0]]), BINARY)
    with pytest.raises(DimensionMismatch):
        LossMatrix(np.zeros((3, 2)), BINARY)
    assert np.allclose(hamming_loss(DNA).entries, 1 - np.eye(4))


def test_denoiser_enumeration_binary_order():
    rules = enumerate_denoisers(2)
    assert [r.mapping for r in rules] == [(0, 0), (1, 0), (0, 1), (1, 1)]
    assert [r.index for r in rules] == [0, 1, 2, 3]
    # index 2 is the identity, index 1 the flip
    assert rules[2](0) == 0 and rules[2](1) == 1
    assert rules[1](0) == 1 and rules[1](1) == 0


def test_denoiser_index_roundtrip():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n_in = int(rng.integers(1, 5))
        n_out = int(rng.integers(1, 5))
        mapping = tuple(int(v) for v in rng.integers(0, n_out, n_in))
        idx = denoiser_index(mapping, n_out)
        back = denoiser_from_index(idx, n_in, n_out)
        assert back.mapping == mapping and back.index == idx


def test_identity_index_values():
    assert identity_index(2) == 2
    assert identity_index(4) == 228


def test_enumeration_cap():
    with pytest.raises(CapExceeded):
        enumerate_denoisers(16, 4)
    with pytest.raises(CapExceeded):
        mapping_table(4, 4, cap=255)


def test_mapping_table_matches_enumeration():
    table = mapping_table(4, 4)
    rules = enumerate_denoisers(4)
    assert table.shape == (256, 4)
    for s in (0, 1, 17, 228, 255):
        assert tuple(table[s]) == rules[s].mapping


# Frozen reference tables for the binary symmetric channel at 0.1 with
# symbol-error loss, derived once by hand from the defining formulas.
BSC01_EXPECTED = np.array([[0.0, 0.9, 0.1, 1.0], [1.0, 0.9, 0.1, 0.0]])
BSC01_ESTIMATED = np.array([[-0.125, 0.9, 0.1, 1.125], [1.125, 0.9, 0.1, -0.125]])


def test_tables_frozen_values_bsc01():
    t = build_estimated_loss(bsc(0.1), hamming_loss(BINARY))
    assert np.allclose(t.expected_loss, BSC01_EXPECTED, atol=1e-12)
    assert np.allclose(t.estimated_loss, BSC01_ESTIMATED, atol=1e-12)
    assert t.max_estimated_loss == pytest.approx(1.125, abs=1e-12)
    assert np.allclose(t.pseudo_labels[0], [1.25, 0.225, 1.025, 0.0], atol=1e-12)
    assert np.allclose(t.pseudo_labels[1], [0.0, 0.225, 1.025, 1.25], atol=1e-12)
    assert np.allclose(t.label_norms, t.pseudo_labels.sum(axis=1))
    assert t.identity == 2
    assert t.n_denoisers == 4


def test_expected_loss_against_bruteforce_oracle():
    rng = np.random.default_rng(23)
    for _ in range(4):
        size = int(rng.integers(2, 5))
        chan = random_invertible_channel(rng, size)
        loss = random_loss(rng, size)
        rho = build_expected_loss(chan, loss)
        # independent enumeration: every map z -> mapping[z], indexed by the
        # little-endian formula, averaged with explicit python loops
        for mapping in itertools.product(range(size), repeat=size):
            idx = sum(m * size**j for j, m in enumerate(mapping))
            for x in range(size):
                want = sum(
                    chan.entries[x, z] * loss.entries[x, mapping[z]] for z in range(size)
                )
                assert rho[x, idx] == pytest.approx(want, abs=1e-12)


def test_unbiasedness_small_sample():
    rng = np.random.default_rng(37)
    for _ in range(30):
        size = int(rng.integers(2, 5))
        chan = random_invertible_channel(rng, size)
        loss = random_loss(rng, size)
        t = build_estimated_loss(chan, loss)
        residual = chan.entries @ t.estimated_loss - t.expected_loss
        assert np.max(np.abs(residual)) < 1e-10


def test_pseudo_labels_nonnegative_touch_zero():
    rng = np.random.default_rng(41)
    for _ in range(20):
        size = int(rng.integers(2, 5))
        t = build_estimated_loss(random_invertible_channel(rng, size), random_loss(rng, size))
        assert t.pseudo_labels.min() >= 0.0
        assert t.pseudo_labels.min() == pytest.approx(0.0, abs=1e-15)


def test_expected_estimated_loss_matches_expected_loss():
    rng = np.random.default_rng(43)
    for _ in range(10):
        size = int(rng.integers(2, 5))
        t = build_estimated_loss(random_invertible_channel(rng, size), random_loss(rng, size))
        for s_idx in rng.integers(0, t.n_denoisers, 5):
            s = denoiser_from_index(int(s_idx), size, size)
            for x in range(size):
                assert expected_estimated_loss(x, s, t) == pytest.approx(
                    t.expected_loss[x, s.index], abs=1e-10
                )


def test_fingerprint_stability():
    a = build_estimated_loss(bsc(0.1), hamming_loss(BINARY))
    b = build_estimated_loss(bsc(0.1), hamming_loss(BINARY))
    c = build_estimated_loss(bsc(0.2), hamming_loss(BINARY))
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != c.fingerprint()


def test_load_channel_json(tmp_path):
    path = tmp_path / "chan.json"
    path.write_text(
        '{"alphabet": ["0", "1"], "channel": [[0.8, 0.2], [0.2, 0.8]],'
        ' "loss": [[0, 1], [2, 0]]}'
    )
    chan, loss = load_channel_json(str(path))
    assert np.allclose(chan.entries, [[0.8, 0.2], [0.2, 0.8]])
    assert loss.entries[1, 0] == 2.0


def test_load_channel_json_defaults_and_errors(tmp_path):
    path = tmp_path / "chan.json"
    path.write_text('{"alphabet": ["0", "1"], "channel": [[0.8, 0.2], [0.2, 0.8]]}')
    _, loss = load_channel_json(str(path))
    assert np.allclose(loss.entries, 1 - np.eye(2))
    path.write_text('{"alphabet": ["0", "1"], "channel": [[0.8, 0.2, 0.0], [0.2, 0.8, 0.0]]}')
    with pytest.raises(InvalidChannel):
        load_channel_json(str(path))
    path.write_text('{"channel": [[1.0]]}')
    with pytest.raises(InvalidChannel):
        load_channel_json(str(path))
    path.write_text("not json")
    with pytest.raises(InvalidChannel):
        load_channel_json(str(path))


def test_parse_channel_spec():
    chan, loss = parse_channel_spec("bsc:0.15")
    assert chan.entries[0, 1] == pytest.approx(0.15)
    chan, _ = parse_channel_spec("dsc:ACGT:0.2")
    assert chan.alphabet.labels == ("A", "C", "G", "T")
    assert chan.entries[0, 0] == pytest.approx(0.8)
    with pytest.raises(InvalidChannel):
        parse_channel_spec("bsc:nope")
    with pytest.raises(InvalidChannel):
        parse_channel_spec("dsc:01")
