import numpy as np
import pytest

from layer2048.engine import Caps, Turn
from layer2048.indexer import CountTable
from layer2048.layerstore import (CHUNK_SIZE, LayerError, LayerMeta, Payload, ResidencyTracker,
                                  chunk_owner, create_layer, layer_name, open_layer,
                                  validate_batch_size)

CAPS22 = Caps.uniform(2, 2, 4)


def meta(s=4, payload=Payload.BIT, batch=8, caps=CAPS22, count=None):
    t = CountTable(caps)
    n = t.layer_size(s) if count is None else count
    return LayerMeta(caps.rows, caps.cols, 3, caps.exps, s, Turn.PLAYER, payload, n, batch)


def test_bit_layer_size(tmp_path):
    m = meta(batch=16)
    h = create_layer(m, tmp_path / "a.layer", CountTable(CAPS22))
    h.close()
    size = (tmp_path / "a.layer").stat().st_size
    assert size == m.header_size + 2 + 8 * m.n_batches


def test_fixed_layer_sum_zero(tmp_path):
    m = meta(s=0, payload=Payload.FIXED32)
    create_layer(m, tmp_path / "z.layer").close()
    assert (tmp_path / "z.layer").stat().st_size == m.header_size + 4 + 8


def test_count_mismatch_on_create(tmp_path):
    with pytest.raises(LayerError, match="layer size"):
        create_layer(meta(count=11), tmp_path / "x.layer", CountTable(CAPS22))


def test_round_trip_and_ragged_batch(tmp_path):
    m = meta(batch=8)
    assert m.n_batches == 2 and m.batch_span(1) == (8, 10)
    rng = np.random.default_rng(0)
    bits = rng.random(10) < 0.5
    with create_layer(m, tmp_path / "r.layer") as h:
        h.write_batch(0, bits[:8])
        h.write_batch(1, bits[8:])
    got_meta, h = open_layer(tmp_path / "r.layer", caps=CAPS22)
    with h:
        assert got_meta == m
        assert list(h.read_batch(1)) == list(bits[8:])
        np.testing.assert_array_equal(h.read_all(), bits)
        with pytest.raises(LayerError, match="out of range"):
            h.read_batch(2)


def test_bit_order_is_lsb_first(tmp_path):
    m = meta(batch=16)
    with create_layer(m, tmp_path / "b.layer") as h:
        v = np.zeros(10, dtype=bool)
        v[0] = v[9] = True
        h.write_batch(0, v)
    with open_layer(tmp_path / "b.layer")[1] as h:
        assert h.payload_bytes() == bytes([0b00000001, 0b00000010])


def test_fixed_words_little_endian(tmp_path):
    m = meta(s=2, payload=Payload.FIXED32)
    with create_layer(m, tmp_path / "f.layer") as h:
        h.write_batch(0, np.array([1, 2**32 - 1, 7, 0], dtype=np.uint32))
    with open_layer(tmp_path / "f.layer")[1] as h:
        assert h.payload_bytes()[:8] == b"\x01\x00\x00\x00\xff\xff\xff\xff"


def test_wrong_caps_is_a_count_mismatch(tmp_path):
    # at sum 8 a cap of 8 admits boards a cap of 4 does not
    create_layer(meta(s=8), tmp_path / "w.layer").close()
    with pytest.raises(LayerError, match="count mismatch"):
        open_layer(tmp_path / "w.layer", caps=Caps.uniform(2, 2, 8))


def test_truncated_file(tmp_path):
    p = tmp_path / "t.layer"
    create_layer(meta(), p).close()
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(LayerError, match="truncated"):
        open_layer(p)


def test_bad_magic(tmp_path):
    p = tmp_path / "m.layer"
    create_layer(meta(), p).close()
    p.write_bytes(b"XXXX" + p.read_bytes()[4:])
    with pytest.raises(LayerError, match="magic"):
        open_layer(p)


def test_checksum_detects_corruption(tmp_path):
    p = tmp_path / "c.layer"
    m = meta()
    with create_layer(m, p) as h:
        h.write_batch(0, np.ones(8, dtype=bool))
    data = bytearray(p.read_bytes())
    data[m.header_size] ^= 0x10
    p.write_bytes(bytes(data))
    with open_layer(p)[1] as h:
        with pytest.raises(LayerError, match="checksum"):
            h.read_batch(0)


def test_missing_file(tmp_path):
    with pytest.raises(LayerError, match="missing"):
        open_layer(tmp_path / "nope.layer")


def test_batch_and_chunk_sizes():
    validate_batch_size(4 * CHUNK_SIZE, CHUNK_SIZE)
    with pytest.raises(ValueError):
        validate_batch_size(CHUNK_SIZE + 8, CHUNK_SIZE)
    with pytest.raises(ValueError):
        validate_batch_size(12, 12)


def test_chunk_owner_is_stable_and_spread():
    owners = [chunk_owner(i, 4) for i in range(4000)]
    assert owners == [chunk_owner(i, 4) for i in range(4000)]
    counts = np.bincount(owners, minlength=4)
    assert counts.min() > 800
    assert all(chunk_owner(i, 1) == 0 for i in range(50))


def test_layer_names_and_tracker(tmp_path):
    assert layer_name(12, Turn.PLAYER) == "s12_P.layer"
    assert layer_name(0, Turn.COMPUTER) == "s0_C.layer"
    tr = ResidencyTracker()
    a = create_layer(meta(), tmp_path / "1.layer", tracker=tr)
    b = create_layer(meta(), tmp_path / "2.layer", tracker=tr)
    a.close()
    c = open_layer(tmp_path / "1.layer", tracker=tr)[1]
    b.close()
    c.close()
    assert tr.peak == 2 and not tr.open
