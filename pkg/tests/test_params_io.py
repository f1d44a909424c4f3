"""Weight-file serialization and the PGM image codec."""

import struct

import numpy as np
import pytest

from caekit import network, params_io, pgm
from caekit.params_io import WeightFormatError, load_params, save_params


def default_params():
    spec = network.build_network()
    return network.init_parameters(spec, seed=17)


def test_round_trip_preserves_float32_values():
    params = default_params()
    loaded = load_params(save_params(params))
    assert len(loaded) == len(params)
    for got, want in zip(loaded, params):
        assert np.array_equal(got.weights,
                              want.weights.astype(np.float32).astype(np.float64))
        assert np.array_equal(got.bias,
                              want.bias.astype(np.float32).astype(np.float64))


def test_save_is_canonical():
    params = default_params()
    data = save_params(params)
    assert data == save_params(load_params(data))
    assert data[:4] == b"CAEW"
    assert data[4] == 1  # version


def test_header_layout():
    params = default_params()
    data = save_params(params)
    version, count = struct.unpack("<BI", data[4:9])
    assert (version, count) == (1, 7)
    o, i, kh, kw, blen = struct.unpack("<5I", data[9:29])
    assert (o, i, kh, kw, blen) == (16, 1, 4, 4, 16)


def test_bad_magic():
    data = bytearray(save_params(default_params()))
    data[0] = ord("X")
    with pytest.raises(WeightFormatError, match="magic"):
        load_params(bytes(data))


def test_bad_version():
    data = bytearray(save_params(default_params()))
    data[4] = 9
    with pytest.raises(WeightFormatError, match="version"):
        load_params(bytes(data))


def test_truncations():
    data = save_params(default_params())
    with pytest.raises(WeightFormatError, match="truncated"):
        load_params(data[:5])
    with pytest.raises(WeightFormatError, match="truncated"):
        load_params(data[:20])  # inside the shape table
    with pytest.raises(WeightFormatError, match="payload"):
        load_params(data[:-4])  # one float short
    with pytest.raises(WeightFormatError, match="payload"):
        load_params(data + b"\0\0\0\0")


def test_bias_length_mismatch_detected():
    data = bytearray(save_params(default_params()))
    # corrupt the first shape entry's bias length field
    data[25:29] = struct.pack("<I", 5)
    with pytest.raises(WeightFormatError, match="bias length"):
        load_params(bytes(data))


def test_pgm_round_trip():
    rng = np.random.default_rng(0)
    img = rng.random((1, 9, 7))
    data = pgm.encode_pgm(img)
    assert data.startswith(b"P5\n7 9\n255\n")
    back = pgm.decode_pgm(data)
    assert back.shape == (1, 9, 7)
    assert np.abs(back - img).max() <= 0.5 / 255 + 1e-12


def test_pgm_accepts_2d_and_clips():
    img = np.array([[1.7, -0.3], [0.0, 1.0]])
    data = pgm.encode_pgm(img)
    assert data == b"P5\n2 2\n255\n" + bytes([255, 0, 0, 255])


def test_pgm_encode_validation():
    with pytest.raises(ValueError):
        pgm.encode_pgm(np.zeros((2, 3, 3)))  # multi-channel
    with pytest.raises(ValueError):
        pgm.encode_pgm(np.zeros(5))


def test_pgm_decode_validation():
    with pytest.raises(ValueError):
        pgm.decode_pgm(b"P6\n2 2\n255\n" + bytes(4))
    with pytest.raises(ValueError):
        pgm.decode_pgm(b"P5\n2 2\n255\n" + bytes(3))  # short payload
    with pytest.raises(ValueError):
        pgm.decode_pgm(b"P5\nx y\n255\n" + bytes(4))
