import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcmc_lossy import ctw
from mcmc_lossy.adaptive import AdaptiveState, LevelQuantizer
from mcmc_lossy.codec import (HEADER_SIZE, EncodedStream, EncoderConfig, RDPoint, decode_stream,
                              decode_symbols, encode_stream, encode_symbols, measure, pack_bits,
                              unpack_bits)
from mcmc_lossy.errors import DecodeError, FormatError, ParameterError
from mcmc_lossy.sources import SourceSpec, generate


def encode(x, **kw):
    cfg = EncoderConfig(**{"r": 4, "c": 2.0, **kw})
    z, stream = encode_symbols(x, cfg)
    return cfg, z, stream


@pytest.mark.parametrize("algorithm", ["fixed", "adaptive"])
def test_roundtrip_exact(algorithm):
    x = generate(SourceSpec.laplace(400, seed=3)).samples
    cfg, z, stream = encode(x, algorithm=algorithm, beta=-3.0, k=1, alphabet=5)
    data = stream.to_bytes()
    z2, table = decode_symbols(data)
    assert np.array_equal(z2, z)
    back = EncodedStream.from_bytes(data)
    assert back == stream
    assert np.array_equal(decode_stream(data), decode_stream(stream))


def test_reconstruction_equals_encoder_levels():
    x = generate(SourceSpec.gaussian(300, seed=1)).samples
    cfg = EncoderConfig(beta=-4.0, r=5, k=1, alphabet=6, c=2.0)
    z, stream = encode_symbols(x, cfg)
    st_ = AdaptiveState(x, z, 6, 1, -4.0)
    assert np.array_equal(decode_stream(stream.to_bytes()), st_.y)


def test_corrupt_magic_and_version():
    x = generate(SourceSpec.gaussian(64)).samples
    data = bytearray(encode(x)[2].to_bytes())
    bad = bytes(b"XCLC" + data[4:])
    with pytest.raises(FormatError):
        decode_stream(bad)
    bad = bytes(data[:4] + struct.pack("<H", 2) + data[6:])
    with pytest.raises(FormatError):
        decode_stream(bad)
    with pytest.raises(FormatError):
        decode_stream(bytes(data[:10]))


def test_header_inconsistencies_raise_decode_error():
    x = generate(SourceSpec.gaussian(64)).samples
    data = bytearray(encode(x, alphabet=4)[2].to_bytes())
    ze = bytes(data[:24] + struct.pack("<I", 9) + data[28:])
    with pytest.raises(DecodeError):
        decode_stream(ze)
    with pytest.raises(DecodeError):
        decode_stream(bytes(data[:HEADER_SIZE + 1]))


def test_fixed_stream_has_no_level_payload():
    x = generate(SourceSpec.gaussian(128, seed=2)).samples
    _, z, stream = encode(x, algorithm="fixed", k=1)
    assert stream.level_indices == () and stream.header.level_bits == 0
    assert len(stream.to_bytes()) == HEADER_SIZE + len(stream.payload.data)
    assert stream.net_bits == stream.payload.length_bits


def test_rate_bookkeeping():
    x = generate(SourceSpec.gaussian(500, seed=4)).samples
    cfg, z, stream = encode(x, alphabet=7, k=1)
    h = stream.header
    pt = measure(x, stream)
    want = stream.payload.length_bits + h.effective * h.level_bits + h.M.bit_length()
    assert pt.rate * 500 == pytest.approx(want)
    assert pt.gross_rate * 500 == 8 * len(stream.to_bytes())
    assert pt.gross_rate >= pt.rate
    assert h.effective == np.unique(z).size <= h.M


def test_constant_input_distortion_bound():
    x = np.full(200, 0.3141)
    stream, pt = encode_stream(x, EncoderConfig(beta=-2.0, r=10, k=1, alphabet=4, c=2.0))
    q = LevelQuantizer.for_length(200)
    assert pt.distortion <= (1 / q.delta) ** 2


def test_encoding_is_deterministic():
    x = generate(SourceSpec.ar1(300, seed=5)).samples
    a = encode(x, seed=7)[2].to_bytes()
    b = encode(x, seed=7)[2].to_bytes()
    assert a == b


@given(st.integers(1, 20), st.data())
def test_bit_packing_roundtrip(width, data):
    values = data.draw(st.lists(st.integers(0, (1 << width) - 1), max_size=30))
    packed = pack_bits(values, width)
    assert len(packed) == (len(values) * width + 7) // 8
    assert unpack_bits(packed, len(values), width) == tuple(values)


def test_rdpoint_and_config_validation():
    with pytest.raises(ParameterError):
        RDPoint(-0.1, 1.0, 0.0)
    with pytest.raises(ParameterError):
        EncoderConfig(algorithm="nope")
    with pytest.raises(ParameterError):
        EncoderConfig(alphabet=1)


def test_energy_improves_with_more_sweeps_on_median():
    x = generate(SourceSpec.gaussian(1000, seed=0)).samples
    energies = {}
    for r in (2, 20):
        es = []
        for seed in range(10):
            cfg = EncoderConfig(beta=-3.0, r=r, k=1, alphabet=5, seed=seed, c=2.0)
            z, stream = encode_symbols(x, cfg)
            es.append(AdaptiveState(x, z, 5, 1, -3.0).current_energy)
        energies[r] = np.median(es)
    assert energies[20] <= energies[2]


@settings(max_examples=30)
@given(st.integers(0, 2**32), st.sampled_from(["gaussian", "laplace", "ar1"]),
       st.sampled_from(["fixed", "adaptive"]), st.integers(8, 150), st.integers(2, 9),
       st.integers(0, 2), st.floats(-8.0, -0.2))
def test_fuzz_roundtrip(seed, kind, algorithm, n, M, k, beta):
    x = generate(getattr(SourceSpec, kind)(n, seed=seed)).samples
    cfg = EncoderConfig(algorithm=algorithm, beta=beta, r=2, k=min(k, n - 1), alphabet=M, seed=seed)
    z, stream = encode_symbols(x, cfg)
    z2, table = decode_symbols(stream.to_bytes())
    assert np.array_equal(z, z2)
