"""Container format and end-to-end encode/decode.

Byte layout (version 1, little-endian integers; see FORMAT.md):

    offset size field
    0      4    magic b"MCLC"
    4      2    format version
    6      1    algorithm id (1 fixed grid, 2 adaptive)
    7      1    reserved, must be 0
    8      8    n
    16     2    k (annealer context depth)
    18     2    D (CTW depth)
    20     4    M (alphabet size)
    24     4    |Z_e| (occupied symbols)
    28     2    b (bits per level index; 0 for the fixed grid)
    30     4    gamma
    34     ...  |Z_e| * b bits of level indices, MSB first, zero padded to a byte
    ...    ...  CTW payload to end of file
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import ctw
from .adaptive import DEFAULT_MU, AdaptiveCodebook, AdaptiveState, LevelQuantizer, initial_symbols
from .annealer import AnnealConfig, initial_state
from .errors import DecodeError, FormatError, ParameterError
from .grid import build_grid, grid_gamma
from .sources import SignalBuffer

MAGIC = b"MCLC"
VERSION = 1
FIXED, ADAPTIVE = 1, 2
ALGORITHMS = {"fixed": FIXED, "adaptive": ADAPTIVE}
_HEADER = struct.Struct("<4sHBBQHHIIHI")
HEADER_SIZE = _HEADER.size


@dataclass(frozen=True)
class StreamHeader:
    algorithm: int
    n: int
    k: int
    depth: int
    M: int
    effective: int
    level_bits: int
    gamma: int
    version: int = VERSION

    def pack(self):
        return _HEADER.pack(MAGIC, self.version, self.algorithm, 0, self.n, self.k, self.depth,
                            self.M, self.effective, self.level_bits, self.gamma)


@dataclass(frozen=True)
class EncodedStream:
    header: StreamHeader
    level_indices: tuple
    payload: ctw.Bitstream

    @property
    def level_payload(self):
        return pack_bits(self.level_indices, self.header.level_bits)

    def to_bytes(self):
        return self.header.pack() + self.level_payload + self.payload.data

    @property
    def net_bits(self):
        """Payload bits plus level description, excluding the fixed preamble and byte padding."""
        h = self.header
        bits = self.payload.length_bits
        if h.algorithm == ADAPTIVE:
            bits += h.effective * h.level_bits + h.M.bit_length()
        return bits

    @property
    def gross_bits(self):
        return 8 * len(self.to_bytes())

    @classmethod
    def from_bytes(cls, data):
        data = bytes(data)
        if len(data) < HEADER_SIZE:
            raise FormatError(f"container shorter than the {HEADER_SIZE}-byte header")
        magic, version, algo, reserved, n, k, depth, M, ze, b, gamma = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported format version {version}")
        if algo not in (FIXED, ADAPTIVE) or reserved:
            raise FormatError(f"unknown algorithm id {algo}")
        header = StreamHeader(algo, n, k, depth, M, ze, b, gamma, version)
        if ze > M or M < 2:
            raise DecodeError(f"header claims |Z_e|={ze} with M={M}")
        if n and gamma != grid_gamma(max(n, 2)):
            raise DecodeError(f"gamma {gamma} inconsistent with n={n}")
        off = HEADER_SIZE
        indices = ()
        if algo == ADAPTIVE:
            if b < 1:
                raise DecodeError("adaptive stream without level bits")
            nbytes = (ze * b + 7) // 8
            if len(data) < off + nbytes:
                raise DecodeError("level payload truncated")
            indices = unpack_bits(data[off:off + nbytes], ze, b)
            off += nbytes
        elif M != 2 * gamma * gamma + 1 or b:
            raise DecodeError("fixed-grid header does not describe the default grid")
        return cls(header, indices, ctw.Bitstream(data[off:]))


@dataclass(frozen=True)
class RDPoint:
    rate: float
    distortion: float
    snr_db: float
    gross_rate: float | None = None

    def __post_init__(self):
        for name in ("rate", "distortion", "snr_db"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.rate < 0 or self.distortion < 0:
            raise ParameterError("RDPoint", "rate and distortion must be nonnegative")


def snr_db(variance, dist):
    if dist <= 0:
        return math.inf
    if variance <= 0:
        return -math.inf
    return 10.0 * math.log10(variance / dist)


def pack_bits(values, width):
    """Pack unsigned integers MSB first, zero padded to a byte boundary."""
    acc = 0
    for v in values:
        if not 0 <= v < (1 << width):
            raise ParameterError("levels", f"index {v} does not fit in {width} bits")
        acc = (acc << width) | v
    nbits = len(values) * width
    pad = -nbits % 8
    return (acc << pad).to_bytes((nbits + pad) // 8, "big") if nbits else b""


def unpack_bits(data, count, width):
    acc = int.from_bytes(data, "big")
    total = 8 * len(data)
    mask = (1 << width) - 1
    return tuple((acc >> (total - (j + 1) * width)) & mask for j in range(count))


@dataclass(frozen=True)
class EncoderConfig:
    """Parameters of one encode; ``alphabet`` is |Z| for the adaptive algorithm."""

    algorithm: str = "adaptive"
    beta: float = -4.0
    c: float = 1.0
    r: int = 50
    k: int = 1
    seed: int = 0
    alphabet: int = 9
    mu: float = DEFAULT_MU
    include_alphabet_penalty: bool = False
    ctw_depth: int | None = None
    t_offset: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ParameterError("algorithm", f"expected one of {sorted(ALGORITHMS)}")
        if self.algorithm == "adaptive" and self.alphabet < 2:
            raise ParameterError("alphabet", "need at least 2 symbols")

    @property
    def depth(self):
        return self.k if self.ctw_depth is None else self.ctw_depth

    def anneal_config(self):
        return AnnealConfig(self.beta, self.c, self.r, self.k, self.seed, self.t_offset)


def pack_fixed(z, n, k, depth):
    gamma = grid_gamma(n)
    M = 2 * gamma * gamma + 1
    z = np.asarray(z, dtype=np.int64)
    header = StreamHeader(FIXED, n, k, depth, M, int(np.unique(z).size), 0, gamma)
    return EncodedStream(header, (), ctw.encode(z, depth, M))


def pack_adaptive(z, M, k, depth, codebook):
    z = np.asarray(z, dtype=np.int64)
    n = z.size
    occupied = np.unique(z).tolist()
    if occupied != codebook.effective:
        raise ParameterError("codebook", "levels must cover exactly the occupied symbols")
    q = codebook.quantizer
    header = StreamHeader(ADAPTIVE, n, k, depth, M, len(occupied), q.bits, q.gamma)
    return EncodedStream(header, tuple(codebook.indices()), ctw.encode(z, depth, M))


def decode_symbols(stream):
    """Recover (z, level table) where ``level_table[z]`` is the reconstruction."""
    if not isinstance(stream, EncodedStream):
        stream = EncodedStream.from_bytes(stream)
    h = stream.header
    z = ctw.decode(stream.payload, h.n, h.depth, h.M)
    occupied = np.unique(z)
    if occupied.size != h.effective:
        raise DecodeError(f"payload uses {occupied.size} symbols, header says {h.effective}")
    if h.algorithm == FIXED:
        table = build_grid(max(h.n, 2)).levels
    else:
        gamma = h.gamma
        delta = ((1 << h.level_bits) - 1) // (2 * gamma)
        quantizer = LevelQuantizer(gamma, h.level_bits, delta)
        table = np.zeros(h.M)
        for a, idx in zip(occupied.tolist(), stream.level_indices):
            if idx > 2 * gamma * delta:
                raise DecodeError(f"level index {idx} outside the lattice")
            table[a] = quantizer.level(idx)
    return z, table


def decode_stream(stream):
    """Real-valued reconstruction y."""
    z, table = decode_symbols(stream)
    return table[z]


def encode_symbols(x, config):
    """Run the configured annealer; returns (z, EncodedStream)."""
    x = x.samples if isinstance(x, SignalBuffer) else np.asarray(x, dtype=np.float64)
    n = x.size
    ac = config.anneal_config()
    if config.algorithm == "fixed":
        state = initial_state(x, build_grid(n), ac).anneal(ac)
        return state.z, pack_fixed(state.z, n, config.k, config.depth)
    state = AdaptiveState(x, initial_symbols(x, config.alphabet), config.alphabet, config.k,
                          config.beta, config.mu, config.include_alphabet_penalty)
    state.anneal(ac)
    stream = pack_adaptive(state.z, config.alphabet, config.k, config.depth, state.codebook())
    return state.z, stream


def measure(x, stream):
    """RD point of a stream, recomputed by decoding it."""
    x = x.samples if isinstance(x, SignalBuffer) else np.asarray(x, dtype=np.float64)
    y = decode_stream(stream)
    n = x.size
    dist = float(np.mean((x - y) ** 2))
    return RDPoint(stream.net_bits / n, dist, snr_db(float(np.var(x)), dist), stream.gross_bits / n)


def encode_stream(x, config):
    """Anneal, CTW-code and pack; returns (EncodedStream, RDPoint)."""
    _, stream = encode_symbols(x, config)
    return stream, measure(x, stream)
