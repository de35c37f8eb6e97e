"""Byte-oriented range coder with a 64-bit low register.

Invariants: ``0 <= low < 2**64`` after carry handling and
``2**56 <= range < 2**64`` after renormalization. A carry out of ``low`` is
propagated backwards through the bytes already written. Termination emits
the fewest bytes B such that the dyadic interval of the emitted prefix,
padded with anything, lies inside the final coding interval; the output is
therefore prefix-free and decoders pad missing bytes with zeros.

The decoder mirrors the encoder's arithmetic and, at the end, checks that the
input is exactly the byte string the encoder would have produced, so
truncated or trailing-garbage streams raise :class:`DecodeError`.
"""
from __future__ import annotations

from .errors import DecodeError

TOP = 1 << 64
MASK = TOP - 1
BOT = 1 << 56
# frequency totals must stay well below BOT for precision
MAX_TOTAL = 1 << 24


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = MASK
        self.out = bytearray()

    def _carry(self):
        out = self.out
        j = len(out) - 1
        while out[j] == 0xFF:
            out[j] = 0
            j -= 1
        out[j] += 1

    def encode(self, cum, freq, total):
        r = self.range // total
        self.low += r * cum
        self.range = r * freq
        if self.low >= TOP:
            self.low -= TOP
            self._carry()
        while self.range < BOT:
            self.out.append(self.low >> 56)
            self.low = (self.low << 8) & MASK
            self.range <<= 8

    def finish(self):
        """Terminate and return the coded bytes."""
        low, hi = self.low, self.low + self.range
        nbytes = 0
        while True:
            step = 1 << (64 - 8 * nbytes)
            v = -(-low // step) * step
            if v + step <= hi:
                break
            nbytes += 1
        if v >= TOP:
            v -= TOP
            self._carry()
        for t in range(nbytes):
            self.out.append((v >> (56 - 8 * t)) & 0xFF)
        return bytes(self.out)


class RangeDecoder:
    def __init__(self, data):
        self.data = bytes(data)
        self.pos = 0
        self.range = MASK
        self.code = 0
        for _ in range(8):
            self.code = (self.code << 8) | self._next()
        self.mirror = RangeEncoder()

    def _next(self):
        p = self.pos
        self.pos += 1
        if p < len(self.data):
            return self.data[p]
        if p >= len(self.data) + 8:
            raise DecodeError("stream exhausted")
        return 0

    def target(self, total):
        """Scaled value to look up in the cumulative table."""
        self._r = self.range // total
        t = self.code // self._r
        if t >= total:
            raise DecodeError("code value outside the coding interval")
        return t

    def consume(self, cum, freq, total):
        self.code -= self._r * cum
        self.range = self._r * freq
        self.mirror.encode(cum, freq, total)
        while self.range < BOT:
            self.code = ((self.code << 8) | self._next()) & MASK
            self.range <<= 8

    def finish(self):
        expected = self.mirror.finish()
        if expected != self.data:
            if len(self.data) < len(expected) and expected.startswith(self.data):
                raise DecodeError(f"stream truncated: {len(self.data)} of {len(expected)} bytes")
            raise DecodeError("stream does not match its decoded content (corrupted or trailing data)")
