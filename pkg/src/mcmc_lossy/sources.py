"""Synthetic stationary sources and file ingestion.

Samples are derived from raw PCG64 words with scalar ``math`` functions, so a
given (spec, seed) yields the same buffer on every run.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._rng import make_rng, open_uniforms
from .errors import ParameterError, ParseError

KINDS = ("laplace", "gaussian", "ar1")


@dataclass(frozen=True)
class SourceSpec:
    """Law, length and seed of a synthetic sequence.

    ``params`` holds ``scale`` (laplace), ``mean``/``variance`` (gaussian) or
    ``rho``/``innovation_variance`` (ar1).
    """

    kind: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    @classmethod
    def laplace(cls, n, scale=1.0, seed=0):
        return cls("laplace", n, seed, {"scale": scale})

    @classmethod
    def gaussian(cls, n, mean=0.0, variance=1.0, seed=0):
        return cls("gaussian", n, seed, {"mean": mean, "variance": variance})

    @classmethod
    def ar1(cls, n, rho=0.9, innovation_variance=1.0, seed=0):
        return cls("ar1", n, seed, {"rho": rho, "innovation_variance": innovation_variance})

    def validate(self):
        if self.kind not in KINDS:
            raise ParameterError("kind", f"unknown source kind {self.kind!r}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ParameterError("n", f"length must be a positive integer, got {self.n!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed", "must be a 64-bit unsigned integer")
        p = self.params
        if self.kind == "laplace":
            if not p.get("scale", 0) > 0:
                raise ParameterError("scale", "must be positive")
        elif self.kind == "gaussian":
            if not math.isfinite(p.get("mean", 0.0)):
                raise ParameterError("mean", "must be finite")
            if not p.get("variance", 0) > 0:
                raise ParameterError("variance", "must be positive")
        else:
            if not -1 < p.get("rho", 1.0) < 1:
                raise ParameterError("rho", "stationarity requires |rho| < 1")
            if not p.get("innovation_variance", 0) > 0:
                raise ParameterError("innovation_variance", "must be positive")
        return self

    @property
    def variance(self):
        """Marginal variance of the law (not of a realization)."""
        p = self.params
        if self.kind == "laplace":
            return 2.0 * p["scale"] ** 2
        if self.kind == "gaussian":
            return p["variance"]
        return p["innovation_variance"] / (1.0 - p["rho"] ** 2)


@dataclass(frozen=True)
class SignalBuffer:
    samples: np.ndarray
    empirical_mean: float
    empirical_variance: float

    @classmethod
    def from_samples(cls, samples):
        x = np.ascontiguousarray(samples, dtype=np.float64)
        if x.ndim != 1 or x.size == 0:
            raise ParameterError("samples", "need a non-empty 1-D sequence")
        x.setflags(write=False)
        mean = float(np.mean(x))
        return cls(x, mean, float(np.mean((x - mean) ** 2)))

    @property
    def n(self):
        return self.samples.size

    def __len__(self):
        return self.samples.size


def _standard_normals(rng, n):
    # Box-Muller on pairs of open uniforms
    m = (n + 1) // 2
    u = open_uniforms(rng, 2 * m).tolist()
    out = np.empty(2 * m)
    for j in range(m):
        radius = math.sqrt(-2.0 * math.log(u[2 * j]))
        angle = 2.0 * math.pi * u[2 * j + 1]
        out[2 * j] = radius * math.cos(angle)
        out[2 * j + 1] = radius * math.sin(angle)
    return out[:n]


def generate(spec):
    """Draw a realization of ``spec``."""
    spec.validate()
    rng = make_rng(spec.seed)
    n, p = spec.n, spec.params
    if spec.kind == "laplace":
        b = p["scale"]
        x = np.empty(n)
        for i, u in enumerate(open_uniforms(rng, n).tolist()):
            v = u - 0.5
            x[i] = -b * math.copysign(math.log(1.0 - 2.0 * abs(v)), v)
    elif spec.kind == "gaussian":
        x = p["mean"] + math.sqrt(p["variance"]) * _standard_normals(rng, n)
    else:
        rho, sw = p["rho"], math.sqrt(p["innovation_variance"])
        w = _standard_normals(rng, n).tolist()
        x = np.empty(n)
        prev = w[0] * sw / math.sqrt(1.0 - rho * rho)
        x[0] = prev
        for i in range(1, n):
            prev = rho * prev + sw * w[i]
            x[i] = prev
    return SignalBuffer.from_samples(x)


def ingest(path, format="text-lines"):
    """Read a sequence from a ``raw-float64`` or ``text-lines`` file."""
    if format == "raw-float64":
        with open(path, "rb") as fh:
            data = fh.read()
        if not data:
            raise ParseError("empty file", offset=0)
        if len(data) % 8:
            raise ParseError(
                f"size {len(data)} is not a multiple of 8 bytes", offset=len(data) - len(data) % 8
            )
        x = np.frombuffer(data, dtype="<f8").astype(np.float64)
        bad = np.flatnonzero(~np.isfinite(x))
        if bad.size:
            raise ParseError("non-finite value", offset=int(bad[0]) * 8)
        return SignalBuffer.from_samples(x)
    if format != "text-lines":
        raise ParameterError("format", f"unknown format {format!r}")
    values = []
    with open(path, "r", encoding="ascii", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, line in enumerate(lines, start=1):
        token = line[:-1] if line.endswith("\r") else line
        try:
            v = float(token)
        except ValueError:
            raise ParseError(f"cannot parse {token!r} as a real number", line=lineno) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite value {token!r}", line=lineno)
        values.append(v)
    if not values:
        raise ParseError("empty file", line=1)
    return SignalBuffer.from_samples(values)


def write_raw(path, samples):
    np.asarray(samples, dtype="<f8").tofile(os.fspath(path))
