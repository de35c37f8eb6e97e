"""Reference rate-distortion curves: ECSQ and Shannon-bound oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .codec import RDPoint
from .errors import ConvergenceError, ParameterError
from .sources import SignalBuffer

LN2 = math.log(2.0)


@dataclass(frozen=True)
class RDCurve:
    points: tuple
    label: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        ds = [p.distortion for p in self.points]
        if any(b < a for a, b in zip(ds, ds[1:])):
            raise ParameterError("points", "must be sorted by distortion")
        if any(p.rate < 0 for p in self.points):
            raise ParameterError("points", "rates must be nonnegative")

    @classmethod
    def from_points(cls, points, label="", metadata=None):
        return cls(tuple(sorted(points, key=lambda p: (p.distortion, -p.rate))), label,
                   dict(metadata or {}))

    @property
    def rates(self):
        return np.array([p.rate for p in self.points])

    @property
    def distortions(self):
        return np.array([p.distortion for p in self.points])

    def rate_at(self, distortion):
        """Linear interpolation in D; None outside the sampled range."""
        d, r = self.distortions, self.rates
        if d.size == 0 or not d[0] <= distortion <= d[-1]:
            return None
        return float(np.interp(distortion, d, r))

    def distortion_at(self, rate):
        r, d = self.rates, self.distortions
        order = np.argsort(r, kind="stable")
        r, d = r[order], d[order]
        if r.size == 0 or not r[0] <= rate <= r[-1]:
            return None
        return float(np.interp(rate, r, d))


def _buffer(x):
    return x if isinstance(x, SignalBuffer) else SignalBuffer.from_samples(x)


def ecsq_point(x, step):
    """Mid-tread uniform quantizer, ideal order-0 entropy coder."""
    if not step > 0:
        raise ParameterError("steps", f"step sizes must be positive, got {step}")
    buf = _buffer(x)
    idx = np.rint(buf.samples / step)
    y = idx * step
    _, counts = np.unique(idx, return_counts=True)
    p = counts / buf.n
    rate = float(-(p * np.log2(p)).sum()) + 0.0
    dist = float(np.mean((buf.samples - y) ** 2))
    var = buf.empirical_variance
    return RDPoint(rate, dist, math.inf if dist == 0 else 10 * math.log10(var / dist))


def ecsq_curve(x, steps):
    pts = [ecsq_point(x, q) for q in steps]
    return RDCurve.from_points(pts, "ECSQ", {"method": "ecsq", "steps": [float(q) for q in steps]})


def gaussian_rd(variance, D):
    if not variance > 0:
        raise ParameterError("variance", "must be positive")
    if not 0 < D <= variance:
        raise ParameterError("D", f"need 0 < D <= {variance}, got {D}")
    return 0.5 * math.log2(variance / D)


def gaussian_curve(variance, distortions, label="Gaussian R(D)"):
    pts = [RDPoint(gaussian_rd(variance, d), d, 10 * math.log10(variance / d)) for d in distortions]
    return RDCurve.from_points(pts, label, {"method": "closed form", "variance": variance})


# ---- Blahut-Arimoto ------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteSource:
    """Source pmf on a grid plus a reproduction grid, squared-error distortion."""

    xs: np.ndarray
    pmf: np.ndarray
    ys: np.ndarray

    @classmethod
    def from_pdf(cls, pdf, half_width, points=2001, ys=None):
        xs = np.linspace(-half_width, half_width, points)
        w = pdf(xs)
        if not np.all(np.isfinite(w)) or w.sum() <= 0:
            raise ParameterError("pdf", "density must be finite with positive mass on the grid")
        return cls(xs, w / w.sum(), xs.copy() if ys is None else np.asarray(ys, dtype=np.float64))

    @classmethod
    def gaussian(cls, variance=1.0, points=2001, width=12.0, repro_points=401, repro_width=8.0):
        sd = math.sqrt(variance)
        ys = np.linspace(-repro_width * sd, repro_width * sd, repro_points)
        return cls.from_pdf(lambda t: np.exp(-0.5 * (t / sd) ** 2), width * sd, points, ys)

    @classmethod
    def laplace(cls, scale=1.0 / math.sqrt(2.0), points=2001, width=12.0, repro_points=401,
                repro_width=8.0):
        """Default scale gives unit variance; grids span multiples of the standard deviation."""
        sd = math.sqrt(2.0) * scale
        ys = np.linspace(-repro_width * sd, repro_width * sd, repro_points)
        return cls.from_pdf(lambda t: np.exp(-np.abs(t) / scale), width * sd, points, ys)

    @property
    def variance(self):
        m = float(self.pmf @ self.xs)
        return float(self.pmf @ (self.xs - m) ** 2)


@dataclass(frozen=True)
class BAResult:
    point: RDPoint
    beta: float
    gap_bits: float
    iterations: int
    q: np.ndarray


def blahut_arimoto(source, beta=None, D=None, tol=1e-5, max_iter=200000, q0=None):
    """Rate (bits) and distortion at slope ``beta`` (bits per unit distortion, negative).

    With ``D`` instead of ``beta`` the slope is found by a secant search in
    log|beta|. ``q0`` optionally warm-starts the reproduction distribution.
    Iteration stops when the gap between the upper and lower bounds on R(D) at
    the current distortion is at most ``tol`` bits.
    """
    if not tol > 0:
        raise ParameterError("tol", "must be positive")
    if (beta is None) == (D is None):
        raise ParameterError("beta", "give exactly one of beta or D")
    if D is not None:
        return _ba_for_distortion(source, D, tol, max_iter)
    if not beta < 0:
        raise ParameterError("beta", "slope must be negative")
    p, xs, ys = source.pmf, source.xs, source.ys
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ParameterError("grid", "grids must be finite")
    d = (xs[:, None] - ys[None, :]) ** 2
    s = beta * LN2
    # each row scaled by its largest entry so the nearest reproduction has weight 1
    logA = s * (d - d.min(axis=1, keepdims=True))
    A = np.exp(logA)
    if q0 is None:
        q = np.full(ys.size, 1.0 / ys.size)
    else:
        q = np.maximum(np.asarray(q0, dtype=np.float64), 1e-300)
        q = q / q.sum()
    gap = math.inf
    for it in range(1, max_iter + 1):
        den = np.maximum(A @ q, 1e-300)
        c = (p / den) @ A
        logc = np.log(np.maximum(c, 1e-300))
        gap = (float(logc.max()) - float(q @ logc)) / LN2
        if gap <= tol:
            break
        q = q * c
        q /= q.sum()
    else:
        raise ConvergenceError(f"Blahut-Arimoto did not reach {tol} bits in {max_iter} iterations", gap)
    den = np.maximum(A @ q, 1e-300)
    Q = A * q[None, :] / den[:, None]
    dist = float(p @ (Q * d).sum(axis=1))
    # log(Q(y|x) / q(y)) = logA - log(den)
    rate = float(p @ (Q * (logA - np.log(den)[:, None])).sum(axis=1)) / LN2
    rate = max(rate, 0.0)
    var = source.variance
    return BAResult(RDPoint(rate, dist, 10 * math.log10(var / dist) if dist > 0 else math.inf),
                    beta, gap, it, q)


def _ba_for_distortion(source, D, tol, max_iter):
    if not D > 0:
        raise ParameterError("D", "target distortion must be positive")
    var = source.variance
    if D >= var:
        raise ParameterError("D", f"target {D} is not below the source variance {var}")
    # secant on (log|beta|, log D), started from the Gaussian slope 1 / (2 D ln 2)
    def run(lb):
        return blahut_arimoto(source, beta=-math.exp(lb), tol=tol, max_iter=max_iter)

    target = math.log(D)
    lb0 = math.log(1.0 / (2.0 * D * LN2))
    r0 = run(lb0)
    lb1 = lb0 + 0.01 * (1 if r0.point.distortion > D else -1)
    r1 = run(lb1)
    for _ in range(40):
        f0 = math.log(r0.point.distortion) - target
        f1 = math.log(r1.point.distortion) - target
        if abs(f1) <= 1e-7 or f1 == f0:
            break
        lb0, lb1, r0 = lb1, lb1 - f1 * (lb1 - lb0) / (f1 - f0), r1
        r1 = run(lb1)
    if abs(r1.point.distortion - D) > 1e-6 * D:
        raise ConvergenceError(f"could not match distortion {D}", abs(r1.point.distortion - D))
    return r1


def ba_curve(source, betas, tol=1e-4, label="Blahut-Arimoto R(D)"):
    pts = [blahut_arimoto(source, beta=b, tol=tol).point for b in betas]
    return RDCurve.from_points(pts, label, {"method": "blahut-arimoto", "betas": [float(b) for b in betas],
                                            "grid_points": int(source.xs.size)})


def laplace_rd_curve(scale=1.0, betas=None, tol=1e-3):
    if betas is None:
        betas = -np.geomspace(0.4, 32.0, 19)
    return ba_curve(DiscreteSource.laplace(scale), betas, tol, "Laplace R(D)")


# ---- Gaussian AR(1): reverse water-filling ------------------------------------

def ar1_spectrum(omega, rho, innovation_variance=1.0):
    return innovation_variance / (1.0 - 2.0 * rho * np.cos(omega) + rho * rho)


def _crossing(theta, rho, s2):
    """omega in [0, pi] where the spectrum equals theta, or None if it never does."""
    if rho == 0:
        return None
    c = (1.0 + rho * rho - s2 / theta) / (2.0 * rho)
    if -1.0 < c < 1.0:
        return math.acos(c)
    return None


def _waterfill(theta, rho, s2):
    """(D, R in bits) at water level theta, integrating over [0, pi] split at the crossing."""
    S = lambda w: s2 / (1.0 - 2.0 * rho * math.cos(w) + rho * rho)
    brk = _crossing(theta, rho, s2)
    pieces = [(0.0, math.pi)] if brk is None else [(0.0, brk), (brk, math.pi)]
    dist = rate = 0.0
    for a, b in pieces:
        if b <= a:
            continue
        dist += integrate.quad(lambda w: min(theta, S(w)), a, b, epsabs=1e-13, epsrel=1e-12)[0]
        rate += integrate.quad(lambda w: max(0.0, math.log2(S(w) / theta)), a, b,
                               epsabs=1e-13, epsrel=1e-12)[0]
    return dist / math.pi, rate / (2.0 * math.pi)


def ar1_gaussian_rd(rho, innovation_variance, D):
    if not abs(rho) < 1:
        raise ParameterError("rho", "need |rho| < 1")
    if not innovation_variance > 0:
        raise ParameterError("innovation_variance", "must be positive")
    s2 = float(innovation_variance)
    var = s2 / (1.0 - rho * rho)
    if not 0 < D <= var:
        raise ParameterError("D", f"need 0 < D <= {var}, got {D}")
    smax = s2 / (1.0 - abs(rho)) ** 2
    smin = s2 / (1.0 + abs(rho)) ** 2
    if D >= var:
        return 0.0
    if D <= smin:
        # every frequency is above the water level: D = theta
        return _waterfill(D, rho, s2)[1]
    theta = optimize.brentq(lambda t: _waterfill(t, rho, s2)[0] - D, smin, smax,
                            xtol=1e-15, rtol=1e-14, maxiter=200)
    return _waterfill(theta, rho, s2)[1]


def ar1_curve(rho, innovation_variance, distortions, label=None):
    var = innovation_variance / (1 - rho * rho)
    pts = [RDPoint(ar1_gaussian_rd(rho, innovation_variance, d), d, 10 * math.log10(var / d))
           for d in distortions]
    return RDCurve.from_points(pts, label or f"AR(1) rho={rho} R(D)",
                               {"method": "reverse water-filling", "rho": rho,
                                "innovation_variance": innovation_variance})
