"""Rate-distortion sweeps with warm starts and a ladder of annealing schedules.

For every (alphabet size, seed, trial) a chain walks the slopes in order of
increasing |beta|. At each slope the chain starts from the previous slope's
best symbols (the first slope starts from a uniform scalar quantization),
runs one annealing pass per schedule constant, each starting from the best
state found so far, and keeps the lowest-energy result. Every reported point
is measured by decoding the packed stream.
"""
from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._rng import make_rng
from .adaptive import DEFAULT_MU, AdaptiveState, initial_symbols
from .annealer import AnnealConfig
from .codec import measure, pack_adaptive
from .errors import ParameterError
from .sources import SourceSpec, generate

CSV_COLUMNS = (
    "source", "n", "k", "M", "beta", "c_best", "r", "seed", "net_rate_bps",
    "gross_rate_bps", "mse", "snr_db", "energy", "wall_s",
)


def default_k(n, M):
    """round(log_M(n) / 2)."""
    return max(0, int(round(0.5 * math.log(n) / math.log(M))))


@dataclass(frozen=True)
class SweepPlan:
    source: SourceSpec
    betas: tuple
    alphabets: tuple = (9,)
    seeds: tuple = tuple(range(10))
    r: int = 50
    k: int | None = None
    c_values: tuple = (1.0, 2.0, 4.0, 8.0)
    trials: int = 1
    t_offset: int = 1
    mu: float = DEFAULT_MU
    include_alphabet_penalty: bool = False
    ctw_depth: int | None = None
    record_time: bool = False

    def __post_init__(self):
        mags = [abs(b) for b in self.betas]
        if not self.betas or any(b >= 0 for b in self.betas):
            raise ParameterError("betas", "need at least one negative slope")
        if any(m2 <= m1 for m1, m2 in zip(mags, mags[1:])):
            raise ParameterError("betas", "slopes must be strictly ordered by increasing |beta|")
        if not self.seeds:
            raise ParameterError("seeds", "need at least one seed")
        if len(self.c_values) < 1 or any(c <= 0 for c in self.c_values):
            raise ParameterError("c_values", "schedule constants must be positive")
        if self.trials < 1:
            raise ParameterError("trials", "need at least one trial")

    def k_for(self, M):
        return default_k(self.source.n, M) if self.k is None else self.k

    def depth_for(self, M):
        return self.k_for(M) if self.ctw_depth is None else self.ctw_depth


@dataclass(frozen=True)
class PointResult:
    source: str
    n: int
    k: int
    M: int
    beta: float
    c_best: float
    r: int
    seed: int
    trial: int
    net_rate: float
    gross_rate: float
    mse: float
    snr_db: float
    energy: float
    wall_s: float | None
    effective: int
    start_energy: float
    error: str | None = None

    def csv_row(self):
        return [
            self.source, self.n, self.k, self.M, _fmt(self.beta), _fmt(self.c_best), self.r,
            self.seed, _fmt(self.net_rate), _fmt(self.gross_rate), _fmt(self.mse),
            _fmt(self.snr_db), _fmt(self.energy), "" if self.wall_s is None else f"{self.wall_s:.3f}",
        ]


@dataclass(frozen=True)
class AggregatePoint:
    M: int
    beta: float
    rate: float
    distortion: float
    snr_db: float
    energy: float
    count: int


@dataclass
class SweepResult:
    plan: SweepPlan
    points: list = field(default_factory=list)

    def ok_points(self):
        return [p for p in self.points if p.error is None]

    def aggregates(self):
        """Arithmetic means over seeds and trials for each (M, beta)."""
        groups = {}
        for p in self.ok_points():
            groups.setdefault((p.M, p.beta), []).append(p)
        out = []
        for (M, beta), ps in sorted(groups.items(), key=lambda kv: (kv[0][0], abs(kv[0][1]))):
            out.append(AggregatePoint(
                M, beta,
                float(np.mean([p.net_rate for p in ps])),
                float(np.mean([p.mse for p in ps])),
                float(np.mean([p.snr_db for p in ps])),
                float(np.mean([p.energy for p in ps])),
                len(ps),
            ))
        return out

    def curve(self, M):
        """Mean RD points for one alphabet size, sorted by distortion."""
        from .baselines import RDCurve
        from .codec import RDPoint

        pts = [RDPoint(a.rate, a.distortion, a.snr_db) for a in self.aggregates() if a.M == M]
        return RDCurve.from_points(pts, f"MCMC |Z|={M}", {"method": "adaptive MCMC", "M": M})

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for p in self.points:
            if p.error is None:
                w.writerow(p.csv_row())
        return buf.getvalue()


def _fmt(v):
    return repr(float(v))


def _chain(plan, M, seed, trial):
    """One warm-started walk over all slopes; returns a list of PointResult."""
    x = generate(replace(plan.source, seed=seed)).samples
    n = x.size
    k = plan.k_for(M)
    depth = plan.depth_for(M)
    z = initial_symbols(x, M)
    results = []
    for j, beta in enumerate(plan.betas):
        t0 = time.perf_counter()
        try:
            start = AdaptiveState(x, z, M, k, beta, plan.mu, plan.include_alphabet_penalty)
            best_e, best_z, best_c = start.current_energy, start.z.copy(), 0.0
            start_energy = best_e
            for ci, c in enumerate(plan.c_values):
                cfg = AnnealConfig(beta, c, plan.r, k, seed, plan.t_offset)
                st = AdaptiveState(x, best_z, M, k, beta, plan.mu, plan.include_alphabet_penalty)
                st.anneal(cfg, make_rng(seed, trial, M, j, ci))
                e = st.recompute_energy()
                if e < best_e:
                    best_e, best_z, best_c = e, st.z.copy(), c
            z = best_z
            final = AdaptiveState(x, best_z, M, k, beta, plan.mu, plan.include_alphabet_penalty)
            stream = pack_adaptive(best_z, M, k, depth, final.codebook())
            point = measure(x, stream)
            wall = time.perf_counter() - t0
            results.append(PointResult(
                plan.source.kind, n, k, M, beta, best_c, plan.r, seed, trial, point.rate,
                point.gross_rate, point.distortion, point.snr_db, final.current_energy,
                wall if plan.record_time else None, final.effective_size(), start_energy,
            ))
        except Exception as exc:  # keep the rest of the sweep
            results.append(PointResult(
                plan.source.kind, n, k, M, beta, math.nan, plan.r, seed, trial, math.nan,
                math.nan, math.nan, math.nan, math.nan, None, 0, math.nan, repr(exc),
            ))
    return results


def _chain_task(args):
    return _chain(*args)


def run_sweep(plan, jobs=1):
    tasks = [(plan, M, seed, trial)
             for M in plan.alphabets for seed in plan.seeds for trial in range(plan.trials)]
    if jobs <= 1 or len(tasks) == 1:
        chunks = [_chain_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_chain_task, tasks))
    result = SweepResult(plan)
    for chunk in chunks:
        result.points.extend(chunk)
    return result


def default_jobs():
    try:
        return max(1, int(os.environ.get("MCLC_JOBS", "1")))
    except ValueError:
        return 1


# ---- comparison against reference curves -------------------------------------

@dataclass(frozen=True)
class GapRow:
    label: str
    M: int
    beta: float
    rate: float
    distortion: float
    curve: str
    curve_rate: float | None
    gap_bits: float | None
    gap_db: float | None


def compare(result, curves):
    """Rate gap (bits) and distortion gap (dB) of every aggregate point to every curve."""
    if isinstance(result, SweepResult):
        points = [(f"MCMC |Z|={a.M}", a.M, a.beta, a.rate, a.distortion) for a in result.aggregates()]
    else:
        points = [(result.label, 0, math.nan, p.rate, p.distortion) for p in result.points]
    rows = []
    for label, M, beta, rate, dist in points:
        for curve in curves:
            cr = curve.rate_at(dist)
            cd = curve.distortion_at(rate)
            gap_db = None if cd is None or cd <= 0 or dist <= 0 else 10.0 * math.log10(dist / cd)
            rows.append(GapRow(label, M, beta, rate, dist, curve.label, cr,
                               None if cr is None else rate - cr, gap_db))
    return rows


def format_report(rows):
    lines = ["label,M,beta,rate,distortion,curve,curve_rate,gap_bits,gap_db"]
    for r in rows:
        cells = [r.label, str(r.M), _num(r.beta), _num(r.rate), _num(r.distortion), r.curve,
                 _num(r.curve_rate), _num(r.gap_bits), _num(r.gap_db)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _num(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "NA"
    return f"{v:.6g}"


def plan_metadata(plan):
    d = asdict(plan)
    d["source"] = {"kind": plan.source.kind, "n": plan.source.n, "params": dict(plan.source.params)}
    return d
