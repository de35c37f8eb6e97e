"""Command-line entry point: ``mclc <subcommand> [flags]``.

Exit status is 0 on success, 1 on a usage error and 2 on a runtime error.
Diagnostics go to stderr; every output file gets a ``<file>.json`` sidecar
holding the resolved parameters and the tool version.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import (ar1_curve, ecsq_curve, gaussian_curve, laplace_rd_curve)
from .bench import SweepPlan, compare, default_jobs, format_report, plan_metadata, run_sweep
from .codec import EncodedStream, EncoderConfig, decode_stream, encode_stream
from .errors import MclcError, ParameterError
from .sources import SignalBuffer, SourceSpec, generate, ingest, write_raw
from .svgplot import rd_plot

FORMATS = ("raw-float64", "text-lines")
DEFAULT_ECSQ_STEPS = tuple(float(q) for q in np.geomspace(0.1, 8.0, 40))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n\n{self.format_help()}")


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed_list(text):
    """``0,3,5`` or a range ``0-9``."""
    if "-" in text and "," not in text:
        a, b = text.split("-", 1)
        return tuple(range(int(a), int(b) + 1))
    return _ints(text)


def _add_source_flags(p):
    p.add_argument("--kind", choices=("laplace", "gaussian", "ar1"))
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--scale", type=float)
    p.add_argument("--mean", type=float)
    p.add_argument("--variance", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--innovation-variance", type=float)


def _add_encoder_flags(p):
    p.add_argument("--algo", choices=("fixed", "adaptive"))
    p.add_argument("--alphabet", type=int, help="|Z| for the adaptive algorithm")
    p.add_argument("--beta", type=float)
    p.add_argument("--c", type=float, help="schedule constant: s_t = c log2(t + t_offset)")
    p.add_argument("--r", type=int, help="number of super-iterations")
    p.add_argument("--k", type=int, help="context depth of the empirical entropy")
    p.add_argument("--seed", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--penalty", choices=("on", "off"), help="alphabet-size penalty in the energy")
    p.add_argument("--ctw-depth", type=int)
    p.add_argument("--t-offset", type=int)


def build_parser():
    parser = _Parser(prog="mclc", description="MCMC lossy compression of real-valued sequences")
    parser.add_argument("--version", action="version", version=f"mclc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="draw a synthetic source")
    _add_source_flags(g)
    g.add_argument("--out")
    g.add_argument("--format", choices=FORMATS)
    g.add_argument("--config")

    e = sub.add_parser("encode", help="compress a sample file")
    _add_encoder_flags(e)
    e.add_argument("--in", dest="input")
    e.add_argument("--in-format", choices=FORMATS)
    e.add_argument("--out")
    e.add_argument("--config")

    d = sub.add_parser("decode", help="reconstruct samples from a container")
    d.add_argument("--in", dest="input")
    d.add_argument("--out")
    d.add_argument("--format", choices=FORMATS)
    d.add_argument("--config")

    s = sub.add_parser("sweep", help="run a rate-distortion sweep")
    s.add_argument("--preset", help="fig1 or fig2")
    _add_source_flags(s)
    s.add_argument("--betas", type=_floats)
    s.add_argument("--alphabets", type=_ints)
    s.add_argument("--seeds", type=_seed_list)
    s.add_argument("--trials", type=int)
    s.add_argument("--r", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--c-values", type=_floats)
    s.add_argument("--t-offset", type=int)
    s.add_argument("--jobs", type=int)
    s.add_argument("--record-time", choices=("on", "off"))
    s.add_argument("--out-dir")
    s.add_argument("--config")

    r = sub.add_parser("rd", help="tabulate a reference curve")
    r.add_argument("--curve", choices=("gaussian", "laplace", "ar1", "ecsq"))
    r.add_argument("--variance", type=float)
    r.add_argument("--scale", type=float)
    r.add_argument("--rho", type=float)
    r.add_argument("--innovation-variance", type=float)
    r.add_argument("--distortions", type=_floats)
    r.add_argument("--betas", type=_floats)
    r.add_argument("--steps", type=_floats)
    r.add_argument("--in", dest="input")
    r.add_argument("--in-format", choices=FORMATS)
    r.add_argument("--out")
    r.add_argument("--config")

    rep = sub.add_parser("report", help="gap table of a sweep CSV against reference curves")
    rep.add_argument("--csv")
    rep.add_argument("--curves", help="comma-separated rd CSV files")
    rep.add_argument("--out")
    rep.add_argument("--config")
    return parser


DEFAULTS = {
    "generate": {"kind": "laplace", "n": 15000, "seed": 0, "format": "raw-float64"},
    "encode": {"algo": "adaptive", "alphabet": 9, "beta": -4.0, "c": 2.0, "r": 50, "k": None,
               "seed": 0, "mu": 4.0, "penalty": "off", "ctw_depth": None, "t_offset": 1,
               "in_format": "raw-float64"},
    "decode": {"format": "raw-float64"},
    "sweep": {"kind": None, "n": 15000, "seed": 0, "r": 50, "trials": 1, "c_values": (1.0, 2.0, 4.0, 8.0),
              "t_offset": 1, "record_time": "off", "out_dir": "."},
    "rd": {"curve": "gaussian", "in_format": "raw-float64"},
    "report": {},
}

PRESETS = {
    "fig1": {"kind": "laplace", "scale": 1.0, "n": 15000, "alphabets": (9,), "r": 50,
             "seeds": tuple(range(10)),
             "betas": (-0.4, -0.6, -0.8, -1.0, -1.5, -2.0, -3.0, -4.0, -6.0, -8.0)},
    "fig2": {"kind": "ar1", "rho": 0.9, "innovation_variance": 1.0, "n": 15000, "alphabets": (3, 9),
             "r": 50, "seeds": tuple(range(10)),
             "betas": (-0.3, -0.5, -0.8, -1.2, -2.0, -3.0, -5.0, -8.0)},
}


def preset(name):
    """Sweep plan for a named experiment."""
    if name not in PRESETS:
        raise UsageError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    params = dict(DEFAULTS["sweep"])
    params.update(PRESETS[name])
    params["preset"] = name
    return _plan(params)


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment. Keys use flag names with - or _."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (t.strip() for t in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _coerce(parser, command, key, value):
    """Parse a config-file string with the same converter as the matching flag."""
    sp = parser._subparsers._group_actions[0].choices[command]
    for action in sp._actions:
        if action.dest == key:
            if action.type is not None:
                return action.type(value)
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config: {key} must be one of {sorted(action.choices)}")
            return value
    raise UsageError(f"config: unknown key {key!r} for {command}")


def resolve(parser, args):
    """Defaults < config file < flags."""
    command = args.command
    params = dict(DEFAULTS[command])
    if command == "sweep" and args.preset:
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}; choose from {', '.join(sorted(PRESETS))}")
        params.update(PRESETS[args.preset])
    if getattr(args, "config", None):
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        for key, value in cfg.items():
            params[key] = _coerce(parser, command, key, value)
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        params[key] = value
    params.pop("command", None)
    params.pop("config", None)
    return params


def _require(params, *keys):
    missing = [k for k in keys if params.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _source_spec(params):
    kind, n, seed = params["kind"], params["n"], params.get("seed", 0)
    if kind == "laplace":
        return SourceSpec.laplace(n, params.get("scale") or 1.0, seed)
    if kind == "gaussian":
        mean = params.get("mean")
        var = params.get("variance")
        return SourceSpec.gaussian(n, 0.0 if mean is None else mean, 1.0 if var is None else var, seed)
    rho = params.get("rho")
    iv = params.get("innovation_variance")
    return SourceSpec.ar1(n, 0.9 if rho is None else rho, 1.0 if iv is None else iv, seed)


def _plan(params):
    _require(params, "kind", "betas")
    src = _source_spec(params)
    return SweepPlan(
        source=src,
        betas=tuple(params["betas"]),
        alphabets=tuple(params.get("alphabets") or (9,)),
        seeds=tuple(params.get("seeds") or (params.get("seed", 0),)),
        r=params["r"],
        k=params.get("k"),
        c_values=tuple(params["c_values"]),
        trials=params["trials"],
        t_offset=params["t_offset"],
        record_time=params.get("record_time") == "on",
    )


def write_sidecar(path, command, params):
    record = {"tool": "mclc", "version": __version__, "command": command,
              "params": _jsonable(params), "output": os.path.basename(os.fspath(path))}
    Path(f"{path}.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def _log(params, command):
    print(f"mclc {command} " + json.dumps(_jsonable(params), sort_keys=True), file=sys.stderr)


def _write_samples(path, samples, fmt):
    if fmt == "raw-float64":
        write_raw(path, samples)
    else:
        Path(path).write_text("".join(f"{v!r}\n" for v in np.asarray(samples, dtype=float).tolist()))


# ---- subcommands ----------------------------------------------------------------

def cmd_generate(params):
    _require(params, "kind", "n", "out")
    buf = generate(_source_spec(params))
    _write_samples(params["out"], buf.samples, params["format"])
    write_sidecar(params["out"], "generate", params)
    print(f"wrote {buf.n} samples to {params['out']}", file=sys.stderr)


def _encoder_config(params, n):
    k = params["k"]
    if k is None:
        from .bench import default_k

        M = params["alphabet"] if params["algo"] == "adaptive" else None
        k = default_k(n, M) if M else 1
    return EncoderConfig(
        algorithm=params["algo"], beta=params["beta"], c=params["c"], r=params["r"], k=k,
        seed=params["seed"], alphabet=params["alphabet"], mu=params["mu"],
        include_alphabet_penalty=params["penalty"] == "on", ctw_depth=params["ctw_depth"],
        t_offset=params["t_offset"],
    )


def cmd_encode(params):
    _require(params, "input", "out")
    buf = ingest(params["input"], params["in_format"])
    config = _encoder_config(params, buf.n)
    params["k"] = config.k
    stream, point = encode_stream(buf, config)
    Path(params["out"]).write_bytes(stream.to_bytes())
    write_sidecar(params["out"], "encode", params)
    print(f"net rate {point.rate:.6f} bits/sample, gross {point.gross_rate:.6f}, "
          f"mse {point.distortion:.6g}, snr {point.snr_db:.3f} dB", file=sys.stderr)


def cmd_decode(params):
    _require(params, "input", "out")
    stream = EncodedStream.from_bytes(Path(params["input"]).read_bytes())
    y = decode_stream(stream)
    _write_samples(params["out"], y, params["format"])
    write_sidecar(params["out"], "decode", params)
    print(f"decoded {y.size} samples", file=sys.stderr)


def reference_curves(plan):
    """ECSQ on the first seed's realization plus the matching Shannon-bound curve."""
    from dataclasses import replace

    src = plan.source
    x = generate(replace(src, seed=plan.seeds[0]))
    curves = [ecsq_curve(x, DEFAULT_ECSQ_STEPS)]
    var = src.variance
    if src.kind == "laplace":
        curves.append(laplace_rd_curve(src.params["scale"]))
    elif src.kind == "gaussian":
        curves.append(gaussian_curve(var, var * np.geomspace(0.01, 1.0, 60)))
    else:
        p = src.params
        curves.append(ar1_curve(p["rho"], p["innovation_variance"], var * np.geomspace(0.002, 1.0, 60)))
    return curves


def cmd_sweep(params):
    plan = _plan(params)
    jobs = params.get("jobs") or default_jobs()
    name = params.get("preset") or f"sweep-{plan.source.kind}"
    out_dir = Path(params["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_sweep(plan, jobs=jobs)
    for p in result.points:
        if p.error:
            print(f"point failed: M={p.M} beta={p.beta} seed={p.seed}: {p.error}", file=sys.stderr)
    meta = dict(params)
    meta["plan"] = plan_metadata(plan)
    meta.pop("jobs", None)
    csv_path = out_dir / f"{name}.csv"
    csv_path.write_text(result.to_csv())
    write_sidecar(csv_path, "sweep", meta)
    references = reference_curves(plan)
    curves = references + [result.curve(M) for M in plan.alphabets]
    svg_path = out_dir / f"{name}.svg"
    svg_path.write_text(rd_plot(curves, f"{plan.source.kind} n={plan.source.n}"))
    write_sidecar(svg_path, "sweep", meta)
    report_path = out_dir / f"{name}-report.csv"
    report_path.write_text(format_report(compare(result, references)))
    write_sidecar(report_path, "sweep", meta)
    if any(p.error for p in result.points):
        raise MclcError("some sweep points failed; partial results were written")


def curve_to_csv(curve):
    lines = ["rate_bps,distortion,snr_db"]
    for p in curve.points:
        lines.append(f"{float(p.rate)!r},{float(p.distortion)!r},{float(p.snr_db)!r}")
    return "\n".join(lines) + "\n"


def curve_from_csv(path):
    from .baselines import RDCurve
    from .codec import RDPoint

    rows = Path(path).read_text().strip().splitlines()
    header = rows[0].split(",")
    pts = []
    for row in rows[1:]:
        rec = dict(zip(header, row.split(",")))
        rate = float(rec.get("rate_bps", rec.get("net_rate_bps")))
        dist = float(rec.get("distortion", rec.get("mse")))
        pts.append(RDPoint(rate, dist, float(rec["snr_db"])))
    return RDCurve.from_points(pts, Path(path).stem, {"method": "file", "path": str(path)})


def cmd_rd(params):
    _require(params, "out")
    kind = params["curve"]
    if kind == "gaussian":
        var = params.get("variance") or 1.0
        ds = params.get("distortions") or tuple(var * np.geomspace(0.01, 1.0, 60))
        curve = gaussian_curve(var, ds)
    elif kind == "laplace":
        curve = laplace_rd_curve(params.get("scale") or 1.0, params.get("betas"))
    elif kind == "ar1":
        rho = params.get("rho")
        rho = 0.9 if rho is None else rho
        iv = params.get("innovation_variance") or 1.0
        var = iv / (1 - rho * rho)
        ds = params.get("distortions") or tuple(var * np.geomspace(0.002, 1.0, 60))
        curve = ar1_curve(rho, iv, ds)
    else:
        _require(params, "input")
        curve = ecsq_curve(ingest(params["input"], params["in_format"]),
                           params.get("steps") or DEFAULT_ECSQ_STEPS)
    Path(params["out"]).write_text(curve_to_csv(curve))
    write_sidecar(params["out"], "rd", params)


def cmd_report(params):
    _require(params, "csv", "curves", "out")
    from .bench import GapRow

    sweep_rows = Path(params["csv"]).read_text().strip().splitlines()
    header = sweep_rows[0].split(",")
    groups = {}
    for row in sweep_rows[1:]:
        rec = dict(zip(header, row.split(",")))
        groups.setdefault((int(rec["M"]), float(rec["beta"])), []).append(rec)
    curves = [curve_from_csv(p) for p in params["curves"].split(",")]
    rows = []
    for (M, beta), recs in sorted(groups.items(), key=lambda kv: (kv[0][0], abs(kv[0][1]))):
        rate = float(np.mean([float(r["net_rate_bps"]) for r in recs]))
        dist = float(np.mean([float(r["mse"]) for r in recs]))
        for c in curves:
            cr = c.rate_at(dist)
            cd = c.distortion_at(rate)
            gap_db = None if cd is None or cd <= 0 else 10 * math.log10(dist / cd)
            rows.append(GapRow(f"MCMC |Z|={M}", M, beta, rate, dist, c.label, cr,
                               None if cr is None else rate - cr, gap_db))
    Path(params["out"]).write_text(format_report(rows))
    write_sidecar(params["out"], "report", params)


COMMANDS = {"generate": cmd_generate, "encode": cmd_encode, "decode": cmd_decode,
            "sweep": cmd_sweep, "rd": cmd_rd, "report": cmd_report}


def _attach_negative_values(argv):
    """Turn ``--betas -1,-3`` into ``--betas=-1,-3`` so argparse does not read a flag."""
    out = []
    for tok in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1]
                and re.match(r"-[\d.]", tok)):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_attach_negative_values(argv))
        params = resolve(parser, args)
        _log(params, args.command)
        COMMANDS[args.command](params)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except ParameterError as exc:
        print(f"mclc: invalid parameter: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return 0 if exc.code in (0, None) else 1
    except (MclcError, OSError) as exc:
        print(f"mclc: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
