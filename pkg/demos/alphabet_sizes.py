"""Small AR(1) sweep over two alphabet sizes, written as CSV and SVG.

Runs a reduced version of the fig2 preset (3 seeds, 4 slopes) so it finishes
in a few minutes on one core. ``mclc sweep --preset fig2`` is the full run.
"""
from pathlib import Path

from mcmc_lossy.bench import SweepPlan, compare, format_report, run_sweep
from mcmc_lossy.cli import reference_curves
from mcmc_lossy.sources import SourceSpec
from mcmc_lossy.svgplot import rd_plot

out = Path("demo-output")
out.mkdir(exist_ok=True)

plan = SweepPlan(SourceSpec.ar1(15000), betas=(-0.3, -1.2, -3.0, -8.0), alphabets=(3, 9),
                 seeds=(0, 1, 2), r=50)
result = run_sweep(plan)
for a in result.aggregates():
    lagrangian = a.rate - a.beta * a.distortion
    print(f"|Z|={a.M} beta={a.beta:5.1f}  R={a.rate:.3f}  D={a.distortion:.3f}  R-beta*D={lagrangian:.3f}")

refs = reference_curves(plan)
(out / "ar1.csv").write_text(result.to_csv())
(out / "ar1-report.csv").write_text(format_report(compare(result, refs)))
(out / "ar1.svg").write_text(rd_plot(refs + [result.curve(M) for M in plan.alphabets], "AR(1) rho=0.9"))
print(f"wrote {out}/ar1.csv, ar1-report.csv, ar1.svg")
