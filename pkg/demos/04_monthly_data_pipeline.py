"""End-to-end monthly-data workflow on synthetic FRED-style files.

Builds three monthly CSVs (an index in levels, a price level, and a shock
series), ingests them with gap checking, converts levels to annualized
month-over-month percentage changes, assembles the regressor bundle (shock,
intercept, trend, four lags of everything), estimates under the smoothing
prior, and prints the fit report plus the response profile of the index to
the shock.

Run:  python demos/04_monthly_data_pipeline.py
"""

import tempfile
from pathlib import Path

import numpy as np

from bayeslp import ProjectionSpec, SamplerConfig, build_design, fit_report, run_gibbs, summarize_irf
from bayeslp.ingest import build_application_design, load_csv_series, log_diff_annualized

rng = np.random.default_rng(7)
n_months = 240
months = [f"{1990 + m // 12}-{m % 12 + 1:02d}-01" for m in range(n_months)]

shock = rng.standard_normal(n_months)
# a level series that responds to the shock with a hump and then drifts
response = np.cumsum(0.2 + 0.5 * np.convolve(shock, [0, 0.4, 0.7, 0.5, 0.2])[:n_months]
                     + rng.standard_normal(n_months))
index_level = 50 * np.exp(response / 400.0)
price_level = 80 * np.exp(np.cumsum(0.3 + 0.1 * rng.standard_normal(n_months)) / 400.0)

workdir = Path(tempfile.mkdtemp(prefix="bayeslp_demo_"))
for name, values in (("INDX", index_level), ("PRC", price_level), ("SHOCK", shock)):
    lines = ["DATE," + name] + [f"{d},{float(v)!r}" for d, v in zip(months, values)]
    (workdir / f"{name.lower()}.csv").write_text("\n".join(lines) + "\n")
print("wrote synthetic monthly files to", workdir)

series = {}
for name, transform in (("INDX", True), ("PRC", True), ("SHOCK", False)):
    loaded = load_csv_series(workdir / f"{name.lower()}.csv")
    series[name] = log_diff_annualized(loaded) if transform else loaded
    print(f"  {name}: {len(series[name].values)} months from {series[name].start}")

inputs = build_application_design(series, response="INDX", shock="SHOCK", lags=4, trend=True)
spec = ProjectionSpec(horizons=tuple(range(13)), prior="nrp")
design = build_design(inputs.bundle, spec, lags=inputs.lags)
print(f"\naligned from {inputs.start_month}: {design.t_eff} rows, {design.n_regressors} regressors")

draws = run_gibbs(design, spec, SamplerConfig(n_draws=3000, n_burnin=800, seed=3))
summary = summarize_irf(draws)
print("\nresponse of INDX growth to a unit shock:")
print(f"{'h':>3} {'mean':>8} {'q5':>8} {'q95':>8}")
for i, h in enumerate(spec.horizons):
    print(f"{h:>3} {summary.mean[i]:>8.3f} {summary.q05[i]:>8.3f} {summary.q95[i]:>8.3f}")

report = fit_report(draws, design)
print("\nfit:", {k: round(v, 1) for k, v in report.as_dict().items()})
