"""Smoothing a noisy projection estimate with a difference-penalty prior.

Simulates a moving-average process whose response profile is a smooth hump,
then estimates the horizon-by-horizon projection twice: once under a wide
independent normal prior (essentially unregularized) and once under the
global smoothing prior.  The penalty pools information across neighboring
horizons, cutting the wiggle of the estimated profile substantially.

Run:  python demos/01_smoothing_basics.py
"""

import numpy as np

from bayeslp import (
    DgpSpec,
    ProjectionSpec,
    RngStream,
    SamplerConfig,
    build_design,
    run_gibbs,
    summarize_irf,
)
from bayeslp.simulate import shock_bundle, simulate

HORIZONS = tuple(range(21))

dgp = DgpSpec(kind="linear", T=50, seed=11)
sim = simulate(dgp, RngStream(11), n_obs=50 + 4 + 20)
truth = sim.irf.curves[0]

design = build_design(shock_bundle(sim), ProjectionSpec(horizons=HORIZONS), lags=4)
config = SamplerConfig(n_draws=4000, n_burnin=1000, seed=1)

print(f"effective sample: {design.t_eff} rows, {design.n_regressors} regressors\n")
print(f"{'h':>3} {'truth':>8} {'normal':>8} {'smooth':>8}")
summaries = {}
for prior in ("normal", "nrp"):
    spec = ProjectionSpec(horizons=HORIZONS, prior=prior)
    draws = run_gibbs(design, spec, config)
    summaries[prior] = summarize_irf(draws)

for h in HORIZONS:
    print(
        f"{h:>3} {truth[h]:>8.3f} {summaries['normal'].mean[h]:>8.3f} "
        f"{summaries['nrp'].mean[h]:>8.3f}"
    )

for prior, label in (("normal", "wide normal prior"), ("nrp", "smoothing prior")):
    err = np.sum((summaries[prior].mean - truth) ** 2)
    width = np.mean(summaries[prior].q95 - summaries[prior].q05)
    print(f"\n{label}: summed squared error {err:.4f}, mean 90% interval width {width:.3f}")
