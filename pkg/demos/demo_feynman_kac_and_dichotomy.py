"""Two views of the expected mass, and the drift dichotomy.

First: the expected population size among obstacles equals the expectation
of exp(beta * free time) over single Brownian paths, so a particle
simulation and a path-functional estimate must agree; the demo shows both
numbers with their standard errors.  Second: the annealed slowdown deficit
beta*t - log E|Z_t| grows with the horizon.  Third: with constant drift b,
local mass around the origin dies out when beta < b^2/2 and survives above
that threshold, whatever the obstacle intensity.
"""

import math

import numpy as np

from mildbbm import (
    ModelConstants,
    SimConfig,
    derive_seed,
    dichotomy_experiment,
    estimate_annealed_mass,
    estimate_quenched_mass,
    field_create,
    run_bbm,
)

d, nu, a, beta, t = 1, 0.5, 0.3, 1.0, 4.0
field = field_create(d, nu, a, master_seed=1234)
mc = ModelConstants(d, nu, beta, a)

runs = 4000
sizes = np.empty(runs)
for i in range(runs):
    cfg = SimConfig(mc=mc, t_max=t, obs_times=(t,), seed=derive_seed(3, "run", i))
    sizes[i] = run_bbm(cfg, field)[0].counts[-1]
est = estimate_quenched_mass(field, beta, t, dt=1e-3, n_paths=8000, seed=7)
print(f"fixed environment, t={t}:")
print(f"  particle runs   E|Z_t| = {sizes.mean():.3f} ± {sizes.std(ddof=1) / math.sqrt(runs):.3f}")
print(f"  path functional E|Z_t| = {est.point_estimate:.3f} ± {est.std_error:.3f}")
print(f"  free growth would give  {math.exp(beta * t):.3f}")

print()
print("annealed slowdown deficit beta*t - log E|Z_t| (averaged over environments):")
for horizon in (2.0, 4.0, 8.0, 16.0):
    e = estimate_annealed_mass(d, 1.0, a, beta, horizon, 2e-3, 512, 16, seed=11)
    print(f"  t={horizon:>4.0f}: deficit {beta * e.t - e.log_estimate:6.3f}")
print("  (grows with t; asymptotically ~ c_tilde t^(1/3) in d=1)")

print()
print("dichotomy at drift b=1 (threshold beta = 0.5), light obstacles nu=0.2, a=0.1:")
for b_rate in (0.3, 0.8):
    rep = dichotomy_experiment(1.0, b_rate, 0.2, 0.1, 16.0, 60, seed=21, prune_tol=1e-8)
    print(
        f"  beta={b_rate}: predicted {rep['predicted_regime']:>12}, survival in B(0,1) "
        f"{rep['survival_fraction']:.2f}, median local counts {rep['median_local_counts']}"
    )
print("the crossover sits at beta = b^2/2 regardless of the obstacle intensity,")
print("but the finite-time correction to the growth exponent beta - b^2/2 does")
print("depend on nu and a: with heavy obstacles (say nu=0.5, a=0.3) the growing")
print("side needs far longer horizons before the median trajectory lifts off")
