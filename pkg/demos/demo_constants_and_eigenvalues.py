"""Closed-form constants across dimensions.

Prints the unit-ball volume, the principal Dirichlet eigenvalue of
-(1/2)Laplacian on the unit ball, the quenched and annealed slowdown
constants, the clearing length scale R_0, and a table of interval
confinement probabilities.
"""

import math

from mildbbm import (
    ModelConstants,
    confinement_prob_series_1d,
    derive_constants,
    lambda_c_constant_drift,
)

print("constants for nu = 1, beta = 1, a = 0.3")
print(f"{'d':>2} {'omega_d':>10} {'lambda_d':>10} {'R_0':>8} {'c':>10} {'c_tilde':>10}")
for d in range(1, 7):
    dc = derive_constants(ModelConstants(d, 1.0, 1.0, 0.3))
    print(
        f"{d:>2} {dc.omega_d:>10.5f} {dc.lambda_d:>10.5f} {dc.R_0:>8.4f} "
        f"{dc.c:>10.5f} {dc.c_tilde:>10.5f}"
    )

print()
print("check: c * R_0^2 recovers lambda_d exactly")
dc = derive_constants(ModelConstants(2, 1.0, 1.0, 0.3))
print(f"  d=2: c*R_0^2 = {dc.c * dc.R_0**2:.12f} vs lambda_2 = {dc.lambda_d:.12f}")

print()
print("probability a Brownian particle stays in (-R, R) up to t")
print(f"{'t':>6}" + "".join(f"  R={R:<4}" for R in (0.5, 1.0, 2.0)))
for t in (0.1, 0.5, 1.0, 2.0, 5.0):
    row = [confinement_prob_series_1d(R, t) for R in (0.5, 1.0, 2.0)]
    print(f"{t:>6.1f}" + "".join(f"  {p:6.4f}" for p in row))
print("late-time decay rate in t is pi^2/(8 R^2), the interval eigenvalue")

print()
print("drift kills local growth below beta = b^2/2:")
for b in (0.5, 1.0, 1.5):
    print(f"  |b| = {b}: generalized principal eigenvalue {lambda_c_constant_drift(b):+.3f}, "
          f"local-growth threshold beta = {b * b / 2:.3f}")
