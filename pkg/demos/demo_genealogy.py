"""Pair coalescence in the pure-birth genealogy.

The total mass of the free process is a rate-beta pure birth process.  Pick
two individuals uniformly at time t: the death time s of their most recent
common ancestor has an exact closed-form law, and the population size I
just after that split has the horizon-free law 2(j+1)/((j-1) i (i+1)).
The demo compares both against simulated trees, and checks the martingale
normalisation e^{-beta t} X_t.
"""

import math
import random

import numpy as np

from mildbbm import (
    MrcaLaw,
    martingale_limit_samples,
    mrca_cdf,
    pre_coalescence_size_pmf,
    sample_pair_mrca,
    simulate_yule_tree,
)

beta, t = 1.0, 3.0
law = MrcaLaw(t=t, beta=beta)
rng = random.Random(99)

n = 30_000
ss = np.empty(n)
i_given_5 = {}
for k in range(n):
    tree = simulate_yule_tree(beta, t, rng, min_leaves=2)
    s, i = sample_pair_mrca(tree, rng)
    ss[k] = s
    if tree.n_leaves == 5:
        i_given_5[i] = i_given_5.get(i, 0) + 1

print(f"{n} sampled pairs from trees at beta={beta}, t={t}")
print(f"{'u':>5} {'empirical F':>12} {'closed form':>12}")
for u in (0.5, 1.0, 1.5, 2.0, 2.5):
    print(f"{u:>5.1f} {np.mean(ss <= u):>12.4f} {mrca_cdf(law, u):>12.4f}")

ss.sort()
grid = np.arange(1, n + 1) / n
cdf = np.asarray([mrca_cdf(law, v) for v in ss])
print(f"KS distance {np.max(np.abs(grid - cdf)):.4f} over {n} pairs")

print()
tot = sum(i_given_5.values())
print(f"population size just after the pair's MRCA split, given 5 alive ({tot} trees):")
for i in (2, 3, 4, 5):
    print(f"  I={i}: empirical {i_given_5.get(i, 0) / tot:.4f}  exact {pre_coalescence_size_pmf(i, 5):.4f}")

print()
samples = martingale_limit_samples(beta, 8.0, 20_000, seed=5)
print(f"e^(-beta t) X_t at t=8: mean {samples.mean():.4f} (converges to 1), "
      f"min {samples.min():.2e} > 0")
print("its limit law is standard exponential; compare the empirical tail:")
for x in (0.5, 1.0, 2.0):
    print(f"  P(N > {x}) empirical {np.mean(samples > x):.4f}  vs e^-x = {math.exp(-x):.4f}")
