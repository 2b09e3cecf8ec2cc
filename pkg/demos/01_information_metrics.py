#!/usr/bin/env python3
"""Exact vs plug-in information metrics on known distributions.

Walks through the quantities the monitor tracks:

  P  = MI(S,A;S') / (H(S)+H(A)+H(S'))   bi-predictability, bounded by 1/2
  Hf = H(S'|S,A)                         forward residual uncertainty
  Hb = H(S,A|S')                         backward residual uncertainty
  dH = Hf - Hb                           predictive asymmetry

and shows the plug-in estimator converging to the exact values computed by
brute-force summation over an enumerated joint distribution.
"""

import numpy as np

from idt import (
    JointDistribution,
    Perturbation,
    WindowSpec,
    exact_metrics,
    random_discrete_config,
    run_discrete_loop,
    stationary_joint,
    window_metrics,
)


def show(tag, m):
    print(
        f"  {tag:<22} P={m.P:.4f}  MI={m.MI:.4f}  H_S={m.H_S:.4f} "
        f"H_A={m.H_A:.4f} H_S'={m.H_Snext:.4f}  Hf={m.Hf:.4f} Hb={m.Hb:.4f} dH={m.dH:+.4f}"
    )


print("== 1. extreme cases, computed exactly ==")

# independent factors share nothing: P = 0
independent = JointDistribution(np.full((3, 3, 3), 1 / 27))
show("independent uniform", exact_metrics(independent))

# a copy loop (S' always equals S, single action) saturates the bound: P = 1/2
copy = np.zeros((4, 1, 4))
for i in range(4):
    copy[i, 0, i] = 0.25
show("copy loop", exact_metrics(JointDistribution(copy)))

# a partially informative table sits in between
table = np.zeros((2, 2, 2))
table[0, 0, 0] = 0.5
table[1, 1, 1] = 0.25
table[1, 1, 0] = 0.25
show("three-atom table", exact_metrics(JointDistribution(table)))

print()
print("== 2. plug-in estimates converge to the exact stationary values ==")
config = random_discrete_config(seed=7)
exact = exact_metrics(stationary_joint(config))
show("exact (oracle)", exact)
for n in (1_000, 30_000, 1_000_000):
    stream = run_discrete_loop(config, Perturbation.none(), steps=n)
    est = window_metrics(stream, WindowSpec(length=n, stride=n))
    show(f"plug-in, n={n}", est)
print()
print("Plug-in entropies are biased upward-in-MI at small n (every empirical")
print("fluctuation looks like structure); the bias melts away as the window grows.")
