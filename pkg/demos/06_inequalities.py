#!/usr/bin/env python3
"""Empirical inequality checks at small scale.

Fits the existential constants (train/validate splits) for the
displaced-start comparison and the variation/transport rate, then runs the
moment and stability batteries.  Larger, tolerance-pinned versions of these
are the acceptance suite (pytest tests/test_acceptance.py).
"""

import numpy as np

from mvsde import ParticleCloud, get_model
from mvsde.verify import (
    fit_harnack_constant,
    finalize_harnack,
    grr_check,
    harnack_check,
    moment_check,
    stability_check,
    standard_f_battery,
)

fs = standard_f_battery()

# --- displaced-start comparison ------------------------------------------
model = get_model("ou")
train = harnack_check(model, 0.0, 1.0, 0.5, fs, (2.0,), n=4000, seed=1)
c = fit_harnack_constant(train)
held = harnack_check(model, 0.0, 2.0, 0.5, fs, (2.0,), n=4000, seed=2)
finalize_harnack(held, c)
print(f"fitted comparison constant c = {c:.3f}")
for r in held:
    print(f"  held-out f={r.f_name:5s} p={r.p}: lhs {r.lhs:.4f} <= rhs {r.rhs:.4f} -> {r.passed}")

# --- variation vs transport rate -----------------------------------------
bm = get_model("bounded_mf")
pairs = [(ParticleCloud.dirac(0.0), ParticleCloud.dirac(2.0**-k)) for k in range(1, 5)]
rate = grr_check(bm, pairs, [0.5], n=4000, seed=3, n_steps=200)
print("rate-shape constant:", round(rate["c"], 4), "violations:", rate["violations"])

# --- running-maximum moments ----------------------------------------------
mom = moment_check(get_model("cubic"), ParticleCloud.uniform(np.array([[2.0], [-2.0]])), (1, 2), seed=4, n_rep=500)
print("moment constants c(1), c(2):", [round(mom["per_n"][n]["c_fit"], 3) for n in (1, 2)])

# --- initial-law stability --------------------------------------------------
seq = [ParticleCloud.dirac(1.0 / n) for n in (1, 4, 16)]
stab = stability_check(get_model("ou"), seq, ParticleCloud.dirac(0.0), 0.5, n=4000, seed=5, n_steps=200)
print("stability distances:", np.round(stab["distances"], 4), "floor:", round(stab["noise_floor"], 4))
print("stability passed:", stab["passed"])
