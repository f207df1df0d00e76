# The per-node relay problem: which neighbors should a node hand its message to?
# Run: python3 demos/02_relay_subsets.py

import math

import numpy as np

from minlat.relay import (
    RelayCandidate,
    best_relay_subset,
    charnes_cooper_transform,
    enumerate_relay_subsets,
    relay_lfp,
    solve_lp_small,
)

# %% destination (latency 0) is slow to meet, neighbor 1 is fast and close to d
cands = [RelayCandidate(0, 0.1, 0.0), RelayCandidate(1, 1.0, 1.0), RelayCandidate(2, 5.0, 10.0)]
sel = best_relay_subset(cands)
print("greedy   :", sorted(sel.chosen), sel.value)       # {0, 1}, 20/11
print("all sets :", enumerate_relay_subsets(cands))
# neighbor 2 meets often but is too far from d: its latency 10 exceeds the ratio

# %% the same problem as a linear-fractional program, linearised
lp = charnes_cooper_transform(relay_lfp(cands))
sol = solve_lp_small(lp)
print("LP value :", sol.objective, " p =", sol.p.round(6))

# %% a random check, with a few unreachable neighbors mixed in
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(500):
    cs = [
        RelayCandidate(k, rng.uniform(0.01, 1), math.inf if rng.random() < 0.2 else rng.uniform(0, 50))
        for k in range(int(rng.integers(1, 9)))
    ]
    g = best_relay_subset(cs).value
    if math.isfinite(g):
        worst = max(worst, abs(solve_lp_small(charnes_cooper_transform(relay_lfp(cs))).objective - g) / g)
print("max relative greedy/LP gap over 500 lists:", worst)
