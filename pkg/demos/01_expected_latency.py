# Expected latency of single-copy forwarding on a small contact graph.
# Run: python3 demos/01_expected_latency.py

import numpy as np

from minlat import ContactGraph, brute_force_optimal, centralized_minlat, expected_latencies, utility

# %% a 5-node graph, destination 0; rates in meetings per second
g = ContactGraph(
    5,
    {(0, 1): 0.02, (0, 2): 0.005, (1, 2): 0.1, (2, 3): 0.3, (3, 4): 0.05, (1, 4): 0.01},
    destination=0,
)
print(g)

# %% any forwarding matrix gives a latency vector; here everyone hands to node 1 or d
P = np.zeros((5, 5))
P[1, 0] = 1
P[2, 1] = 1
P[3, 2] = 1
P[4, 1] = 1
print("naive  L =", expected_latencies(g, P).round(1), " U =", round(utility(g, P), 1))

# fractional entries are allowed too
P[2, 0] = 0.5
print("mixed  L =", expected_latencies(g, P).round(1))

# a node that never forwards, or feeds one that never forwards, waits forever
P[1, 0] = 0
print("broken L =", expected_latencies(g, P))

# %% greedy settlement vs exhaustive search
res = centralized_minlat(g)
B_star, L_star = brute_force_optimal(g)
print("settlement order", res.order)
for step in res.steps:
    print(f"  node {step.node}: L = {step.latency:8.2f}s via {sorted(step.relays)}")
print("same as brute force:", np.array_equal(res.decisions, B_star), np.allclose(res.latencies, L_star))
print("optimal U =", round(utility(g, res.decisions), 2))
