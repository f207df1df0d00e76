# Simulated comparison against Epidemic, PRoPHETv2 and a simplified MaxProp.
# Run: python3 demos/04_protocol_comparison.py   (about 10 s)

import numpy as np

from minlat import Constraints, Scenario, Workload, compare_protocols, generate_preferential_attachment

# %% a 41-node preferential-attachment network, mean intermeeting time 1.3e4 s
g = generate_preferential_attachment(41, 5, 5, rate_mean=1 / 1.3e4, seed=100, destination=3)
sc = Scenario(g, horizon=3 * 86400, workload=Workload(count=1000, spacing=5))
protocols = ["minlat", "prophetv2", "epidemic", "maxprop-s"]

comp = compare_protocols(sc, protocols, seeds=range(4))
print(f"{'protocol':10s} {'delivery':>14s} {'latency*':>18s} {'hops':>12s} {'buffer':>14s}")
for p in protocols:
    s = comp.summaries[p]
    cells = [s.delivery_rate, s.avg_latency, s.avg_hop_count, s.avg_buffer_occupancy]
    print(f"{p:10s} " + " ".join(f"{m:9.3f}±{h:<6.3f}" for m, h in cells))
print("* latency over messages every protocol delivered; ± is a 95% interval over 4 seeds")

# %% tighter constraints: short TTL and small buffers
tight = Constraints(ttl=2e4, buffer_capacity=20, exchange_limit=5)
comp = compare_protocols(sc, protocols, seeds=[0], constraints=tight)
for p in protocols:
    r = comp.report(p, 0)
    print(f"{p:10s} delivery {r.delivery_rate:.3f}  buffer {r.avg_buffer_occupancy:.2f}")
