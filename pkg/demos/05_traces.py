# Working from recorded contacts: parsing, empirical rates, sparsifying, replay.
# Run: python3 demos/05_traces.py

import io

import numpy as np

from minlat import Scenario, Workload, parse_trace, run_simulation
from minlat.contact_model import empirical_rates, graph_from_rate_matrix, sample_contacts, sparsify_top_k
from minlat.simulator import infocom_slotting

# %% fake a day of Bluetooth sightings from a hidden rate matrix
rng = np.random.default_rng(5)
hidden = np.triu(rng.uniform(0, 4e-4, (12, 12)), 1)
hidden[hidden < 1.5e-4] = 0
hidden += hidden.T

truth = graph_from_rate_matrix(hidden, check_connected=False)
trace = sample_contacts(truth, 86400.0, rng)
text = io.StringIO()
text.write("# a b start end ack\n")
for e in trace.events:
    text.write(f"{e.a + 100} {e.b + 100} {e.start:.0f} {e.start + 60:.0f} 1\n")
print(text.getvalue().splitlines()[:4])

# %% parse back (ids get compacted) and estimate rates
parsed = parse_trace(text.getvalue())
lam = empirical_rates(parsed)
print("trace:", len(parsed), "contacts,", parsed.n, "nodes")
idx = np.array(parsed.labels) - 100
true = hidden[np.ix_(idx, idx)]
both = (true > 0) & (lam > 0)
print("median relative rate error:", np.median(np.abs(lam[both] - true[both]) / true[both]).round(2))

# %% keep each node's 3 fastest contacts
g = sparsify_top_k(lam, 3, dest=0, allow_disconnected=True)
print("edges kept:", g.num_edges, "of", int((lam > 0).sum() // 2), " connected:", g.is_connected())

# %% replay the recorded contacts instead of sampling new ones
if g.is_connected():
    sc = Scenario(g, parsed.horizon, Workload(count=200, spacing=60), trace=parsed)
    for p in ("minlat", "epidemic"):
        m = run_simulation(sc, p, seed=0).metrics
        print(f"{p:9s} delivery {m.delivery_rate:.2f}  hops {m.avg_hop_count:.2f}")

# %% 12-hour slots
for s in infocom_slotting(parsed, slot=43200):
    print(f"slot {s.index} from {s.start:.0f}s: {len(s.trace)} contacts, workload: {s.workload is not None}")
