# MinLat learns the optimal forwarding matrix from meetings alone.
# Run: python3 demos/03_decentralized_convergence.py   (about 10 s)

import numpy as np

from minlat import EXACT, ESTIMATED, centralized_minlat, generate_preferential_attachment, run_protocol
from minlat.protocol import latency_error_series

# %% exact rates: nodes know lambda once they have met
g = generate_preferential_attachment(10, 3, 2, rate_mean=0.05, seed=4)
runs = [run_protocol(g, EXACT, seed=s) for s in range(200)]
times = np.array([r.convergence_time for r in runs])
print(f"bound {runs[0].bound:.1f}s, mean convergence {times.mean():.1f}s, "
      f"max {times.max():.1f}s, all converged: {np.isfinite(times).all()}")

# %% estimated rates on a 100-node network with rates ~ U(0, 0.01)
g = generate_preferential_attachment(100, 5, 5, rate_mean=0.005, seed=1, destination=7)
scale = np.delete(centralized_minlat(g).latencies, 7).mean()
series = latency_error_series(g, ESTIMATED, 5e4, np.arange(2500, 50001, 2500), seed=1)
print(f"mean optimal latency {scale:.1f}s")
print("    t   estimated  achieved   (network mean abs error, % of mean latency)")
for s in series:
    print(f"{s.time:6.0f}  {100 * s.estimated_error / scale:8.2f}%  {100 * s.achieved_error / scale:8.2f}%")
# achieved error drops well below the estimation error: a decision only
# needs the order of neighbor latencies right, not their values
