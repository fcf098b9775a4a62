"""Rates against transmit power and the backhaul needed to support them.

Per-cell rates grow by one bit per doubling of power for each stream, on the
uplink and on the downlink alike. The forwarded quantized signals cost about
as many bits as the messages themselves.
"""
import numpy as np

from cellular_ia import (
    AntennaConfig,
    BeamformerSet,
    DofAllocation,
    SimulationParams,
    backhaul_budget,
    build_wyner_chain,
    dualize,
    orient,
    power_sweep,
    sample_channels,
    total_order,
)

n = 8
ch = sample_channels(build_wyner_chain(n), AntennaConfig(1, 1), seed=0)
one = {v: [[1.0]] for v in range(n)}
setup = dualize(ch, BeamformerSet(one, one), total_order(range(n)))

powers = np.logspace(3, 9, 5)
res = power_sweep(setup, powers, distortion=1.0)
for side, per in res.slopes.items():
    print(f"{side:8s} slopes:", np.round([per[v] for v in range(n)], 4))
print("all within 2% of the stream count:",
      all(all(ok.values()) for ok in res.verdicts(0.02).values()))

g_rev = orient(setup.dl_channels.graph, setup.dl_order)
for p in (1e6, 1e12):
    bh = backhaul_budget(g_rev, DofAllocation.uniform(n, 1), SimulationParams(p, 2.0))
    print(f"P={p:.0e}: {len(bh.links)} backhaul links,"
          f" {bh.links[0].rate_bits:.2f} bits each, ratio to messages {bh.ratio_to_messages():.4f}")
