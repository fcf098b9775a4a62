"""Carrying an uplink scheme over to the downlink.

Channels become conjugate transposes, filters swap roles and the order is
reversed. Every residual the uplink nulls shows up on the downlink as its
conjugate transpose, so the downlink inherits feasibility.
"""
from cellular_ia import (
    AntennaConfig,
    InterferenceGraph,
    analytic_three_cycle,
    dualize,
    sample_channels,
    total_order,
    verify_duality,
)

g = InterferenceGraph(3, [(0, 1), (1, 2), (0, 2)])
ch = sample_channels(g, AntennaConfig(2, 2), seed=3)
setup = dualize(ch, analytic_three_cycle(ch, 0), total_order([0, 1, 2]))
print("downlink order pairs:", setup.dl_order.pairs)

rep = verify_duality(setup)
print("uplink feasible:", rep.uplink.feasible, " downlink feasible:", rep.downlink.feasible)
for row in rep.rows():
    print(row)
print(f"largest residual mismatch {rep.max_pair_diff:.1e},"
      f" largest singular value mismatch {rep.max_sv_diff:.1e}")
