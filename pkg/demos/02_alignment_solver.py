"""Zero-forcing filters for a fully connected triangle of 2x2 links.

With cells ordered 0 < 1 < 2 each receiver only nulls interference from
cells decoded after it, which leaves three scalar equations. Both the closed
form and the alternating leakage solver find exact solutions.
"""
import numpy as np

from cellular_ia import (
    AntennaConfig,
    DofAllocation,
    InterferenceGraph,
    SolverOptions,
    analytic_three_cycle,
    check_conditions,
    orient,
    sample_channels,
    solve_leakage_min,
    total_order,
)

g = InterferenceGraph(3, [(0, 1), (1, 2), (0, 2)])
ch = sample_channels(g, AntennaConfig(m_tx=2, n_rx=2), seed=7)
g_pi = orient(g, total_order([0, 1, 2]))

bf_closed = analytic_three_cycle(ch, rng=0)
print("closed form:", check_conditions(ch, bf_closed, g_pi).to_record())

bf, report = solve_leakage_min(ch, g_pi, DofAllocation.uniform(3, 1), SolverOptions(seed=0))
print("solver feasible:", report.feasible)
for edge, leak in sorted(report.per_edge_leakage.items()):
    print(f"  edge {edge}: leakage {leak:.2e}")
print("smallest direct singular value:", np.round(report.min_direct_sv, 4))
