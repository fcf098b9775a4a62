"""Orders on a hexagonal layout and the two directed graphs they induce.

A decoding order on the uplink decides which receiver cancels which
neighbour's signal and which one has to null it instead. Reversing the order
gives the downlink encoding order, and every directed edge flips.
"""
from cellular_ia import (
    PartialOrder,
    build_hex_grid,
    orient,
    reverse_order,
    total_order,
    validate_order,
)

g = build_hex_grid(3, 3, wrap=True)
print(f"3x3 wrapped hex grid: {g.n_cells} cells, {len(g.edges)} interfering pairs")
print("cell 4 hears", g.neighbors(4))

# Row-major order is total, so every pair of neighbours is comparable.
pi = total_order(range(9))
print("row-major order is compatible:", validate_order(g, pi).ok)

g_pi = orient(g, pi)
g_rev = orient(g, reverse_order(pi))
print("uplink:   cell 4 decodes after", g_pi.predecessors(4), "and nulls", g_pi.successors(4))
print("downlink: cell 4 is encoded after", g_rev.predecessors(4))

# A partial order that leaves some neighbours incomparable is rejected.
partial = PartialOrder(9, [(0, 1), (1, 2)])
report = validate_order(g, partial)
print(f"partial order leaves {len(report.incomparable)} neighbour pairs unordered,"
      f" e.g. {report.incomparable[:3]}")
