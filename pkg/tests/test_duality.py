import numpy as np
import pytest

from cellular_ia.alignment import (
    BeamformerSet,
    DofAllocation,
    analytic_three_cycle,
    check_conditions,
    random_beamformers,
    solve_leakage_min,
)
from cellular_ia.channels import AntennaConfig, ChannelSet, dual_channels, sample_channels
from cellular_ia.duality import dual_beamformers, dualize, verify_duality
from cellular_ia.errors import InvalidArgumentError
from cellular_ia.topology import (
    InterferenceGraph,
    PartialOrder,
    build_hex_grid,
    orient,
    reverse_order,
    total_order,
)


def test_scalar_single_cell():
    g = InterferenceGraph(1)
    ch = ChannelSet(g, AntennaConfig(1, 1), {0: [[2 - 1j]]}, {})
    bf = BeamformerSet({0: [[1]]}, {0: [[1]]})
    s = dualize(ch, bf, PartialOrder(1))
    assert s.dl_channels.direct[0][0, 0] == 2 + 1j
    assert s.dl_beamformers.tx[0][0, 0] == 1 and s.dl_beamformers.rx[0][0, 0] == 1
    assert s.dl_order.relation() == set()


def test_order_reversed(cycle3_system):
    ch, pi, _ = cycle3_system
    bf = random_beamformers(ch, DofAllocation.uniform(3), 0)
    s = dualize(ch, bf, pi)
    assert s.dl_order == total_order([2, 1, 0])


def test_roles_swapped(cycle3_system):
    ch, pi, _ = cycle3_system
    bf = random_beamformers(ch, DofAllocation.uniform(3), 0)
    s = dualize(ch, bf, pi)
    for v in range(3):
        assert np.array_equal(s.dl_beamformers.tx[v], bf.rx[v])
        assert np.array_equal(s.dl_beamformers.rx[v], bf.tx[v])
    assert s.dl_channels == dual_channels(ch)
    assert s.dl_beamformers.dof.d == bf.dof.d


def test_transform_is_involution(cycle3_system):
    ch, pi, _ = cycle3_system
    bf = random_beamformers(ch, DofAllocation.uniform(3), 0)
    s = dualize(ch, bf, pi)
    assert dual_channels(s.dl_channels) == ch
    assert dual_beamformers(s.dl_beamformers) == bf
    assert reverse_order(s.dl_order) == pi


def test_side_mismatch(cycle3_system):
    ch, pi, _ = cycle3_system
    bf = random_beamformers(dual_channels(ch), DofAllocation.uniform(3), 0)
    with pytest.raises(InvalidArgumentError):
        dualize(ch, bf, pi)


def test_analytic_feasible_both_sides(cycle3_system):
    ch, pi, g_pi = cycle3_system
    bf = analytic_three_cycle(ch, 0)
    s = dualize(ch, bf, pi)
    rep = verify_duality(s)
    assert rep.uplink.feasible and rep.downlink.feasible
    assert rep.max_pair_diff < 1e-12
    assert rep.downlink.max_leakage <= 10 * max(rep.uplink.max_leakage, 1e-16)


def test_pairs_match_explicit_identity(cycle3_system):
    ch, pi, _ = cycle3_system
    bf = random_beamformers(ch, DofAllocation.uniform(3), 5)
    s = dualize(ch, bf, pi)
    rep = verify_duality(s)
    assert len(rep.pairs) == 3
    for p in rep.pairs:
        (v, u) = p.ul_edge
        a = bf.rx[u].conj().T @ ch.get(u, v) @ bf.tx[v]
        # oracle: ||A||_F = ||A^H||_F
        assert p.ul_norm == pytest.approx(np.linalg.norm(a), rel=1e-14)
        assert p.dl_norm == pytest.approx(np.linalg.norm(a.conj().T), rel=1e-14)
        assert p.dl_edge == (u, v)


def test_empty_network_feasible():
    g = InterferenceGraph(4)
    ch = sample_channels(g, AntennaConfig(2, 2), 0)
    bf = random_beamformers(ch, DofAllocation.uniform(4), 0)
    rep = verify_duality(dualize(ch, bf, PartialOrder(4)))
    assert rep.uplink.feasible and rep.downlink.feasible and rep.pairs == []


def test_infeasible_residuals_still_pair():
    g = build_hex_grid(3, 3, True)
    ch = sample_channels(g, AntennaConfig(3, 2), 1)
    bf = random_beamformers(ch, DofAllocation.uniform(9, 2), 1)
    rep = verify_duality(dualize(ch, bf, total_order(range(9))))
    assert not rep.uplink.feasible and not rep.downlink.feasible
    assert len(rep.pairs) == 27
    assert rep.max_pair_diff < 1e-12
    assert rep.uplink.max_leakage == pytest.approx(rep.downlink.max_leakage, abs=1e-12)


def test_direct_singular_values_preserved(cycle3_system):
    ch, pi, _ = cycle3_system
    bf, _ = solve_leakage_min(ch, orient(ch.graph, pi), DofAllocation.uniform(3))
    rep = verify_duality(dualize(ch, bf, pi))
    assert rep.max_sv_diff < 1e-12


def test_downlink_checked_against_reversed_orientation(cycle3_system):
    ch, pi, g_pi = cycle3_system
    bf = analytic_three_cycle(ch, 1)
    s = dualize(ch, bf, pi)
    g_dl = orient(ch.graph, s.dl_order)
    assert set(g_dl.directed_edges) == {(b, a) for a, b in g_pi.directed_edges}
    assert check_conditions(s.dl_channels, s.dl_beamformers, g_dl).feasible
