import numpy as np
import pytest

from cellular_ia.alignment import (
    BeamformerSet,
    DofAllocation,
    SolverOptions,
    alternating_leakage_min,
    analytic_three_cycle,
    check_conditions,
    phase_normalize,
    random_beamformers,
    required_edges,
    solve_leakage_min,
    total_leakage,
)
from cellular_ia.channels import AntennaConfig, ChannelSet, crandn, sample_channels
from cellular_ia.errors import InvalidArgumentError
from cellular_ia.topology import (
    InterferenceGraph,
    PartialOrder,
    build_hex_grid,
    build_wyner_chain,
    orient,
    total_order,
)


def _unit(x):
    return x / np.linalg.norm(x)


def _perp(x):
    return _unit(np.array([[-np.conj(x[1, 0])], [np.conj(x[0, 0])]]))


def hand_alignment(ch, rng):
    """Independent construction: receiver 0 nulls the aligned direction of
    transmitters 1 and 2, receiver 1 nulls transmitter 2."""
    H = ch.get
    v1 = _unit(crandn(rng, (2, 1)))
    v2 = _unit(np.linalg.inv(H(0, 2)) @ H(0, 1) @ v1)
    u0 = _perp(H(0, 1) @ v1)
    u1 = _perp(H(1, 2) @ v2)
    return BeamformerSet(
        {0: _unit(crandn(rng, (2, 1))), 1: v1, 2: v2},
        {0: u0, 1: u1, 2: _unit(crandn(rng, (2, 1)))},
    )


class TestCheckConditions:
    def test_identity_case(self):
        g = InterferenceGraph(3)
        ch = ChannelSet(g, AntennaConfig(2, 2), {v: np.eye(2) for v in range(3)}, {})
        e = np.eye(2)[:, :1]
        bf = BeamformerSet({v: e for v in range(3)}, {v: e for v in range(3)})
        rep = check_conditions(ch, bf, orient(g, PartialOrder(3)))
        assert rep.max_leakage == 0
        assert rep.min_direct_sv == pytest.approx(1.0)
        assert rep.feasible

    def test_empty_edge_set(self, cycle3_system):
        ch, _, _ = cycle3_system
        bf = random_beamformers(ch, DofAllocation.uniform(3), 0)
        g_empty = orient(InterferenceGraph(3), PartialOrder(3))
        assert check_conditions(ch, bf, g_empty).max_leakage == 0

    def test_required_edges_follow_order(self, cycle3_system):
        ch, _, g_pi = cycle3_system
        # [a, b]: receiver b zero-forces the later transmitter a
        assert sorted(required_edges(ch, g_pi)) == [(1, 0), (2, 0), (2, 1)]

    def test_hand_alignment_feasible(self, cycle3_system, rng):
        ch, _, g_pi = cycle3_system
        bf = hand_alignment(ch, rng)
        # direct multiplication oracle
        U, V = bf.rx, bf.tx
        for (a, b) in [(1, 0), (2, 0), (2, 1)]:
            assert abs((U[b].conj().T @ ch.get(b, a) @ V[a])[0, 0]) < 1e-12
        rep = check_conditions(ch, bf, g_pi)
        assert rep.feasible and rep.max_leakage < 1e-10

    def test_library_construction_matches_oracle(self, rng):
        g = InterferenceGraph(3, [(0, 1), (1, 2), (0, 2)])
        g_pi = orient(g, total_order([0, 1, 2]))
        for seed in range(20):
            ch = sample_channels(g, AntennaConfig(2, 2), seed)
            bf = analytic_three_cycle(ch, seed)
            direct = max(
                abs((bf.rx[b].conj().T @ ch.get(b, a) @ bf.tx[a])[0, 0])
                for a, b in [(1, 0), (2, 0), (2, 1)]
            )
            assert direct < 1e-10
            assert check_conditions(ch, bf, g_pi).max_leakage < 1e-10

    def test_side_mismatch(self, cycle3_system):
        ch, _, g_pi = cycle3_system
        bf = random_beamformers(ch, DofAllocation.uniform(3), 0)
        bad = BeamformerSet(bf.tx, bf.rx, "downlink")
        with pytest.raises(InvalidArgumentError):
            check_conditions(ch, bad, g_pi)

    def test_shape_mismatch(self, cycle3_system):
        ch, _, g_pi = cycle3_system
        e3 = np.eye(3)[:, :1]
        bf = BeamformerSet({v: e3 for v in range(3)}, {v: e3 for v in range(3)})
        with pytest.raises(InvalidArgumentError):
            check_conditions(ch, bf, g_pi)

    def test_feasible_definition(self, cycle3_system):
        ch, _, g_pi = cycle3_system
        bf = random_beamformers(ch, DofAllocation.uniform(3), 1)
        rep = check_conditions(ch, bf, g_pi)
        assert rep.feasible == (rep.max_leakage < rep.zf_tol and rep.min_direct_sv > rep.rank_tol)
        assert not rep.feasible
        assert set(rep.to_record()) >= {"feasible", "max_leakage", "min_direct_sv"}


class TestTotalLeakage:
    def test_empty(self, cycle3_system):
        ch, _, _ = cycle3_system
        bf = random_beamformers(ch, DofAllocation.uniform(3), 0)
        assert total_leakage(ch, bf, []) == 0

    def test_scalar(self):
        g = InterferenceGraph(2, [(0, 1)])
        ch = ChannelSet(g, AntennaConfig(1, 1), {0: [[1]], 1: [[1]]}, {(1, 0): [[2]], (0, 1): [[0]]})
        bf = BeamformerSet({0: [[1]], 1: [[1]]}, {0: [[1]], 1: [[1]]})
        assert total_leakage(ch, bf, [(0, 1)]) == pytest.approx(4.0)

    def test_matches_report(self, cycle3_system):
        ch, _, g_pi = cycle3_system
        bf = random_beamformers(ch, DofAllocation.uniform(3), 3)
        rep = check_conditions(ch, bf, g_pi)
        expected = sum(x**2 for x in rep.per_edge_leakage.values())
        assert total_leakage(ch, bf, required_edges(ch, g_pi)) == pytest.approx(expected, rel=1e-12)

    def test_unitary_invariance(self):
        g = build_hex_grid(3, 3, True)
        ch = sample_channels(g, AntennaConfig(4, 4), 0)
        g_pi = orient(g, total_order(range(9)))
        bf = random_beamformers(ch, DofAllocation.uniform(9, 2), 0)
        rng = np.random.default_rng(0)
        rot = {}
        for v in range(9):
            q, _ = np.linalg.qr(crandn(rng, (2, 2)))
            rot[v] = q
        bf2 = BeamformerSet({v: bf.tx[v] @ rot[v] for v in range(9)},
                            {v: bf.rx[v] @ rot[v].conj() for v in range(9)})
        edges = required_edges(ch, g_pi)
        assert total_leakage(ch, bf2, edges) == pytest.approx(total_leakage(ch, bf, edges), abs=1e-10)


class TestSolver:
    def test_empty_edge_set_immediate(self):
        g = InterferenceGraph(3)
        ch = sample_channels(g, AntennaConfig(2, 2), 0)
        bf, rep = solve_leakage_min(ch, orient(g, PartialOrder(3)), DofAllocation.uniform(3))
        assert rep.max_leakage == 0 and rep.feasible
        assert bf.is_orthonormal()

    def test_cycle_feasible(self, cycle3_system):
        ch, _, g_pi = cycle3_system
        bf, rep = solve_leakage_min(ch, g_pi, DofAllocation.uniform(3), SolverOptions(seed=1))
        assert rep.feasible
        assert rep.max_leakage < 1e-8 and rep.min_direct_sv > 1e-6
        assert bf.is_orthonormal()

    def test_cycle_success_rate(self, cycle3):
        g_pi = orient(cycle3, total_order([0, 1, 2]))
        ok = 0
        for seed in range(100):
            ch = sample_channels(cycle3, AntennaConfig(2, 2), seed)
            _, rep = solve_leakage_min(ch, g_pi, DofAllocation.uniform(3), SolverOptions(seed=seed))
            ok += rep.max_leakage < 1e-8 and rep.min_direct_sv > 1e-6
        assert ok >= 95

    def test_one_sided_wyner_trivial(self):
        g = build_wyner_chain(6, True)
        ch = sample_channels(g, AntennaConfig(1, 1), 0)
        g_pi = orient(g, total_order(range(6)))
        # E_pi = {[i+1, i]}: receiver i would null transmitter i+1, which never reaches it
        assert set(g_pi.directed_edges) == {(i + 1, i) for i in range(5)}
        assert required_edges(ch, g_pi) == []
        _, rep = solve_leakage_min(ch, g_pi, DofAllocation.uniform(6))
        assert rep.feasible and rep.per_edge_leakage == {}

    def test_monotone_objective(self):
        g = build_hex_grid(3, 3, True)
        ch = sample_channels(g, AntennaConfig(3, 3), 4)
        g_pi = orient(g, total_order(range(9)))
        bf0 = random_beamformers(ch, DofAllocation.uniform(9), 0)
        _, hist = alternating_leakage_min(ch, required_edges(ch, g_pi), bf0, max_iters=200)
        diffs = np.diff(hist)
        assert np.all(diffs <= 1e-12 * max(hist[0], 1))

    def test_deterministic(self, cycle3_system):
        ch, _, g_pi = cycle3_system
        a, _ = solve_leakage_min(ch, g_pi, DofAllocation.uniform(3), SolverOptions(seed=3))
        b, _ = solve_leakage_min(ch, g_pi, DofAllocation.uniform(3), SolverOptions(seed=3))
        assert a == b

    def test_infeasible_returns_best_effort(self):
        # hex 3x3 torus with M = N = 1 cannot null anything
        g = build_hex_grid(3, 3, True)
        ch = sample_channels(g, AntennaConfig(1, 1), 0)
        bf, rep = solve_leakage_min(ch, orient(g, total_order(range(9))),
                                    DofAllocation.uniform(9), SolverOptions(restarts=2))
        assert not rep.feasible
        assert isinstance(bf, BeamformerSet)

    def test_dof_too_large(self, cycle3_system):
        ch, _, g_pi = cycle3_system
        with pytest.raises(InvalidArgumentError):
            solve_leakage_min(ch, g_pi, DofAllocation.uniform(3, 3))

    def test_feasible_projection_leaves_little_interference(self, cycle3_system):
        ch, _, g_pi = cycle3_system
        bf, rep = solve_leakage_min(ch, g_pi, DofAllocation.uniform(3))
        rng = np.random.default_rng(0)
        n = 2000
        x = {v: crandn(rng, (1, n)) for v in range(3)}
        for a, b in required_edges(ch, g_pi):
            interf = bf.rx[b].conj().T @ ch.get(b, a) @ bf.tx[a] @ x[a]
            power = np.mean(np.abs(interf) ** 2) / np.mean(np.abs(x[a]) ** 2)
            assert power < rep.zf_tol**2


def test_phase_normalize():
    a = phase_normalize(np.array([[1j], [1.0]]))
    assert a[0, 0].real > 0 and abs(a[0, 0].imag) < 1e-15
    assert phase_normalize(np.array([[0.0], [-2.0]]))[1, 0] == 2.0


def test_beamformer_orthonormality_enforced():
    with pytest.raises(InvalidArgumentError):
        BeamformerSet({0: [[2.0]]}, {0: [[1.0]]})
    BeamformerSet({0: [[2.0]]}, {0: [[1.0]]}, strict=False)


def test_dof_validation():
    with pytest.raises(InvalidArgumentError):
        DofAllocation({0: 0})
    with pytest.raises(InvalidArgumentError):
        DofAllocation({0: 1}).validate(2, 2, 2)
