import numpy as np
import pytest

from cellular_ia.channels import AntennaConfig, ChannelSet, dual_channels, sample_channels
from cellular_ia.errors import InvalidArgumentError
from cellular_ia.topology import InterferenceGraph, build_hex_grid, build_wyner_chain


def test_single_cell():
    ch = sample_channels(InterferenceGraph(1), AntennaConfig(2, 3), seed=0)
    assert list(ch.direct) == [0]
    assert ch.cross == {}
    assert ch.direct[0].shape == (3, 2)
    assert ch.link_direction == "uplink"


def test_deterministic():
    g = build_hex_grid(3, 3, True)
    a = sample_channels(g, AntennaConfig(2, 2), seed=3)
    b = sample_channels(g, AntennaConfig(2, 2), seed=3)
    assert a == b
    assert a != sample_channels(g, AntennaConfig(2, 2), seed=4)


def test_chain_counts():
    ch = sample_channels(build_wyner_chain(3, False), AntennaConfig(2, 2), seed=1)
    assert len(ch.direct) == 3
    assert set(ch.cross) == {(0, 1), (1, 0), (1, 2), (2, 1)}


def test_one_sided_keeps_forward_links_only():
    ch = sample_channels(build_wyner_chain(4, True), AntennaConfig(1, 1), seed=1)
    # transmitter i reaches receiver i + 1 only
    assert set(ch.cross) == {(1, 0), (2, 1), (3, 2)}
    assert ch.get(0, 1) is None


def test_cross_iff_edge():
    g = build_hex_grid(3, 4, False)
    ch = sample_channels(g, AntennaConfig(2, 2), seed=0)
    keys = {frozenset(k) for k in ch.cross}
    assert keys == {frozenset(e) for e in g.edges}


def test_unit_variance():
    g = build_hex_grid(6, 6, True)
    ch = sample_channels(g, AntennaConfig(4, 4), seed=0)
    allv = np.concatenate([h.ravel() for h in ch.cross.values()])
    assert abs(np.mean(np.abs(allv) ** 2) - 1) < 0.05
    assert abs(np.mean(allv)) < 0.05


def test_direct_full_rank():
    ch = sample_channels(build_hex_grid(3, 3, True), AntennaConfig(3, 2), seed=9)
    for h in ch.direct.values():
        assert np.linalg.matrix_rank(h) == 2


def test_scalar_dual():
    g = InterferenceGraph(1)
    ch = ChannelSet(g, AntennaConfig(1, 1), {0: [[3 + 4j]]}, {})
    assert dual_channels(ch).direct[0][0, 0] == 3 - 4j


def test_dual_involution_bitwise():
    ch = sample_channels(build_hex_grid(3, 3, True), AntennaConfig(3, 2), seed=2)
    dd = dual_channels(dual_channels(ch))
    assert dd == ch
    assert dd.link_direction == "uplink"


def test_dual_shapes_and_norms():
    ch = sample_channels(build_wyner_chain(3, False), AntennaConfig(3, 2), seed=2)
    du = dual_channels(ch)
    assert du.link_direction == "downlink"
    assert du.config == AntennaConfig(2, 3)
    for (u, v), h in ch.cross.items():
        hb = du.cross[(v, u)]
        assert hb.shape == (3, 2)
        assert np.array_equal(hb, h.conj().T)
        assert np.linalg.norm(hb) == pytest.approx(np.linalg.norm(h), rel=1e-15)


def test_dual_product_is_psd():
    ch = sample_channels(build_wyner_chain(2, False), AntennaConfig(2, 2), seed=5)
    du = dual_channels(ch)
    a = du.cross[(0, 1)] @ ch.cross[(1, 0)]
    assert np.allclose(a, a.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(a).min() >= -1e-12


def test_rejects_bad_shapes():
    g = InterferenceGraph(2, [(0, 1)])
    with pytest.raises(InvalidArgumentError):
        ChannelSet(g, AntennaConfig(1, 1), {0: [[1]], 1: [[1, 2]]}, {})
    with pytest.raises(InvalidArgumentError):
        ChannelSet(InterferenceGraph(2), AntennaConfig(1, 1), {0: [[1]], 1: [[1]]}, {(0, 1): [[1]]})
    with pytest.raises(InvalidArgumentError):
        ChannelSet(g, AntennaConfig(1, 1), {0: [[np.nan]], 1: [[1]]}, {})


def test_immutable():
    ch = sample_channels(build_wyner_chain(2), AntennaConfig(1, 1), seed=0)
    with pytest.raises(ValueError):
        ch.direct[0][0, 0] = 5
