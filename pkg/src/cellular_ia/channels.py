"""Random flat-fading channels on an interference graph and their duals.

A :class:`ChannelSet` maps ordered cell pairs ``(u, v)`` to the matrix
``H[u, v]`` from the transmitter of cell ``v`` to the receiver of cell ``u``.
Pairs that are not adjacent in the graph carry no matrix and are treated as
identically zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .topology import InterferenceGraph

__all__ = ["AntennaConfig", "ChannelSet", "sample_channels", "dual_channels", "crandn"]

UPLINK = "uplink"
DOWNLINK = "downlink"
_FLIP = {UPLINK: DOWNLINK, DOWNLINK: UPLINK}

# smallest singular value (relative to the largest) accepted for a direct link
_DEGENERATE_SV = 1e-8


@dataclass(frozen=True)
class AntennaConfig:
    """Antenna counts for one link direction.

    ``m_tx`` transmit antennas and ``n_rx`` receive antennas, so every
    channel matrix has shape ``(n_rx, m_tx)``.
    """

    m_tx: int
    n_rx: int

    def __post_init__(self):
        for name in ("m_tx", "n_rx"):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, np.integer)) or val < 1:
                raise InvalidArgumentError(f"{name} must be a positive integer, got {val!r}")
            object.__setattr__(self, name, int(val))

    @property
    def shape(self) -> tuple:
        return (self.n_rx, self.m_tx)

    def swapped(self) -> "AntennaConfig":
        return AntennaConfig(m_tx=self.n_rx, n_rx=self.m_tx)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Channel matrices of one link direction.

    Attributes
    ----------
    graph : InterferenceGraph
    config : AntennaConfig
    direct : dict
        ``v -> H[v, v]``.
    cross : dict
        ``(u, v) -> H[u, v]`` for interfering ordered pairs.
    link_direction : {"uplink", "downlink"}
    seed : int or None
        Seed the primal set was sampled with, kept for provenance.
    """

    graph: InterferenceGraph
    config: AntennaConfig
    direct: dict
    cross: dict
    link_direction: str = UPLINK
    seed: object = None

    def __post_init__(self):
        if self.link_direction not in _FLIP:
            raise InvalidArgumentError(f"unknown link direction {self.link_direction!r}")
        g, shape = self.graph, self.config.shape
        direct = {int(v): _frozen(h) for v, h in self.direct.items()}
        cross = {(int(u), int(v)): _frozen(h) for (u, v), h in self.cross.items()}
        if sorted(direct) != list(g.cells):
            raise InvalidArgumentError("direct channels must cover every cell exactly once")
        for (u, v) in cross:
            if not g.has_edge(u, v):
                raise InvalidArgumentError(f"cross channel ({u}, {v}) is not a graph edge")
        for key, h in list(direct.items()) + list(cross.items()):
            if h.shape != shape:
                raise InvalidArgumentError(f"channel {key} has shape {h.shape}, expected {shape}")
            if not np.all(np.isfinite(h)):
                raise InvalidArgumentError(f"channel {key} has non-finite entries")
        object.__setattr__(self, "direct", dict(sorted(direct.items())))
        object.__setattr__(self, "cross", dict(sorted(cross.items())))

    def get(self, u: int, v: int):
        """``H[u, v]`` or ``None`` if the pair does not interfere."""
        if u == v:
            return self.direct[u]
        return self.cross.get((u, v))

    def interferes(self, u: int, v: int) -> bool:
        """Whether transmitter ``v`` reaches receiver ``u`` (``u != v``)."""
        return (u, v) in self.cross

    def __eq__(self, other):
        if not isinstance(other, ChannelSet):
            return NotImplemented
        return (
            self.graph == other.graph
            and self.config == other.config
            and self.link_direction == other.link_direction
            and self.direct.keys() == other.direct.keys()
            and self.cross.keys() == other.cross.keys()
            and all(np.array_equal(h, other.direct[k]) for k, h in self.direct.items())
            and all(np.array_equal(h, other.cross[k]) for k, h in self.cross.items())
        )

    __hash__ = None


def crandn(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _draw_direct(rng, shape):
    while True:
        h = crandn(rng, shape)
        s = np.linalg.svd(h, compute_uv=False)
        if s[-1] > _DEGENERATE_SV * s[0]:
            return h


def sample_channels(g: InterferenceGraph, cfg: AntennaConfig, seed=None) -> ChannelSet:
    """Draw i.i.d. CN(0, 1) channels for every cell and interfering pair.

    Both orientations of every edge are drawn, except for one-sided graphs
    where only the link from the lower id transmitter into the higher id
    receiver exists. Direct links are redrawn on numerical rank deficiency.
    The result is tagged as uplink.
    """
    rng = np.random.default_rng(seed)
    shape = cfg.shape
    direct = {v: _draw_direct(rng, shape) for v in g.cells}
    cross = {}
    for a, b in g.edges:
        cross[(b, a)] = crandn(rng, shape)
        if not g.one_sided:
            cross[(a, b)] = crandn(rng, shape)
    return ChannelSet(g, cfg, direct, cross, UPLINK, seed)


def dual_channels(ch: ChannelSet) -> ChannelSet:
    """Reciprocal channel set: ``Hbar[v, u] = H[u, v]^H`` for every stored pair.

    Antenna roles swap, so matrices become ``(m_tx, n_rx)`` shaped, and the
    link direction flips. Applying the function twice gives back ``ch``.
    """
    direct = {v: h.conj().T for v, h in ch.direct.items()}
    cross = {(v, u): h.conj().T for (u, v), h in ch.cross.items()}
    return ChannelSet(
        ch.graph, ch.config.swapped(), direct, cross, _FLIP[ch.link_direction], ch.seed
    )
