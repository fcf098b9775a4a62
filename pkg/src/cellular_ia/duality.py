"""Uplink to downlink transform for one-shot IA schemes.

Given uplink channels ``H``, filters ``(V, U)`` and decoding order ``pi``,
the downlink uses the reciprocal channels ``Hbar[v, u] = H[u, v]^H``, the
swapped filters ``Vbar = U``, ``Ubar = V`` and the reversed encoding order.
Each uplink residual ``U_u^H H[u, v] V_v`` then reappears in the downlink as
its conjugate transpose ``Ubar_v^H Hbar[v, u] Vbar_u``, so zero-forcing and
the direct-link rank carry over edge by edge.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .alignment import (
    BeamformerSet,
    ConditionReport,
    check_conditions,
    edge_residual,
    required_edges,
    ZF_TOL,
    RANK_TOL,
)
from .channels import ChannelSet, dual_channels, UPLINK, DOWNLINK
from .errors import InvalidArgumentError
from .topology import PartialOrder, orient, reverse_order

__all__ = [
    "DualitySetup",
    "PairedResidual",
    "DualityReport",
    "dual_beamformers",
    "dualize",
    "verify_duality",
]


def dual_beamformers(bf: BeamformerSet) -> BeamformerSet:
    """Swap transmit and receive roles and flip the side tag."""
    side = DOWNLINK if bf.side == UPLINK else UPLINK
    return BeamformerSet(dict(bf.rx), dict(bf.tx), side, strict=False)


@dataclass(frozen=True, eq=False)
class DualitySetup:
    """Uplink system and the downlink system derived from it."""

    ul_channels: ChannelSet
    ul_beamformers: BeamformerSet
    ul_order: PartialOrder
    dl_channels: ChannelSet
    dl_beamformers: BeamformerSet
    dl_order: PartialOrder
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        ul, dl = self.ul_channels.config, self.dl_channels.config
        if (dl.m_tx, dl.n_rx) != (ul.n_rx, ul.m_tx):
            raise InvalidArgumentError("downlink antenna roles must be the uplink ones swapped")
        for v in self.ul_channels.graph.cells:
            # Ubar^H Hbar Vbar must chain: (M x d)^H (M x N) (N x d)
            vb, ub, h = self.dl_beamformers.tx[v], self.dl_beamformers.rx[v], self.dl_channels.direct[v]
            if not (ub.shape[0] == h.shape[0] and h.shape[1] == vb.shape[0]
                    and ub.shape[1] == vb.shape[1]):
                raise InvalidArgumentError(f"cell {v}: downlink shape chain broken")


def dualize(ch_ul: ChannelSet, bf_ul: BeamformerSet, pi: PartialOrder) -> DualitySetup:
    """Build the downlink counterpart of an uplink scheme.

    Raises
    ------
    InvalidArgumentError
        If ``bf_ul`` or ``ch_ul`` is not an uplink object, or the order does
        not cover the cells of the channel graph.
    """
    if bf_ul.side != UPLINK or ch_ul.link_direction != UPLINK:
        raise InvalidArgumentError("dualize expects uplink channels and beamformers")
    if pi.n_cells != ch_ul.graph.n_cells:
        raise InvalidArgumentError("order and channel graph disagree on the cell count")
    return DualitySetup(
        ul_channels=ch_ul,
        ul_beamformers=bf_ul,
        ul_order=pi,
        dl_channels=dual_channels(ch_ul),
        dl_beamformers=dual_beamformers(bf_ul),
        dl_order=reverse_order(pi),
        provenance={"seed": ch_ul.seed, "transform": "reciprocal+swap+reverse"},
    )


@dataclass(frozen=True)
class PairedResidual:
    """Uplink edge ``(v, u)`` and its reversed downlink edge ``(u, v)``."""

    ul_edge: tuple
    dl_edge: tuple
    ul_norm: float
    dl_norm: float

    @property
    def diff(self) -> float:
        return abs(self.ul_norm - self.dl_norm)


@dataclass
class DualityReport:
    uplink: ConditionReport
    downlink: ConditionReport
    pairs: list
    direct_sv_ul: dict
    direct_sv_dl: dict

    @property
    def max_pair_diff(self) -> float:
        return max((p.diff for p in self.pairs), default=0.0)

    @property
    def max_sv_diff(self) -> float:
        return max(
            (float(np.max(np.abs(self.direct_sv_ul[v] - self.direct_sv_dl[v])))
             for v in self.direct_sv_ul),
            default=0.0,
        )

    def rows(self) -> list:
        """Per-edge records for CSV output."""
        return [
            {
                "ul_tx": p.ul_edge[0], "ul_rx": p.ul_edge[1],
                "dl_tx": p.dl_edge[0], "dl_rx": p.dl_edge[1],
                "ul_residual": p.ul_norm, "dl_residual": p.dl_norm, "abs_diff": p.diff,
            }
            for p in self.pairs
        ]


def _direct_svs(ch, bf):
    return {
        v: np.linalg.svd(bf.rx[v].conj().T @ ch.direct[v] @ bf.tx[v], compute_uv=False)
        for v in ch.graph.cells
    }


def verify_duality(
    setup: DualitySetup, zf_tol: float = ZF_TOL, rank_tol: float = RANK_TOL
) -> DualityReport:
    """Check both sides and pair every uplink residual with its downlink twin.

    The uplink side is checked against the orientation by ``ul_order`` and
    the downlink side against the orientation by ``dl_order``. Pairing does
    not assume feasibility.
    """
    g = setup.ul_channels.graph
    g_ul = orient(g, setup.ul_order, strict=False)
    g_dl = orient(g, setup.dl_order, strict=False)
    rep_ul = check_conditions(setup.ul_channels, setup.ul_beamformers, g_ul, zf_tol, rank_tol)
    rep_dl = check_conditions(setup.dl_channels, setup.dl_beamformers, g_dl, zf_tol, rank_tol)
    pairs = []
    for v, u in required_edges(setup.ul_channels, g_ul):
        ul = np.linalg.norm(edge_residual(setup.ul_channels, setup.ul_beamformers, (v, u)))
        dl = np.linalg.norm(edge_residual(setup.dl_channels, setup.dl_beamformers, (u, v)))
        pairs.append(PairedResidual((v, u), (u, v), float(ul), float(dl)))
    return DualityReport(
        uplink=rep_ul,
        downlink=rep_dl,
        pairs=pairs,
        direct_sv_ul=_direct_svs(setup.ul_channels, setup.ul_beamformers),
        direct_sv_dl=_direct_svs(setup.dl_channels, setup.dl_beamformers),
    )
