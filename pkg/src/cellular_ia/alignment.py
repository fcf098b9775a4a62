"""One-shot linear IA: beamformer sets, feasibility checks and a leakage solver.

For a directed interference graph every directed edge ``[a, b]`` (``b``
precedes ``a``) asks receiver ``b`` to zero-force transmitter ``a``, which
``b`` cannot cancel through the backhaul because ``a`` comes later in the
schedule. The residual of that edge is ``U_b^H H[b, a] V_a``. The same
bookkeeping applies to uplink sets (decoding order) and downlink sets
(encoding order).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, InitVar

import numpy as np

from .channels import ChannelSet, crandn, UPLINK, DOWNLINK
from .errors import InvalidArgumentError
from .topology import DirectedInterferenceGraph

__all__ = [
    "DofAllocation",
    "BeamformerSet",
    "ConditionReport",
    "SolverOptions",
    "required_edges",
    "edge_residual",
    "check_conditions",
    "total_leakage",
    "alternating_leakage_min",
    "solve_leakage_min",
    "random_beamformers",
    "analytic_three_cycle",
    "phase_normalize",
]

log = logging.getLogger(__name__)

ZF_TOL = 1e-8
RANK_TOL = 1e-6
ORTHONORMAL_TOL = 1e-10


@dataclass(frozen=True)
class DofAllocation:
    """Number of streams ``d[v]`` carried in each cell."""

    d: dict

    def __post_init__(self):
        clean = {}
        for v, dv in self.d.items():
            if isinstance(dv, bool) or not isinstance(dv, (int, np.integer)) or dv < 1:
                raise InvalidArgumentError(f"d[{v}] must be a positive integer, got {dv!r}")
            clean[int(v)] = int(dv)
        object.__setattr__(self, "d", dict(sorted(clean.items())))

    @classmethod
    def uniform(cls, n_cells: int, d: int = 1) -> "DofAllocation":
        return cls({v: d for v in range(n_cells)})

    def __getitem__(self, v: int) -> int:
        return self.d[v]

    def validate(self, n_cells: int, m_tx: int, n_rx: int) -> None:
        if sorted(self.d) != list(range(n_cells)):
            raise InvalidArgumentError("DoF allocation must cover every cell")
        cap = min(m_tx, n_rx)
        for v, dv in self.d.items():
            if dv > cap:
                raise InvalidArgumentError(f"d[{v}]={dv} exceeds min(M, N)={cap}")


def phase_normalize(a: np.ndarray) -> np.ndarray:
    """Rotate each column so its first nonzero entry is real and positive."""
    a = np.array(a, dtype=complex)
    for j in range(a.shape[1]):
        col = a[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-14)
        if nz.size:
            c = col[nz[0]]
            a[:, j] = col * (np.conj(c) / abs(c))
    return a


def _is_orthonormal(a: np.ndarray, tol: float = ORTHONORMAL_TOL) -> bool:
    gram = a.conj().T @ a
    return bool(np.max(np.abs(gram - np.eye(a.shape[1]))) <= tol)


@dataclass(frozen=True, eq=False)
class BeamformerSet:
    """Transmit ``tx[v]`` (``m_tx x d_v``) and receive ``rx[u]`` (``n_rx x d_u``) filters.

    With ``strict`` (the default) every filter must have orthonormal columns.
    Loading a hand-edited file may need ``strict=False``; the residual
    identities still hold for arbitrary matrices.
    """

    tx: dict
    rx: dict
    side: str = UPLINK
    strict: InitVar[bool] = True

    def __post_init__(self, strict):
        if self.side not in (UPLINK, DOWNLINK):
            raise InvalidArgumentError(f"unknown side {self.side!r}")
        tx = {int(v): np.array(a, dtype=complex) for v, a in self.tx.items()}
        rx = {int(v): np.array(a, dtype=complex) for v, a in self.rx.items()}
        if tx.keys() != rx.keys():
            raise InvalidArgumentError("tx and rx filters must cover the same cells")
        for v in tx:
            if tx[v].ndim != 2 or rx[v].ndim != 2 or tx[v].shape[1] != rx[v].shape[1]:
                raise InvalidArgumentError(f"cell {v}: tx/rx stream counts differ")
            if strict and not (_is_orthonormal(tx[v]) and _is_orthonormal(rx[v])):
                raise InvalidArgumentError(f"cell {v}: filters are not orthonormal")
            tx[v].setflags(write=False)
            rx[v].setflags(write=False)
        object.__setattr__(self, "tx", dict(sorted(tx.items())))
        object.__setattr__(self, "rx", dict(sorted(rx.items())))

    @property
    def dof(self) -> DofAllocation:
        return DofAllocation({v: a.shape[1] for v, a in self.tx.items()})

    def is_orthonormal(self, tol: float = ORTHONORMAL_TOL) -> bool:
        return all(_is_orthonormal(a, tol) for a in list(self.tx.values()) + list(self.rx.values()))

    def __eq__(self, other):
        if not isinstance(other, BeamformerSet):
            return NotImplemented
        return (
            self.side == other.side
            and self.tx.keys() == other.tx.keys()
            and all(np.array_equal(a, other.tx[v]) for v, a in self.tx.items())
            and all(np.array_equal(a, other.rx[v]) for v, a in self.rx.items())
        )

    __hash__ = None


@dataclass
class ConditionReport:
    """Outcome of checking the zero-forcing and rank conditions.

    ``per_edge_leakage`` is keyed by the directed edge ``(a, b)`` and holds
    ``||U_b^H H[b, a] V_a||_F``. ``direct_sv[v]`` is the ``d_v``-th singular
    value of ``U_v^H H[v, v] V_v``.
    """

    max_leakage: float
    per_edge_leakage: dict
    min_direct_sv: float
    direct_sv: dict
    zf_tol: float
    rank_tol: float
    side: str = UPLINK
    feasible: bool = field(init=False)

    def __post_init__(self):
        self.feasible = bool(self.max_leakage < self.zf_tol and self.min_direct_sv > self.rank_tol)

    def to_record(self) -> dict:
        """Flat key-value record for CSV aggregation."""
        return {
            "side": self.side,
            "feasible": self.feasible,
            "max_leakage": self.max_leakage,
            "min_direct_sv": self.min_direct_sv,
            "n_edges": len(self.per_edge_leakage),
            "zf_tol": self.zf_tol,
            "rank_tol": self.rank_tol,
        }


def required_edges(ch: ChannelSet, g_pi: DirectedInterferenceGraph) -> list:
    """Directed edges ``(a, b)`` of ``g_pi`` whose link ``a -> b`` actually exists."""
    return [(a, b) for a, b in g_pi.directed_edges if ch.interferes(b, a)]


def edge_residual(ch: ChannelSet, bf: BeamformerSet, edge) -> np.ndarray:
    """``U_b^H H[b, a] V_a`` for the directed edge ``(a, b)``."""
    a, b = edge
    h = ch.get(b, a)
    if h is None:
        return np.zeros((bf.rx[b].shape[1], bf.tx[a].shape[1]), dtype=complex)
    return bf.rx[b].conj().T @ h @ bf.tx[a]


def _check_shapes(ch: ChannelSet, bf: BeamformerSet):
    if bf.side != ch.link_direction:
        raise InvalidArgumentError(
            f"beamformers are {bf.side} but channels are {ch.link_direction}"
        )
    cfg = ch.config
    if sorted(bf.tx) != list(ch.graph.cells):
        raise InvalidArgumentError("beamformers must cover every cell of the channel graph")
    for v in bf.tx:
        d = bf.tx[v].shape[1]
        if bf.tx[v].shape != (cfg.m_tx, d) or bf.rx[v].shape != (cfg.n_rx, d):
            raise InvalidArgumentError(
                f"cell {v}: tx {bf.tx[v].shape}, rx {bf.rx[v].shape} do not match "
                f"M={cfg.m_tx}, N={cfg.n_rx}, d={d}"
            )


def check_conditions(
    ch: ChannelSet,
    bf: BeamformerSet,
    g_pi: DirectedInterferenceGraph,
    zf_tol: float = ZF_TOL,
    rank_tol: float = RANK_TOL,
) -> ConditionReport:
    """Evaluate zero-forcing on every required edge and the direct-link rank."""
    _check_shapes(ch, bf)
    if g_pi.base.n_cells != ch.graph.n_cells:
        raise InvalidArgumentError("directed graph and channels disagree on the cell count")
    per_edge = {
        e: float(np.linalg.norm(edge_residual(ch, bf, e))) for e in required_edges(ch, g_pi)
    }
    direct_sv = {}
    for v in ch.graph.cells:
        g = bf.rx[v].conj().T @ ch.direct[v] @ bf.tx[v]
        direct_sv[v] = float(np.linalg.svd(g, compute_uv=False)[-1])
    return ConditionReport(
        max_leakage=max(per_edge.values(), default=0.0),
        per_edge_leakage=per_edge,
        min_direct_sv=min(direct_sv.values()),
        direct_sv=direct_sv,
        zf_tol=zf_tol,
        rank_tol=rank_tol,
        side=bf.side,
    )


def total_leakage(ch: ChannelSet, bf: BeamformerSet, edges) -> float:
    """Sum of squared Frobenius norms of the residuals over ``edges``."""
    return float(sum(np.linalg.norm(edge_residual(ch, bf, e)) ** 2 for e in edges))


def _orthonormal(rng, rows, cols):
    q, _ = np.linalg.qr(crandn(rng, (rows, cols)))
    return phase_normalize(q)


def random_beamformers(ch: ChannelSet, dof: DofAllocation, rng=None) -> BeamformerSet:
    """Independent random orthonormal filters for every cell."""
    rng = np.random.default_rng(rng)
    cfg = ch.config
    tx, rx = {}, {}
    for v in ch.graph.cells:
        tx[v] = _orthonormal(rng, cfg.m_tx, dof[v])
        rx[v] = _orthonormal(rng, cfg.n_rx, dof[v])
    return BeamformerSet(tx, rx, ch.link_direction)


def _least_eigvecs(q: np.ndarray, d: int) -> np.ndarray:
    _, vecs = np.linalg.eigh(q)
    return phase_normalize(vecs[:, :d])


@dataclass
class SolverOptions:
    max_iters: int = 5000
    conv_tol: float = 1e-24
    zf_tol: float = ZF_TOL
    rank_tol: float = RANK_TOL
    seed: object = 0
    restarts: int = 20


def alternating_leakage_min(ch: ChannelSet, edges, bf0: BeamformerSet, max_iters=5000, conv_tol=1e-24):
    """Alternating minimisation of the total leakage over ``edges``.

    Receive filters are updated first (with transmit filters fixed), then
    transmit filters. Cells that no edge constrains keep their current
    filters.

    Returns
    -------
    bf : BeamformerSet
    history : list of float
        Total leakage before the first iteration and after each iteration.
    """
    tx = dict(bf0.tx)
    rx = dict(bf0.rx)
    by_rx: dict = {}
    by_tx: dict = {}
    for a, b in edges:
        h = ch.get(b, a)
        by_rx.setdefault(b, []).append((a, h))
        by_tx.setdefault(a, []).append((b, h))

    def leakage():
        return float(sum(
            np.linalg.norm(rx[b].conj().T @ h @ tx[a]) ** 2
            for b, lst in by_rx.items() for a, h in lst
        ))

    history = [leakage()]
    for _ in range(max_iters):
        if history[-1] == 0.0:
            break
        for b, lst in by_rx.items():
            q = sum(h @ tx[a] @ tx[a].conj().T @ h.conj().T for a, h in lst)
            rx[b] = _least_eigvecs(q, rx[b].shape[1])
        for a, lst in by_tx.items():
            q = sum(h.conj().T @ rx[b] @ rx[b].conj().T @ h for b, h in lst)
            tx[a] = _least_eigvecs(q, tx[a].shape[1])
        history.append(leakage())
        if history[-2] - history[-1] < conv_tol:
            break
    return BeamformerSet(tx, rx, bf0.side), history


def solve_leakage_min(
    ch: ChannelSet,
    g_pi: DirectedInterferenceGraph,
    dof: DofAllocation,
    opts: SolverOptions | None = None,
):
    """Find filters meeting the one-shot IA conditions by leakage minimisation.

    Runs :func:`alternating_leakage_min` from a random orthonormal start and
    restarts from a fresh start (at most ``opts.restarts`` times) until the
    result is feasible. Restart ``k`` draws from the stream
    ``(opts.seed, k)``.

    Returns
    -------
    bf : BeamformerSet
        The first feasible solution, or else the one with the lowest
        maximum leakage (earliest restart on ties).
    report : ConditionReport
        Check of ``bf``; ``feasible`` is false if no restart succeeded.
    """
    opts = opts or SolverOptions()
    cfg = ch.config
    dof.validate(ch.graph.n_cells, cfg.m_tx, cfg.n_rx)
    edges = required_edges(ch, g_pi)
    best = None
    for k in range(opts.restarts + 1):
        rng = np.random.default_rng(_stream(opts.seed, k))
        bf0 = random_beamformers(ch, dof, rng)
        bf, hist = alternating_leakage_min(ch, edges, bf0, opts.max_iters, opts.conv_tol)
        rep = check_conditions(ch, bf, g_pi, opts.zf_tol, opts.rank_tol)
        log.debug("restart %d: %d iterations, max leakage %.3e, feasible=%s",
                  k, len(hist) - 1, rep.max_leakage, rep.feasible)
        if rep.feasible:
            return bf, rep
        if best is None or rep.max_leakage < best[1].max_leakage:
            best = (bf, rep)
    log.info("no feasible solution after %d restarts", opts.restarts)
    return best


def _stream(seed, k):
    if seed is None:
        return None
    seed = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return seed + [k]


def analytic_three_cycle(ch: ChannelSet, rng=None) -> BeamformerSet:
    """Closed-form alignment for three mutually interfering cells, one stream each.

    Assumes the order ``0 < 1 < 2`` on an uplink set with ``M = N = 2``:
    receiver 0 zero-forces transmitters 1 and 2, receiver 1 zero-forces
    transmitter 2. Transmitter 2 is steered so that both interferers arrive
    at receiver 0 along the same direction, which receiver 0 then nulls.
    Unconstrained filters (``V_0``, ``U_2`` and the seed ``V_1``) are random.
    """
    cfg = ch.config
    if (cfg.m_tx, cfg.n_rx) != (2, 2) or ch.graph.n_cells != 3:
        raise InvalidArgumentError("analytic construction needs 3 cells with M = N = 2")
    rng = np.random.default_rng(rng)

    def unit(x):
        return phase_normalize(x / np.linalg.norm(x))

    def null(x):
        # unit vector orthogonal to the 2-vector x
        return unit(np.array([[-np.conj(x[1, 0])], [np.conj(x[0, 0])]]))

    h = ch.get
    v1 = unit(crandn(rng, (2, 1)))
    v2 = unit(np.linalg.solve(h(0, 2), h(0, 1) @ v1))
    v0 = unit(crandn(rng, (2, 1)))
    u0 = null(h(0, 1) @ v1)
    u1 = null(h(1, 2) @ v2)
    u2 = unit(crandn(rng, (2, 1)))
    return BeamformerSet({0: v0, 1: v1, 2: v2}, {0: u0, 1: u1, 2: u2}, ch.link_direction)
