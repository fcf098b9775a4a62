"""Successive dirty-paper encoding chain, rates, DoF slopes and backhaul load.

Downlink model at receiver ``u`` with encoding order ``pi_bar``:

* cells encoded before ``u`` (predecessors) quantize their transmitted
  streams and share ``Q(X_v)`` over the backhaul; ``u`` pre-cancels the known
  part ``H[u, v] V_v Q(X_v)`` exactly (ideal DPC) and only the quantization
  error ``H[u, v] V_v (X_v - Q(X_v))`` remains, as extra Gaussian noise;
* cells encoded after ``u`` (successors) must be zero-forced by ``U_u``.

Every cell splits its power ``P`` equally over its ``d_v`` streams and the
quantizer adds independent error of variance ``D / d_v`` per stream, so the
effective noise covariance is ``I + sum_v (D / d_v) H[u, v] V_v V_v^H H[u, v]^H``.
For one stream and ``D = 1`` this is ``I + H V V^H H^H``.

Rates are log-det expressions in bits per complex symbol. Monte Carlo is
used only to confirm covariances and distortion empirically.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .alignment import BeamformerSet, DofAllocation, ZF_TOL
from .channels import ChannelSet, crandn, UPLINK, DOWNLINK
from .errors import AlignmentViolatedError, InvalidArgumentError, OrderIncompatibleError
from .topology import (
    DirectedInterferenceGraph,
    PartialOrder,
    linear_extension,
    orient,
    validate_order,
)

__all__ = [
    "SimulationParams",
    "SignalBlock",
    "EffectiveChannelReport",
    "RateReport",
    "BackhaulLink",
    "BackhaulReport",
    "ChainResult",
    "SweepResult",
    "effective_noise_covariance",
    "downlink_rate",
    "uplink_rate",
    "uplink_rates",
    "quantize",
    "run_downlink_chain",
    "dof_slope",
    "backhaul_budget",
    "power_sweep",
]

log = logging.getLogger(__name__)

NORMALIZATION = "C_z = I + sum_pred (D/d_v) H V V^H H^H; stream power P/d_v"


@dataclass(frozen=True)
class SimulationParams:
    """Power ``P``, distortion ``D`` and Monte Carlo block length.

    ``D = 0`` is accepted as the ideal (unquantized) sharing limit.
    """

    power: float
    distortion: float = 1.0
    block_len: int = 10_000
    seed: object = 0

    def __post_init__(self):
        if not np.isfinite(self.power) or self.power <= 0:
            raise InvalidArgumentError(f"power must be positive, got {self.power}")
        if not (0 <= self.distortion < self.power):
            raise InvalidArgumentError(
                f"distortion must satisfy 0 <= D < P, got D={self.distortion}, P={self.power}"
            )
        if int(self.block_len) < 1:
            raise InvalidArgumentError("block_len must be >= 1")

    def with_power(self, power: float) -> "SimulationParams":
        return SimulationParams(power, self.distortion, self.block_len, self.seed)


@dataclass
class SignalBlock:
    """Stream symbols ``X[v]`` (``d_v x n``) and shared reconstructions ``Q[v]``."""

    streams: dict = field(default_factory=dict)
    quantized: dict = field(default_factory=dict)


@dataclass
class EffectiveChannelReport:
    """What receiver ``cell`` sees after pre-cancellation of known interference.

    ``noise_cov`` and ``residual_interference_power`` are analytic; the
    ``empirical_*`` fields are filled in by :func:`run_downlink_chain`.
    """

    cell: int
    noise_cov: np.ndarray
    projected_noise_cov: np.ndarray
    direct_gain: np.ndarray
    residual_interference_power: float
    max_leakage: float
    predecessors: tuple
    successors: tuple
    normalization: str = NORMALIZATION
    empirical_noise_cov: np.ndarray | None = None
    empirical_residual_power: float | None = None
    power_breakdown: dict | None = None


@dataclass
class RateReport:
    side: str
    power: float
    rates: dict
    dof: dict

    def total(self) -> float:
        return float(sum(self.rates.values()))


@dataclass(frozen=True)
class BackhaulLink:
    src: int
    dst: int
    streams: int
    rate_bits: float
    message_rate_bits: float


@dataclass
class BackhaulReport:
    """Backhaul load of sharing quantized signals along an encoding order.

    ``message_rate_bits`` of each link is the uplink equivalent
    ``d_v * log2(P)`` of passing decoded messages instead.
    """

    links: list
    per_station: dict
    power: float
    distortion: float

    def ratio_to_messages(self) -> float:
        num = sum(l.rate_bits for l in self.links)
        den = sum(l.message_rate_bits for l in self.links)
        return num / den if den else 1.0

    def rows(self) -> list:
        return [
            {"src": l.src, "dst": l.dst, "streams": l.streams, "rate_bits": l.rate_bits}
            for l in self.links
        ]


@dataclass
class ChainResult:
    reports: dict
    rates: RateReport
    traces: SignalBlock | None
    schedule: list


def _require_side(obj, side, what):
    got = getattr(obj, "link_direction", None) or getattr(obj, "side")
    if got != side:
        raise InvalidArgumentError(f"{what} must be {side}, got {got}")


def _check_cell(ch: ChannelSet, cell):
    if not (isinstance(cell, (int, np.integer)) and 0 <= cell < ch.graph.n_cells):
        raise InvalidArgumentError(f"invalid cell {cell!r}")


def _linked(ch, g, cell):
    preds = tuple(v for v in g.predecessors(cell) if ch.interferes(cell, v))
    succs = tuple(v for v in g.successors(cell) if ch.interferes(cell, v))
    return preds, succs


def effective_noise_covariance(
    ch_dl: ChannelSet,
    bf_dl: BeamformerSet,
    g_pibar: DirectedInterferenceGraph,
    cell: int,
    params: SimulationParams,
) -> EffectiveChannelReport:
    """Analytic effective channel of downlink receiver ``cell``."""
    _require_side(ch_dl, DOWNLINK, "channels")
    _require_side(bf_dl, DOWNLINK, "beamformers")
    _check_cell(ch_dl, cell)
    preds, succs = _linked(ch_dl, g_pibar, cell)
    n_rx = ch_dl.config.n_rx
    u = bf_dl.rx[cell]
    cov = np.eye(n_rx, dtype=complex)
    for v in preds:
        hv = ch_dl.get(cell, v) @ bf_dl.tx[v]
        cov += (params.distortion / bf_dl.tx[v].shape[1]) * (hv @ hv.conj().T)
    resid, leak = 0.0, 0.0
    for v in succs:
        r = u.conj().T @ ch_dl.get(cell, v) @ bf_dl.tx[v]
        nrm = float(np.linalg.norm(r))
        leak = max(leak, nrm)
        resid += params.power / bf_dl.tx[v].shape[1] * nrm**2
    return EffectiveChannelReport(
        cell=int(cell),
        noise_cov=cov,
        projected_noise_cov=u.conj().T @ cov @ u,
        direct_gain=u.conj().T @ ch_dl.direct[cell] @ bf_dl.tx[cell],
        residual_interference_power=resid,
        max_leakage=leak,
        predecessors=preds,
        successors=succs,
    )


def _logdet_rate(gain: np.ndarray, noise: np.ndarray, p_stream: float) -> float:
    """``log2 det(I + p noise^{-1} gain gain^H)`` via two Hermitian log-dets."""
    s1, ld1 = np.linalg.slogdet(noise + p_stream * (gain @ gain.conj().T))
    s0, ld0 = np.linalg.slogdet(noise)
    return float((ld1 - ld0) / np.log(2.0))


def downlink_rate(ch_dl, bf_dl, g_pibar, cell, params, zf_tol: float = ZF_TOL) -> float:
    """Achievable downlink rate of ``cell`` in bits per complex symbol.

    Raises
    ------
    AlignmentViolatedError
        If interference from a later-encoded neighbour survives the receive
        filter by more than ``zf_tol``.
    """
    rep = effective_noise_covariance(ch_dl, bf_dl, g_pibar, cell, params)
    if rep.max_leakage > zf_tol:
        raise AlignmentViolatedError(cell, rep.max_leakage, zf_tol)
    d = bf_dl.tx[cell].shape[1]
    return _logdet_rate(rep.direct_gain, rep.projected_noise_cov, params.power / d)


def uplink_rate(ch_ul, bf_ul, g_pi, cell, params, zf_tol: float = ZF_TOL) -> float:
    """Uplink rate of ``cell`` under decoded-message passing.

    Interference from neighbours decoded earlier is regenerated from their
    messages and subtracted; neighbours decoded later must be zero-forced.
    Noise is unit-variance thermal noise only.
    """
    _require_side(ch_ul, UPLINK, "channels")
    _require_side(bf_ul, UPLINK, "beamformers")
    _check_cell(ch_ul, cell)
    _, succs = _linked(ch_ul, g_pi, cell)
    u = bf_ul.rx[cell]
    for v in succs:
        leak = float(np.linalg.norm(u.conj().T @ ch_ul.get(cell, v) @ bf_ul.tx[v]))
        if leak > zf_tol:
            raise AlignmentViolatedError(cell, leak, zf_tol)
    gain = u.conj().T @ ch_ul.direct[cell] @ bf_ul.tx[cell]
    d = bf_ul.tx[cell].shape[1]
    return _logdet_rate(gain, u.conj().T @ u, params.power / d)


def uplink_rates(ch_ul, bf_ul, pi: PartialOrder, params, zf_tol: float = ZF_TOL) -> RateReport:
    g_pi = orient(ch_ul.graph, pi)
    rates = {v: uplink_rate(ch_ul, bf_ul, g_pi, v, params, zf_tol) for v in ch_ul.graph.cells}
    return RateReport(UPLINK, params.power, rates, dict(bf_ul.dof.d))


def quantize(x: np.ndarray, params: SimulationParams, d_v: int = 1, rng=None) -> np.ndarray:
    """Additive quantizer ``Q(x) = x + e`` with ``e ~ CN(0, D / d_v)`` independent of ``x``.

    Represents a stream of power ``P / d_v`` at ``log2(1 + P / D)`` bits per
    symbol, which tends to ``log2(P / D)``.
    """
    x = np.asarray(x, dtype=complex)
    if params.distortion == 0:
        return x.copy()
    rng = np.random.default_rng(rng)
    return x + np.sqrt(params.distortion / d_v) * crandn(rng, x.shape)


def _unit_rng(seed, *index):
    base = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return np.random.default_rng(base + list(index))


def run_downlink_chain(
    ch_dl: ChannelSet,
    bf_dl: BeamformerSet,
    pi_bar: PartialOrder,
    params: SimulationParams,
    zf_tol: float = ZF_TOL,
    keep_traces: bool = True,
) -> ChainResult:
    """Monte Carlo run of successive DPC encoding over the whole network.

    Cells are visited in a linear extension of ``pi_bar``. Each draws
    Gaussian streams of power ``P / d_v`` (stand-in for its DPC output),
    quantizes them and publishes ``Q(X_v)`` to later neighbours. Every
    receiver then subtracts the known interference of its predecessors and
    the empirical effective noise and residual interference are recorded
    next to their analytic values.

    Random streams are keyed by ``(seed, kind, cell)`` so results do not
    depend on the schedule.

    Raises
    ------
    OrderIncompatibleError
        If two interfering cells are incomparable under ``pi_bar``.
    AlignmentViolatedError
        If any receiver leaks interference from a later-encoded neighbour.
    """
    _require_side(ch_dl, DOWNLINK, "channels")
    _require_side(bf_dl, DOWNLINK, "beamformers")
    check = validate_order(ch_dl.graph, pi_bar)
    if check:
        raise OrderIncompatibleError(check.incomparable)
    g = orient(ch_dl.graph, pi_bar)
    reports = {v: effective_noise_covariance(ch_dl, bf_dl, g, v, params) for v in ch_dl.graph.cells}
    for v, rep in reports.items():
        if rep.max_leakage > zf_tol:
            raise AlignmentViolatedError(v, rep.max_leakage, zf_tol)

    n = int(params.block_len)
    p = params.power
    schedule = linear_extension(pi_bar, params.seed)
    block = SignalBlock()
    sent, known = {}, {}
    for v in schedule:
        d = bf_dl.tx[v].shape[1]
        rng = _unit_rng(params.seed, 0, v)
        x = np.sqrt(p / d) * crandn(rng, (d, n))
        q = quantize(x, params, d, rng)
        block.streams[v] = x
        block.quantized[v] = q
        sent[v] = bf_dl.tx[v] @ x
        known[v] = bf_dl.tx[v] @ q

    for u in ch_dl.graph.cells:
        rep = reports[u]
        z = crandn(_unit_rng(params.seed, 1, u), (ch_dl.config.n_rx, n))
        direct = ch_dl.direct[u] @ sent[u]
        late = sum((ch_dl.get(u, v) @ sent[v] for v in rep.successors), np.zeros_like(z))
        early = sum((ch_dl.get(u, v) @ sent[v] for v in rep.predecessors), np.zeros_like(z))
        cancel = sum((ch_dl.get(u, v) @ known[v] for v in rep.predecessors), np.zeros_like(z))
        y = direct + late + early + z
        eff = y - direct - late - cancel
        rep.empirical_noise_cov = eff @ eff.conj().T / n
        proj = bf_dl.rx[u].conj().T @ late
        rep.empirical_residual_power = float(np.sum(np.abs(proj) ** 2) / n)
        rep.power_breakdown = {
            "received": float(np.sum(np.abs(y) ** 2) / n),
            "direct": float(np.sum(np.abs(direct) ** 2) / n),
            "interference": float(np.sum(np.abs(late + early) ** 2) / n),
            "noise": float(np.sum(np.abs(z) ** 2) / n),
        }

    rates = {v: downlink_rate(ch_dl, bf_dl, g, v, params, zf_tol) for v in ch_dl.graph.cells}
    rr = RateReport(DOWNLINK, p, rates, dict(bf_dl.dof.d))
    return ChainResult(reports, rr, block if keep_traces else None, schedule)


def dof_slope(rates) -> float:
    """Least-squares slope of rate (bits) against ``log2 P``.

    Parameters
    ----------
    rates : iterable of (P, rate)
        At least three distinct powers spanning at least three decades.
    """
    pts = [(float(p), float(r)) for p, r in rates]
    powers = np.array([p for p, _ in pts])
    if np.any(powers <= 0):
        raise InvalidArgumentError("powers must be positive")
    if len(np.unique(powers)) < 3 or powers.max() / powers.min() < 1e3 * (1 - 1e-12):
        raise InvalidArgumentError("need >= 3 distinct powers spanning >= 3 decades")
    x = np.log2(powers)
    y = np.array([r for _, r in pts])
    return float(np.polyfit(x, y, 1)[0])


def backhaul_budget(
    g_pibar: DirectedInterferenceGraph,
    dof: DofAllocation,
    params: SimulationParams,
    ch: ChannelSet | None = None,
) -> BackhaulReport:
    """Rate needed to share quantized signals along every directed edge.

    Cell ``v`` sends ``Q(X_v)`` to each interfering neighbour ``u`` encoded
    after it, at ``d_v * log2(P / D)`` bits per symbol. If downlink channels
    are given, neighbours that ``v`` does not actually reach are skipped.
    """
    p, dist = params.power, params.distortion
    links = []
    per_station = {v: 0.0 for v in g_pibar.base.cells}
    for u, v in g_pibar.directed_edges:
        if ch is not None and not ch.interferes(u, v):
            continue
        d = dof[v]
        rate = d * np.log2(p / dist) if dist > 0 else float("inf")
        links.append(BackhaulLink(v, u, d, float(rate), float(d * np.log2(p))))
        per_station[v] += float(rate)
    links.sort(key=lambda l: (l.src, l.dst))
    return BackhaulReport(links, per_station, p, dist)


@dataclass
class SweepResult:
    rows: list
    slopes: dict
    dof: dict

    def verdicts(self, rel_tol: float = 0.02) -> dict:
        """``side -> cell -> bool``: slope within ``rel_tol`` of the DoF target."""
        return {
            side: {v: abs(s - self.dof[v]) <= rel_tol * self.dof[v] for v, s in per.items()}
            for side, per in self.slopes.items()
        }


def _sweep_point(setup, p, distortion, zf_tol):
    params = SimulationParams(p, distortion)
    rows = []
    g_ul = orient(setup.ul_channels.graph, setup.ul_order)
    g_dl = orient(setup.dl_channels.graph, setup.dl_order)
    for v in setup.ul_channels.graph.cells:
        u = setup.ul_beamformers.rx[v]
        rate = uplink_rate(setup.ul_channels, setup.ul_beamformers, g_ul, v, params, zf_tol)
        _, succs = _linked(setup.ul_channels, g_ul, v)
        resid = sum(
            p / setup.ul_beamformers.tx[w].shape[1]
            * np.linalg.norm(u.conj().T @ setup.ul_channels.get(v, w) @ setup.ul_beamformers.tx[w]) ** 2
            for w in succs
        )
        rows.append({
            "side": UPLINK, "cell": v, "P": p, "D": distortion, "rate_bits": rate,
            "noise_trace": float(np.real(np.trace(u.conj().T @ u))),
            "residual_interference": float(resid),
            "dof_target": setup.ul_beamformers.tx[v].shape[1],
        })
    for v in setup.dl_channels.graph.cells:
        rep = effective_noise_covariance(setup.dl_channels, setup.dl_beamformers, g_dl, v, params)
        rate = downlink_rate(setup.dl_channels, setup.dl_beamformers, g_dl, v, params, zf_tol)
        rows.append({
            "side": DOWNLINK, "cell": v, "P": p, "D": distortion, "rate_bits": rate,
            "noise_trace": float(np.real(np.trace(rep.projected_noise_cov))),
            "residual_interference": rep.residual_interference_power,
            "dof_target": setup.dl_beamformers.tx[v].shape[1],
        })
    return rows


def power_sweep(setup, powers, distortion: float = 1.0, zf_tol: float = ZF_TOL, threads: int = 1) -> SweepResult:
    """Uplink and downlink rates of every cell over a list of powers.

    Sweep points are independent; with ``threads > 1`` they run in a thread
    pool. Rows come back ordered by power, then side, then cell.
    """
    powers = [float(p) for p in powers]
    if any(b <= a for a, b in zip(powers, powers[1:])):
        raise InvalidArgumentError("powers must be strictly increasing")
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            chunks = list(pool.map(lambda p: _sweep_point(setup, p, distortion, zf_tol), powers))
    else:
        chunks = [_sweep_point(setup, p, distortion, zf_tol) for p in powers]
    rows = [r for c in chunks for r in c]
    slopes: dict = {UPLINK: {}, DOWNLINK: {}}
    for side in slopes:
        for v in setup.ul_channels.graph.cells:
            pts = [(r["P"], r["rate_bits"]) for r in rows if r["side"] == side and r["cell"] == v]
            slopes[side][v] = dof_slope(pts)
    return SweepResult(rows, slopes, dict(setup.ul_beamformers.dof.d))
