"""Interference graphs, partial orders over cells and their orientations.

Cells are dense integer ids ``0 .. n_cells - 1``. An :class:`InterferenceGraph`
holds the undirected adjacency of interfering cells, a :class:`PartialOrder`
holds a strict order used as a decoding (uplink) or encoding (downlink)
schedule, and :func:`orient` combines the two into a
:class:`DirectedInterferenceGraph` whose directed edge ``[u, v]`` means that
``u`` and ``v`` interfere and ``v`` precedes ``u``.

Hexagonal grids use axial coordinates ``(q, r)``: cell ``(r, q)`` has id
``r * cols + q`` and neighbours at the six offsets in :data:`HEX_OFFSETS`.
"""
from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError, OrderIncompatibleError

__all__ = [
    "HEX_OFFSETS",
    "InterferenceGraph",
    "PartialOrder",
    "DirectedInterferenceGraph",
    "OrderReport",
    "build_wyner_chain",
    "build_hex_grid",
    "total_order",
    "reverse_order",
    "orient",
    "validate_order",
    "linear_extension",
]

#: Axial (dq, dr) offsets of the six hexagonal neighbours.
HEX_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))

MAX_CELLS = 100_000


def _check_cell_count(n_cells) -> int:
    if isinstance(n_cells, bool) or not isinstance(n_cells, (int, np.integer)):
        raise InvalidArgumentError(f"n_cells must be an integer, got {n_cells!r}")
    n_cells = int(n_cells)
    if n_cells < 1:
        raise InvalidArgumentError(f"n_cells must be >= 1, got {n_cells}")
    if n_cells > MAX_CELLS:
        raise InvalidArgumentError(f"n_cells={n_cells} exceeds limit {MAX_CELLS}")
    return n_cells


@dataclass(frozen=True)
class InterferenceGraph:
    """Undirected graph of interfering transmit-receive pairs.

    Parameters
    ----------
    n_cells : int
        Number of cells; ids are ``range(n_cells)``.
    edges : iterable of (int, int)
        Interfering pairs. Normalised to ``(min, max)`` and sorted.
    one_sided : bool
        Metadata for channel generation: interference only flows from the
        lower id to the higher id of each edge (Wyner-style chains).
    kind : str
        Free-form label of the generator that produced the graph.
    """

    n_cells: int
    edges: tuple = ()
    one_sided: bool = False
    kind: str = "custom"
    _adj: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = _check_cell_count(self.n_cells)
        norm = set()
        for e in self.edges:
            u, v = (int(x) for x in e)
            if u == v:
                raise InvalidArgumentError(f"self-loop on cell {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidArgumentError(f"edge ({u}, {v}) outside [0, {n})")
            key = (min(u, v), max(u, v))
            if key in norm:
                raise InvalidArgumentError(f"duplicate edge {key}")
            norm.add(key)
        edges = tuple(sorted(norm))
        adj = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "n_cells", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "one_sided", bool(self.one_sided))
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

    @property
    def cells(self) -> range:
        return range(self.n_cells)

    def neighbors(self, v: int) -> tuple:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def to_dict(self) -> dict:
        return {
            "n_cells": self.n_cells,
            "edges": [list(e) for e in self.edges],
            "one_sided": self.one_sided,
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InterferenceGraph":
        return cls(
            n_cells=data["n_cells"],
            edges=tuple(tuple(e) for e in data.get("edges", ())),
            one_sided=data.get("one_sided", False),
            kind=data.get("kind", "custom"),
        )


def build_wyner_chain(n_cells: int, one_sided: bool = True) -> InterferenceGraph:
    """Linear chain ``0 - 1 - ... - (n_cells-1)``.

    With ``one_sided`` the graph is flagged so that channel generation only
    draws the links from cell ``i`` into cell ``i + 1``.
    """
    n = _check_cell_count(n_cells)
    edges = tuple((i, i + 1) for i in range(n - 1))
    return InterferenceGraph(n, edges, one_sided=one_sided, kind="wyner")


def build_hex_grid(rows: int, cols: int, wrap: bool = False) -> InterferenceGraph:
    """Axial hexagonal lattice of ``rows x cols`` cells.

    Cell ``(r, q)`` has id ``r * cols + q`` and is adjacent to ``(r + dr, q + dq)``
    for each ``(dq, dr)`` in :data:`HEX_OFFSETS`. With ``wrap`` the lattice is a
    torus and every cell has exactly six neighbours, which needs
    ``rows >= 3`` and ``cols >= 3`` (smaller tori fold neighbours onto each
    other).
    """
    for name, val in (("rows", rows), ("cols", cols)):
        if isinstance(val, bool) or not isinstance(val, (int, np.integer)) or val < 1:
            raise InvalidArgumentError(f"{name} must be a positive integer, got {val!r}")
    rows, cols = int(rows), int(cols)
    if rows * cols > MAX_CELLS:
        raise InvalidArgumentError(f"{rows}x{cols} grid exceeds {MAX_CELLS} cells")
    if wrap and (rows < 3 or cols < 3):
        raise InvalidArgumentError("wrapped hex grid needs rows >= 3 and cols >= 3")
    edges = set()
    for r in range(rows):
        for q in range(cols):
            a = r * cols + q
            for dq, dr in HEX_OFFSETS:
                rr, qq = r + dr, q + dq
                if wrap:
                    rr, qq = rr % rows, qq % cols
                elif not (0 <= rr < rows and 0 <= qq < cols):
                    continue
                b = rr * cols + qq
                edges.add((min(a, b), max(a, b)))
    return InterferenceGraph(rows * cols, tuple(edges), kind="hex")


class PartialOrder:
    """Strict partial order over ``range(n_cells)``.

    Stored as the generating precedence pairs plus the transitive closure as
    a boolean matrix ``before`` with ``before[u, v]`` true iff ``u`` precedes
    ``v``. Instances are immutable.

    Parameters
    ----------
    n_cells : int
        Size of the carrier set.
    pairs : iterable of (int, int)
        Generating pairs ``(u, v)`` meaning ``u`` precedes ``v``.

    Raises
    ------
    InvalidArgumentError
        If a pair is out of range or the pairs contain a cycle.
    """

    __slots__ = ("_n", "_pairs", "_before")

    def __init__(self, n_cells: int, pairs: Iterable = ()):
        n = _check_cell_count(n_cells)
        clean = set()
        for p in pairs:
            u, v = (int(x) for x in p)
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidArgumentError(f"pair ({u}, {v}) outside [0, {n})")
            if u == v:
                raise InvalidArgumentError(f"cell {u} cannot precede itself")
            clean.add((u, v))
        before = np.zeros((n, n), dtype=bool)
        for u, v in clean:
            before[u, v] = True
        # Warshall closure
        for k in range(n):
            before |= before[:, k : k + 1] & before[k : k + 1, :]
        if before.diagonal().any():
            cyc = np.flatnonzero(before.diagonal()).tolist()
            raise InvalidArgumentError(f"precedence pairs contain a cycle through {cyc}")
        before.setflags(write=False)
        self._n = n
        self._pairs = tuple(sorted(clean))
        self._before = before

    @property
    def n_cells(self) -> int:
        return self._n

    @property
    def pairs(self) -> tuple:
        """Generating precedence pairs, sorted."""
        return self._pairs

    @property
    def before(self) -> np.ndarray:
        """Read-only closure matrix; ``before[u, v]`` iff ``u`` precedes ``v``."""
        return self._before

    def precedes(self, u: int, v: int) -> bool:
        return bool(self._before[u, v])

    def comparable(self, u: int, v: int) -> bool:
        return bool(self._before[u, v] or self._before[v, u])

    def relation(self) -> set:
        """All pairs of the closed relation."""
        return {(int(u), int(v)) for u, v in zip(*np.nonzero(self._before))}

    def is_total(self) -> bool:
        n = self._n
        return int(self._before.sum()) == n * (n - 1) // 2

    def with_pairs(self, extra: Iterable) -> "PartialOrder":
        return PartialOrder(self._n, list(self._pairs) + list(extra))

    def __eq__(self, other):
        if not isinstance(other, PartialOrder):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._before, other._before)

    def __hash__(self):
        return hash((self._n, self._before.tobytes()))

    def __repr__(self):
        return f"PartialOrder(n_cells={self._n}, pairs={list(self._pairs)})"

    def to_dict(self) -> dict:
        return {"n_cells": self._n, "pairs": [list(p) for p in self._pairs]}

    @classmethod
    def from_dict(cls, data: dict) -> "PartialOrder":
        if "permutation" in data:
            perm = data["permutation"]
            if "n_cells" in data and int(data["n_cells"]) != len(perm):
                raise InvalidArgumentError("permutation length differs from n_cells")
            return total_order(perm)
        return cls(data["n_cells"], [tuple(p) for p in data.get("pairs", ())])


def total_order(perm: Sequence[int]) -> PartialOrder:
    """Total order in which ``perm[i]`` precedes ``perm[j]`` for ``i < j``."""
    perm = [int(x) for x in perm]
    n = len(perm)
    if n == 0 or sorted(perm) != list(range(n)):
        raise InvalidArgumentError(f"{perm} is not a permutation of range({n})")
    return PartialOrder(n, zip(perm[:-1], perm[1:]))


def reverse_order(pi: PartialOrder) -> PartialOrder:
    """Inverse order: ``u`` precedes ``v`` in the result iff ``v`` precedes ``u`` in ``pi``."""
    return PartialOrder(pi.n_cells, [(v, u) for u, v in pi.pairs])


@dataclass(frozen=True)
class DirectedInterferenceGraph:
    """Orientation of an interference graph by a partial order.

    ``directed_edges`` holds ``(u, v)`` for every interfering pair with ``v``
    preceding ``u``. Receiver ``u`` of such an edge has already seen ``v``
    handled by the backhaul; receiver ``v`` must zero-force transmitter ``u``.
    """

    base: InterferenceGraph
    order: PartialOrder
    directed_edges: tuple

    def predecessors(self, u: int) -> tuple:
        """Neighbours of ``u`` that precede it."""
        return tuple(v for v in self.base.neighbors(u) if self.order.precedes(v, u))

    def successors(self, u: int) -> tuple:
        """Neighbours of ``u`` that come after it."""
        return tuple(v for v in self.base.neighbors(u) if self.order.precedes(u, v))


@dataclass(frozen=True)
class OrderReport:
    """Adjacent pairs left incomparable by an order; empty means usable."""

    incomparable: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.incomparable

    def __bool__(self):
        return bool(self.incomparable)

    def __len__(self):
        return len(self.incomparable)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "incomparable": [list(e) for e in self.incomparable]}


def _check_carrier(g: InterferenceGraph, pi: PartialOrder):
    if g.n_cells != pi.n_cells:
        raise InvalidArgumentError(
            f"order carrier has {pi.n_cells} cells, graph has {g.n_cells}"
        )


def validate_order(g: InterferenceGraph, pi: PartialOrder) -> OrderReport:
    """List every edge of ``g`` whose endpoints ``pi`` does not compare."""
    _check_carrier(g, pi)
    bad = tuple(e for e in g.edges if not pi.comparable(*e))
    return OrderReport(bad)


def orient(
    g: InterferenceGraph, pi: PartialOrder, strict: bool = True
) -> DirectedInterferenceGraph:
    """Directed interference graph ``{[u, v] : {u, v} in E and v precedes u}``.

    Parameters
    ----------
    g : InterferenceGraph
    pi : PartialOrder
        Must have the same carrier as ``g``.
    strict : bool
        If true (default) every edge must be comparable under ``pi``;
        otherwise incomparable edges are left out of the orientation.

    Raises
    ------
    OrderIncompatibleError
        In strict mode, naming the incomparable edges.
    """
    _check_carrier(g, pi)
    if strict:
        report = validate_order(g, pi)
        if report:
            raise OrderIncompatibleError(report.incomparable)
    directed = []
    for a, b in g.edges:
        if pi.precedes(b, a):
            directed.append((a, b))
        elif pi.precedes(a, b):
            directed.append((b, a))
    return DirectedInterferenceGraph(g, pi, tuple(sorted(directed)))


def linear_extension(pi: PartialOrder, seed=None) -> list:
    """A random topological ordering of ``pi``.

    Ties among available cells are broken by a generator seeded with
    ``seed``, so the output is reproducible for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    ts = graphlib.TopologicalSorter()
    for v in range(pi.n_cells):
        ts.add(v)
    for u, v in pi.pairs:
        ts.add(v, u)
    ts.prepare()
    pool: list = []
    out = []
    while ts.is_active():
        pool.extend(ts.get_ready())
        pool.sort()
        x = pool.pop(int(rng.integers(len(pool))))
        out.append(x)
        ts.done(x)
    return out
