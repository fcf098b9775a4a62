"""JSON and CSV formats for graphs, orders, channels, beamformers and reports.

Complex matrices are stored as ``{"shape": [rows, cols], "data": [[re, im], ...]}``
with entries in row-major order. Python's float repr round-trips exactly, so
``load(dump(x)) == x`` bit for bit. Every document carries
``schema_version``.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .alignment import BeamformerSet
from .channels import AntennaConfig, ChannelSet
from .duality import DualitySetup
from .errors import InvalidArgumentError
from .topology import InterferenceGraph, PartialOrder

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "encode_matrix",
    "decode_matrix",
    "graph_to_dict",
    "graph_from_dict",
    "order_to_dict",
    "order_from_dict",
    "channels_to_dict",
    "channels_from_dict",
    "beamformers_to_dict",
    "beamformers_from_dict",
    "dump_json",
    "load_json",
    "write_csv",
    "read_csv",
    "save_setup",
    "load_setup",
    "save_uplink",
    "load_uplink",
]


def encode_matrix(a) -> dict:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise InvalidArgumentError(f"expected a 2-d matrix, got shape {a.shape}")
    return {
        "shape": list(a.shape),
        "data": [[float(z.real), float(z.imag)] for z in a.ravel(order="C")],
    }


def decode_matrix(d: dict) -> np.ndarray:
    rows, cols = (int(x) for x in d["shape"])
    data = d["data"]
    if len(data) != rows * cols:
        raise InvalidArgumentError(f"matrix data has {len(data)} entries, expected {rows * cols}")
    flat = np.array([complex(re, im) for re, im in data], dtype=complex)
    return flat.reshape(rows, cols)


def _doc(kind: str, body: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "document": kind, **body}


def _check_doc(d: dict, kind: str):
    if d.get("schema_version") != SCHEMA_VERSION:
        raise InvalidArgumentError(f"unsupported schema_version {d.get('schema_version')!r}")
    if d.get("document", kind) != kind:
        raise InvalidArgumentError(f"expected a {kind} document, got {d.get('document')!r}")


def graph_to_dict(g: InterferenceGraph) -> dict:
    return _doc("graph", g.to_dict())


def graph_from_dict(d: dict) -> InterferenceGraph:
    _check_doc(d, "graph")
    return InterferenceGraph.from_dict(d)


def order_to_dict(pi: PartialOrder) -> dict:
    return _doc("order", pi.to_dict())


def order_from_dict(d: dict) -> PartialOrder:
    _check_doc(d, "order")
    return PartialOrder.from_dict(d)


def _seed_out(seed):
    if seed is None or isinstance(seed, (int, np.integer)):
        return None if seed is None else int(seed)
    return [int(s) for s in seed]


def channels_to_dict(ch: ChannelSet) -> dict:
    return _doc("channels", {
        "graph": ch.graph.to_dict(),
        "config": {"m_tx": ch.config.m_tx, "n_rx": ch.config.n_rx},
        "link_direction": ch.link_direction,
        "seed": _seed_out(ch.seed),
        "direct": [{"cell": v, "matrix": encode_matrix(h)} for v, h in ch.direct.items()],
        "cross": [
            {"rx": u, "tx": v, "matrix": encode_matrix(h)} for (u, v), h in ch.cross.items()
        ],
    })


def channels_from_dict(d: dict) -> ChannelSet:
    _check_doc(d, "channels")
    return ChannelSet(
        graph=InterferenceGraph.from_dict(d["graph"]),
        config=AntennaConfig(**d["config"]),
        direct={e["cell"]: decode_matrix(e["matrix"]) for e in d["direct"]},
        cross={(e["rx"], e["tx"]): decode_matrix(e["matrix"]) for e in d["cross"]},
        link_direction=d["link_direction"],
        seed=d.get("seed"),
    )


def beamformers_to_dict(bf: BeamformerSet, channels_ref=None, tolerances=None) -> dict:
    return _doc("beamformers", {
        "side": bf.side,
        "channels_ref": channels_ref,
        "tolerances": tolerances or {},
        "cells": [
            {"cell": v, "tx": encode_matrix(bf.tx[v]), "rx": encode_matrix(bf.rx[v])}
            for v in bf.tx
        ],
    })


def beamformers_from_dict(d: dict, strict: bool = False) -> BeamformerSet:
    """Rebuild a beamformer set; orthonormality is only enforced with ``strict``."""
    _check_doc(d, "beamformers")
    tx = {e["cell"]: decode_matrix(e["tx"]) for e in d["cells"]}
    rx = {e["cell"]: decode_matrix(e["rx"]) for e in d["cells"]}
    return BeamformerSet(tx, rx, d["side"], strict=strict)


def dump_json(path, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=1, sort_keys=True)
        f.write("\n")


def load_json(path) -> dict:
    with open(path) as f:
        return json.load(f)


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def write_csv(path, rows, columns, meta: dict | None = None) -> None:
    """CSV with a leading ``# key=value`` provenance line when ``meta`` is given.

    Floats are written with 12 significant digits.
    """
    with open(path, "w", newline="") as f:
        if meta:
            f.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def read_csv(path) -> list:
    with open(path, newline="") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _with_meta(doc: dict, meta: dict | None) -> dict:
    return {**doc, "provenance": dict(meta)} if meta else doc


def save_setup(directory, setup: DualitySetup, meta: dict | None = None) -> Path:
    """Write both sides' channels and beamformers plus a bundle referencing them."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {
        "uplink": ("uplink_channels.json", "uplink_beamformers.json"),
        "downlink": ("downlink_channels.json", "downlink_beamformers.json"),
    }
    sides = {
        "uplink": (setup.ul_channels, setup.ul_beamformers, setup.ul_order),
        "downlink": (setup.dl_channels, setup.dl_beamformers, setup.dl_order),
    }
    bundle = _doc("duality", {"provenance": {**_jsonable(setup.provenance), **(meta or {})}})
    for side, (ch, bf, pi) in sides.items():
        ch_file, bf_file = files[side]
        dump_json(directory / ch_file, _with_meta(channels_to_dict(ch), meta))
        dump_json(directory / bf_file, _with_meta(beamformers_to_dict(bf, channels_ref=ch_file), meta))
        bundle[side] = {"channels": ch_file, "beamformers": bf_file, "order": pi.to_dict()}
    path = directory / "duality.json"
    dump_json(path, bundle)
    return path


def load_setup(path) -> DualitySetup:
    path = Path(path)
    d = load_json(path)
    _check_doc(d, "duality")
    base = path.parent
    parts = {}
    for side in ("uplink", "downlink"):
        s = d[side]
        parts[side] = (
            channels_from_dict(load_json(base / s["channels"])),
            beamformers_from_dict(load_json(base / s["beamformers"])),
            PartialOrder.from_dict(s["order"]),
        )
    return DualitySetup(*parts["uplink"], *parts["downlink"], provenance=d.get("provenance", {}))


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.integer,)):
            v = int(v)
        elif isinstance(v, (list, tuple)):
            v = [int(x) if isinstance(x, np.integer) else x for x in v]
        out[k] = v
    return out


def save_uplink(directory, ch: ChannelSet, bf: BeamformerSet, pi: PartialOrder,
                tolerances: dict | None = None, meta: dict | None = None) -> Path:
    """Write uplink channels and beamformers plus an ``uplink.json`` bundle."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dump_json(directory / "uplink_channels.json", _with_meta(channels_to_dict(ch), meta))
    dump_json(directory / "uplink_beamformers.json", _with_meta(
        beamformers_to_dict(bf, channels_ref="uplink_channels.json", tolerances=tolerances), meta))
    path = directory / "uplink.json"
    dump_json(path, _doc("uplink", {
        "channels": "uplink_channels.json",
        "beamformers": "uplink_beamformers.json",
        "order": pi.to_dict(),
        "provenance": meta or {},
    }))
    return path


def load_uplink(path):
    """Inverse of :func:`save_uplink`; returns ``(channels, beamformers, order)``."""
    path = Path(path)
    d = load_json(path)
    _check_doc(d, "uplink")
    base = path.parent
    return (
        channels_from_dict(load_json(base / d["channels"])),
        beamformers_from_dict(load_json(base / d["beamformers"])),
        PartialOrder.from_dict(d["order"]),
    )
