"""Command line driver: ``cellular-ia {topology,solve,dualize,sweep}``.

Each experiment is described by one JSON config file::

    {
      "schema_version": 1,
      "topology": {"kind": "wyner", "n_cells": 8, "one_sided": true},
      "antennas": {"M": 1, "N": 1},
      "dof": 1,
      "order": {"permutation": [0, 1, 2, 3, 4, 5, 6, 7]},
      "solver": {"max_iters": 5000, "restarts": 20},
      "simulation": {"powers": [1e3, 1e6, 1e9], "distortion": 1.0},
      "seed": 7,
      "output_dir": "out"
    }

Topology kinds: ``wyner`` (``n_cells``, ``one_sided``), ``hex`` (``rows``,
``cols``, ``wrap``), ``custom`` (``n_cells``, ``edges``) and ``custom-file``
(``path`` to a graph document). Orders: ``permutation``, ``pairs`` or
``generator`` (``identity`` / ``reverse``). ``dof`` is an integer or a
``{"cell": d}`` map.

Exit codes: 0 success, 2 invalid config, 3 infeasible solve, 4 duality or
alignment violation.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import serialize as ser
from .alignment import DofAllocation, SolverOptions, solve_leakage_min
from .channels import AntennaConfig, sample_channels
from .duality import dualize, verify_duality
from .errors import AlignmentViolatedError, InvalidArgumentError, OrderIncompatibleError
from .simulate import SimulationParams, backhaul_budget, power_sweep
from .topology import (
    InterferenceGraph,
    PartialOrder,
    build_hex_grid,
    build_wyner_chain,
    orient,
    total_order,
    validate_order,
)

log = logging.getLogger("cellular_ia")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_VIOLATION = 4

PAIRED_RESIDUAL_TOL = 1e-9
SLOPE_TOL = 0.02


class ConfigError(InvalidArgumentError):
    def __init__(self, source, field, msg):
        self.field = field
        super().__init__(f"{source}: {field}: {msg}")


@dataclass
class ExperimentConfig:
    raw: dict
    source: str
    base_dir: Path

    def _get(self, path, default=KeyError):
        node = self.raw
        for key in path.split("."):
            if not isinstance(node, dict) or key not in node:
                if default is KeyError:
                    raise ConfigError(self.source, path, "missing")
                return default
            node = node[key]
        return node

    def fail(self, field, msg):
        raise ConfigError(self.source, field, msg)

    @property
    def config_hash(self) -> str:
        # output location is not part of the experiment
        body = {k: v for k, v in self.raw.items() if k != "output_dir"}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @property
    def meta(self) -> dict:
        return {"schema_version": ser.SCHEMA_VERSION, "config_hash": self.config_hash}

    @property
    def seed(self) -> int:
        return int(self._get("seed", 0))

    @property
    def output_dir(self) -> Path:
        out = Path(self._get("output_dir", "out"))
        return out if out.is_absolute() else self.base_dir / out

    def graph(self) -> InterferenceGraph:
        topo = self._get("topology")
        kind = topo.get("kind")
        try:
            if kind == "wyner":
                return build_wyner_chain(topo["n_cells"], topo.get("one_sided", True))
            if kind == "hex":
                return build_hex_grid(topo["rows"], topo["cols"], topo.get("wrap", False))
            if kind == "custom":
                return InterferenceGraph(
                    topo["n_cells"], tuple(tuple(e) for e in topo.get("edges", ())),
                    one_sided=topo.get("one_sided", False),
                )
            if kind == "custom-file":
                path = self.base_dir / topo["path"]
                if not path.exists():
                    self.fail("topology.path", f"file {path} does not exist")
                return ser.graph_from_dict(ser.load_json(path))
        except KeyError as e:
            self.fail(f"topology.{e.args[0]}", "missing")
        except InvalidArgumentError as e:
            if isinstance(e, ConfigError):
                raise
            self.fail("topology", str(e))
        self.fail("topology.kind", f"unknown kind {kind!r}")

    def antennas(self) -> AntennaConfig:
        ant = self._get("antennas")
        try:
            return AntennaConfig(m_tx=ant["M"], n_rx=ant["N"])
        except KeyError as e:
            self.fail(f"antennas.{e.args[0]}", "missing")
        except InvalidArgumentError as e:
            self.fail("antennas", str(e))

    def order(self, g: InterferenceGraph) -> PartialOrder:
        spec = self._get("order")
        n = g.n_cells
        try:
            if "permutation" in spec:
                return total_order(spec["permutation"])
            if "pairs" in spec:
                return PartialOrder(n, [tuple(p) for p in spec["pairs"]])
            gen = spec.get("generator")
            if gen == "identity":
                return total_order(range(n))
            if gen == "reverse":
                return total_order(range(n - 1, -1, -1))
        except InvalidArgumentError as e:
            self.fail("order", str(e))
        self.fail("order", "expected permutation, pairs or generator identity|reverse")

    def dof(self, n_cells: int, ant: AntennaConfig) -> DofAllocation:
        spec = self._get("dof", 1)
        try:
            if isinstance(spec, dict):
                dof = DofAllocation({int(k): v for k, v in spec.items()})
            else:
                dof = DofAllocation.uniform(n_cells, spec)
            dof.validate(n_cells, ant.m_tx, ant.n_rx)
        except (InvalidArgumentError, ValueError) as e:
            self.fail("dof", str(e))
        return dof

    def solver(self) -> SolverOptions:
        spec = dict(self._get("solver", {}))
        spec.setdefault("seed", self.seed)
        try:
            return SolverOptions(**spec)
        except TypeError as e:
            self.fail("solver", str(e))

    def powers(self) -> list:
        powers = [float(p) for p in self._get("simulation.powers")]
        if len(powers) < 3 or any(b <= a for a, b in zip(powers, powers[1:])):
            self.fail("simulation.powers", "need >= 3 strictly increasing values")
        return powers

    def distortion(self) -> float:
        return float(self._get("simulation.distortion", 1.0))


def load_config(path, seed=None, out=None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "<file>", "does not exist")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(str(path), "<file>", f"invalid JSON: {e}") from None
    if raw.get("schema_version") != ser.SCHEMA_VERSION:
        raise ConfigError(str(path), "schema_version", f"expected {ser.SCHEMA_VERSION}")
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["output_dir"] = str(Path(out).resolve())
    return ExperimentConfig(raw, str(path), path.parent)


def _write(cfg, name, obj) -> Path:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    ser.dump_json(out / name, {**obj, **cfg.meta})
    return out / name


def cmd_topology(cfg: ExperimentConfig, args) -> int:
    g = cfg.graph()
    pi = cfg.order(g)
    report = validate_order(g, pi)
    _write(cfg, "graph.json", ser.graph_to_dict(g))
    _write(cfg, "order.json", ser.order_to_dict(pi))
    _write(cfg, "validation.json", report.to_dict())
    if report:
        log.error("order leaves interfering cells incomparable: %s", list(report.incomparable))
        return EXIT_CONFIG
    log.info("topology: %d cells, %d edges, order valid", g.n_cells, len(g.edges))
    return EXIT_OK


def cmd_solve(cfg: ExperimentConfig, args) -> int:
    g = cfg.graph()
    ant = cfg.antennas()
    dof = cfg.dof(g.n_cells, ant)
    pi = cfg.order(g)
    opts = cfg.solver()
    g_pi = orient(g, pi)
    ch = sample_channels(g, ant, cfg.seed)
    bf, rep = solve_leakage_min(ch, g_pi, dof, opts)
    tol = {"zf_tol": opts.zf_tol, "rank_tol": opts.rank_tol}
    ser.save_uplink(cfg.output_dir, ch, bf, pi, tolerances=tol, meta=cfg.meta)
    _write(cfg, "conditions.json", rep.to_record())
    ser.write_csv(
        cfg.output_dir / "conditions.csv",
        [{**rep.to_record()}], list(rep.to_record()), cfg.meta,
    )
    ser.write_csv(
        cfg.output_dir / "edge_leakage.csv",
        [{"tx": a, "rx": b, "leakage": x} for (a, b), x in rep.per_edge_leakage.items()],
        ["tx", "rx", "leakage"], cfg.meta,
    )
    if not rep.feasible:
        log.error("solver infeasible: max leakage %.3e, min direct sv %.3e",
                  rep.max_leakage, rep.min_direct_sv)
        return EXIT_INFEASIBLE
    log.info("solve: feasible, max leakage %.3e", rep.max_leakage)
    return EXIT_OK


def cmd_dualize(cfg: ExperimentConfig, args) -> int:
    bundle = Path(args.bundle) if args.bundle else cfg.output_dir / "uplink.json"
    if not bundle.exists():
        raise ConfigError(str(bundle), "<bundle>", "uplink bundle does not exist")
    ch, bf, pi = ser.load_uplink(bundle)
    opts = cfg.solver()
    setup = dualize(ch, bf, pi)
    rep = verify_duality(setup, opts.zf_tol, opts.rank_tol)
    ser.save_setup(cfg.output_dir, setup, meta=cfg.meta)
    cols = ["ul_tx", "ul_rx", "dl_tx", "dl_rx", "ul_residual", "dl_residual", "abs_diff"]
    ser.write_csv(cfg.output_dir / "paired_residuals.csv", rep.rows(), cols, cfg.meta)
    _write(cfg, "duality_report.json", {
        "uplink": rep.uplink.to_record(),
        "downlink": rep.downlink.to_record(),
        "max_pair_diff": rep.max_pair_diff,
        "max_direct_sv_diff": rep.max_sv_diff,
        "paired_tol": PAIRED_RESIDUAL_TOL,
    })
    if rep.max_pair_diff > PAIRED_RESIDUAL_TOL:
        log.error("paired residuals differ by %.3e", rep.max_pair_diff)
        return EXIT_VIOLATION
    log.info("dualize: max paired difference %.3e, uplink feasible=%s, downlink feasible=%s",
             rep.max_pair_diff, rep.uplink.feasible, rep.downlink.feasible)
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    bundle = Path(args.bundle) if args.bundle else cfg.output_dir / "duality.json"
    if not bundle.exists():
        raise ConfigError(str(bundle), "<bundle>", "duality bundle does not exist")
    setup = ser.load_setup(bundle)
    powers = cfg.powers()
    dist = cfg.distortion()
    opts = cfg.solver()
    try:
        sweep = power_sweep(setup, powers, dist, opts.zf_tol, threads=args.threads)
    except AlignmentViolatedError as e:
        log.error("alignment violated at cell %d: %s", e.cell, e)
        return EXIT_VIOLATION
    cols = ["cell", "P", "D", "rate_bits", "noise_trace", "residual_interference", "dof_target"]
    for side in ("uplink", "downlink"):
        rows = [r for r in sweep.rows if r["side"] == side]
        ser.write_csv(cfg.output_dir / f"rates_{side}.csv", rows, cols, cfg.meta)
    g_dl = orient(setup.dl_channels.graph, setup.dl_order)
    p_max = powers[-1]
    bh = backhaul_budget(g_dl, setup.dl_beamformers.dof, SimulationParams(p_max, dist),
                         setup.dl_channels)
    ser.write_csv(cfg.output_dir / "backhaul.csv", bh.rows(),
                  ["src", "dst", "streams", "rate_bits"], {**cfg.meta, "P": f"{p_max:.12g}"})
    rep = verify_duality(setup, opts.zf_tol, opts.rank_tol)
    verdicts = sweep.verdicts(SLOPE_TOL)
    summary = {
        "powers": powers,
        "distortion": dist,
        "slope_tol": SLOPE_TOL,
        "feasible": {"uplink": rep.uplink.feasible, "downlink": rep.downlink.feasible},
        "cells": [
            {
                "cell": v,
                "dof_target": sweep.dof[v],
                "slope_uplink": sweep.slopes["uplink"][v],
                "slope_downlink": sweep.slopes["downlink"][v],
                "pass_uplink": verdicts["uplink"][v],
                "pass_downlink": verdicts["downlink"][v],
            }
            for v in sorted(sweep.dof)
        ],
        "backhaul_total_bits": sum(l.rate_bits for l in bh.links),
        "backhaul_ratio_to_messages": bh.ratio_to_messages(),
    }
    summary["all_pass"] = all(c["pass_uplink"] and c["pass_downlink"] for c in summary["cells"])
    _write(cfg, "summary.json", summary)
    log.info("sweep: %d powers, all slopes within %.0f%%: %s",
             len(powers), 100 * SLOPE_TOL, summary["all_pass"])
    return EXIT_OK


COMMANDS = {
    "topology": cmd_topology,
    "solve": cmd_solve,
    "dualize": cmd_dualize,
    "sweep": cmd_sweep,
}


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default, help="experiment config (JSON)")
    parser.add_argument("--seed", type=int, default=default, help="override the config seed")
    parser.add_argument("--out", metavar="DIR", default=default, help="override the output directory")
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="worker threads for power sweeps")
    parser.add_argument("-v", "--verbose", action="store_true",
                        default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellular-ia", description=__doc__.split("\n")[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        _global_flags(sp, suppress=True)
        if name in ("dualize", "sweep"):
            sp.add_argument("--bundle", metavar="PATH", default=None,
                            help="input bundle (defaults to the output directory)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.config is None:
        log.error("--config is required")
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out)
        return COMMANDS[args.command](cfg, args)
    except OrderIncompatibleError as e:
        log.error("%s", e)
        return EXIT_CONFIG
    except InvalidArgumentError as e:
        log.error("%s", e)
        return EXIT_CONFIG
    except AlignmentViolatedError as e:
        log.error("%s", e)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
