"""Cellular interference alignment with local backhaul cooperation.

Build interference graphs and decoding/encoding orders, find one-shot IA
beamformers, map an uplink scheme to its downlink dual and simulate the
successive dirty-paper encoding chain.
"""
from .topology import (
    InterferenceGraph,
    PartialOrder,
    DirectedInterferenceGraph,
    build_wyner_chain,
    build_hex_grid,
    total_order,
    reverse_order,
    orient,
    validate_order,
    linear_extension,
)
from .channels import AntennaConfig, ChannelSet, sample_channels, dual_channels
from .alignment import (
    DofAllocation,
    BeamformerSet,
    ConditionReport,
    SolverOptions,
    check_conditions,
    solve_leakage_min,
    total_leakage,
    analytic_three_cycle,
)
from .duality import DualitySetup, dualize, verify_duality
from .simulate import (
    SimulationParams,
    effective_noise_covariance,
    downlink_rate,
    uplink_rate,
    quantize,
    run_downlink_chain,
    dof_slope,
    backhaul_budget,
    power_sweep,
)
from .errors import InvalidArgumentError, OrderIncompatibleError, AlignmentViolatedError

__version__ = "0.1.0"
