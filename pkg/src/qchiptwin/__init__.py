"""Digital twin of a reconfigurable two-qubit silicon photonic processor.

Modules, from the bottom up: ``optics`` (linear-optical networks),
``source`` (pair generation and source interference), ``gate`` (chip
layout and post-selected two-qubit operation), ``tomography``, ``metrics``,
``calibration`` (bright-light heater calibration) and ``cli``.
"""

from .calibration import HeaterModel, HiddenChip, calibrate_chip, default_plan, fit_heater
from .gate import HEATER_NAMES, ChipConfig, GateMode, full_chip_state, gate_operator, ideal_chip_state
from .metrics import chsh_horodecki, chsh_optimize, fidelity, fidelity_local_z, purity, schmidt_number
from .modes import DEFAULT_MAP, ModeMap, postselect_qubits
from .optics import NetworkElement, NetworkLayout, compose_network, coupler, crossing, mzi, phase
from .source import SourceConfig, balance, rhom_fringe, source_qubit_state
from .tomography import CountRecord, linear_reconstruct, ml_reconstruct, monte_carlo, simulate_counts

__version__ = "0.1.0"

__all__ = [
    "HeaterModel", "HiddenChip", "calibrate_chip", "default_plan", "fit_heater",
    "HEATER_NAMES", "ChipConfig", "GateMode", "full_chip_state", "gate_operator", "ideal_chip_state",
    "chsh_horodecki", "chsh_optimize", "fidelity", "fidelity_local_z", "purity", "schmidt_number",
    "DEFAULT_MAP", "ModeMap", "postselect_qubits",
    "NetworkElement", "NetworkLayout", "compose_network", "coupler", "crossing", "mzi", "phase",
    "SourceConfig", "balance", "rhom_fringe", "source_qubit_state",
    "CountRecord", "linear_reconstruct", "ml_reconstruct", "monte_carlo", "simulate_counts",
]  # fmt: skip
