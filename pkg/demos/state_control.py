"""Tuning the source entanglement with the state-control phase.

Run: python demos/state_control.py
"""

import numpy as np

from qchiptwin.gate import ChipConfig, GateMode, full_chip_state
from qchiptwin.metrics import chsh_horodecki, schmidt_number
from qchiptwin.source import SourceConfig, balance
from qchiptwin.tomography import ml_reconstruct, simulate_counts

print("phi/pi  balance   K(ideal)  S(ideal)  K(tomo)  S(tomo)")
seeds = np.random.SeedSequence(3).spawn(9)
for phi, seq in zip(np.linspace(0, np.pi, 9), seeds):
    rho = full_chip_state(ChipConfig(source=SourceConfig(phi_beta=phi)), GateMode.BYPASS).rho
    est = ml_reconstruct(simulate_counts(rho, 1000, 5, 0, seed=seq)).rho
    print(
        f"{phi / np.pi:5.3f}   {balance(phi):.4f}    {schmidt_number(rho):.4f}    {chsh_horodecki(rho):.4f}"
        f"    {schmidt_number(est):.3f}    {chsh_horodecki(est):.3f}"
    )
