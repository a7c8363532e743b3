"""The post-selected CZ gate entangling a product state and disentangling a Bell state.

Run: python demos/cz_gate.py
"""

import numpy as np

from qchiptwin.config import PREP_GATES
from qchiptwin.gate import ChipConfig, GateMode, full_chip_state, gate_operator
from qchiptwin.metrics import chsh_horodecki, purity, schmidt_number
from qchiptwin.source import SourceConfig
from qchiptwin.tomography import ml_reconstruct, simulate_counts

H = PREP_GATES["H"]

print("post-selected operator in CZ mode (x3):")
print(np.round(3 * gate_operator(GateMode.CZ).real, 12))

cases = {
    "|++> -> CZ": ChipConfig(source=SourceConfig(phi_beta=np.pi)).with_prep("T", *H).with_prep("B", *H),
    "Bell, I x H -> CZ": ChipConfig().with_prep("B", *H),
    "Bell, bypass": ChipConfig(),
}
print("\ncase                  success  purity   K       S")
for k, (name, cfg) in enumerate(cases.items()):
    gate = GateMode.BYPASS if "bypass" in name else GateMode.CZ
    res = full_chip_state(cfg, gate)
    est = ml_reconstruct(simulate_counts(res.rho, 1000, 5, 0, seed=k)).rho
    print(f"{name:20s}  {res.success_probability:.4f}   ideal   {schmidt_number(res.rho):.3f}   {chsh_horodecki(res.rho):.3f}")
    print(f"{'':20s}  {'':6s}   {purity(est):.3f}   {schmidt_number(est):.3f}   {chsh_horodecki(est):.3f}  (5 s of counts)")
