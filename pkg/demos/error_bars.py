"""Monte-Carlo error bars on tomography metrics and how they shrink with counts.

Run: python demos/error_bars.py
"""

import numpy as np

from qchiptwin.metrics import chsh_horodecki, purity
from qchiptwin.tomography import ml_reconstruct, monte_carlo, simulate_counts

bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
rho = 0.9048 * np.outer(bell, bell) + 0.0952 * np.eye(4) / 4

print("flux/s   purity          S")
for flux in (250, 1000, 4000, 16000):
    rec = simulate_counts(rho, flux, 5.0, 0.0, seed=flux)
    est = ml_reconstruct(rec).rho
    mc = monte_carlo(rec, lambda r: (purity(r), chsh_horodecki(r)), n=200, seed=1, workers=4)
    print(f"{flux:6d}   {purity(est):.3f} +- {mc.std[0]:.3f}   {chsh_horodecki(est):.3f} +- {mc.std[1]:.3f}")
