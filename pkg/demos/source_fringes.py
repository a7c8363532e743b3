"""Reversed-HOM fringes of the two sources and what their contrast says about the couplers.

Run: python demos/source_fringes.py
"""

import numpy as np

from qchiptwin.source import SourceConfig, eta_for_contrast, fit_fringe, rhom_contrast, rhom_fringe

MEASURED = {"T": 0.932, "B": 0.729}


def contrast_curve():
    print("eta     contrast")
    for eta in np.linspace(0.20, 0.50, 13):
        print(f"{eta:.3f}   {rhom_contrast(SourceConfig(eta_t_in=eta), 'T'):.4f}")


def noisy_fringe(seed=1):
    rng = np.random.default_rng(seed)
    cfg = SourceConfig(eta_b_in=0.36)
    phases = np.linspace(0, np.pi, 41)
    rates = rng.poisson(5000 * rhom_fringe(cfg, "B", phases)) / 5000
    fit = fit_fringe(phases, rates)
    print(f"\nbottom source at eta = 0.36: fitted contrast {fit.visibility:.3f}, exact {rhom_contrast(cfg, 'B'):.3f}")


if __name__ == "__main__":
    contrast_curve()
    print()
    for which, c in MEASURED.items():
        print(f"source {which}: contrast {c:.3f} needs eta = {eta_for_contrast(c, which):.3f}")
    noisy_fringe()
