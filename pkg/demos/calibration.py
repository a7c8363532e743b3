"""Bright-light calibration of a chip with unknown heaters.

The four-stage plan learns each heater from a fringe on a route that depends
only on heaters already learned. One combination of four Z offsets never shows
up in any transmission, so the tz3 offset is taken as zero and the truth is
compared in that frame.

Run: python demos/calibration.py
"""

from dataclasses import replace

from qchiptwin.calibration import calibrate_chip, default_plan, gauge_fixed, random_hidden_chip

chip = random_hidden_chip(2024)
print(default_plan().to_text())

for label, kw in (("noiseless", {}), ("1% noise", {"noise": 0.01, "seed": 5})):
    rep = calibrate_chip(chip, **kw)
    errs = rep.errors(gauge_fixed(chip))
    off = max(abs(e[0]) for e in errs.values())
    eff = max(abs(e[1]) for e in errs.values())
    print(f"{label:10s} worst offset error {off:.2e} rad, worst efficiency error {eff:.2e}")

# a nominal model cannot see coupler imperfections; they turn into offset bias
bent = random_hidden_chip(2024)
bent.source = replace(bent.source, eta_t_in=0.45, eta_state=0.48, theta_cap=0.3)
errs = calibrate_chip(bent).errors(gauge_fixed(bent))
worst = max(errs, key=lambda n: abs(errs[n][0]))
print(f"imperfect couplers: largest bias {errs[worst][0]:+.3f} rad on {worst}")

print("\nfull table (noiseless):")
print(calibrate_chip(chip).table(gauge_fixed(chip)))
