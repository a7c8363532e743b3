"""Command-line experiments: ``fringe``, ``state-sweep``, ``tomo``, ``calibrate``.

Every command reads ``--config``, writes into ``--out`` and is a pure
function of the config file and ``--seed``. Exit status is 0 on success,
2 for invalid input and 3 when a numerical step fails.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import calibration as cal
from . import metrics as met
from . import source as src
from . import tomography as tomo
from .config import ConfigError, ExperimentConfig, dump_json, load_config, write_csv
from .gate import full_chip_state, ideal_chip_state

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _header(cfg: ExperimentConfig, seed, command: str) -> dict:
    return {"command": command, "config_sha256": cfg.sha256, "seed": "none" if seed is None else seed}


def _need_seed(seed, what: str) -> int:
    if seed is None:
        raise ConfigError(f"{what} is stochastic: pass --seed or set 'seed' in [experiment]")
    return int(seed)


def cmd_fringe(cfg: ExperimentConfig, out: Path, seed=None, threads: int = 1) -> Path:
    """Reversed-HOM fringe of one source: phase, rate, fitted rate."""
    f = cfg.fringe
    which = f.which.upper()
    phases = np.linspace(f.start, f.stop, f.points)
    acc = cfg.accidental_rate / cfg.flux  # accidental level relative to the pair flux
    rates = src.rhom_fringe(cfg.chip.source, which, phases, accidental_rate=acc)
    if f.counts > 0:
        rng = np.random.default_rng(_need_seed(seed, "a counted fringe"))
        rates = rng.poisson(rates * f.counts) / f.counts
    fit = src.fit_fringe(phases, rates, background=acc)
    fitted = fit.model(phases)
    raw_max, raw_min = fit.amplitude * (1 + abs(fit.visibility)) + acc, fit.amplitude * (1 - abs(fit.visibility)) + acc
    path = out / f"fringe_{which}.csv"
    footer = {
        "visibility": (raw_max - raw_min) / (raw_max + raw_min),
        "contrast": fit.visibility,
        "phase_offset": fit.phase_offset,
        "fit_rms": fit.residual,
    }
    write_csv(path, ["phase", "rate", "fitted_rate"], zip(phases, rates, fitted), _header(cfg, seed, "fringe") | {"which": which}, footer)
    return path


def _sweep_point(cfg: ExperimentConfig, phi: float, seq) -> list:
    chip = replace(cfg.chip, source=replace(cfg.chip.source, phi_beta=phi))
    rho = full_chip_state(chip, cfg.gate).rho
    b = src.balance(phi)
    row = [phi, float(rho[0, 0].real), met.schmidt_number(rho), met.chsh_horodecki(rho)]
    row += [b, 1.0 / (b**2 + (1 - b) ** 2), 2 * np.sqrt(1 + 4 * b * (1 - b))]
    if seq is not None:
        rec = tomo.simulate_counts(rho, cfg.flux, cfg.integration_time, cfg.accidental_rate, seed=seq)
        r = tomo.ml_reconstruct(rec).rho
        row += [float(r[0, 0].real), met.schmidt_number(r), met.chsh_horodecki(r)]
    return row


def cmd_state_sweep(cfg: ExperimentConfig, out: Path, seed=None, threads: int = 1) -> Path:
    """Balance, Schmidt number and CHSH value against the state-control phase."""
    s = cfg.sweep
    grid = np.linspace(s.start, s.stop, s.points)
    seqs = [None] * len(grid)
    if s.tomography:
        seqs = np.random.SeedSequence(_need_seed(seed, "a sweep with tomography")).spawn(len(grid))
    args = list(zip(grid, seqs))
    run = lambda a: _sweep_point(cfg, *a)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(run, args))
    else:
        rows = [run(a) for a in args]
    cols = ["phi_beta", "balance", "schmidt_number", "chsh", "balance_ideal", "schmidt_number_ideal", "chsh_ideal"]
    if s.tomography:
        cols += ["balance_tomo", "schmidt_number_tomo", "chsh_tomo"]
    path = out / "state_sweep.csv"
    write_csv(path, cols, rows, _header(cfg, seed, "state-sweep") | {"gate": cfg.gate.value})
    return path


def _tomo_metrics(psi):
    def metric(rho):
        return (met.purity(rho), met.schmidt_number(rho), met.chsh_horodecki(rho), met.fidelity_local_z(rho, psi)[0])

    return metric


def cmd_tomo(cfg: ExperimentConfig, out: Path, seed=None, threads: int = 1) -> Path:
    """Simulated tomography run: counts, linear and ML states, metrics with Monte-Carlo errors."""
    seed = _need_seed(seed, "tomography")
    s_counts, s_mc = np.random.SeedSequence(seed).spawn(2)
    state = full_chip_state(cfg.chip, cfg.gate)
    psi = ideal_chip_state(cfg.chip, cfg.gate)
    rec = tomo.simulate_counts(state.rho, cfg.flux, cfg.integration_time, cfg.accidental_rate, seed=s_counts)
    lin = tomo.linear_reconstruct(rec)
    ml = tomo.ml_reconstruct(rec)
    if not ml.converged:
        raise RuntimeError(f"ML reconstruction did not converge after {ml.iterations} iterations")
    rho = ml.rho
    f_z, zt, zb = met.fidelity_local_z(rho, psi)
    s_opt, dirs = met.chsh_optimize(rho)
    mc = tomo.monte_carlo(rec, _tomo_metrics(psi), n=cfg.monte_carlo_n, seed=s_mc, workers=threads)
    point = (met.purity(rho), met.schmidt_number(rho), met.chsh_horodecki(rho), f_z)
    report = met.MetricsReport(*(met.MetricValue(v, float(sd), cfg.monte_carlo_n - mc.failures) for v, sd in zip(point, mc.std)))

    (out / "counts.txt").write_text(rec.to_text(), encoding="utf-8")
    doc = {
        "command": "tomo",
        "config_sha256": cfg.sha256,
        "seed": seed,
        "gate": cfg.gate.value,
        "postselection_probability": state.success_probability,
        "rho_ml": {"re": rho.real, "im": rho.imag},
        "rho_linear": {"re": lin.rho.real, "im": lin.rho.imag, "physical": lin.physical},
        "ml": {"iterations": ml.iterations, "converged": ml.converged, "log_likelihood": ml.log_likelihood},
        "metrics": {k: vars(v) for k, v in vars(report).items()},
        "fidelity_local_z": {"fidelity": f_z, "zeta_t": zt, "zeta_b": zb, "fidelity_raw": met.fidelity(rho, psi)},
        "chsh_optimal": {"value": s_opt, **dirs},
        "monte_carlo": {"samples": cfg.monte_carlo_n, "failures": mc.failures, "mean": mc.mean},
        "target_state": {"re": psi.real, "im": psi.imag},
    }
    path = out / "tomo.json"
    dump_json(path, doc)
    return path


def cmd_calibrate(cfg: ExperimentConfig, out: Path, seed=None, threads: int = 1) -> Path:
    """Bright-light calibration of a hidden chip read from ``[calibrate] hidden_chip``."""
    c = cfg.calibration
    if not c.hidden_chip:
        raise ConfigError("[calibrate] hidden_chip path is required")
    hp = Path(c.hidden_chip)
    if not hp.is_absolute() and cfg.path is not None:
        hp = cfg.path.parent / hp
    chip = cal.HiddenChip.from_text(hp.read_text(encoding="utf-8"))
    if c.noise > 0 or c.drift != 0:
        seed = _need_seed(seed, "a noisy calibration")
    plan = cal.default_plan(skip_tomography_z=c.skip_tomography_z)
    powers = np.linspace(0.0, c.max_power, c.points)
    rep = cal.calibrate_chip(chip, plan, powers, noise=c.noise, drift=c.drift, seed=0 if seed is None else seed)
    truth = cal.gauge_fixed(chip)
    errs = rep.errors(truth)
    rows = []
    for n in plan.heaters():
        m, t, fit = rep.recovered[n], truth[n], rep.fits[n]
        rows.append([n, rep.stage_of[n], m.phase_offset, m.efficiency, t.phase_offset, t.efficiency, errs[n][0], errs[n][1], fit.residual])
    off = np.array([abs(e[0]) for e in errs.values()])
    eff = np.array([abs(e[1]) for e in errs.values()])
    footer = {"max_offset_error_rad": off.max(), "rms_offset_error_rad": np.sqrt(np.mean(off**2)), "max_efficiency_rel_error": eff.max()}
    footer |= {f"stage_{i}_residual_rms": r for i, r in rep.stage_residuals()}
    cols = ["heater", "stage", "offset_rad", "efficiency_rad_per_mW", "true_offset_rad", "true_efficiency", "offset_error_rad", "efficiency_rel_error", "fit_rms"]
    hdr = _header(cfg, seed, "calibrate") | {"noise": c.noise, "gauge": "theta_tz3 offset fixed to 0"}
    path = out / "calibration.csv"
    write_csv(path, cols, rows, hdr, footer)
    (out / "plan.txt").write_text(plan.to_text(), encoding="utf-8")
    return path


COMMANDS = {"fringe": cmd_fringe, "state-sweep": cmd_state_sweep, "tomo": cmd_tomo, "calibrate": cmd_calibrate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qchiptwin", description="Digital twin of a two-qubit silicon photonic processor.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__doc__.splitlines()[0])
        sp.add_argument("--config", required=True, type=Path, help="experiment config file")
        sp.add_argument("--out", required=True, type=Path, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        args.out.mkdir(parents=True, exist_ok=True)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    seed = args.seed if args.seed is not None else cfg.seed
    try:
        path = COMMANDS[args.command](cfg, args.out, seed, args.threads)
    except (ConfigError, cal.PlanError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
