"""Bright-light heater calibration.

A :class:`HiddenChip` holds the true heater parameters. The calibrator only
sees port-to-port power transmission while sweeping one heater at a time,
and uses the nominal (ideal-coupler) chip model to turn each fitted fringe
phase into a heater offset.

Ports: ``IN`` (mode 2) and ``IN'`` (mode 4) are inputs; ``OUT_T`` / ``OUT_B``
are rail0 of each qubit after tomography (modes 1 and 3); ``OUT'_T`` /
``OUT'_B`` are the outer vacuum waveguides (modes 0 and 5), reached through
the outer gate MZIs.

Gauge: bright light cannot tell the rail1 z heaters before the gate from
those after it. Shifting ``(theta_tz2, theta_tz3, theta_bz2, theta_bz3)``
offsets by ``s * (1, -1, 1, -1)`` leaves every port transmission unchanged.
The default plan fixes the gauge by assuming the ``theta_tz3`` offset is zero
when that heater is unpowered; :func:`gauge_fixed` maps a hidden chip to the
equivalent parameters the calibration can actually return.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np
from scipy import optimize

from .gate import HEATER_NAMES, ChipConfig, GateMode, chip_layout
from .optics import NetworkLayout, compose_network
from .source import SourceConfig

__all__ = [
    "PORTS",
    "HeaterModel",
    "HiddenChip",
    "HeaterSweep",
    "CalibrationStage",
    "CalibrationPlan",
    "FitResult",
    "CalibrationReport",
    "PlanError",
    "heater_phase",
    "bright_transmission",
    "fit_heater",
    "default_plan",
    "validate_plan",
    "calibrate_chip",
    "gauge_fixed",
    "random_hidden_chip",
]

PORTS = {"IN": 2, "IN'": 4, "OUT_T": 1, "OUT_B": 3, "OUT'_T": 0, "OUT'_B": 5}
DEFAULT_POWERS = np.linspace(0.0, 60.0, 41)  # mW
TWO_PI = 2 * np.pi


class PlanError(ValueError):
    """Calibration plan violates heater dependencies or has no usable fringe."""


@dataclass(frozen=True)
class HeaterModel:
    phase_offset: float
    efficiency: float  # rad / mW

    def __post_init__(self):
        if not self.efficiency > 0:
            raise ValueError("heater efficiency must be positive")

    def power_for(self, phase: float) -> float:
        """Smallest non-negative power giving ``phase`` (mod 2 pi)."""
        return float(np.mod(phase - self.phase_offset, TWO_PI) / self.efficiency)


def heater_phase(m: HeaterModel, power):
    """Optical phase of a heater driven at ``power`` mW (scalar or array)."""
    p = np.asarray(power, dtype=float)
    if np.any(p < 0):
        raise ValueError("heater power must be non-negative")
    out = m.phase_offset + m.efficiency * p
    return float(out) if out.ndim == 0 else out


@dataclass
class HiddenChip:
    heaters: dict[str, HeaterModel]
    source: SourceConfig = field(default_factory=SourceConfig)
    crosstalk: dict[tuple[str, str], float] = field(default_factory=dict)  # (target, source) -> rad/mW

    def __post_init__(self):
        if set(self.heaters) != set(HEATER_NAMES):
            missing = set(HEATER_NAMES) - set(self.heaters)
            extra = set(self.heaters) - set(HEATER_NAMES)
            raise ValueError(f"heater set mismatch; missing {sorted(missing)}, unknown {sorted(extra)}")
        for (t, s) in self.crosstalk:
            if t not in HEATER_NAMES or s not in HEATER_NAMES:
                raise ValueError(f"unknown heater in crosstalk entry ({t}, {s})")

    def phases(self, powers: Mapping[str, float], drift: float = 0.0) -> dict[str, float]:
        out = {}
        for name, m in self.heaters.items():
            p = float(powers.get(name, 0.0))
            ph = m.phase_offset + m.efficiency * (1 + drift) * p
            ph += sum(k * float(powers.get(src, 0.0)) for (tgt, src), k in self.crosstalk.items() if tgt == name)
            out[name] = ph
        return out

    # --- structured-text form ---

    def to_text(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["heaters"] = {n: f"{self.heaters[n].phase_offset!r}, {self.heaters[n].efficiency!r}" for n in HEATER_NAMES}
        s = self.source
        cp["imperfections"] = {k: repr(getattr(s, k)) for k in ("theta_cap", "eta_state", "eta_t_in", "eta_t_out", "eta_b_in", "eta_b_out")}
        cp["crosstalk"] = {f"{t}.{src}": repr(k) for (t, src), k in sorted(self.crosstalk.items())}
        import io

        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "HiddenChip":
        from .config import ConfigError, parse_ini, line_of

        cp = parse_ini(text)
        if not cp.has_section("heaters"):
            raise ConfigError("hidden-chip file needs a [heaters] section")
        heaters = {}
        for k, v in cp["heaters"].items():
            try:
                off, eff = (float(x) for x in v.split(","))
                heaters[k] = HeaterModel(off, eff)
            except ValueError as e:
                raise ConfigError(f"line {line_of(text, 'heaters', k)}: bad heater '{k} = {v}': expected 'offset, efficiency' ({e})") from None
        src = {}
        if cp.has_section("imperfections"):
            for k, v in cp["imperfections"].items():
                try:
                    src[k] = float(v)
                except ValueError:
                    raise ConfigError(f"line {line_of(text, 'imperfections', k)}: '{k}' is not a number") from None
        xt = {}
        if cp.has_section("crosstalk"):
            for k, v in cp["crosstalk"].items():
                t, _, s = k.partition(".")
                try:
                    xt[(t, s)] = float(v)
                except ValueError:
                    raise ConfigError(f"line {line_of(text, 'crosstalk', k)}: '{k}' is not a number") from None
        try:
            return cls(heaters, SourceConfig(**src), xt)
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None


def random_hidden_chip(seed=0, efficiency=(0.2, 0.4)) -> HiddenChip:
    rng = np.random.default_rng(seed)
    heaters = {n: HeaterModel(float(rng.uniform(0, TWO_PI)), float(rng.uniform(*efficiency))) for n in HEATER_NAMES}
    return HiddenChip(heaters)


def gauge_fixed(chip: HiddenChip) -> dict[str, HeaterModel]:
    """Hidden heater parameters moved along the unobservable gauge so ``theta_tz3`` has zero offset."""
    s = chip.heaters["theta_tz3"].phase_offset
    shift = {"theta_tz2": s, "theta_tz3": -s, "theta_bz2": s, "theta_bz3": -s}
    return {n: replace(m, phase_offset=float(np.mod(m.phase_offset + shift.get(n, 0.0), TWO_PI))) for n, m in chip.heaters.items()}


# --- transmission model --------------------------------------------------------------


def _base_layout(source: SourceConfig) -> NetworkLayout:
    return chip_layout(ChipConfig(source=source), GateMode.CZ, include_pump=True)


_NOMINAL = _base_layout(SourceConfig())


def _port(p: str | int) -> int:
    if isinstance(p, (int, np.integer)):
        return int(p)
    try:
        return PORTS[p]
    except KeyError:
        raise ValueError(f"unknown port {p!r}; expected one of {sorted(PORTS)}") from None


def _transmission(layout: NetworkLayout, phases: Mapping[str, float], inp: int, out: int) -> float:
    U = compose_network(layout.with_values(dict(phases)))
    return float(abs(U[out, inp]) ** 2)


def bright_transmission(
    chip: HiddenChip,
    input: str,
    output: str,
    heater: str,
    powers: Iterable[float],
    hold_powers: Mapping[str, float] | None = None,
    noise: float = 0.0,
    drift: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Classical power transmission ``input -> output`` while sweeping ``heater``.

    ``noise`` is a relative (multiplicative Gaussian) measurement error;
    ``drift`` is a fractional efficiency change accumulated linearly over the
    sweep (contact-resistance drift).
    """
    if heater not in HEATER_NAMES:
        raise ValueError(f"unknown heater {heater!r}")
    inp, out = _port(input), _port(output)
    if inp not in (PORTS["IN"], PORTS["IN'"]):
        raise ValueError(f"{input!r} is not an input port")
    if out not in (PORTS["OUT_T"], PORTS["OUT_B"], PORTS["OUT'_T"], PORTS["OUT'_B"]):
        raise ValueError(f"{output!r} is not an output port")
    layout = _base_layout(chip.source)
    powers = np.asarray(list(powers), dtype=float)
    hold = dict(hold_powers or {})
    vals = np.empty(len(powers))
    for i, p in enumerate(powers):
        hold[heater] = p
        d = drift * i / max(len(powers) - 1, 1)
        vals[i] = _transmission(layout, chip.phases(hold, d), inp, out)
    if noise:
        if rng is None:
            rng = np.random.default_rng()
        vals = vals * (1 + noise * rng.standard_normal(len(vals)))
    return vals


# --- fitting ------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    model: HeaterModel
    residual: float
    covariance_diag: tuple[float, float, float, float]  # (mean, amplitude, phase, efficiency)
    mean: float
    amplitude: float
    fringe_phase: float  # offset + route phase, mod 2 pi


def _lin(P, e, T):
    X = np.column_stack([np.ones_like(P), np.cos(e * P), np.sin(e * P)])
    coef, *_ = np.linalg.lstsq(X, T, rcond=None)
    r = T - X @ coef
    return coef, float(r @ r)


def fit_heater(powers, transmission, route_phase: float = 0.0, relative_noise: bool = False) -> FitResult:
    """Fit ``T(P) = a + b cos(offset + efficiency P + route_phase)`` with ``b > 0``.

    Efficiency is found by a grid scan of the linearized model, then all four
    parameters are refined by nonlinear least squares. ``relative_noise``
    switches to weights suited to multiplicative measurement noise.
    """
    P = np.asarray(powers, dtype=float)
    T = np.asarray(transmission, dtype=float)
    if len(P) < 8 or T.shape != P.shape:
        raise ValueError("need at least 8 (power, transmission) samples")
    span = float(np.ptp(P))
    if span <= 0:
        raise ValueError("degenerate power sweep")
    dp = np.min(np.diff(np.unique(P)))
    grid = np.linspace(0.25 * np.pi / span, np.pi / dp, 4000)
    sse = [_lin(P, e, T)[1] for e in grid]
    e0 = grid[int(np.argmin(sse))]
    (a, c1, c2), _ = _lin(P, e0, T)
    b0, chi0 = np.hypot(c1, c2), np.arctan2(-c2, c1)

    def resid(x):
        a_, b_, chi_, e_ = x
        return a_ + b_ * np.cos(e_ * P + chi_) - T

    res = optimize.least_squares(resid, [a, b0, chi0, e0], x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
    r_fit = res.fun
    if relative_noise:
        # multiplicative noise: sigma_i ~ T_i, so reweight by the fitted model (floored near nulls)
        for _ in range(2):
            m = np.abs(resid(res.x) + T)
            w = 1.0 / np.maximum(m, 1e-3 * m.max())
            res = optimize.least_squares(lambda x: w * resid(x), res.x, x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
            r_fit = res.fun
    a, b, chi, e = res.x
    if b < 0:
        b, chi = -b, chi + np.pi
    rms = float(np.sqrt(np.mean(resid(res.x) ** 2)))
    if b < max(1e-9 * max(abs(a), 1e-12), 3 * rms):
        raise ValueError("flat response: no fringe to fit")
    if e <= 0 or e * span < np.pi:
        raise ValueError("sweep shorter than half a fringe period: efficiency unidentifiable")
    J = res.jac
    dof = max(len(P) - 4, 1)
    try:
        cov = np.linalg.inv(J.T @ J) * (r_fit @ r_fit) / dof
        cdiag = tuple(float(x) for x in np.diag(cov))
    except np.linalg.LinAlgError:
        cdiag = (float("nan"),) * 4
    chi = float(np.mod(chi, TWO_PI))
    model = HeaterModel(float(np.mod(chi - route_phase, TWO_PI)), float(e))
    return FitResult(model, rms, cdiag, float(a), float(b), chi)


# --- plan --------------------------------------------------------------------------------


@dataclass(frozen=True)
class HeaterSweep:
    heater: str
    output: str
    holds: Mapping[str, float] = field(default_factory=dict)  # heater -> physical phase


@dataclass(frozen=True)
class CalibrationStage:
    input: str
    outputs: tuple[str, ...]
    sweeps: tuple[HeaterSweep, ...]

    @property
    def heaters(self) -> tuple[str, ...]:
        return tuple(s.heater for s in self.sweeps)


@dataclass(frozen=True)
class CalibrationPlan:
    stages: tuple[CalibrationStage, ...]
    # heaters whose offset is assumed (not observable); they may be swept later for efficiency
    gauge: Mapping[str, float] = field(default_factory=dict)
    skip: tuple[str, ...] = ()

    def heaters(self) -> list[str]:
        return [h for st in self.stages for h in st.heaters]

    def to_text(self) -> str:
        lines = []
        for i, st in enumerate(self.stages, 1):
            lines.append(f"[stage {i}] {st.input} -> {', '.join(st.outputs)}")
            for sw in st.sweeps:
                holds = ", ".join(f"{k}={v:.6g}" for k, v in sw.holds.items())
                lines.append(f"  {sw.heater} @ {sw.output}" + (f"  holds: {holds}" if holds else ""))
        if self.gauge:
            lines.append("gauge: " + ", ".join(f"{k} offset := {v:.6g}" for k, v in self.gauge.items()))
        if self.skip:
            lines.append("skipped: " + ", ".join(self.skip))
        return "\n".join(lines) + "\n"


PI, HALF = np.pi, np.pi / 2
BAR, CROSS = np.pi, 0.0  # physical MZI phases


def default_plan(skip_tomography_z: bool = False) -> CalibrationPlan:
    """Four routing stages; heater membership and order follow the chip's routing table.

    ``skip_tomography_z`` leaves ``theta_tz3``/``theta_bz3`` uncalibrated:
    their offsets are then taken as zero and the residual acts as a fixed
    unknown z rotation before measurement.
    """
    s1 = CalibrationStage("IN'", ("OUT'_T", "OUT'_B"), (
        HeaterSweep("phi_b", "OUT'_T"),
        HeaterSweep("theta_by1", "OUT'_B", {"phi_b": BAR}),
        HeaterSweep("theta_czb", "OUT'_B", {"phi_b": BAR, "theta_by1": CROSS}),
        HeaterSweep("theta_ty1", "OUT'_T", {"phi_b": CROSS}),
        HeaterSweep("theta_czt", "OUT'_T", {"phi_b": CROSS, "theta_ty1": CROSS}),
    ))  # fmt: skip
    s2 = CalibrationStage("IN", ("OUT'_T", "OUT'_B"), (
        HeaterSweep("phi_beta", "OUT'_B", {"phi_b": BAR, "theta_by1": BAR, "theta_czb": CROSS}),
        HeaterSweep("phi_t", "OUT'_B", {"phi_beta": BAR, "theta_by1": BAR, "theta_czb": CROSS}),
        HeaterSweep("theta_tz1", "OUT'_T", {"phi_beta": HALF, "phi_t": CROSS, "phi_b": BAR, "theta_ty1": HALF, "theta_czt": CROSS}),
        HeaterSweep("theta_bz1", "OUT'_B", {"phi_beta": HALF, "phi_t": BAR, "phi_b": CROSS, "theta_by1": HALF, "theta_czb": CROSS}),
    ))  # fmt: skip
    t_ref = {"phi_beta": HALF, "phi_t": CROSS, "phi_b": BAR, "theta_ty1": BAR, "theta_czt": BAR, "theta_czc": BAR, "theta_ty2": HALF}
    s3 = CalibrationStage("IN", ("OUT_T",), tuple(x for x in (
        HeaterSweep("theta_czc", "OUT_T", {"phi_beta": CROSS, "phi_b": BAR, "theta_ty1": BAR}),
        HeaterSweep("theta_ty2", "OUT_T", {"phi_beta": CROSS, "phi_b": BAR, "theta_ty1": BAR, "theta_czc": BAR}),
        HeaterSweep("theta_tz2", "OUT_T", t_ref),
        HeaterSweep("theta_tz3", "OUT_T", t_ref),
    ) if not (skip_tomography_z and x.heater == "theta_tz3")))  # fmt: skip
    s4 = CalibrationStage("IN", ("OUT_B",), tuple(x for x in (
        HeaterSweep("theta_by2", "OUT_B", {"phi_beta": CROSS, "phi_b": CROSS, "theta_by1": BAR, "theta_czc": BAR}),
        HeaterSweep("theta_bz2", "OUT_B", {"phi_beta": CROSS, "phi_b": HALF, "theta_ty1": BAR, "theta_by1": BAR, "theta_czc": HALF, "theta_by2": CROSS}),
        HeaterSweep("theta_bz3", "OUT_B", {"phi_beta": HALF, "phi_t": BAR, "phi_b": CROSS, "theta_by1": BAR, "theta_czb": BAR, "theta_czc": BAR, "theta_by2": HALF}),
    ) if not (skip_tomography_z and x.heater == "theta_bz3")))  # fmt: skip
    gauge = {"theta_tz3": 0.0}
    skip = ("theta_tz3", "theta_bz3") if skip_tomography_z else ()
    if skip_tomography_z:
        gauge["theta_bz3"] = 0.0
    return CalibrationPlan((s1, s2, s3, s4), gauge, skip)


def _route_phase(layout, target, known_phases, unknown_values, inp, out):
    """Fringe phase and amplitude of ``target`` on the model: T = a + R cos(phi + psi)."""
    ph = dict(unknown_values)
    ph.update(known_phases)
    vals = []
    for phi in (0.0, HALF, PI, 3 * HALF):
        ph[target] = phi
        vals.append(_transmission(layout, ph, inp, out))
    b = (vals[0] - vals[2]) / 2
    c = (vals[1] - vals[3]) / 2
    return float(np.arctan2(-c, b)), float(np.hypot(b, c))


def validate_plan(plan: CalibrationPlan, trials: int = 3, seed: int = 12345) -> None:
    """Raise :class:`PlanError` unless every sweep depends only on already-learned heaters.

    Checks that holds reference learned heaters, and that on the nominal
    model each target's fringe phase does not move when the not-yet-learned
    heaters take arbitrary values.
    """
    names = plan.heaters()
    expected = [h for h in HEATER_NAMES if h not in plan.skip]
    if sorted(names) != sorted(expected):
        raise PlanError(f"plan must learn each heater exactly once; got {names}")
    rng = np.random.default_rng(seed)
    learned = set(plan.gauge)
    for si, st in enumerate(plan.stages, 1):
        inp = _port(st.input)
        for sw in st.sweeps:
            if sw.output not in st.outputs:
                raise PlanError(f"stage {si}: {sw.heater} measured on {sw.output}, not a stage output")
            bad = [h for h in sw.holds if h not in learned or h == sw.heater]
            if bad:
                raise PlanError(f"stage {si}: sweep of {sw.heater} holds heaters not yet learned: {bad}")
            out = _port(sw.output)
            known = {h: float(rng.uniform(0, TWO_PI)) for h in learned}
            known.update(sw.holds)
            psis = []
            for _ in range(trials):
                unknown = {h: float(rng.uniform(0, TWO_PI)) for h in HEATER_NAMES if h not in known and h != sw.heater}
                psi, amp = _route_phase(_NOMINAL, sw.heater, known, unknown, inp, out)
                if amp < 1e-6:
                    raise PlanError(f"stage {si}: {sw.heater} produces no fringe on {st.input} -> {sw.output}")
                psis.append(psi)
            spread = np.ptp(np.unwrap(psis))
            if spread > 1e-6:
                raise PlanError(f"stage {si}: fringe of {sw.heater} depends on heaters not yet learned")
            learned.add(sw.heater)


# --- run -------------------------------------------------------------------------------


@dataclass
class CalibrationReport:
    recovered: dict[str, HeaterModel]
    fits: dict[str, FitResult]
    stage_of: dict[str, int]
    plan: CalibrationPlan

    def errors(self, truth: Mapping[str, HeaterModel]) -> dict[str, tuple[float, float]]:
        """(offset error wrapped to (-pi, pi], relative efficiency error) per recovered heater."""
        out = {}
        for n, m in self.recovered.items():
            t = truth[n]
            d = float(np.angle(np.exp(1j * (m.phase_offset - t.phase_offset))))
            out[n] = (d, (m.efficiency - t.efficiency) / t.efficiency)
        return out

    def stage_residuals(self) -> list[tuple[int, float]]:
        res = []
        for i, st in enumerate(self.plan.stages, 1):
            r = [self.fits[h].residual for h in st.heaters]
            res.append((i, float(np.sqrt(np.mean(np.square(r)))) if r else 0.0))
        return res

    def table(self, truth: Mapping[str, HeaterModel] | None = None) -> str:
        hdr = "heater,stage,offset_rad,efficiency_rad_per_mW,fit_rms"
        if truth is not None:
            hdr += ",offset_error_rad,efficiency_rel_error"
            errs = self.errors(truth)
        lines = [hdr]
        for n in self.plan.heaters():
            m, f = self.recovered[n], self.fits[n]
            row = f"{n},{self.stage_of[n]},{m.phase_offset:.17g},{m.efficiency:.17g},{f.residual:.17g}"
            if truth is not None:
                row += f",{errs[n][0]:.17g},{errs[n][1]:.17g}"
            lines.append(row)
        return "\n".join(lines) + "\n"


def calibrate_chip(
    chip: HiddenChip,
    plan: CalibrationPlan | None = None,
    powers=DEFAULT_POWERS,
    noise: float = 0.0,
    drift: float = 0.0,
    seed=0,
) -> CalibrationReport:
    """Run every sweep of ``plan`` in order and recover the heater models.

    Held heaters are driven to their hold phase through the models learned so
    far; heaters not yet learned stay unpowered. Each sweep uses its own
    random stream derived from ``seed``.
    """
    plan = plan or default_plan()
    validate_plan(plan)
    sweeps = [(si, st, sw) for si, st in enumerate(plan.stages, 1) for sw in st.sweeps]
    streams = np.random.SeedSequence(seed).spawn(len(sweeps))
    learned: dict[str, HeaterModel] = {}
    fits: dict[str, FitResult] = {}
    stage_of: dict[str, int] = {}
    powers = np.asarray(powers, dtype=float)

    for (si, st, sw), ss in zip(sweeps, streams):
        hold_powers = {h: learned[h].power_for(ph) for h, ph in sw.holds.items()}
        # model phases of everything the calibrator believes it knows
        known = {h: m.phase_offset + m.efficiency * hold_powers.get(h, 0.0) for h, m in learned.items()}
        for h, off in plan.gauge.items():
            if h not in learned:
                known[h] = off
        unknown = {h: 1.0 for h in HEATER_NAMES if h not in known and h != sw.heater}
        psi, _ = _route_phase(_NOMINAL, sw.heater, known, unknown, _port(st.input), _port(sw.output))
        data = bright_transmission(chip, st.input, sw.output, sw.heater, powers, hold_powers, noise, drift, np.random.default_rng(ss))
        try:
            fit = fit_heater(powers, data, route_phase=psi, relative_noise=True)
        except ValueError as e:
            raise ValueError(f"stage {si}: {sw.heater}: {e}") from None
        learned[sw.heater] = fit.model
        fits[sw.heater] = fit
        stage_of[sw.heater] = si
    return CalibrationReport(learned, fits, stage_of, plan)
