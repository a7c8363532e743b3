"""Photon-pair generation in the four spiral sources and the entangled-state generator.

Physical picture (mode indices refer to the six-waveguide chip):

* Bright pump enters ``IN`` (mode 2) and is divided by the state-control MZI
  (phase ``phi_beta``) between the top RHOM (mode 2) and the bottom RHOM
  (mode 3). The auxiliary input ``IN'`` (mode 4) pumps the bottom RHOM only.
* Each RHOM input coupler splits its pump over two spirals (modes 1,2 and 3,4).
  A pair is born in a single spiral with amplitude proportional to the
  *square* of the local pump field.
* Internal heaters ``phi_t`` (mode 1) and ``phi_b`` (mode 4) act on the
  photons, then each RHOM closes with an output coupler. A waveguide crossing
  between modes 2 and 3 interleaves the outputs into the dual-rail order
  ``T0, T1, B0, B1``.

Only first-order emission is modelled: exactly one pair exists.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .modes import DEFAULT_MAP, ModeMap, postselect_qubits
from .optics import NetworkLayout, compose_network, coupler, crossing, expand_mzi, phase

__all__ = [
    "SourceConfig",
    "RateModel",
    "WavelengthTriple",
    "FringeFit",
    "IN_PORT",
    "IN_AUX_PORT",
    "SPIRAL_MODES",
    "pump_layout",
    "source_layout",
    "pump_amplitudes",
    "generation_amplitudes",
    "propagate_pair",
    "source_qubit_state",
    "balance",
    "ideal_source_state",
    "rhom_fringe",
    "fringe_contrast",
    "fit_fringe",
    "imbalance_contrast",
    "rhom_contrast",
    "eta_for_contrast",
    "pair_rate",
    "validate_wavelengths",
]

N_MODES = 6
IN_PORT = 2
IN_AUX_PORT = 4
SPIRAL_MODES = (1, 2, 3, 4)


@dataclass(frozen=True)
class SourceConfig:
    phi_beta: float = np.pi / 2
    phi_t: float = np.pi / 2
    phi_b: float = np.pi / 2
    theta_cap: float = 0.0
    eta_state: float = 0.5
    eta_t_in: float = 0.5
    eta_t_out: float = 0.5
    eta_b_in: float = 0.5
    eta_b_out: float = 0.5

    def __post_init__(self):
        for name in ("eta_state", "eta_t_in", "eta_t_out", "eta_b_in", "eta_b_out"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        for name in ("phi_beta", "phi_t", "phi_b", "theta_cap"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def ideal(self) -> "SourceConfig":
        return replace(self, eta_state=0.5, eta_t_in=0.5, eta_t_out=0.5, eta_b_in=0.5, eta_b_out=0.5)


def pump_layout(cfg: SourceConfig) -> NetworkLayout:
    """Pump path from the inputs to the four spirals."""
    els = expand_mzi(2, cfg.phi_beta, cfg.eta_state, name="phi_beta")
    # bottom-arm path mismatch; the pair picks it up twice
    els.append(phase(3, cfg.theta_cap / 2))
    els += [coupler(1, cfg.eta_t_in), coupler(3, cfg.eta_b_in)]
    return NetworkLayout(N_MODES, tuple(els))


def source_layout(cfg: SourceConfig) -> NetworkLayout:
    """Photon path from the spirals to the dual-rail qubit modes."""
    els = [
        phase(1, cfg.phi_t, name="phi_t"),
        phase(4, cfg.phi_b, name="phi_b"),
        coupler(1, cfg.eta_t_out),
        coupler(3, cfg.eta_b_out),
        crossing(2, 3),
    ]
    return NetworkLayout(N_MODES, tuple(els))


def pump_amplitudes(cfg: SourceConfig, port: int = IN_PORT) -> np.ndarray:
    """Pump field at the spirals (T-upper, T-lower, B-upper, B-lower) for unit input power."""
    u = compose_network(pump_layout(cfg))
    return u[list(SPIRAL_MODES), port].copy()


def generation_amplitudes(pump: np.ndarray, normalize: bool = True) -> np.ndarray:
    """Pair-birth amplitude in each spiral: the complex square of the pump field."""
    xi = np.asarray(pump, dtype=complex) ** 2
    norm = np.sqrt(np.sum(np.abs(xi) ** 2))
    if norm == 0:
        raise ValueError("pump is zero in every spiral; no pairs are generated")
    return xi / norm if normalize else xi


def propagate_pair(xi: np.ndarray, U: np.ndarray, normalize: bool = True) -> np.ndarray:
    """Joint amplitude ``A = U diag(xi) U^T`` for signal and idler sharing one unitary."""
    U = np.asarray(U, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    if U.shape != (N_MODES, N_MODES):
        raise ValueError(f"expected a {N_MODES}x{N_MODES} unitary, got {U.shape}")
    if xi.shape == (len(SPIRAL_MODES),):
        full = np.zeros(N_MODES, dtype=complex)
        full[list(SPIRAL_MODES)] = xi
        xi = full
    if xi.shape != (N_MODES,):
        raise ValueError(f"xi must have {len(SPIRAL_MODES)} or {N_MODES} entries")
    A = (U * xi) @ U.T
    if normalize:
        A = A / np.sqrt(np.sum(np.abs(A) ** 2))
    return A


def _fix_phase(psi: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(psi) > 1e-9))
    return psi * np.exp(-1j * np.angle(psi[k]))


def source_qubit_state(cfg: SourceConfig, mode_map: ModeMap = DEFAULT_MAP) -> np.ndarray:
    """Post-selected two-qubit state straight out of the source, as a state vector.

    Computed by propagating the pair through the simulated network. For
    non-ideal couplers the post-selected state can be mixed; the dominant
    eigenvector is returned. Global phase: first non-zero amplitude real.
    """
    xi = generation_amplitudes(pump_amplitudes(cfg))
    A = propagate_pair(xi, compose_network(source_layout(cfg)))
    res = postselect_qubits(A, mode_map)
    w, v = np.linalg.eigh(res.rho)
    return _fix_phase(v[:, -1])


def balance(phi_beta: float) -> float:
    """Weight of |00> produced by the state-control setting ``phi_beta``."""
    s2 = np.sin(phi_beta / 2) ** 2
    c2 = np.cos(phi_beta / 2) ** 2
    return float(abs(s2 / np.sqrt(s2**2 + c2**2)) ** 2)


def ideal_source_state(beta: float, theta_cap: float = 0.0) -> np.ndarray:
    """sqrt(beta)|00> + exp(i theta) sqrt(1-beta)|11>."""
    return np.array([np.sqrt(beta), 0, 0, np.exp(1j * theta_cap) * np.sqrt(1 - beta)], dtype=complex)


# --- RHOM fringes ---------------------------------------------------------------

_RHOM = {"T": (1, 2), "B": (3, 4)}


def _rhom_coincidence(cfg: SourceConfig, which: str) -> float:
    if which == "T":
        # all pump to the top RHOM through IN
        pump = pump_amplitudes(replace(cfg, phi_beta=np.pi), IN_PORT)
    else:
        pump = pump_amplitudes(cfg, IN_AUX_PORT)
    a, b = _RHOM[which]
    xi = np.zeros(N_MODES, dtype=complex)
    xi[list(SPIRAL_MODES)] = generation_amplitudes(pump, normalize=False)
    keep = np.zeros(N_MODES, dtype=complex)
    keep[[a, b]] = xi[[a, b]]
    # the RHOM outputs before the crossing
    lay = NetworkLayout(N_MODES, source_layout(cfg).elements[:4])
    A = propagate_pair(keep, compose_network(lay), normalize=False)
    return float(abs(A[a, b]) ** 2 + abs(A[b, a]) ** 2)


def rhom_fringe(cfg: SourceConfig, which: str, phases, accidental_rate: float = 0.0) -> np.ndarray:
    """Cross-port coincidence rate of one RHOM versus its internal phase.

    Rates are in units of the pair-emission probability for unit pump power;
    ``accidental_rate`` is added as a flat background in the same units.
    """
    which = which.upper()
    if which not in _RHOM:
        raise ValueError("which must be 'T' or 'B'")
    key = "phi_t" if which == "T" else "phi_b"
    out = [_rhom_coincidence(replace(cfg, **{key: float(p)}), which) for p in np.atleast_1d(phases)]
    return np.asarray(out) + accidental_rate


def fringe_contrast(n_max: float, n_min: float) -> float:
    """(N_max - N_min) / (N_max + N_min) for accidental-subtracted rates."""
    if n_max < n_min or n_min < 0:
        raise ValueError("need n_max >= n_min >= 0")
    total = n_max + n_min
    if total == 0:
        raise ValueError("contrast undefined for zero counts")
    return (n_max - n_min) / total


@dataclass(frozen=True)
class FringeFit:
    amplitude: float
    visibility: float
    phase_offset: float
    background: float
    residual: float
    phase_defined: bool

    def model(self, phases) -> np.ndarray:
        p = np.asarray(phases, dtype=float)
        return self.amplitude * (1 + self.visibility * np.cos(2 * p + self.phase_offset)) + self.background


def fit_fringe(phases, rates, background: float = 0.0) -> FringeFit:
    """Least-squares fit of ``rate = A (1 + V cos(2 phi + delta)) + b``.

    ``A`` and ``b`` are not separately identifiable from one fringe, so the
    background is taken as known (the accidental rate) and subtracted. The
    model is linear in ``(A, A V cos delta, A V sin delta)`` and solved
    exactly.
    """
    phases = np.asarray(phases, dtype=float)
    rates = np.asarray(rates, dtype=float)
    n = len(phases)
    if n < 6 or rates.shape != phases.shape:
        raise ValueError("need at least 6 (phase, rate) samples")
    if np.ptp(phases) < np.pi * (1 - 1 / n) - 1e-12:
        raise ValueError("sweep must span at least one fringe period (pi in the internal phase)")
    X = np.column_stack([np.ones(n), np.cos(2 * phases), np.sin(2 * phases)])
    if np.linalg.matrix_rank(X) < 3:
        raise ValueError("degenerate phase sweep")
    y = rates - background
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    c0, c1, c2 = coef
    amp = float(np.hypot(c1, c2))
    resid = y - X @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    sigma_amp = rms * np.sqrt(2.0 / n)
    defined = amp > max(2 * sigma_amp, 1e-12 * max(abs(c0), 1.0))
    return FringeFit(
        amplitude=float(c0),
        visibility=amp / c0 if c0 != 0 else float("nan"),
        phase_offset=float(np.arctan2(-c2, c1)) if defined else float("nan"),
        background=float(background),
        residual=rms,
        phase_defined=bool(defined),
    )


def imbalance_contrast(xi1: complex, xi2: complex) -> float:
    """Best-case contrast 2|x1 x2| / (|x1|^2 + |x2|^2) for two unequal generation amplitudes."""
    a, b = abs(xi1), abs(xi2)
    return 2 * a * b / (a * a + b * b)


def rhom_contrast(cfg: SourceConfig, which: str, n: int = 64) -> float:
    """Fringe contrast of the simulated (noiseless) RHOM fringe."""
    phis = np.linspace(0, np.pi, n, endpoint=False)
    return fit_fringe(phis, rhom_fringe(cfg, which, phis)).visibility


def eta_for_contrast(target: float, which: str = "T", lo: float = 1e-6, hi: float = 0.5) -> float:
    """Input-coupler reflectivity (below 1/2) whose simulated fringe has contrast ``target``.

    Solved by bisection on the simulator, not the closed form.
    """
    key = "eta_t_in" if which.upper() == "T" else "eta_b_in"

    def f(eta):
        return rhom_contrast(SourceConfig(**{key: eta}), which) - target

    return float(optimize.bisect(f, lo, hi, xtol=1e-12))


# --- rates and wavelengths ----------------------------------------------------------


@dataclass(frozen=True)
class RateModel:
    """Detected pair rate. ``facet_loss_db`` is the loss seen by *each* photon
    (half of the facet-to-facet budget, e.g. 14 dB for the -28 dB chip)."""

    brightness: float = 20e3  # pairs / s / mW^2
    facet_loss_db: float = 14.0
    detector_efficiency: float = 1.0

    def __post_init__(self):
        if self.brightness < 0:
            raise ValueError("brightness must be non-negative")
        if not 0 <= self.detector_efficiency <= 1:
            raise ValueError("detector_efficiency must be in [0, 1]")


def pair_rate(model: RateModel, pump_power: float) -> float:
    """Detected pairs per second for ``pump_power`` in mW."""
    if pump_power < 0:
        raise ValueError("pump power must be non-negative")
    per_photon = 10 ** (-model.facet_loss_db / 10) * model.detector_efficiency
    return model.brightness * pump_power**2 * per_photon**2


@dataclass(frozen=True)
class WavelengthTriple:
    pump: float
    signal: float
    idler: float


def validate_wavelengths(w: WavelengthTriple) -> float:
    """Energy-conservation residual |2/lp - 1/ls - 1/li| in 1/nm."""
    if min(w.pump, w.signal, w.idler) <= 0:
        raise ValueError("wavelengths must be positive")
    return abs(2 / w.pump - 1 / w.signal - 1 / w.idler)
