"""Dual-rail qubit operations, the switchable post-selected CZ gate, and the full chip.

Per-qubit chain (rail0 upper, rail1 lower)::

    Rz(z1) -> Ry(y1) -> Rz(z2) -> [gate] -> Rz(z3 + offset) -> Ry(y2) -> detect rail0

A z rotation is a single heater on rail1 (``Rz`` up to a global phase). A y
rotation is an MZI driven at ``y + pi`` followed by a fixed pi trim on rail1;
with the package's MZI convention that block equals ``Ry(y)`` up to a global
phase.

The CZ block is the standard three-beam-splitter post-selected design with
the 1/3 beam splitters replaced by MZIs: the two rail1 modes meet on the central MZI,
each rail0 meets its outer vacuum mode on an outer MZI. A crossing pair
brings ``B1`` next to ``T1``. ``cos(theta) = 1/3`` gives reflectivity 1/3 (gate
on), ``cos(theta) = -1`` gives full transmission (gate off).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .modes import DEFAULT_MAP, N_MODES, ModeMap, PostselectionResult, postselect_qubits
from .optics import NetworkLayout, compose_network, crossing, expand_mzi, phase
from .source import SourceConfig, generation_amplitudes, propagate_pair, pump_amplitudes, pump_layout, source_layout

__all__ = [
    "GateMode",
    "ChipConfig",
    "HEATER_NAMES",
    "THETA_CZ_ON",
    "THETA_CZ_OFF",
    "rz",
    "ry",
    "single_qubit_unitary",
    "rail_embedding",
    "gate_layout",
    "gate_operator",
    "heater_phases",
    "chip_layout",
    "photon_unitary",
    "full_chip_state",
    "ideal_chip_state",
]

THETA_CZ_ON = float(np.arccos(1 / 3))
THETA_CZ_OFF = float(np.pi)


class GateMode(enum.Enum):
    CZ = "cz"
    IDENTITY = "identity"
    BYPASS = "bypass"

    @classmethod
    def parse(cls, text: str) -> "GateMode":
        t = text.strip().lower()
        aliases = {"i": "identity", "id": "identity", "bypassed": "bypass", "off": "identity", "on": "cz"}
        return cls(aliases.get(t, t))


# Heater names in the order of the calibration routing table.
HEATER_NAMES = (
    "phi_b", "theta_by1", "theta_czb", "theta_ty1", "theta_czt",
    "phi_beta", "phi_t", "theta_tz1", "theta_bz1",
    "theta_czc", "theta_ty2", "theta_tz2", "theta_tz3",
    "theta_by2", "theta_bz2", "theta_bz3",
)  # fmt: skip

_Y_HEATERS = ("theta_ty1", "theta_by1", "theta_ty2", "theta_by2")


@dataclass(frozen=True)
class ChipConfig:
    """Every tunable phase on the chip, as the logical rotation angle it implements.

    ``theta_*y*`` are Ry angles, ``theta_*z*`` are Rz angles, ``theta_cz*``
    are the raw gate-MZI phases. ``z_offset_t/b`` are the fixed, unknown
    z rotations applied before measurement. ``crosstalk`` (optional, 16x16 in
    ``HEATER_NAMES`` order) adds ``crosstalk @ phases`` to the phases.
    """

    source: SourceConfig = field(default_factory=SourceConfig)
    theta_tz1: float = 0.0
    theta_ty1: float = 0.0
    theta_bz1: float = 0.0
    theta_by1: float = 0.0
    theta_tz2: float = 0.0
    theta_bz2: float = 0.0
    theta_czt: float = THETA_CZ_ON
    theta_czc: float = THETA_CZ_ON
    theta_czb: float = THETA_CZ_ON
    theta_tz3: float = 0.0
    theta_ty2: float = 0.0
    theta_bz3: float = 0.0
    theta_by2: float = 0.0
    z_offset_t: float = 0.0
    z_offset_b: float = 0.0
    crosstalk: np.ndarray | None = None

    def with_gate(self, mode: GateMode) -> "ChipConfig":
        th = THETA_CZ_ON if mode is GateMode.CZ else THETA_CZ_OFF
        return replace(self, theta_czt=th, theta_czc=th, theta_czb=th)

    def with_prep(self, qubit: str, z: float = 0.0, y: float = 0.0, z2: float = 0.0) -> "ChipConfig":
        q = qubit.lower()
        return replace(self, **{f"theta_{q}z1": z, f"theta_{q}y1": y, f"theta_{q}z2": z2})

    def with_tomography(self, qubit: str, z: float = 0.0, y: float = 0.0) -> "ChipConfig":
        q = qubit.lower()
        return replace(self, **{f"theta_{q}z3": z, f"theta_{q}y2": y})

    def phases(self) -> dict[str, float]:
        """Logical phase of each heater (source phases included)."""
        out = {}
        for name in HEATER_NAMES:
            out[name] = float(getattr(self.source, name) if name.startswith("phi") else getattr(self, name))
        return out

    def ideal(self) -> "ChipConfig":
        """Same settings on a perfect chip: ideal couplers, no offsets, no crosstalk."""
        return replace(self, source=self.source.ideal(), z_offset_t=0.0, z_offset_b=0.0, crosstalk=None)


_CHIP_FIELDS = {f.name for f in fields(ChipConfig)}


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def single_qubit_unitary(theta_z_a: float, theta_y: float, theta_z_b: float) -> np.ndarray:
    """Rz(theta_z_b) . Ry(theta_y) . Rz(theta_z_a)."""
    return rz(theta_z_b) @ ry(theta_y) @ rz(theta_z_a)


def rail_embedding(u: np.ndarray, qubit: str, mode_map: ModeMap = DEFAULT_MAP) -> np.ndarray:
    """Embed a 2x2 unitary on one qubit's rails of the six-mode chip."""
    U = np.eye(N_MODES, dtype=complex)
    r = list(mode_map.rails(qubit))
    U[np.ix_(r, r)] = np.asarray(u, dtype=complex)
    return U


def heater_phases(cfg: ChipConfig) -> dict[str, float]:
    """Physical element phase of every heater for a logical configuration."""
    ph = cfg.phases()
    if cfg.crosstalk is not None:
        vec = np.array([ph[n] for n in HEATER_NAMES])
        vec = vec + np.asarray(cfg.crosstalk, dtype=float) @ vec
        ph = dict(zip(HEATER_NAMES, map(float, vec)))
    for n in _Y_HEATERS:
        ph[n] += np.pi
    ph["theta_tz3"] += cfg.z_offset_t
    ph["theta_bz3"] += cfg.z_offset_b
    return ph


def _z(mode: int, name: str):
    return [phase(mode, 0.0, name=name)]


def _y(upper: int, name: str):
    return expand_mzi(upper, np.pi, name=name) + [phase(upper + 1, np.pi)]


def _prep_layout(m: ModeMap) -> list:
    els = []
    for q, (r0, r1) in (("t", m.rails("T")), ("b", m.rails("B"))):
        els += _z(r1, f"theta_{q}z1") + _y(min(r0, r1), f"theta_{q}y1") + _z(r1, f"theta_{q}z2")
    return els


def _tomo_layout(m: ModeMap) -> list:
    els = []
    for q, (r0, r1) in (("t", m.rails("T")), ("b", m.rails("B"))):
        els += _z(r1, f"theta_{q}z3") + _y(min(r0, r1), f"theta_{q}y2")
    return els


def gate_layout(mode: GateMode, mode_map: ModeMap = DEFAULT_MAP, thetas: tuple[float, float, float] | None = None) -> NetworkLayout:
    """Three-MZI post-selected CZ block (heaters named ``theta_czt/czc/czb``).

    Requires the default planar ordering ``aux_T, T0, T1, B0, B1, aux_B``.
    """
    if mode is GateMode.BYPASS:
        raise ValueError("BYPASS is a routing choice; it has no gate layout")
    if mode_map.as_list() != list(range(N_MODES)):
        raise ValueError("gate layout is defined for the default planar mode order")
    if thetas is None:
        th = THETA_CZ_ON if mode is GateMode.CZ else THETA_CZ_OFF
        thetas = (th, th, th)
    t_cz_t, t_cz_c, t_cz_b = thetas
    m = mode_map
    els = [crossing(m.b0, m.b1)]  # now B1 sits at index 3, B0 at index 4
    els += [*expand_mzi(m.aux_t, t_cz_t, name="theta_czt")]
    els += [*expand_mzi(m.t1, t_cz_c, name="theta_czc")]
    els += [*expand_mzi(m.b1, t_cz_b, name="theta_czb")]
    els += [crossing(m.b0, m.b1)]
    # fixed trims: the bare block is (Z x Z) . CZ up to a global phase
    els += [phase(m.t1, np.pi), phase(m.b1, np.pi)]
    return NetworkLayout(N_MODES, tuple(els))


def gate_operator(mode: GateMode, mode_map: ModeMap = DEFAULT_MAP, U: np.ndarray | None = None) -> np.ndarray:
    """4x4 post-selected two-qubit operator of a gate unitary.

    Columns are logical inputs ``|ij>`` (T first). The photons are
    distinguishable by colour, so the operator collects both orderings of a
    symmetric pair. Global phase is fixed so the largest-magnitude diagonal
    entry of the first non-zero column is real and positive.
    """
    if U is None:
        U = compose_network(gate_layout(mode, mode_map)) if mode is not GateMode.BYPASS else np.eye(N_MODES)
    t = mode_map.rails("T")
    b = mode_map.rails("B")
    M = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    M[2 * k + l, 2 * i + j] = U[t[k], t[i]] * U[b[l], b[j]] + U[t[k], b[j]] * U[b[l], t[i]]
    d = np.diag(M)
    ref = d[np.argmax(np.abs(d))]
    if abs(ref) > 0:
        M = M * (abs(ref) / ref)
    return M


def chip_layout(cfg: ChipConfig, gate: GateMode = GateMode.CZ, mode_map: ModeMap = DEFAULT_MAP, include_pump: bool = False) -> NetworkLayout:
    """Full chip network with every heater set from ``cfg``.

    ``include_pump`` prepends the pump path (used for bright-light
    transmission from ``IN``/``IN'``). With ``gate=BYPASS`` the gate block is
    omitted.
    """
    src = cfg.source
    parts = []
    if include_pump:
        parts.append(pump_layout(src))
    parts.append(source_layout(src))
    parts.append(NetworkLayout(N_MODES, tuple(_prep_layout(mode_map))))
    if gate is not GateMode.BYPASS:
        parts.append(gate_layout(gate, mode_map, (cfg.theta_czt, cfg.theta_czc, cfg.theta_czb)))
    parts.append(NetworkLayout(N_MODES, tuple(_tomo_layout(mode_map))))
    lay = parts[0]
    for p in parts[1:]:
        lay = lay + p
    return lay.with_values(heater_phases(cfg))


def photon_unitary(cfg: ChipConfig, gate: GateMode = GateMode.CZ, mode_map: ModeMap = DEFAULT_MAP) -> np.ndarray:
    """Transfer matrix seen by the photons, from the spirals to the chip outputs."""
    return compose_network(chip_layout(cfg, gate, mode_map))


def full_chip_state(cfg: ChipConfig, gate: GateMode = GateMode.CZ, mode_map: ModeMap = DEFAULT_MAP) -> PostselectionResult:
    """Post-selected state reaching the detectors with tomography set to identity.

    The gate-MZI phases are taken from ``gate`` (CZ: cos = 1/3, IDENTITY:
    cos = -1); BYPASS skips the gate block. The z offsets still act.
    """
    cfg = cfg.with_tomography("T").with_tomography("B")
    if gate is not GateMode.BYPASS:
        cfg = cfg.with_gate(gate)
    # pump phases must see the crosstalk-adjusted heater values too
    ph = heater_phases(cfg)
    src = replace(cfg.source, phi_beta=ph["phi_beta"])
    xi = generation_amplitudes(pump_amplitudes(src))
    A = propagate_pair(xi, photon_unitary(cfg, gate, mode_map))
    return postselect_qubits(A, mode_map)


def ideal_chip_state(cfg: ChipConfig, gate: GateMode = GateMode.CZ) -> np.ndarray:
    """Pure target state of the configuration on a perfect chip."""
    rho = full_chip_state(cfg.ideal(), gate).rho
    w, v = np.linalg.eigh(rho)
    psi = v[:, -1]
    k = int(np.argmax(np.abs(psi) > 1e-9))
    return psi * np.exp(-1j * np.angle(psi[k]))
