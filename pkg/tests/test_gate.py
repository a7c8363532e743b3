import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qchiptwin.gate import (
    HEATER_NAMES,
    THETA_CZ_ON,
    ChipConfig,
    GateMode,
    chip_layout,
    full_chip_state,
    gate_layout,
    gate_operator,
    ideal_chip_state,
    photon_unitary,
    rail_embedding,
    single_qubit_unitary,
)
from qchiptwin.metrics import chsh_horodecki, schmidt_number
from qchiptwin.modes import ModeMap, postselect_qubits
from qchiptwin.optics import compose_network, is_unitary
from qchiptwin.source import SourceConfig, ideal_source_state, balance

angles = st.floats(-np.pi, np.pi, allow_nan=False)

CZ = np.diag([1, 1, 1, -1]).astype(complex)


def textbook_rz(t):
    return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]])


def textbook_ry(t):
    return np.array([[np.cos(t / 2), -np.sin(t / 2)], [np.sin(t / 2), np.cos(t / 2)]])


def same_state(rho, psi, tol=1e-10):
    return abs(np.vdot(psi, rho @ psi).real - 1) < tol


def test_cz_operator():
    M = gate_operator(GateMode.CZ)
    assert np.max(np.abs(M - CZ / 3)) < 1e-12


def test_identity_operator():
    assert np.max(np.abs(gate_operator(GateMode.IDENTITY) - np.eye(4))) < 1e-12
    assert np.max(np.abs(gate_operator(GateMode.BYPASS) - np.eye(4))) < 1e-15


def test_gate_block_is_unitary_and_bypass_has_none():
    assert is_unitary(compose_network(gate_layout(GateMode.CZ)))
    with pytest.raises(ValueError):
        gate_layout(GateMode.BYPASS)


def test_gate_needs_planar_order():
    m = ModeMap(aux_t=5, t0=1, t1=2, b0=3, b1=4, aux_b=0)
    with pytest.raises(ValueError):
        gate_layout(GateMode.CZ, m)


def test_cz_gate_on_reflectivity():
    assert np.cos(THETA_CZ_ON) == pytest.approx(1 / 3)


@settings(max_examples=40, deadline=None)
@given(angles, angles, angles, angles, angles, angles)
def test_single_qubit_chain_matches_textbook(a1, y1, b1, a2, y2, b2):
    u = single_qubit_unitary(a1, y1, b1)
    assert np.allclose(u, textbook_rz(b1) @ textbook_ry(y1) @ textbook_rz(a1))
    # the chip state after preparation equals the textbook product on the source state
    cfg = ChipConfig().with_prep("T", a1, y1, b1).with_prep("B", a2, y2, b2)
    for gate, G in ((GateMode.BYPASS, np.eye(4)), (GateMode.CZ, CZ)):
        res = full_chip_state(cfg, gate)
        psi = G @ np.kron(u, single_qubit_unitary(a2, y2, b2)) @ ideal_source_state(0.5)
        assert same_state(res.rho, psi / np.linalg.norm(psi))
        assert res.success_probability == pytest.approx(1.0 if gate is GateMode.BYPASS else 1 / 9, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2 * np.pi), angles)
def test_balance_survives_identity_gate(phi, theta):
    cfg = ChipConfig(source=SourceConfig(phi_beta=phi, theta_cap=theta))
    res = full_chip_state(cfg, GateMode.IDENTITY)
    assert same_state(res.rho, ideal_source_state(balance(phi), theta))
    assert res.success_probability == pytest.approx(1.0, abs=1e-10)


def test_cz_entangles_plus_plus():
    h = (np.pi, np.pi / 2, 0.0)
    cfg = ChipConfig(source=SourceConfig(phi_beta=np.pi)).with_prep("T", *h).with_prep("B", *h)
    res = full_chip_state(cfg, GateMode.CZ)
    assert res.success_probability == pytest.approx(1 / 9, abs=1e-12)
    assert chsh_horodecki(res.rho) == pytest.approx(2 * np.sqrt(2), abs=1e-9)
    assert schmidt_number(res.rho) == pytest.approx(2.0, abs=1e-9)


def test_cz_disentangles_bell_state():
    cfg = ChipConfig().with_prep("B", np.pi, np.pi / 2, 0.0)
    res = full_chip_state(cfg, GateMode.CZ)
    plus = np.array([1, 1]) / np.sqrt(2)
    assert same_state(res.rho, np.kron(plus, plus))
    assert schmidt_number(res.rho) == pytest.approx(1.0, abs=1e-9)


@given(angles, angles)
def test_z_offsets_act_before_measurement(zt, zb):
    cfg = ChipConfig(z_offset_t=zt, z_offset_b=zb)
    res = full_chip_state(cfg, GateMode.BYPASS)
    psi = np.kron(textbook_rz(zt), textbook_rz(zb)) @ ideal_source_state(0.5)
    assert same_state(res.rho, psi)
    # the ideal target ignores the unknown offsets
    assert np.allclose(ideal_chip_state(cfg, GateMode.BYPASS), ideal_source_state(0.5), atol=1e-12)


def test_zero_crosstalk_is_no_crosstalk():
    cfg = ChipConfig().with_prep("T", 0.3, 1.1, -0.4)
    a = full_chip_state(cfg, GateMode.CZ).rho
    b = full_chip_state(ChipConfig(**{**vars(cfg), "crosstalk": np.zeros((16, 16))}), GateMode.CZ).rho
    assert np.allclose(a, b, atol=1e-14)


def test_heaters_named_in_layout():
    names = chip_layout(ChipConfig(), GateMode.CZ, include_pump=True).names()
    assert sorted(names) == sorted(HEATER_NAMES) and len(names) == 16
    assert "theta_czc" not in chip_layout(ChipConfig(), GateMode.BYPASS).names()


def test_photon_unitary_is_unitary():
    cfg = ChipConfig(source=SourceConfig(eta_t_in=0.4, eta_b_out=0.6)).with_prep("T", 0.2, 0.3, 0.4)
    assert is_unitary(photon_unitary(cfg))


def test_rail_embedding():
    u = single_qubit_unitary(0.1, 0.2, 0.3)
    U = rail_embedding(u, "B")
    assert np.allclose(U[3:5, 3:5], u) and is_unitary(U)
    with pytest.raises(ValueError):
        rail_embedding(u, "Q")


@pytest.mark.parametrize("text, mode", [("CZ", GateMode.CZ), ("on", GateMode.CZ), ("I", GateMode.IDENTITY), ("bypassed", GateMode.BYPASS)])
def test_gate_mode_parsing(text, mode):
    assert GateMode.parse(text) is mode


def test_mode_map_validation():
    with pytest.raises(ValueError):
        ModeMap(t0=0)
    with pytest.raises(ValueError):
        ModeMap(aux_t=0, t0=1, t1=3, b0=2, b1=4, aux_b=5)


def test_postselection_with_no_qubit_events_fails():
    A = np.zeros((6, 6), dtype=complex)
    A[0, 5] = A[5, 0] = 2**-0.5
    with pytest.raises(ValueError):
        postselect_qubits(A)


def test_postselection_mixes_photon_orderings():
    A = np.zeros((6, 6), dtype=complex)
    A[1, 3] = 1.0  # signal T0, idler B0
    A[4, 2] = 1.0j  # signal B1, idler T1
    res = postselect_qubits(A / np.sqrt(2))
    assert np.allclose(np.diag(res.rho).real, [0.5, 0, 0, 0.5])
    assert abs(res.rho[0, 3]) < 1e-15
    assert res.assignment_weights == pytest.approx((0.5, 0.5))
