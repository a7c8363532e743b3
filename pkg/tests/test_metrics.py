import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qchiptwin.metrics import (
    MetricsReport,
    MetricValue,
    chsh_horodecki,
    chsh_optimize,
    chsh_value,
    correlation_matrix,
    fidelity,
    fidelity_local_z,
    partial_trace,
    purity,
    schmidt_number,
    validate_density,
)

PHI_PLUS = np.array([1, 0, 0, 1]) / np.sqrt(2)


def dm(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def werner(p):
    return p * dm(PHI_PLUS) + (1 - p) * np.eye(4) / 4


def rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def random_rho(seed, rank=4):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    r = G @ G.conj().T
    return r / np.trace(r).real


def test_closed_form_values():
    assert chsh_horodecki(dm(PHI_PLUS)) == pytest.approx(2 * np.sqrt(2), abs=1e-12)
    assert chsh_horodecki(dm([1, 0, 0, 0])) == pytest.approx(2.0, abs=1e-12)
    assert purity(np.eye(4) / 4) == pytest.approx(0.25)
    assert schmidt_number(dm(PHI_PLUS)) == pytest.approx(2.0)
    assert schmidt_number(dm([1, 1, 1, 1])) == pytest.approx(1.0)


@given(st.floats(0, 1))
def test_werner_family(p):
    rho = werner(p)
    assert chsh_horodecki(rho) == pytest.approx(2 * np.sqrt(2) * p, abs=1e-12)
    assert purity(rho) == pytest.approx((1 + 3 * p * p) / 4, abs=1e-12)


@given(st.floats(0, 1))
def test_schmidt_number_of_balanced_family(beta):
    rho = dm([np.sqrt(beta), 0, 0, np.sqrt(1 - beta)])
    assert schmidt_number(rho) == pytest.approx(1 / (beta**2 + (1 - beta) ** 2), abs=1e-12)
    assert chsh_horodecki(rho) == pytest.approx(2 * np.sqrt(1 + 4 * beta * (1 - beta)), abs=1e-12)


def test_partial_trace_of_product():
    a, b = dm([1, 1j]), dm([np.cos(0.3), np.sin(0.3)])
    rho = np.kron(a, b)
    assert np.allclose(partial_trace(rho, "T"), a)
    assert np.allclose(partial_trace(rho, "B"), b)
    with pytest.raises(ValueError):
        partial_trace(rho, "X")


def test_correlation_matrix_of_bell_state():
    assert np.allclose(correlation_matrix(dm(PHI_PLUS)), np.diag([1, -1, 1]))


def test_standard_chsh_angles_on_bell_state():
    z, x = np.array([0, 0, 1.0]), np.array([1.0, 0, 0])
    b = (z + x) / np.sqrt(2)
    b2 = (z - x) / np.sqrt(2)
    assert chsh_value(dm(PHI_PLUS), z, x, b, b2) == pytest.approx(2 * np.sqrt(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4))
def test_optimized_chsh_equals_horodecki(seed, rank):
    rho = random_rho(seed, rank)
    s, dirs = chsh_optimize(rho)
    assert s == pytest.approx(chsh_horodecki(rho), abs=1e-6)
    for v in dirs.values():
        assert np.linalg.norm(v) == pytest.approx(1.0)
    assert chsh_value(rho, dirs["a"], dirs["a_prime"], dirs["b"], dirs["b_prime"]) == pytest.approx(s)


@settings(max_examples=20, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
def test_fidelity_local_z_undoes_z_rotations(zt, zb):
    R = np.kron(rz(zt), rz(zb))
    rho = R @ dm(PHI_PLUS) @ R.conj().T
    f, a, b = fidelity_local_z(rho, PHI_PLUS)
    assert f == pytest.approx(1.0, abs=1e-9)
    # only the sum acts on |00> + |11>: recovered angles cancel it mod 2 pi
    assert np.cos((a + b + zt + zb) / 2) ** 2 == pytest.approx(1.0, abs=1e-6)
    assert f >= fidelity(rho, PHI_PLUS) - 1e-12


def test_fidelity_local_z_is_bounded_by_one():
    for seed in range(5):
        rho = random_rho(seed)
        f, _, _ = fidelity_local_z(rho, PHI_PLUS)
        assert fidelity(rho, PHI_PLUS) - 1e-12 <= f <= 1 + 1e-12


def test_validate_density():
    assert np.allclose(validate_density(werner(0.5)), werner(0.5))
    with pytest.raises(ValueError):
        validate_density(np.eye(3) / 3)
    with pytest.raises(ValueError):
        validate_density(np.diag([1.2, -0.2, 0, 0]))
    with pytest.raises(ValueError):
        validate_density(np.eye(4))
    tiny = np.diag([0.5, 0.5 + 1e-11, -1e-11, 0])
    w = np.linalg.eigvalsh(validate_density(tiny))
    assert w.min() >= 0


def test_report_json_roundtrip():
    r = MetricsReport(MetricValue(0.9, 0.01, 200), MetricValue(1.9, 0.02, 200), MetricValue(2.5, 0.03, 200), MetricValue(0.95, None, 0))
    back = MetricsReport.from_json(r.to_json(label="x"))
    assert back == r
