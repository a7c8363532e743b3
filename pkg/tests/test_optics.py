import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qchiptwin.optics import (
    NetworkElement,
    NetworkLayout,
    compose_network,
    coupler,
    crossing,
    element_unitary,
    expand_mzi,
    is_unitary,
    mzi,
    mzi_splitting,
    phase,
    random_layout,
)

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
etas = st.floats(0.0, 1.0)


def test_balanced_coupler_matrix():
    u = element_unitary(coupler(0, 0.5), 2)
    expect = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
    assert np.allclose(u, expect, atol=1e-15)


def test_phase_and_crossing():
    u = element_unitary(phase(1, np.pi / 3), 3)
    assert np.allclose(u, np.diag([1, np.exp(1j * np.pi / 3), 1]))
    x = element_unitary(crossing(0, 2), 3)
    assert np.allclose(x, [[0, 0, 1], [0, 1, 0], [1, 0, 0]])


def test_mzi_extremes():
    # theta = pi: light stays in its waveguide; theta = 0: full swap
    assert mzi_splitting(np.pi) == pytest.approx((1.0, 0.0), abs=1e-15)
    assert mzi_splitting(0.0) == pytest.approx((0.0, 1.0), abs=1e-15)
    bar, _ = mzi_splitting(np.arccos(1 / 3))
    assert bar == pytest.approx(1 / 3, abs=1e-14)


@given(angles)
def test_mzi_splitting_closed_form(theta):
    bar, cross = mzi_splitting(theta)
    assert bar == pytest.approx(np.sin(theta / 2) ** 2, abs=1e-13)
    assert bar + cross == pytest.approx(1.0, abs=1e-13)


@given(angles, etas)
def test_expanded_mzi_matches_compact(theta, eta):
    a = compose_network(expand_mzi(0, theta, 0.5), 2)
    b = element_unitary(mzi(0, theta), 2)
    assert np.allclose(a, b, atol=1e-13)
    assert is_unitary(compose_network(expand_mzi(0, theta, eta), 2))


def test_composition_order_first_element_first():
    c, p = coupler(0), phase(0, 0.7)
    u = compose_network([c, p], 2)
    assert np.allclose(u, element_unitary(p, 2) @ element_unitary(c, 2))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 7), st.integers(0, 40), st.integers(0, 2**31))
def test_random_layouts_are_unitary(dim, n, seed):
    lay = random_layout(dim, n, np.random.default_rng(seed))
    u = compose_network(lay)
    assert is_unitary(u)
    # dense product of embedded elements agrees with the row-update composition
    dense = np.eye(dim, dtype=complex)
    for e in lay.elements:
        dense = element_unitary(e, dim) @ dense
    assert np.allclose(u, dense, atol=1e-12)


def test_with_values_resets_named_elements():
    lay = NetworkLayout(2, (mzi(0, 0.0, name="h"), phase(1, 0.3, name="p")))
    lay2 = lay.with_values({"h": np.pi})
    assert lay2.elements[0].value == np.pi and lay2.elements[1].value == 0.3
    assert lay.names() == ["h", "p"]


@pytest.mark.parametrize(
    "el",
    [
        NetworkElement("coupler", (0, 2), 0.5),
        NetworkElement("phase", (5,), 0.1),
        NetworkElement("crossing", (1, 1)),
        NetworkElement("coupler", (0, 1), 1.5),
        NetworkElement("beam", (0, 1)),
        NetworkElement("mzi", (0,), 0.1),
    ],
)
def test_invalid_elements_rejected(el):
    with pytest.raises(ValueError):
        NetworkLayout(3, (el,))


def test_layouts_of_different_size_do_not_join():
    with pytest.raises(ValueError):
        NetworkLayout(2) + NetworkLayout(3)
